"""Drives the built idp, sp, agent and bench binaries as separate processes."""

import argparse
import csv
import io
import json
import os
import shutil
import socket
import subprocess
import sys
import tempfile
import time


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def wait_for(port, proc, timeout=20):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if proc.poll() is not None:
            raise RuntimeError(f"service exited early with {proc.returncode}")
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.5):
                return
        except OSError:
            time.sleep(0.1)
    raise RuntimeError(f"port {port} never opened")


def run(cmd, **kw):
    return subprocess.run(cmd, capture_output=True, text=True, timeout=300, **kw)


def check(cond, what):
    if not cond:
        print(f"FAIL: {what}")
        sys.exit(1)
    print(f"ok: {what}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bin-dir", required=True)
    ap.add_argument("--source-dir", required=True)
    args = ap.parse_args()
    exe = lambda name: os.path.join(args.bin_dir, name)

    work = tempfile.mkdtemp(prefix="hbesso-cli-")
    procs = []
    try:
        idp_port, sp_port = free_port(), free_port()
        for name in ("idp.json", "sp.json"):
            shutil.copy(os.path.join(args.source_dir, "config", name), work)
        with open(os.path.join(work, "sp.json")) as f:
            sp_cfg = json.load(f)
        sp_cfg["idp_url"] = f"http://127.0.0.1:{idp_port}"
        sp_cfg["acs_url"] = f"http://127.0.0.1:{sp_port}/acs"
        with open(os.path.join(work, "sp.json"), "w") as f:
            json.dump(sp_cfg, f)

        keys = os.path.join(work, "idp-keys.tsv")
        r = run([exe("idp"), "keygen", "--keystore", keys, "--id", "idp-master", "--id", "fed-sp"])
        check(r.returncode == 0, "idp keygen")
        r = run([exe("idp"), "export-key", "--keystore", keys, "--id", "fed-sp",
                 "--to", os.path.join(work, "sp-keys.tsv")])
        check(r.returncode == 0, "idp export-key")
        with open(os.path.join(work, "sp-keys.tsv")) as f:
            check(f.read().startswith("fed-sp\t"), "sp key store holds only the federation key")

        env = dict(os.environ, IDP_LISTEN=f"127.0.0.1:{idp_port}", SP_LISTEN=f"127.0.0.1:{sp_port}")
        log = open(os.path.join(work, "services.log"), "w")
        for name in ("idp", "sp"):
            procs.append(subprocess.Popen(
                [exe(name), "serve", "--config", os.path.join(work, f"{name}.json"), "--test-clock"],
                env=env, stdout=log, stderr=log))
        wait_for(idp_port, procs[0])
        wait_for(sp_port, procs[1])

        base = [exe("agent"), "run", "--idp", f"http://127.0.0.1:{idp_port}", "--sp", f"http://127.0.0.1:{sp_port}"]
        transcript = os.path.join(work, "transcript.txt")
        r = run(base + ["--suite", os.path.join(args.source_dir, "scenarios", "canonical.suite"),
                        "--transcript", transcript])
        print(r.stdout)
        check(r.returncode == 0, "canonical suite against separate processes")
        check("6 scenarios, 6 passed" in r.stdout, "summary counts six passes")
        with open(transcript) as f:
            text = f.read()
        check("pin=****" in text and "4821" not in text, "transcript masks PINs")

        r = run(base + ["--suite", os.path.join(args.source_dir, "scenarios", "canonical.suite"),
                        "--parallel", "--user-suffix", ".rerun"])
        check(r.returncode == 0, "parallel rerun with user suffix")

        wrong = os.path.join(work, "wrong.suite")
        with open(wrong, "w") as f:
            f.write("scenario wrong\n  register w1 1234 -> 201\n  register w1 1234 -> 201\nend\n")
        r = run(base + ["--suite", wrong])
        check(r.returncode == 1, "wrong expectation exits 1")

        empty = os.path.join(work, "empty.suite")
        open(empty, "w").close()
        r = run(base + ["--suite", empty])
        check(r.returncode == 0 and "0 scenarios" in r.stdout, "empty suite passes")

        broken = os.path.join(work, "broken.suite")
        with open(broken, "w") as f:
            f.write("scenario b\n  gate\n  teleport\nend\n")
        r = run(base + ["--suite", broken])
        check(r.returncode == 2 and ":3:" in r.stderr, "parse error names line 3")

        with open(os.path.join(work, "users.tsv")) as f:
            check(len(f.read().splitlines()) == 13, "directory persisted twelve users plus w1")
    finally:
        for p in procs:
            p.terminate()
            p.wait(timeout=10)
        shutil.rmtree(work, ignore_errors=True)

    r = run([exe("bench"), "throughput", "--megabytes", "1", "--reps", "3", "--format", "csv"])
    check(r.returncode == 0, "bench throughput csv")
    rows = list(csv.DictReader(io.StringIO(r.stdout)))
    check([row["key_bits"] for row in rows] == ["128", "192", "256"], "three key sizes in order")
    for row in rows:
        mb, s, rate = float(row["megabytes"]), float(row["seconds"]), float(row["mb_per_s"])
        check(s > 0 and abs(rate - mb / s) <= 0.0005 + 1e-9, f"MB/s consistent for {row['key_bits']}")

    r = run([exe("bench"), "compare", "--payload-bytes", "4096", "--reps", "3", "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(r.stdout)))
    check(r.returncode == 0 and len(rows) == 3, "bench compare csv has three rows")
    check(all(float(row[c]) > 0 for row in rows for c in ("cipher_ms", "cipher_mac_ms", "saml_hbe_ms")),
          "nine positive cells")

    r = run([exe("bench"), "throughput", "--key-size", "192", "--megabytes", "1", "--reps", "3"])
    lines = r.stdout.splitlines()
    check(lines[0].startswith("Key size") and lines[1].startswith("192"), "text table header and single row")
    r = run([exe("bench"), "throughput", "--reps", "2"])
    check(r.returncode != 0, "fewer than three repetitions rejected")


if __name__ == "__main__":
    main()
