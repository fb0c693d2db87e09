#pragma once

// An IdP and SP pair on loopback ephemeral ports, backed by a temp dir.

#include <memory>
#include <string>

#include "hbesso/idp.hpp"
#include "hbesso/services.hpp"
#include "hbesso/sp.hpp"
#include "test_support.hpp"

struct LiveServices {
    explicit LiveServices(std::uint64_t seed, const hbesso::Clock& clock, int kdf_iterations = 2000)
        : idp_rng(seed), sp_rng(seed + 1) {
        using namespace hbesso;
        KeyStore keys;
        keys.ensure("idp-master", idp_rng);
        keys.ensure("fed-demo", idp_rng);
        keys.save(dir / "keys.tsv");

        idp::IdpConfig ic;
        ic.federation["urn:sp:demo"] = "fed-demo";
        ic.kdf_iterations = kdf_iterations;
        ic.keystore_path = dir / "keys.tsv";
        ic.directory_path = dir / "users.tsv";
        idp = std::make_unique<idp::IdentityProvider>(ic, keys, Directory(), idp_rng);
        idp_server = std::make_unique<services::IdpServer>(*idp, clock, services::ServiceOptions{true});
        const int idp_port = idp_server->bind("127.0.0.1", 0);
        idp_url = "http://127.0.0.1:" + std::to_string(idp_port);

        sp::SpConfig sc;
        sc.entity_id = "urn:sp:demo";
        sc.federation_key_id = "fed-demo";
        sc.federation_key = *keys.find("fed-demo");
        sc.idp_url = idp_url;
        sp = std::make_unique<sp::ServiceProvider>(sc, sp_rng);
        sp_server = std::make_unique<services::SpServer>(*sp, clock, services::ServiceOptions{true});
        const int sp_port = sp_server->bind("127.0.0.1", 0);
        sp_url = "http://127.0.0.1:" + std::to_string(sp_port);

        ok = idp_port > 0 && sp_port > 0;
        if (ok) {
            idp_server->start();
            sp_server->start();
        }
    }

    using Directory = hbesso::idp::Directory;

    TempDir dir;
    hbesso::SeededRandom idp_rng;
    hbesso::SeededRandom sp_rng;
    std::unique_ptr<hbesso::idp::IdentityProvider> idp;
    std::unique_ptr<hbesso::sp::ServiceProvider> sp;
    std::unique_ptr<hbesso::services::IdpServer> idp_server;
    std::unique_ptr<hbesso::services::SpServer> sp_server;
    std::string idp_url;
    std::string sp_url;
    bool ok = false;
};
