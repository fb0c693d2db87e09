#include "hbesso/keystore.hpp"

#include <fstream>
#include <sstream>

namespace hbesso {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot read " + path.string(), 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

KeyStore KeyStore::load(const std::filesystem::path& path) {
    KeyStore ks;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw FileFormatError("malformed key store record", lineno);
        auto key = base64_decode(std::string_view(line).substr(tab + 1));
        if (!key || key->empty()) throw FileFormatError("key is not valid base64", lineno);
        ks.put(line.substr(0, tab), std::move(*key));
    }
    return ks;
}

void KeyStore::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& [id, key] : keys_) out += id + "\t" + base64_encode(key) + "\n";
    write_file_atomic(path, out);
}

void KeyStore::put(std::string id, Bytes key) { keys_.insert_or_assign(std::move(id), std::move(key)); }

const Bytes* KeyStore::find(std::string_view id) const {
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : &it->second;
}

void KeyStore::ensure(std::string id, RandomSource& rng) {
    if (!contains(id)) put(std::move(id), rng.bytes(16));
}

}  // namespace hbesso
