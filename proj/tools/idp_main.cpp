#include <iostream>

#include <spdlog/spdlog.h>

#include "hbesso/idp.hpp"
#include "hbesso/services.hpp"
#include "serve_common.hpp"

using namespace hbesso;

namespace {

int serve(const ServeFlags& flags) {
    const auto config = idp::load_idp_config(flags.config);
    auto keys = KeyStore::load(config.keystore_path);
    auto directory = config.directory_path.empty() ? idp::Directory{} : idp::load_directory(config.directory_path);
    const auto rng = flags.random();
    const auto clock = flags.clock();

    idp::IdentityProvider provider(config, std::move(keys), std::move(directory), *rng);
    services::IdpServer server(provider, *clock, {flags.test_clock});
    const auto [host, port] = services::parse_listen_address(listen_address(config.listen, "IDP_LISTEN"));
    const int bound = server.bind(host, port);
    if (bound < 0) {
        spdlog::error("idp: cannot listen on {}:{}", host, port);
        return 1;
    }
    spdlog::info("idp: {} listening on http://{}:{} ({} users)", config.entity_id, host, bound,
                 provider.directory_snapshot().size());
    server.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identity provider"};
    app.require_subcommand(1);

    ServeFlags flags;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    flags.add_to(*serve_cmd);

    std::string keystore;
    std::vector<std::string> ids;
    auto* keygen = app.add_subcommand("keygen", "add random 128-bit keys to a key store");
    keygen->add_option("--keystore", keystore, "key store file (created if absent)")->required();
    keygen->add_option("--id", ids, "key id; repeatable")->required();

    std::string from, to, key_id;
    auto* export_cmd = app.add_subcommand("export-key", "copy one key into another key store");
    export_cmd->add_option("--keystore", from, "source key store")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--id", key_id, "key id")->required();
    export_cmd->add_option("--to", to, "destination key store (created if absent)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(flags);
        if (*keygen) {
            auto ks = std::filesystem::exists(keystore) ? KeyStore::load(keystore) : KeyStore{};
            SystemRandom rng;
            for (const auto& id : ids) ks.ensure(id, rng);
            ks.save(keystore);
            std::cout << keystore << ": " << ks.size() << " keys\n";
            return 0;
        }
        if (*export_cmd) {
            const auto src = KeyStore::load(from);
            const auto* key = src.find(key_id);
            if (!key) {
                std::cerr << "no key '" << key_id << "' in " << from << "\n";
                return 1;
            }
            auto dst = std::filesystem::exists(to) ? KeyStore::load(to) : KeyStore{};
            dst.put(key_id, *key);
            dst.save(to);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "idp: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
