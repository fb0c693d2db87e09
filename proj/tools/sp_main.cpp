#include <iostream>

#include <spdlog/spdlog.h>

#include "hbesso/services.hpp"
#include "hbesso/sp.hpp"
#include "serve_common.hpp"

using namespace hbesso;

int main(int argc, char** argv) {
    CLI::App app{"Service provider"};
    app.require_subcommand(1);
    ServeFlags flags;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    flags.add_to(*serve_cmd);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = sp::load_sp_config(flags.config);
        const auto rng = flags.random();
        const auto clock = flags.clock();
        sp::ServiceProvider provider(config, *rng);
        services::SpServer server(provider, *clock, {flags.test_clock});
        const auto [host, port] = services::parse_listen_address(listen_address(config.listen, "SP_LISTEN"));
        const int bound = server.bind(host, port);
        if (bound < 0) {
            spdlog::error("sp: cannot listen on {}:{}", host, port);
            return 1;
        }
        spdlog::info("sp: {} listening on http://{}:{}, IdP at {}", config.entity_id, host, bound, config.idp_url);
        server.run();
    } catch (const std::exception& e) {
        std::cerr << "sp: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
