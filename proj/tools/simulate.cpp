#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "atex/session.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Run one simulated trading session and write taq.csv, snapshots.csv and "
                 "summary.txt"};
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool have_seed = false;
    app.add_option("--config", config_path, "session config file (key = value)")->required();
    app.add_option("--seed", seed, "master seed (overrides the config)")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_option("--out", out_dir, "output directory");
    CLI11_PARSE(app, argc, argv);

    try {
        atex::SessionConfig config = atex::parse_session_config(config_path);
        if (have_seed) config.seed = seed;
        const atex::SessionResult result = atex::run_session(config);
        atex::write_session_outputs(result, out_dir);
        for (const auto& [key, value] : result.summary.to_kv())
            std::cout << key << "=" << value << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << '\n';
        return 1;
    }
}
