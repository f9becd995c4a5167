#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bubblelab/errors.hpp"
#include "commands.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw bubblelab::ConfigError("cannot read config file: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bubblelab: numerical experiments for the fourth-order Liouville equation in R^4"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    int k_max = 0;

    using Command = void (*)(const std::string&, const bubblelab::cli::Overrides&);
    const std::pair<const char*, Command> table[] = {
        {"solve-radial", bubblelab::cli::cmd_solve_radial}, {"sweep-beta", bubblelab::cli::cmd_sweep_beta},
        {"family", bubblelab::cli::cmd_family},             {"detect", bubblelab::cli::cmd_detect},
        {"quantize", bubblelab::cli::cmd_quantize},         {"green-check", bubblelab::cli::cmd_green_check},
    };
    std::vector<std::pair<CLI::App*, Command>> subs;
    std::vector<CLI::Option*> seed_opts, kmax_opts;
    for (const auto& [name, fn] : table) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out", out, "output directory");
        seed_opts.push_back(sub->add_option("--seed", seed, "seed for stochastic quadrature"));
        kmax_opts.push_back(sub->add_option("--k-max", k_max, "drop family members with k above this"));
        subs.emplace_back(sub, fn);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        bubblelab::cli::Overrides o;
        o.out = out;
        for (auto* opt : seed_opts)
            if (opt->count()) o.seed = seed;
        for (auto* opt : kmax_opts)
            if (opt->count()) o.k_max = k_max;
        o.threads = bubblelab::cli::thread_cap(std::getenv("BUBBLELAB_THREADS"));
        const std::string text = slurp(config);
        for (const auto& [sub, fn] : subs)
            if (sub->parsed()) fn(text, o);
    } catch (const bubblelab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const bubblelab::GeometryError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
