// csb-lab: estimate confidence sub-contour boxes and run the companion
// analyses (fit, OAT, UA, SA, convergence, repeated-CSB study) from a JSON
// problem configuration. Every command writes a self-contained artifact
// directory whose manifest can be replayed as a config.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "csb/config.hpp"
#include "csb/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"confidence sub-contour boxes for nonlinear dynamic models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t repeats = 10;

    struct Cmd {
        const char* name;
        const char* help;
    };
    const Cmd cmds[] = {
        {"fit", "multi-start estimation, filtered median confidence intervals"},
        {"oat", "one-at-a-time boundary search for the promissory box"},
        {"csb", "full pipeline: promissory box, then iterative shrink, then certificate"},
        {"ua", "Monte Carlo uncertainty analysis over a factor box"},
        {"sa", "variance-based sensitivity indices over a factor box"},
        {"converge", "sensitivity index series over growing sample sizes"},
        {"csb-study", "repeated CSB estimation with distinct seeds"},
    };
    CLI::Option* seed_opt = nullptr;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "problem configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory for the artifact")->required();
        seed_opt = sub->add_option("--seed", seed, "root seed (overrides the config)");
        sub->add_option("--threads", threads, "worker threads")
            ->check(CLI::PositiveNumber);
        if (std::string(c.name) == "csb-study")
            sub->add_option("--repeats", repeats, "number of CSB estimations")
                ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : csb::pipeline::exit_config_error;
    }

    CLI::App* sub = app.get_subcommands().front();

    csb::ProblemConfig cfg;
    try {
        cfg = csb::load_config(config_path);
    } catch (const csb::ConfigError& e) {
        std::cerr << "csb-lab: " << e.what() << "\n";
        return csb::pipeline::exit_config_error;
    }

    csb::pipeline::RunOptions opt;
    opt.out_dir = out_dir;
    if (sub->count("--seed") > 0) opt.seed = seed;
    opt.threads = threads;
    opt.repeats = repeats;
    (void)seed_opt;
    return csb::pipeline::run_command(sub->get_name(), std::move(cfg), opt);
}
