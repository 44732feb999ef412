// Command-line front end. Talks to the library exclusively through the
// public C API in frugal.h.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "frugal.h"

namespace {

int status_to_exit_code(frugal_status status) {
    switch (status) {
        case FRUGAL_OK: return 0;
        case FRUGAL_ERR_DIVERGED: return 3;
        default: return 2;  // config / parameter / data errors
    }
}

int finish(frugal_status status, char* summary) {
    if (status != FRUGAL_OK) {
        std::fprintf(stderr, "error: %s\n", frugal_last_error());
    } else if (summary) {
        std::fputs(summary, stdout);
    }
    frugal_string_free(summary);
    return status_to_exit_code(status);
}

bool read_file(const std::string& path, std::string& out, std::string& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err = "cannot read config file: " + path;
        return false;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frugal: memory-efficient optimization experiments"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    std::string format = "csv";
    long seed_override = -1;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--format", format, "output format: csv or json")->capture_default_str();
    app.add_option("--seed", seed_override, "override the config seed list with one seed");

    std::string train_config;
    auto* train = app.add_subcommand("train", "run a training experiment from a JSON config");
    train->add_option("config", train_config, "config JSON file")->required();

    std::string toy_ranks = "3,6";
    long toy_gap = 10;
    long toy_seeds = 5;
    long toy_steps = 500;
    std::string toy_lrs = "0.01,0.03,0.1";
    double toy_beta = 0.9;
    auto* toy = app.add_subcommand("toy-reproj", "state re-projection toy on a 10x10 quadratic");
    toy->add_option("--ranks", toy_ranks, "projection ranks, comma separated")->capture_default_str();
    toy->add_option("--gap", toy_gap, "projector update gap T")->capture_default_str();
    toy->add_option("--seeds", toy_seeds, "number of seeds")->capture_default_str();
    toy->add_option("--steps", toy_steps, "steps per run")->capture_default_str();
    toy->add_option("--lrs", toy_lrs, "learning-rate grid, comma separated")->capture_default_str();
    toy->add_option("--beta", toy_beta, "momentum coefficient")->capture_default_str();

    std::string angles_config;
    auto* angles = app.add_subcommand("angles", "principal-angle analysis of projector streams");
    angles->add_option("config", angles_config, "config JSON file")->required();

    std::string memory_config;
    auto* memory = app.add_subcommand("memory", "optimizer-state memory accounting");
    memory->add_option("config", memory_config, "config JSON file")->required();

    std::string rate_config;
    auto* rate = app.add_subcommand("rate-check", "convergence-rate experiment against the explicit bound");
    rate->add_option("config", rate_config, "config JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    std::string config_text, err;
    char* summary = nullptr;

    if (*train) {
        if (!read_file(train_config, config_text, err)) {
            std::fprintf(stderr, "error: %s\n", err.c_str());
            return 2;
        }
        return finish(frugal_run_experiment(config_text.c_str(), out_dir.c_str(), format.c_str(), seed_override,
                                            &summary),
                      summary);
    }
    if (*toy) {
        return finish(frugal_run_reproj_toy(toy_ranks.c_str(), toy_gap, toy_seeds, toy_steps, toy_lrs.c_str(),
                                            toy_beta, out_dir.c_str(), format.c_str(), &summary),
                      summary);
    }
    if (*angles) {
        if (!read_file(angles_config, config_text, err)) {
            std::fprintf(stderr, "error: %s\n", err.c_str());
            return 2;
        }
        return finish(frugal_run_angle_analysis(config_text.c_str(), out_dir.c_str(), format.c_str(), &summary),
                      summary);
    }
    if (*memory) {
        if (!read_file(memory_config, config_text, err)) {
            std::fprintf(stderr, "error: %s\n", err.c_str());
            return 2;
        }
        return finish(frugal_memory_report(config_text.c_str(), &summary), summary);
    }
    if (*rate) {
        if (!read_file(rate_config, config_text, err)) {
            std::fprintf(stderr, "error: %s\n", err.c_str());
            return 2;
        }
        return finish(frugal_rate_check(config_text.c_str(), out_dir.c_str(), format.c_str(), seed_override,
                                        &summary),
                      summary);
    }
    return 2;
}
