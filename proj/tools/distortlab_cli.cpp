// Command-line driver: distortlab <subcommand> [--config FILE] [key=value ...]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "distortlab/error.hpp"
#include "distortlab/experiment.hpp"
#include "distortlab/report.hpp"

namespace {

int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
        const std::string& format_flag, const std::string& output_flag, int threads_flag) {
    using namespace distortlab;
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw InvalidInput("cannot open config '" + config_path + "'");
        load_config(cfg, in, config_path);
    }
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("override '" + kv + "': expected key=value");
        try {
            apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        } catch (const InvalidInput& e) {
            throw InvalidInput(std::string("command line: ") + e.what());
        }
    }
    if (!format_flag.empty()) apply_setting(cfg, "format", format_flag);
    if (!output_flag.empty()) apply_setting(cfg, "output", output_flag);
    if (threads_flag >= 0) apply_setting(cfg, "threads", std::to_string(threads_flag));

    const Report report = run_subcommand(subcommand, cfg);
    const std::string text = serialize_report(report, parse_format(cfg.format));
    if (cfg.output == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        std::ofstream out(cfg.output, std::ios::binary);
        if (!out) throw InvalidInput("output: cannot write '" + cfg.output + "'");
        out << text;
        if (!out) throw InvalidInput("output: write to '" + cfg.output + "' failed");
    }
    return exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments on eps-distorted diffeomorphisms"};
    app.set_version_flag("--version", DISTORTLAB_VERSION);
    app.require_subcommand(1, 1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string format;
    std::string output;
    int threads = -1;
    std::string chosen;

    for (const char* name : distortlab::kSubcommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config,-c", config_path, "flat key = value config file");
        sub->add_option("--format,-f", format, "csv or json");
        sub->add_option("--output,-o", output, "report path, '-' for stdout");
        sub->add_option("--threads,-j", threads, "worker threads, 0 = all cores");
        sub->add_option("settings", overrides, "key=value overrides applied after the config file");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return run(chosen, config_path, overrides, format, output, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
}
