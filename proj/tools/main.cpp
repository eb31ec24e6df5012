#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ellab/experiments.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr const char* kOutEnv = "ELLAB_OUT";

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << content;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Elliptic boundary value experiments"};
    app.require_subcommand(1, 1);
    std::string config_path = "presets/default.toml";
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string format = "csv";
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--config", config_path, "TOML experiment configuration")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory (overrides $" + std::string(kOutEnv) + " and the config)");
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--format", format, "Result table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    const std::vector<std::pair<std::string, std::string>> commands{
        {"garding", "garding"}, {"perturb-sweep", "perturb_sweep"}, {"norms", "norms"},
        {"poincare", "poincare"}, {"newton", "newton"},              {"duality", "duality"},
        {"all", ""}};
    for (const auto& [cmd, section] : commands) {
        app.add_subcommand(cmd, section.empty() ? "Run every experiment section present in the config"
                                                : "Run the [" + section + "] experiment")
            ->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    ellab::set_num_threads(threads);

    ellab::ExperimentConfig config;
    std::vector<std::string> sections;
    fs::path out;
    try {
        config = ellab::ExperimentConfig::load(config_path);
        if (*seed_opt) {
            config.override_seed(seed);
        }
        config.seed();
        if (command == "all") {
            for (const auto& name : ellab::experiment_names()) {
                if (config.has(name)) {
                    sections.push_back(name);
                }
            }
            if (sections.empty()) {
                throw ellab::ConfigError("no experiment sections in " + config_path);
            }
        } else {
            for (const auto& [cmd, section] : commands) {
                if (cmd == command) {
                    sections.push_back(section);
                }
            }
            if (!config.has(sections.front())) {
                throw ellab::ConfigError("missing section [" + sections.front() + "] in " + config_path);
            }
        }
        if (!out_dir.empty()) {
            out = out_dir;
        } else if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') {
            out = env;
        } else {
            out = config.output();
        }
    } catch (const ellab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<ellab::ExperimentOutput> outputs;
    std::vector<ellab::ResultRow> rows;
    try {
        for (const auto& section : sections) {
            outputs.push_back(ellab::run_experiment(section, config));
            const auto& o = outputs.back();
            rows.insert(rows.end(), o.rows.begin(), o.rows.end());
            std::cerr << section << ": " << o.rows.size() << " rows in " << o.runtime << " s\n";
        }
        fs::create_directories(out);
        std::ostringstream table;
        if (format == "csv") {
            ellab::write_results_csv(table, rows);
            write_file(out / "results.csv", table.str());
        } else {
            ellab::write_results_json(table, rows);
            write_file(out / "results.json", table.str());
        }
        std::ostringstream summary;
        ellab::write_summary_json(summary, config, outputs);
        write_file(out / "summary.json", summary.str());
        for (const auto& o : outputs) {
            for (const auto& [name, content] : o.artifacts) {
                write_file(out / name, content);
            }
        }
    } catch (const ellab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }

    int failed = 0;
    for (const auto& r : rows) {
        if (!r.pass) {
            if (failed == 0) {
                std::cerr << "failed rows:\n";
            }
            ++failed;
            std::cerr << "  " << r.experiment << ' ' << r.case_name << " [" << r.params
                      << "] measured=" << ellab::format_number(r.measured) << " criterion: " << r.criterion << '\n';
        }
    }
    std::cout << rows.size() - static_cast<std::size_t>(failed) << '/' << rows.size() << " rows passed; results in "
              << out.string() << '\n';
    return failed == 0 ? 0 : kExitFail;
}
