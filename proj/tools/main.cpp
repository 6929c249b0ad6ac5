#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuse/error.hpp"
#include "fuse/experiment.hpp"
#include "fuse/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, bool allow_sweep) {
    fuse::ExperimentSpec spec = fuse::parse_config(config_path);
    if (!allow_sweep && !spec.sweep.empty()) {
        throw fuse::ConfigError(config_path +
                                ": config declares sweep axes; use 'fuse "
                                "sweep' to execute them");
    }
    const fuse::ExperimentResult result = fuse::run_experiment(spec);
    for (const auto& r : result.runs) {
        std::cout << r.dir.filename().string() << "  "
                  << (r.ok ? "ok" : "FAILED");
        if (r.ok && !r.metrics.channel_mean.empty()) {
            std::cout << "  mean_c0=" << r.metrics.channel_mean[0];
            if (r.metrics.mask_coverage) {
                std::cout << "  coverage=" << *r.metrics.mask_coverage;
            }
        }
        if (!r.ok) std::cout << "  " << r.error;
        std::cout << "\n";
    }
    std::cout << result.runs.size() << " run(s) -> " << result.output.string()
              << "\n";
    if (!result.all_ok()) {
        std::cerr << "some runs failed; see report.csv\n";
        return 2;
    }
    return 0;
}

void print_json_flat(const nlohmann::json& j, const std::string& indent) {
    for (const auto& [key, val] : j.items()) {
        if (val.is_object()) {
            std::cout << indent << key << ":\n";
            print_json_flat(val, indent + "  ");
        } else if (val.is_array() && val.size() > 8) {
            std::cout << indent << key << ": [" << val.size() << " values]\n";
        } else {
            std::cout << indent << key << ": " << val.dump() << "\n";
        }
    }
}

int cmd_inspect(const std::string& dir) {
    const fs::path p(dir);
    if (fs::exists(p / "metrics.json")) {
        for (const char* name : {"params.json", "metrics.json"}) {
            std::ifstream f(p / name);
            if (!f) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(f);
            } catch (const nlohmann::json::parse_error& e) {
                throw fuse::ConfigError((p / name).string() + ": " + e.what());
            }
            std::cout << name << ":\n";
            print_json_flat(j, "  ");
        }
        return 0;
    }
    if (fs::exists(p / "report.csv")) {
        std::ifstream f(p / "report.csv");
        std::string line;
        int rows = 0;
        int failed = 0;
        std::string body;
        while (std::getline(f, line)) {
            body += line;
            body += '\n';
            if (rows > 0 && line.find(",failed,") != std::string::npos) ++failed;
            ++rows;
        }
        std::cout << body;
        std::cout << (rows - 1) << " run(s), " << failed << " failed\n";
        return failed == 0 ? 0 : 2;
    }
    throw fuse::ConfigError(dir +
                            ": neither metrics.json (run directory) nor "
                            "report.csv (experiment root) found");
}

int cmd_export(const std::string& name) {
    fs::path root = ".";
    if (const char* env_root = std::getenv("FUSE_OUT")) root = env_root;
    const fs::path dir = fuse::export_fixture(name, root / "fixtures");
    std::cout << "wrote fixture '" << name << "' to " << dir.string() << "\n";
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::cout << "  " << entry.path().filename().string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saliency-driven two-model diffusion sampling engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string inspect_dir;
    std::string fixture_name;

    CLI::App* run =
        app.add_subcommand("run", "Execute a config (sweep axes not allowed)");
    run->add_option("config", config_path, "experiment config JSON")
        ->required();
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Execute a config including its sweep axes");
    sweep->add_option("config", config_path, "experiment config JSON")
        ->required();
    CLI::App* inspect = app.add_subcommand(
        "inspect", "Print the metric summary of a run dir or experiment root");
    inspect->add_option("dir", inspect_dir, "run_* directory or experiment root")
        ->required();
    CLI::App* exp = app.add_subcommand(
        "export-fixture", "Write a built-in fixture bundle to ./fixtures");
    std::string names;
    for (const auto& n : fuse::builtin_fixture_names()) {
        if (!names.empty()) names += ", ";
        names += n;
    }
    exp->add_option("name", fixture_name, "one of: " + names)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // bad invocation counts as a config error
    }

    try {
        if (run->parsed()) return cmd_run(config_path, false);
        if (sweep->parsed()) return cmd_run(config_path, true);
        if (inspect->parsed()) return cmd_inspect(inspect_dir);
        if (exp->parsed()) return cmd_export(fixture_name);
        return 1;
    } catch (const fuse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fuse::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 2;
    }
}
