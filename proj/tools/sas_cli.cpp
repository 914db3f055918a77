// Command-line front end. Links the C API only; flags are merged into the
// JSON config and handed to sas_run_command.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sas.h"

namespace {

int run(const std::string& command, const std::string& config_path, long long seed,
        bool seed_set, int workers, bool workers_set, const std::string& out_dir) {
    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
            return SAS_ERR_CONFIG;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            config = nlohmann::json::parse(ss.str());
        } catch (const nlohmann::json::exception& e) {
            std::fprintf(stderr, "error: config '%s' is not valid JSON: %s\n",
                         config_path.c_str(), e.what());
            return SAS_ERR_CONFIG;
        }
    }
    if (seed_set) config["seed"] = seed;
    if (workers_set) config["workers"] = workers;
    if (!out_dir.empty()) config["out"] = out_dir;

    const sas_status status = sas_run_command(command.c_str(), config.dump().c_str());
    if (status != SAS_OK) std::fprintf(stderr, "error: %s\n", sas_last_error());
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-assisted semi-supervised risk prediction"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    long long seed = 0;
    int workers = 0;

    struct Sub {
        CLI::App* cmd;
        CLI::Option *seed_opt, *workers_opt;
    };
    std::vector<std::pair<std::string, Sub>> subs;
    for (const char* name : {"fit", "simulate", "replicate", "predict", "cv"}) {
        static const std::map<std::string, std::string> desc = {
            {"fit", "fit the SAS model and emit prediction intervals"},
            {"simulate", "generate a simulation preset dataset"},
            {"replicate", "run the Monte-Carlo replication study"},
            {"predict", "apply a saved model to new covariate rows"},
            {"cv", "standalone penalty-level selection"}};
        CLI::App* cmd = app.add_subcommand(name, desc.at(name));
        cmd->add_option("--config", config_path, "JSON config file");
        Sub sub{cmd, nullptr, nullptr};
        sub.seed_opt = cmd->add_option("--seed", seed, "master seed (overrides config)");
        sub.workers_opt =
            cmd->add_option("--workers", workers, "worker count (overrides config)");
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        subs.emplace_back(name, sub);
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& [name, sub] : subs)
        if (sub.cmd->parsed())
            return run(name, config_path, seed, sub.seed_opt->count() > 0, workers,
                       sub.workers_opt->count() > 0, out_dir);
    return SAS_ERR_CONFIG;
}
