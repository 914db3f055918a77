#pragma once

#include <string>

#include "sas/estimator.hpp"
#include "sas/io.hpp"
#include "sas/metrics.hpp"
#include "sas/sim.hpp"

namespace sas {

// Library-level entry points behind the CLI subcommands. Each takes the
// validated JSON config text, writes its output files, and throws
// ConfigError / DataError / NumericalError on failure.
void cmd_fit(const std::string& config_json);
void cmd_simulate(const std::string& config_json);
void cmd_replicate(const std::string& config_json);
void cmd_predict(const std::string& config_json);
void cmd_cv(const std::string& config_json);

void run_command(const std::string& command, const std::string& config_json);

// Replicate harness, exposed for tests and the acceptance suite.
struct ReplicateSpec {
    ScenarioConfig scenario;
    int replicates = 100;
    int workers = 1;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::vector<XNewKind> x_kinds = {XNewKind::S, XNewKind::I, XNewKind::D,
                                     XNewKind::L, XNewKind::M, XNewKind::H};
    Eigen::Index oracle_eval_n = 400000;
    Eigen::Index gamma_eval_n = 200000;
    Eigen::Index test_rows = 100;
    CrossFitOptions fit;      // SAS pipeline options
    CrossFitOptions sup_fit;  // supervised baseline options
    bool compute_gamma_sparsity = true;
};

struct ReplicateOutcome {
    SummaryTable table;
    EfficiencyReport efficiency;
    OracleBeta oracle;
    std::vector<ReplicateResult> results;
    std::vector<std::pair<XNewKind, Eigen::VectorXd>> x_new;
};

ReplicateOutcome run_replicates(const ReplicateSpec& spec);

// Default worker count: SAS_WORKERS env var, else 1.
int default_workers();

} // namespace sas
