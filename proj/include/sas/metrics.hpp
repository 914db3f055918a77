#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sas/sim.hpp"

namespace sas {

// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(tie) over all pairs.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// One method's result for one x_new direction in one replicate. Estimates
// live on the linear-prediction scale ||x_new||_2 * x_std'beta, matching the
// truth x_new'beta0.
struct PredictionRecord {
    std::string method; // "SAS" or "SLASSO"
    XNewKind kind = XNewKind::S;
    double plug_in = 0.0;  // x_new' beta_hat from the plain two-step fit
    double debiased = 0.0; // ||x_new||_2 * theta_hat
    double v_hat = 0.0;
    double ase = 0.0; // ||x_new||_2 * sqrt(v_hat/n)
    std::pair<double, double> ci_linear;
    std::pair<double, double> ci_response;
    double truth = 0.0;          // x_new' beta0
    double truth_response = 0.0; // g(x_new' beta0)
};

struct ReplicateResult {
    int replicate_id = 0;
    std::vector<PredictionRecord> records;
    double auc_sas = 0.0;
    double auc_slasso = 0.0;
    double auc_oracle = 0.0;
    bool failed = false;
    std::string failure;
};

struct SummaryRow {
    std::string method;
    XNewKind kind = XNewKind::S;
    double truth = 0.0;
    // Plain estimates (estimation table).
    double plug_bias = 0.0, plug_ese = 0.0, plug_rmse = 0.0;
    // Debiased estimates (inference table).
    double deb_bias = 0.0, deb_ese = 0.0, deb_ase = 0.0, deb_rmse = 0.0;
    double coverage = 0.0;          // linear scale
    double coverage_response = 0.0; // response scale (coincides for monotone g)
    int replicates = 0;
};

struct SummaryTable {
    std::string preset;
    double s_beta0 = 0.0;
    double s_gamma0 = 0.0;
    double auc_oracle = 0.0, auc_sas = 0.0, auc_slasso = 0.0;
    std::vector<SummaryRow> rows;
    int replicates = 0;
    int failures = 0;
};

// Monte-Carlo aggregation: bias = mean - truth, ESE with the (R-1) divisor,
// rMSE with the R divisor, ASE = mean reported standard error, CP = CI
// coverage fraction. Results are re-sorted by replicate id first so the
// output is independent of input order.
SummaryTable aggregate(std::vector<ReplicateResult> results);

// Empirical check of the supervised-vs-SAS variance inequality under a
// correct imputation model.
struct EfficiencyReport {
    struct Row {
        XNewKind kind = XNewKind::S;
        double mean_diff = 0.0; // mean(V_SL - V_SAS)
        double fraction_ge = 0.0;
        int count = 0;
    };
    std::vector<Row> rows;
    double pooled_mean_diff = 0.0;
    double pooled_fraction_ge = 0.0;
    int count = 0;
};
EfficiencyReport efficiency_check(const std::vector<ReplicateResult>& results);

} // namespace sas
