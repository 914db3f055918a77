#pragma once

#include <string>
#include <vector>

#include "sas/data.hpp"
#include "sas/estimator.hpp"

namespace sas {

// CSV schema: header row; labeled file carries a `y` column; columns with
// prefixes `x_` and `s_` form the X and S blocks in header order. Files
// carry no intercept column; one is prepended on load.
SemiSupervisedData load_dataset(const std::string& labeled_path,
                                const std::string& unlabeled_path);

void write_dataset(const SemiSupervisedData& data, const std::string& labeled_path,
                   const std::string& unlabeled_path);

// Covariate-only CSV (x_ columns) for prediction inputs; returns rows with
// the intercept prepended.
Eigen::MatrixXd load_x_rows(const std::string& path);

// 64-bit FNV-1a over dimensions and matrix bytes.
std::string dataset_fingerprint(const SemiSupervisedData& data);

struct FoldFitSummary {
    Eigen::VectorXd coefficients;
    bool converged = false;
};

// Persisted fit: the full two-step coefficients plus per-fold summaries.
// Serialization round-trips byte-identically.
struct ModelArtifact {
    int schema_version = 1;
    std::string link_name = "logit";
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;
    double lambda_gamma = 0.0;
    double lambda_beta = 0.0;
    double lambda_u = 0.0;
    int k_folds = 0;
    std::uint64_t seed = 0;
    std::vector<FoldFitSummary> gamma_folds;
    std::vector<FoldFitSummary> beta_folds;
    // Data fingerprint.
    Eigen::Index n = 0, N = 0, p = 0, q = 0;
    std::string data_hash;

    static ModelArtifact from_core(const CrossFitCore& core, const SemiSupervisedData& data,
                                   std::uint64_t seed);
    std::string to_json() const;
    static ModelArtifact from_json(const std::string& text);
    void save(const std::string& path) const;
    static ModelArtifact load(const std::string& path);
};

} // namespace sas
