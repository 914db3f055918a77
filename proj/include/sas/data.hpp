#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sas/errors.hpp"

namespace sas {

// Labeled block (Y, X, S) of n rows plus unlabeled block (X, S). X carries
// an explicit leading intercept column of ones; W rows are (X_i', S_i')'.
// An empty unlabeled block is the supervised degenerate case (rho = 1) used
// by the supervised baselines.
struct SemiSupervisedData {
    Eigen::MatrixXd labeled_x;
    Eigen::MatrixXd labeled_s;
    Eigen::VectorXd labeled_y;
    Eigen::MatrixXd unlabeled_x;
    Eigen::MatrixXd unlabeled_s;

    Eigen::Index n() const { return labeled_x.rows(); }
    Eigen::Index unlabeled_rows() const { return unlabeled_x.rows(); }
    Eigen::Index total() const { return n() + unlabeled_rows(); }
    double rho() const { return static_cast<double>(n()) / static_cast<double>(total()); }
    // Covariate count excluding the intercept.
    Eigen::Index p() const { return labeled_x.cols() - 1; }
    Eigen::Index q() const { return labeled_s.cols(); }
    Eigen::Index x_dim() const { return labeled_x.cols(); }
    Eigen::Index w_dim() const { return labeled_x.cols() + labeled_s.cols(); }

    bool supervised_only() const { return unlabeled_rows() == 0; }

    // W = [X S] over the labeled block.
    Eigen::MatrixXd labeled_w() const {
        Eigen::MatrixXd w(n(), w_dim());
        w.leftCols(x_dim()) = labeled_x;
        w.rightCols(q()) = labeled_s;
        return w;
    }

    void validate() const {
        if (n() < 1) throw DataError("SemiSupervisedData: need at least one labeled row");
        if (labeled_y.size() != n())
            throw DataError("SemiSupervisedData: labeled y length != labeled rows");
        if (labeled_s.rows() != n())
            throw DataError("SemiSupervisedData: labeled S rows != labeled rows");
        if (unlabeled_rows() > 0) {
            if (unlabeled_x.cols() != labeled_x.cols())
                throw DataError("SemiSupervisedData: X column mismatch between blocks");
            if (unlabeled_s.rows() != unlabeled_rows() || unlabeled_s.cols() != labeled_s.cols())
                throw DataError("SemiSupervisedData: S shape mismatch between blocks");
        }
        if (labeled_x.cols() < 1 || (labeled_x.col(0).array() != 1.0).any())
            throw DataError("SemiSupervisedData: labeled X must start with an intercept column");
        if (unlabeled_rows() > 0 && (unlabeled_x.col(0).array() != 1.0).any())
            throw DataError("SemiSupervisedData: unlabeled X must start with an intercept column");
    }
};

// Disjoint exhaustive fold index sets over the labeled block (0..n-1) and
// the unlabeled block (0..N-n-1), sizes within +-1 of equal.
struct FoldPartition {
    int K = 0;
    std::vector<std::vector<Eigen::Index>> labeled_folds;
    std::vector<std::vector<Eigen::Index>> unlabeled_folds;

    Eigen::Index labeled_size(int k) const {
        return static_cast<Eigen::Index>(labeled_folds[static_cast<std::size_t>(k)].size());
    }
    Eigen::Index fold_size(int k) const {
        return labeled_size(k) +
               static_cast<Eigen::Index>(unlabeled_folds[static_cast<std::size_t>(k)].size());
    }
};

// Seeded uniform random partition; deterministic given (data shape, K, seed).
FoldPartition make_folds(const SemiSupervisedData& data, int K, std::uint64_t seed);

} // namespace sas
