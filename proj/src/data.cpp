#include "sas/data.hpp"

#include <algorithm>

#include "sas/rng.hpp"

namespace sas {

namespace {

std::vector<std::vector<Eigen::Index>> deal_folds(Eigen::Index count, int K, Rng& rng) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < order.size(); ++i)
        folds[i % static_cast<std::size_t>(K)].push_back(order[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

} // namespace

FoldPartition make_folds(const SemiSupervisedData& data, int K, std::uint64_t seed) {
    data.validate();
    const Eigen::Index n = data.n();
    const Eigen::Index u = data.unlabeled_rows();
    if (K < 2 || K > n || (u > 0 && K > u))
        throw ConfigError("make_folds: K must satisfy 2 <= K <= min(n, N-n)");

    Rng lab_rng(derive_seed(seed, /*purpose=*/0xf01d5'1abULL));
    Rng unlab_rng(derive_seed(seed, /*purpose=*/0xf01d5'u1aULL));

    FoldPartition part;
    part.K = K;
    part.labeled_folds = deal_folds(n, K, lab_rng);
    part.unlabeled_folds =
        u > 0 ? deal_folds(u, K, unlab_rng)
              : std::vector<std::vector<Eigen::Index>>(static_cast<std::size_t>(K));
    return part;
}

} // namespace sas
