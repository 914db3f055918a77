#include "sas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sas/errors.hpp"

namespace sas {

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("auc: scores and labels length mismatch");
    std::vector<double> pos, neg;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1.0)
            pos.push_back(scores[i]);
        else if (labels[i] == 0.0)
            neg.push_back(scores[i]);
        else
            throw std::domain_error("auc: labels must be 0 or 1");
    }
    if (pos.empty() || neg.empty())
        throw std::domain_error("auc: both classes must be present");
    double wins = 0.0;
    for (double a : pos)
        for (double b : neg) {
            if (a > b)
                wins += 1.0;
            else if (a == b)
                wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

namespace {

struct Accum {
    std::vector<double> plug, deb, ase;
    std::vector<int> cover, cover_resp;
    double truth = 0.0;
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

SummaryTable aggregate(std::vector<ReplicateResult> results) {
    std::sort(results.begin(), results.end(),
              [](const ReplicateResult& a, const ReplicateResult& b) {
                  return a.replicate_id < b.replicate_id;
              });

    SummaryTable table;
    std::map<std::pair<std::string, int>, Accum> acc;
    std::vector<double> auc_sas, auc_sl, auc_or;
    int ok = 0;
    for (const auto& r : results) {
        if (r.failed) {
            ++table.failures;
            continue;
        }
        ++ok;
        auc_sas.push_back(r.auc_sas);
        auc_sl.push_back(r.auc_slasso);
        auc_or.push_back(r.auc_oracle);
        for (const auto& rec : r.records) {
            auto& a = acc[{rec.method, static_cast<int>(rec.kind)}];
            a.truth = rec.truth;
            a.plug.push_back(rec.plug_in);
            a.deb.push_back(rec.debiased);
            a.ase.push_back(rec.ase);
            a.cover.push_back(rec.ci_linear.first <= rec.truth &&
                              rec.truth <= rec.ci_linear.second);
            a.cover_resp.push_back(rec.ci_response.first <= rec.truth_response &&
                                   rec.truth_response <= rec.ci_response.second);
        }
    }
    if (ok < 2) throw ConfigError("aggregate: need at least 2 successful replicates");

    table.replicates = ok;
    table.auc_sas = mean(auc_sas);
    table.auc_slasso = mean(auc_sl);
    table.auc_oracle = mean(auc_or);

    for (const auto& [key, a] : acc) {
        SummaryRow row;
        row.method = key.first;
        row.kind = static_cast<XNewKind>(key.second);
        row.truth = a.truth;
        row.replicates = static_cast<int>(a.plug.size());
        row.plug_bias = mean(a.plug) - a.truth;
        row.plug_ese = sample_sd(a.plug);
        double se2 = 0.0;
        for (double x : a.plug) se2 += (x - a.truth) * (x - a.truth);
        row.plug_rmse = std::sqrt(se2 / static_cast<double>(a.plug.size()));
        row.deb_bias = mean(a.deb) - a.truth;
        row.deb_ese = sample_sd(a.deb);
        row.deb_ase = mean(a.ase);
        se2 = 0.0;
        for (double x : a.deb) se2 += (x - a.truth) * (x - a.truth);
        row.deb_rmse = std::sqrt(se2 / static_cast<double>(a.deb.size()));
        double c = 0.0, cr = 0.0;
        for (int v : a.cover) c += v;
        for (int v : a.cover_resp) cr += v;
        row.coverage = c / static_cast<double>(a.cover.size());
        row.coverage_response = cr / static_cast<double>(a.cover_resp.size());
        table.rows.push_back(row);
    }
    return table;
}

EfficiencyReport efficiency_check(const std::vector<ReplicateResult>& results) {
    EfficiencyReport report;
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_kind;
    for (const auto& r : results) {
        if (r.failed) continue;
        std::map<int, double> sas_v, sl_v;
        for (const auto& rec : r.records) {
            if (rec.method == "SAS")
                sas_v[static_cast<int>(rec.kind)] = rec.v_hat;
            else if (rec.method == "SLASSO")
                sl_v[static_cast<int>(rec.kind)] = rec.v_hat;
        }
        for (const auto& [k, v] : sas_v) {
            auto it = sl_v.find(k);
            if (it == sl_v.end()) continue;
            by_kind[k].first.push_back(it->second); // V_SL
            by_kind[k].second.push_back(v);         // V_SAS
        }
    }
    double pooled_diff = 0.0;
    int pooled_ge = 0, pooled_n = 0;
    for (const auto& [k, vs] : by_kind) {
        EfficiencyReport::Row row;
        row.kind = static_cast<XNewKind>(k);
        row.count = static_cast<int>(vs.first.size());
        int ge = 0;
        double diff = 0.0;
        for (std::size_t i = 0; i < vs.first.size(); ++i) {
            diff += vs.first[i] - vs.second[i];
            if (vs.first[i] >= vs.second[i]) ++ge;
        }
        row.mean_diff = diff / static_cast<double>(row.count);
        row.fraction_ge = static_cast<double>(ge) / static_cast<double>(row.count);
        report.rows.push_back(row);
        pooled_diff += diff;
        pooled_ge += ge;
        pooled_n += row.count;
    }
    if (pooled_n > 0) {
        report.pooled_mean_diff = pooled_diff / static_cast<double>(pooled_n);
        report.pooled_fraction_ge = static_cast<double>(pooled_ge) / static_cast<double>(pooled_n);
        report.count = pooled_n;
    }
    return report;
}

} // namespace sas
