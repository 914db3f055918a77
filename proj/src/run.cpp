#include "sas/run.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "sas/rng.hpp"

namespace sas {

namespace {

using nlohmann::json;

constexpr std::uint64_t kReplicateTag = 0x4e11ca7eULL;
constexpr std::uint64_t kFoldTag = 0xf01d0007ULL;
constexpr std::uint64_t kXnewSearchTag = 0x00e30005ULL;

json parse_config(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

std::string require_string(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
    if (!j.at(key).is_string())
        throw ConfigError(std::string("config: '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

LambdaRule parse_lambda_rule(const json& j, const char* key, LambdaRule fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number()) return LambdaRule::fixed(v.get<double>());
    if (v.is_string()) {
        if (v.get<std::string>() == "cv") return LambdaRule::cv();
        throw ConfigError(std::string("config: '") + key + "' must be a number, \"cv\", or "
                          "{\"anchored\": c}");
    }
    if (v.is_object()) {
        reject_unknown_keys(v, {"anchored"}, key);
        if (v.contains("anchored")) return LambdaRule::anchored(v.at("anchored").get<double>());
    }
    throw ConfigError(std::string("config: bad lambda directive for '") + key + "'");
}

void parse_solver_block(const json& j, CrossFitOptions& opts) {
    if (!j.contains("solver")) return;
    const json& s = j.at("solver");
    reject_unknown_keys(s, {"tolerance", "max_iterations", "grid_size", "cv_folds"}, "solver");
    opts.solver.tolerance = get_or(s, "tolerance", opts.solver.tolerance);
    opts.solver.max_iterations = get_or(s, "max_iterations", opts.solver.max_iterations);
    opts.cv_grid_size = get_or(s, "grid_size", opts.cv_grid_size);
    opts.cv_folds = get_or(s, "cv_folds", opts.cv_folds);
    if (opts.solver.tolerance <= 0 || opts.solver.max_iterations < 1 || opts.cv_grid_size < 1 ||
        opts.cv_folds < 2)
        throw ConfigError("config: invalid solver block");
}

std::filesystem::path prepare_out_dir(const json& j) {
    const std::string out = require_string(j, "out");
    std::filesystem::path dir(out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + out + "'");
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

ScenarioConfig parse_scenario(const json& j) {
    ScenarioConfig cfg = ScenarioConfig::preset(require_string(j, "preset"));
    cfg.p = get_or<Eigen::Index>(j, "p", cfg.p);
    cfg.q = get_or<Eigen::Index>(j, "q", cfg.q);
    cfg.n = get_or<Eigen::Index>(j, "n", cfg.n);
    cfg.N = get_or<Eigen::Index>(j, "N", cfg.N);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.validate();
    return cfg;
}

} // namespace

int default_workers() {
    if (const char* env = std::getenv("SAS_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Replicate harness
// ---------------------------------------------------------------------------

namespace {

// Everything one replicate produces before aggregation.
ReplicateResult run_one_replicate(int rep, const ReplicateSpec& spec, const OracleBeta& oracle,
                                  const std::vector<std::pair<XNewKind, Eigen::VectorXd>>& xnews) {
    ReplicateResult result;
    result.replicate_id = rep;
    const LinkSpec link = make_link(LinkKind::logit);
    try {
        ScenarioConfig cfg = spec.scenario;
        cfg.seed = derive_seed(spec.seed, kReplicateTag, static_cast<std::uint64_t>(rep));
        GeneratedData gen = generate_scenario(cfg);

        CrossFitOptions sas_opts = spec.fit;
        sas_opts.seed = derive_seed(cfg.seed, kFoldTag, 1);
        CrossFitCore sas_core = fit_crossfit_core(gen.data, link, sas_opts);

        SemiSupervisedData sup;
        sup.labeled_x = gen.data.labeled_x;
        sup.labeled_s = gen.data.labeled_s;
        sup.labeled_y = gen.data.labeled_y;
        sup.unlabeled_x.resize(0, gen.data.labeled_x.cols());
        sup.unlabeled_s.resize(0, gen.data.labeled_s.cols());
        CrossFitOptions sup_opts = spec.sup_fit;
        sup_opts.seed = derive_seed(cfg.seed, kFoldTag, 2);
        CrossFitCore sup_core = fit_crossfit_core(sup, link, sup_opts);

        const Eigen::Index n = gen.data.n();
        for (const auto& [kind, x_new] : xnews) {
            const double truth = x_new.dot(oracle.beta0);
            const double norm = x_new.norm();

            CrossFitBundle sas_bundle = bundle_for_xnew(sas_core, x_new, sas_opts.solver);
            const double theta = debiased_estimate(sas_bundle, gen.data);
            const double v = variance_estimate(sas_bundle, gen.data);
            PredictionInterval pi = confidence_interval(theta, v, x_new, n, spec.alpha, link);
            PredictionRecord rec;
            rec.method = "SAS";
            rec.kind = kind;
            rec.plug_in = x_new.dot(sas_core.beta_full.coefficients);
            rec.debiased = norm * theta;
            rec.v_hat = v;
            rec.ase = norm * std::sqrt(v / static_cast<double>(n));
            rec.ci_linear = pi.ci_linear;
            rec.ci_response = pi.ci_response;
            rec.truth = truth;
            rec.truth_response = link.g(truth);
            result.records.push_back(rec);

            CrossFitBundle sup_bundle = bundle_for_xnew(sup_core, x_new, sup_opts.solver);
            const double theta_sl = debiased_estimate(sup_bundle, sup);
            const double v_sl = variance_estimate(sup_bundle, sup);
            PredictionInterval pi_sl =
                confidence_interval(theta_sl, v_sl, x_new, n, spec.alpha, link);
            rec.method = "SLASSO";
            rec.plug_in = x_new.dot(sup_core.beta_full.coefficients);
            rec.debiased = norm * theta_sl;
            rec.v_hat = v_sl;
            rec.ase = norm * std::sqrt(v_sl / static_cast<double>(n));
            rec.ci_linear = pi_sl.ci_linear;
            rec.ci_response = pi_sl.ci_response;
            result.records.push_back(rec);
        }

        TestSet test = generate_test_set(
            cfg, spec.test_rows, derive_seed(cfg.seed, kReplicateTag, 0x7e57));
        Eigen::VectorXd sc_sas = test.x * sas_core.beta_full.coefficients;
        Eigen::VectorXd sc_sl = test.x * sup_core.beta_full.coefficients;
        Eigen::VectorXd sc_or = test.x * oracle.beta0;
        result.auc_sas = auc(sc_sas, test.y);
        result.auc_slasso = auc(sc_sl, test.y);
        result.auc_oracle = auc(sc_or, test.y);
    } catch (const std::exception& e) {
        result.failed = true;
        result.failure = e.what();
    }
    return result;
}

} // namespace

ReplicateOutcome run_replicates(const ReplicateSpec& spec) {
    if (spec.replicates < 2) throw ConfigError("replicate: need at least 2 replicates");
    spec.scenario.validate();

    ReplicateOutcome out;
    out.oracle = evaluate_oracle_beta(spec.scenario, spec.oracle_eval_n, spec.seed);
    for (XNewKind kind : spec.x_kinds)
        out.x_new.emplace_back(
            kind, make_xnew(kind, spec.scenario, &out.oracle,
                            derive_seed(spec.seed, kXnewSearchTag)));

    out.results.assign(static_cast<std::size_t>(spec.replicates), ReplicateResult{});
    const int workers = std::max(1, spec.workers);
    std::atomic<int> next{0};
    auto work = [&] {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= spec.replicates) break;
            out.results[static_cast<std::size_t>(rep)] =
                run_one_replicate(rep, spec, out.oracle, out.x_new);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    out.table = aggregate(out.results);
    out.table.preset = spec.scenario.preset_name();
    out.table.s_beta0 = approx_sparsity(out.oracle.beta0.tail(spec.scenario.p));
    if (spec.compute_gamma_sparsity) {
        Eigen::VectorXd g = evaluate_gamma_proxy(spec.scenario, spec.gamma_eval_n, spec.seed);
        out.table.s_gamma0 = approx_sparsity(g.tail(g.size() - 1));
    }
    out.efficiency = efficiency_check(out.results);

    const double fail_rate =
        static_cast<double>(out.table.failures) / static_cast<double>(spec.replicates);
    if (fail_rate > 0.05)
        throw NumericalError("replicate: " + std::to_string(out.table.failures) + " of " +
                             std::to_string(spec.replicates) + " replicates failed");
    return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

CrossFitOptions parse_fit_options(const json& j) {
    CrossFitOptions opts;
    opts.K = get_or(j, "k_folds", 5);
    opts.lambda_gamma = parse_lambda_rule(j, "lambda_gamma", LambdaRule::cv());
    opts.lambda_beta = parse_lambda_rule(j, "lambda_beta", LambdaRule::cv());
    opts.lambda_u = parse_lambda_rule(j, "lambda_u", LambdaRule::anchored(0.5));
    parse_solver_block(j, opts);
    return opts;
}

std::string intervals_csv(const std::vector<std::pair<std::string, PredictionInterval>>& rows) {
    std::string csv = "x_id,theta_hat,v_hat,ci_lo,ci_hi,point_response\n";
    for (const auto& [id, pi] : rows) {
        csv += id + "," + fmt(pi.theta_hat) + "," + fmt(pi.v_hat) + "," +
               fmt(pi.ci_response.first) + "," + fmt(pi.ci_response.second) + "," +
               fmt(pi.point_response) + "\n";
    }
    return csv;
}

} // namespace

void cmd_fit(const std::string& config_json) {
    json j = parse_config(config_json);
    reject_unknown_keys(j,
                        {"labeled", "unlabeled", "link", "k_folds", "alpha", "lambda_gamma",
                         "lambda_beta", "lambda_u", "x_new", "seed", "out", "solver"},
                        "fit config");
    SemiSupervisedData data = load_dataset(require_string(j, "labeled"),
                                           require_string(j, "unlabeled"));
    const LinkSpec link = make_link(get_or<std::string>(j, "link", "logit"));
    const double alpha = get_or(j, "alpha", 0.05);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must be in (0,1)");
    const std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 0);

    CrossFitOptions opts = parse_fit_options(j);
    if (opts.K < 3 || opts.K > data.n() ||
        (data.unlabeled_rows() > 0 && opts.K > data.unlabeled_rows()))
        throw ConfigError("config: k_folds must satisfy 3 <= K <= min(n, N-n)");
    opts.seed = derive_seed(seed, kFoldTag, 0);

    if (!j.contains("x_new") || !j.at("x_new").is_array() || j.at("x_new").empty())
        throw ConfigError("config: need at least one x_new entry");

    std::vector<std::pair<std::string, Eigen::VectorXd>> xnews;
    for (const auto& e : j.at("x_new")) {
        reject_unknown_keys(e, {"id", "values", "row"}, "x_new entry");
        const std::string id = require_string(e, "id");
        Eigen::VectorXd x(data.p() + 1);
        x[0] = 1.0;
        if (e.contains("values")) {
            const auto& vals = e.at("values");
            if (!vals.is_array() || static_cast<Eigen::Index>(vals.size()) != data.p())
                throw ConfigError("config: x_new '" + id + "' values must have p = " +
                                  std::to_string(data.p()) + " entries");
            for (std::size_t c = 0; c < vals.size(); ++c)
                x[static_cast<Eigen::Index>(c) + 1] = vals[c].get<double>();
        } else if (e.contains("row")) {
            const auto row = e.at("row").get<Eigen::Index>();
            if (row < 0 || row >= data.total())
                throw ConfigError("config: x_new '" + id + "' row out of range");
            x = row < data.n() ? data.labeled_x.row(row).transpose()
                               : data.unlabeled_x.row(row - data.n()).transpose();
        } else {
            throw ConfigError("config: x_new '" + id + "' needs values or row");
        }
        xnews.emplace_back(id, std::move(x));
    }

    auto dir = prepare_out_dir(j);
    CrossFitCore core = fit_crossfit_core(data, link, opts);
    std::vector<std::pair<std::string, PredictionInterval>> rows;
    for (const auto& [id, x] : xnews) {
        CrossFitBundle bundle = bundle_for_xnew(core, x, opts.solver);
        const double theta = debiased_estimate(bundle, data);
        const double v = variance_estimate(bundle, data);
        rows.emplace_back(id, confidence_interval(theta, v, x, data.n(), alpha, link));
    }

    ModelArtifact artifact = ModelArtifact::from_core(core, data, seed);
    artifact.save((dir / "model.json").string());
    write_text(dir / "intervals.csv", intervals_csv(rows));
}

void cmd_simulate(const std::string& config_json) {
    json j = parse_config(config_json);
    reject_unknown_keys(j,
                        {"preset", "p", "q", "n", "N", "seed", "out", "emit_beta0",
                         "oracle_eval_n"},
                        "simulate config");
    ScenarioConfig cfg = parse_scenario(j);
    auto dir = prepare_out_dir(j);

    GeneratedData gen = generate_scenario(cfg);
    write_dataset(gen.data, (dir / "labeled.csv").string(), (dir / "unlabeled.csv").string());

    json truth{{"preset", cfg.preset_name()},
               {"seed", cfg.seed},
               {"n", cfg.n},
               {"N", cfg.N},
               {"p", cfg.p},
               {"q", cfg.q}};
    json uy = json::array();
    for (Eigen::Index i = 0; i < gen.unlabeled_y.size(); ++i) uy.push_back(gen.unlabeled_y[i]);
    truth["unlabeled_y"] = uy;
    if (get_or(j, "emit_beta0", false)) {
        OracleBeta oracle = evaluate_oracle_beta(
            cfg, get_or<Eigen::Index>(j, "oracle_eval_n", 400000), cfg.seed);
        json b = json::array();
        for (Eigen::Index i = 0; i < oracle.beta0.size(); ++i) b.push_back(oracle.beta0[i]);
        truth["beta0"] = b;
        truth["eta"] = {oracle.eta[0], oracle.eta[1], oracle.eta[2], oracle.eta[3]};
    }
    write_text(dir / "truth.json", truth.dump(2) + "\n");
}

namespace {

std::string table1_csv(const SummaryTable& t) {
    std::string csv = "preset,S_beta0,S_gamma0,auc_oracle,auc_slasso,auc_sas,replicates\n";
    csv += t.preset + "," + fmt6(t.s_beta0) + "," + fmt6(t.s_gamma0) + "," +
           fmt6(t.auc_oracle) + "," + fmt6(t.auc_slasso) + "," + fmt6(t.auc_sas) + "," +
           std::to_string(t.replicates) + "\n";
    return csv;
}

const SummaryRow* find_row(const SummaryTable& t, const std::string& method, XNewKind kind) {
    for (const auto& r : t.rows)
        if (r.method == method && r.kind == kind) return &r;
    return nullptr;
}

std::string table2_csv(const SummaryTable& t, const std::vector<XNewKind>& kinds) {
    std::string csv =
        "type,slasso_bias,slasso_ese,slasso_rmse,sas_bias,sas_ese,sas_rmse\n";
    for (XNewKind k : kinds) {
        const auto* sl = find_row(t, "SLASSO", k);
        const auto* sa = find_row(t, "SAS", k);
        if (!sl || !sa) continue;
        csv += std::string(xnew_kind_name(k)) + "," + fmt6(sl->plug_bias) + "," +
               fmt6(sl->plug_ese) + "," + fmt6(sl->plug_rmse) + "," + fmt6(sa->plug_bias) +
               "," + fmt6(sa->plug_ese) + "," + fmt6(sa->plug_rmse) + "\n";
    }
    return csv;
}

std::string table3_csv(const SummaryTable& t, const std::vector<XNewKind>& kinds) {
    std::string csv =
        "type,slasso_bias,slasso_ese,slasso_ase,slasso_cp,sas_bias,sas_ese,sas_ase,sas_cp\n";
    for (XNewKind k : kinds) {
        const auto* sl = find_row(t, "SLASSO", k);
        const auto* sa = find_row(t, "SAS", k);
        if (!sl || !sa) continue;
        csv += std::string(xnew_kind_name(k)) + "," + fmt6(sl->deb_bias) + "," +
               fmt6(sl->deb_ese) + "," + fmt6(sl->deb_ase) + "," + fmt6(sl->coverage) + "," +
               fmt6(sa->deb_bias) + "," + fmt6(sa->deb_ese) + "," + fmt6(sa->deb_ase) + "," +
               fmt6(sa->coverage) + "\n";
    }
    return csv;
}

std::string efficiency_csv(const EfficiencyReport& rep) {
    std::string csv = "type,mean_vsl_minus_vsas,fraction_vsl_ge_vsas,count\n";
    for (const auto& r : rep.rows)
        csv += std::string(xnew_kind_name(r.kind)) + "," + fmt(r.mean_diff) + "," +
               fmt6(r.fraction_ge) + "," + std::to_string(r.count) + "\n";
    csv += "pooled," + fmt(rep.pooled_mean_diff) + "," + fmt6(rep.pooled_fraction_ge) + "," +
           std::to_string(rep.count) + "\n";
    return csv;
}

} // namespace

void cmd_replicate(const std::string& config_json) {
    json j = parse_config(config_json);
    reject_unknown_keys(j,
                        {"preset", "p", "q", "n", "N", "seed", "out", "replicates", "workers",
                         "alpha", "k_folds", "lambda_gamma", "lambda_beta", "lambda_u",
                         "x_new_kinds", "oracle_eval_n", "gamma_eval_n", "test_rows", "solver"},
                        "replicate config");
    ReplicateSpec spec;
    spec.scenario = parse_scenario(j);
    spec.replicates = get_or(j, "replicates", 100);
    if (spec.replicates < 2) throw ConfigError("config: replicates must be >= 2");
    spec.workers = get_or(j, "workers", default_workers());
    spec.seed = get_or<std::uint64_t>(j, "seed", spec.scenario.seed);
    spec.alpha = get_or(j, "alpha", 0.05);
    spec.oracle_eval_n = get_or<Eigen::Index>(j, "oracle_eval_n", spec.oracle_eval_n);
    spec.gamma_eval_n = get_or<Eigen::Index>(j, "gamma_eval_n", spec.gamma_eval_n);
    spec.test_rows = get_or<Eigen::Index>(j, "test_rows", spec.test_rows);
    spec.fit = parse_fit_options(j);
    spec.sup_fit = spec.fit;
    if (j.contains("x_new_kinds")) {
        spec.x_kinds.clear();
        for (const auto& k : j.at("x_new_kinds"))
            spec.x_kinds.push_back(xnew_kind_from_name(k.get<std::string>()));
        if (spec.x_kinds.empty()) throw ConfigError("config: x_new_kinds must be nonempty");
    }
    auto dir = prepare_out_dir(j);

    ReplicateOutcome out = run_replicates(spec);
    write_text(dir / "table1.csv", table1_csv(out.table));
    write_text(dir / "table2.csv", table2_csv(out.table, spec.x_kinds));
    write_text(dir / "table3.csv", table3_csv(out.table, spec.x_kinds));
    write_text(dir / "efficiency.csv", efficiency_csv(out.efficiency));

    json summary{{"preset", out.table.preset},
                 {"replicates", out.table.replicates},
                 {"failures", out.table.failures},
                 {"auc", {{"oracle", out.table.auc_oracle},
                          {"slasso", out.table.auc_slasso},
                          {"sas", out.table.auc_sas}}},
                 {"S_beta0", out.table.s_beta0},
                 {"S_gamma0", out.table.s_gamma0},
                 {"efficiency_fraction", out.efficiency.pooled_fraction_ge}};
    write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void cmd_predict(const std::string& config_json) {
    json j = parse_config(config_json);
    reject_unknown_keys(j, {"model", "data", "out"}, "predict config");
    ModelArtifact artifact = ModelArtifact::load(require_string(j, "model"));
    const LinkSpec link = make_link(artifact.link_name);
    Eigen::MatrixXd x = load_x_rows(require_string(j, "data"));
    if (x.cols() != artifact.beta.size())
        throw DataError("predict: data has " + std::to_string(x.cols() - 1) +
                        " covariates, model expects " + std::to_string(artifact.beta.size() - 1));
    auto dir = prepare_out_dir(j);
    std::string csv = "row,linear,response\n";
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double lin = x.row(i).dot(artifact.beta);
        csv += std::to_string(i) + "," + fmt(lin) + "," + fmt(link.g(lin)) + "\n";
    }
    write_text(dir / "predictions.csv", csv);
}

void cmd_cv(const std::string& config_json) {
    json j = parse_config(config_json);
    reject_unknown_keys(j,
                        {"labeled", "unlabeled", "link", "target", "lambda_gamma", "seed",
                         "out", "solver"},
                        "cv config");
    SemiSupervisedData data = load_dataset(require_string(j, "labeled"),
                                           require_string(j, "unlabeled"));
    const LinkSpec link = make_link(get_or<std::string>(j, "link", "logit"));
    const std::string target = get_or<std::string>(j, "target", "imputation");
    const std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 0);
    CrossFitOptions opts;
    parse_solver_block(j, opts);

    PseudoLikContext ctx;
    if (target == "imputation") {
        ctx.design = data.labeled_w();
        ctx.response = data.labeled_y;
        ctx.link = link;
    } else if (target == "prediction") {
        LambdaRule gr = parse_lambda_rule(j, "lambda_gamma", LambdaRule::cv());
        CrossFitOptions gopts = opts;
        gopts.lambda_gamma = gr;
        double lg;
        {
            PseudoLikContext gctx{data.labeled_w(), data.labeled_y, link};
            if (gr.mode == LambdaRule::Mode::fixed) {
                lg = gr.value;
            } else {
                PenaltySpec pen = PenaltySpec::unpenalized_intercept(0.0, gctx.dim());
                NullModel null = fit_null_model(gctx, pen.penalty_mask, opts.solver);
                auto grid = make_lambda_grid(null.lambda_max, opts.cv_grid_size);
                lg = select_lambda_cv(gctx, pen.penalty_mask, grid, opts.cv_folds, seed,
                                      opts.solver)
                         .lambda;
            }
        }
        PenalizedFit gamma = fit_imputation(data, link, lg, opts.solver);
        Eigen::VectorXd yhat = impute_outcomes(gamma.coefficients, data, link);
        ctx.design.resize(data.total(), data.x_dim());
        ctx.design.topRows(data.n()) = data.labeled_x;
        ctx.design.bottomRows(data.unlabeled_rows()) = data.unlabeled_x;
        ctx.response.resize(data.total());
        ctx.response.head(data.n()) = data.labeled_y;
        ctx.response.tail(data.unlabeled_rows()) = yhat;
        ctx.link = link;
    } else {
        throw ConfigError("config: target must be 'imputation' or 'prediction'");
    }

    PenaltySpec pen = PenaltySpec::unpenalized_intercept(0.0, ctx.dim());
    NullModel null = fit_null_model(ctx, pen.penalty_mask, opts.solver);
    if (null.lambda_max <= 0.0) throw NumericalError("cv: degenerate problem, lambda_max = 0");
    auto grid = make_lambda_grid(null.lambda_max, opts.cv_grid_size);
    CvResult cv = select_lambda_cv(ctx, pen.penalty_mask, grid, opts.cv_folds, seed, opts.solver);

    auto dir = prepare_out_dir(j);
    std::string csv = "lambda,cv_loss,selected\n";
    for (std::size_t i = 0; i < cv.grid.size(); ++i)
        csv += fmt(cv.grid[i]) + "," + fmt(cv.losses[i]) + "," +
               (i == cv.index ? "1" : "0") + "\n";
    write_text(dir / "cv.csv", csv);
}

void run_command(const std::string& command, const std::string& config_json) {
    if (command == "fit")
        cmd_fit(config_json);
    else if (command == "simulate")
        cmd_simulate(config_json);
    else if (command == "replicate")
        cmd_replicate(config_json);
    else if (command == "predict")
        cmd_predict(config_json);
    else if (command == "cv")
        cmd_cv(config_json);
    else
        throw ConfigError("unknown command '" + command + "'");
}

} // namespace sas
