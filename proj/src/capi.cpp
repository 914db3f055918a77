#include "sas.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "sas/run.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

sas_status to_status(const std::exception& e) {
    g_last_error = e.what();
    if (dynamic_cast<const sas::ConfigError*>(&e)) return SAS_ERR_CONFIG;
    if (dynamic_cast<const sas::DataError*>(&e)) return SAS_ERR_DATA;
    return SAS_ERR_NUMERIC;
}

template <class F>
sas_status guarded(F&& f) {
    try {
        f();
        return SAS_OK;
    } catch (const std::exception& e) {
        return to_status(e);
    } catch (...) {
        g_last_error = "unknown error";
        return SAS_ERR_NUMERIC;
    }
}

} // namespace

struct sas_dataset {
    sas::SemiSupervisedData data;
};

struct sas_model {
    sas::LinkSpec link = sas::make_link(sas::LinkKind::logit);
    Eigen::VectorXd beta;
    // Present only for models produced by sas_fit in this session.
    std::shared_ptr<sas::CrossFitCore> core;
    std::shared_ptr<const sas::SemiSupervisedData> data;
    sas::ModelArtifact artifact;
};

extern "C" {

const char* sas_version(void) { return "1.0.0"; }

const char* sas_last_error(void) { return g_last_error.c_str(); }

sas_status sas_dataset_load_csv(const char* labeled_csv, const char* unlabeled_csv,
                                sas_dataset** out) {
    return guarded([&] {
        if (!labeled_csv || !unlabeled_csv || !out)
            throw sas::ConfigError("sas_dataset_load_csv: null argument");
        auto d = std::make_unique<sas_dataset>();
        d->data = sas::load_dataset(labeled_csv, unlabeled_csv);
        *out = d.release();
    });
}

sas_status sas_dataset_simulate(const char* preset, long n, long N, long p, long q,
                                unsigned long long seed, sas_dataset** out) {
    return guarded([&] {
        if (!preset || !out) throw sas::ConfigError("sas_dataset_simulate: null argument");
        sas::ScenarioConfig cfg = sas::ScenarioConfig::preset(preset);
        if (n > 0) cfg.n = n;
        if (N > 0) cfg.N = N;
        if (p > 0) cfg.p = p;
        if (q > 0) cfg.q = q;
        cfg.seed = seed;
        cfg.validate();
        auto d = std::make_unique<sas_dataset>();
        d->data = sas::generate_scenario(cfg).data;
        *out = d.release();
    });
}

void sas_dataset_free(sas_dataset* d) { delete d; }

sas_status sas_dataset_dims(const sas_dataset* d, long* n, long* N, long* p, long* q) {
    return guarded([&] {
        if (!d) throw sas::ConfigError("sas_dataset_dims: null dataset");
        if (n) *n = static_cast<long>(d->data.n());
        if (N) *N = static_cast<long>(d->data.total());
        if (p) *p = static_cast<long>(d->data.p());
        if (q) *q = static_cast<long>(d->data.q());
    });
}

sas_status sas_fit(const sas_dataset* d, const char* config_json, sas_model** out) {
    return guarded([&] {
        if (!d || !out) throw sas::ConfigError("sas_fit: null argument");
        std::string text = config_json && *config_json ? config_json : "{}";
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw sas::ConfigError(std::string("sas_fit: invalid config JSON: ") + e.what());
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            static const char* allowed[] = {"link",        "k_folds", "lambda_gamma",
                                            "lambda_beta", "lambda_u", "seed", "solver"};
            bool ok = false;
            for (const char* k : allowed) ok = ok || it.key() == k;
            if (!ok) throw sas::ConfigError("sas_fit: unknown config key '" + it.key() + "'");
        }

        auto model = std::make_unique<sas_model>();
        model->link = sas::make_link(j.value("link", std::string("logit")));

        sas::CrossFitOptions opts;
        opts.K = j.value("k_folds", 5);
        opts.seed = j.value("seed", std::uint64_t{0});
        auto lam = [&](const char* key, sas::LambdaRule fallback) {
            if (!j.contains(key)) return fallback;
            const json& v = j.at(key);
            if (v.is_number()) return sas::LambdaRule::fixed(v.get<double>());
            if (v.is_string() && v.get<std::string>() == "cv") return sas::LambdaRule::cv();
            if (v.is_object() && v.contains("anchored"))
                return sas::LambdaRule::anchored(v.at("anchored").get<double>());
            throw sas::ConfigError(std::string("sas_fit: bad lambda directive '") + key + "'");
        };
        opts.lambda_gamma = lam("lambda_gamma", sas::LambdaRule::cv());
        opts.lambda_beta = lam("lambda_beta", sas::LambdaRule::cv());
        opts.lambda_u = lam("lambda_u", sas::LambdaRule::anchored(0.5));
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            opts.solver.tolerance = s.value("tolerance", opts.solver.tolerance);
            opts.solver.max_iterations = s.value("max_iterations", opts.solver.max_iterations);
            opts.cv_grid_size = s.value("grid_size", opts.cv_grid_size);
            opts.cv_folds = s.value("cv_folds", opts.cv_folds);
        }

        auto data_copy = std::make_shared<sas::SemiSupervisedData>(d->data);
        model->core = std::make_shared<sas::CrossFitCore>(
            sas::fit_crossfit_core(*data_copy, model->link, opts));
        model->data = data_copy;
        model->beta = model->core->beta_full.coefficients;
        model->artifact = sas::ModelArtifact::from_core(*model->core, *data_copy, opts.seed);
        *out = model.release();
    });
}

void sas_model_free(sas_model* m) { delete m; }

sas_status sas_model_save(const sas_model* m, const char* path) {
    return guarded([&] {
        if (!m || !path) throw sas::ConfigError("sas_model_save: null argument");
        m->artifact.save(path);
    });
}

sas_status sas_model_load(const char* path, sas_model** out) {
    return guarded([&] {
        if (!path || !out) throw sas::ConfigError("sas_model_load: null argument");
        auto model = std::make_unique<sas_model>();
        model->artifact = sas::ModelArtifact::load(path);
        model->link = sas::make_link(model->artifact.link_name);
        model->beta = model->artifact.beta;
        *out = model.release();
    });
}

sas_status sas_model_coefficients(const sas_model* m, double* beta, long len) {
    return guarded([&] {
        if (!m || !beta) throw sas::ConfigError("sas_model_coefficients: null argument");
        if (len != static_cast<long>(m->beta.size()))
            throw sas::ConfigError("sas_model_coefficients: len must be p+1 = " +
                                   std::to_string(m->beta.size()));
        std::memcpy(beta, m->beta.data(), sizeof(double) * static_cast<std::size_t>(len));
    });
}

sas_status sas_model_predict(const sas_model* m, const double* x_rows, long rows, long p,
                             double* out_response) {
    return guarded([&] {
        if (!m || !x_rows || !out_response)
            throw sas::ConfigError("sas_model_predict: null argument");
        if (p + 1 != static_cast<long>(m->beta.size()))
            throw sas::ConfigError("sas_model_predict: p must equal " +
                                   std::to_string(m->beta.size() - 1));
        for (long i = 0; i < rows; ++i) {
            double lin = m->beta[0];
            for (long c = 0; c < p; ++c) lin += m->beta[c + 1] * x_rows[i * p + c];
            out_response[i] = m->link.g(lin);
        }
    });
}

sas_status sas_model_interval(const sas_model* m, const double* x_new, long p, double alpha,
                              double* theta_hat, double* v_hat, double* ci_lo, double* ci_hi,
                              double* point_response) {
    return guarded([&] {
        if (!m || !x_new) throw sas::ConfigError("sas_model_interval: null argument");
        if (!m->core || !m->data)
            throw sas::ConfigError(
                "sas_model_interval: model was loaded from disk; interval estimation needs a "
                "model fitted in this session");
        if (p + 1 != static_cast<long>(m->beta.size()))
            throw sas::ConfigError("sas_model_interval: p must equal " +
                                   std::to_string(m->beta.size() - 1));
        Eigen::VectorXd x(p + 1);
        x[0] = 1.0;
        for (long c = 0; c < p; ++c) x[c + 1] = x_new[c];
        sas::CrossFitBundle bundle = sas::bundle_for_xnew(*m->core, x);
        const double theta = sas::debiased_estimate(bundle, *m->data);
        const double v = sas::variance_estimate(bundle, *m->data);
        sas::PredictionInterval pi =
            sas::confidence_interval(theta, v, x, m->data->n(), alpha, m->link);
        if (theta_hat) *theta_hat = pi.theta_hat;
        if (v_hat) *v_hat = pi.v_hat;
        if (ci_lo) *ci_lo = pi.ci_response.first;
        if (ci_hi) *ci_hi = pi.ci_response.second;
        if (point_response) *point_response = pi.point_response;
    });
}

sas_status sas_run_command(const char* command, const char* config_json) {
    return guarded([&] {
        if (!command || !config_json)
            throw sas::ConfigError("sas_run_command: null argument");
        sas::run_command(command, config_json);
    });
}

} // extern "C"
