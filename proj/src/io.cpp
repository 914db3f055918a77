#include "sas/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sas {

namespace {

using nlohmann::json;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; // row-major
};

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");
    table.header = split_line(line);
    for (auto& h : table.header)
        if (h.empty()) throw DataError("'" + path + "': empty column name in header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size())
            throw DataError("'" + path + "' row " + std::to_string(lineno) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const char* s = cells[c].c_str();
            char* end = nullptr;
            row[c] = std::strtod(s, &end);
            if (end == s || *end != '\0')
                throw DataError("'" + path + "' row " + std::to_string(lineno) + " column '" +
                                table.header[c] + "': non-numeric cell '" + cells[c] + "'");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

struct ColumnLayout {
    std::vector<std::size_t> x_cols;
    std::vector<std::size_t> s_cols;
    std::vector<std::string> x_names;
    std::vector<std::string> s_names;
    std::ptrdiff_t y_col = -1;
};

ColumnLayout classify(const CsvTable& table, const std::string& path) {
    ColumnLayout lay;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const std::string& h = table.header[c];
        if (h == "y") {
            if (lay.y_col >= 0) throw DataError("'" + path + "': duplicate y column");
            lay.y_col = static_cast<std::ptrdiff_t>(c);
        } else if (h.rfind("x_", 0) == 0) {
            lay.x_cols.push_back(c);
            lay.x_names.push_back(h);
        } else if (h.rfind("s_", 0) == 0) {
            lay.s_cols.push_back(c);
            lay.s_names.push_back(h);
        } else {
            throw DataError("'" + path + "': unknown column '" + h +
                            "' (expected y, x_*, or s_*)");
        }
    }
    if (lay.x_cols.empty()) throw DataError("'" + path + "': no x_ columns");
    return lay;
}

std::string name_set_difference(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
    std::vector<std::string> sa = a, sb = b, diff;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                  std::back_inserter(diff));
    std::string out;
    for (const auto& d : diff) {
        if (!out.empty()) out += ", ";
        out += d;
    }
    return out;
}

void fill_block(const CsvTable& table, const std::vector<std::size_t>& cols,
                Eigen::MatrixXd& x_out, Eigen::MatrixXd& s_out,
                const std::vector<std::size_t>& s_cols) {
    const auto m = static_cast<Eigen::Index>(table.rows.size());
    x_out.resize(m, static_cast<Eigen::Index>(cols.size()) + 1);
    x_out.col(0).setOnes();
    s_out.resize(m, static_cast<Eigen::Index>(s_cols.size()));
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < cols.size(); ++c)
            x_out(i, static_cast<Eigen::Index>(c) + 1) = row[cols[c]];
        for (std::size_t c = 0; c < s_cols.size(); ++c)
            s_out(i, static_cast<Eigen::Index>(c)) = row[s_cols[c]];
    }
}

// Column indices of `names` within the (name -> column) map of another file.
std::vector<std::size_t> reorder_to(const std::vector<std::string>& names,
                                    const std::vector<std::string>& other_names,
                                    const std::vector<std::size_t>& other_cols) {
    std::vector<std::size_t> out(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = std::find(other_names.begin(), other_names.end(), names[i]);
        out[i] = other_cols[static_cast<std::size_t>(it - other_names.begin())];
    }
    return out;
}

void write_double(std::FILE* f, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::fputs(buf, f);
}

json vec_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

} // namespace

SemiSupervisedData load_dataset(const std::string& labeled_path,
                                const std::string& unlabeled_path) {
    CsvTable lab = read_csv(labeled_path);
    CsvTable unlab = read_csv(unlabeled_path);
    ColumnLayout lab_lay = classify(lab, labeled_path);
    ColumnLayout unlab_lay = classify(unlab, unlabeled_path);

    if (lab_lay.y_col < 0) throw DataError("'" + labeled_path + "': missing y column");
    if (unlab_lay.y_col >= 0)
        throw DataError("'" + unlabeled_path + "': unexpected outcome column 'y'");
    if (lab.rows.empty()) throw DataError("'" + labeled_path + "': no data rows");
    if (unlab.rows.empty())
        throw DataError("'" + unlabeled_path + "': zero unlabeled rows");

    auto names_equal = [](std::vector<std::string> a, std::vector<std::string> b) {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    };
    if (!names_equal(lab_lay.x_names, unlab_lay.x_names))
        throw DataError("x-column sets differ between files: {" +
                        name_set_difference(lab_lay.x_names, unlab_lay.x_names) + "}");
    if (!names_equal(lab_lay.s_names, unlab_lay.s_names))
        throw DataError("s-column sets differ between files: {" +
                        name_set_difference(lab_lay.s_names, unlab_lay.s_names) + "}");

    SemiSupervisedData data;
    fill_block(lab, lab_lay.x_cols, data.labeled_x, data.labeled_s, lab_lay.s_cols);
    data.labeled_y.resize(static_cast<Eigen::Index>(lab.rows.size()));
    for (std::size_t i = 0; i < lab.rows.size(); ++i)
        data.labeled_y[static_cast<Eigen::Index>(i)] =
            lab.rows[i][static_cast<std::size_t>(lab_lay.y_col)];

    // Unlabeled columns realigned to the labeled header order.
    auto ux = reorder_to(lab_lay.x_names, unlab_lay.x_names, unlab_lay.x_cols);
    auto us = reorder_to(lab_lay.s_names, unlab_lay.s_names, unlab_lay.s_cols);
    fill_block(unlab, ux, data.unlabeled_x, data.unlabeled_s, us);

    data.validate();
    return data;
}

void write_dataset(const SemiSupervisedData& data, const std::string& labeled_path,
                   const std::string& unlabeled_path) {
    data.validate();
    auto write_block = [&](const std::string& path, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& s, const Eigen::VectorXd* y) {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw DataError("cannot write '" + path + "'");
        for (Eigen::Index j = 1; j < x.cols(); ++j)
            std::fprintf(f, "%sx_%lld", j > 1 ? "," : "", static_cast<long long>(j));
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            std::fprintf(f, ",s_%lld", static_cast<long long>(j + 1));
        if (y) std::fputs(",y", f);
        std::fputc('\n', f);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 1; j < x.cols(); ++j) {
                if (j > 1) std::fputc(',', f);
                write_double(f, x(i, j));
            }
            for (Eigen::Index j = 0; j < s.cols(); ++j) {
                std::fputc(',', f);
                write_double(f, s(i, j));
            }
            if (y) {
                std::fputc(',', f);
                write_double(f, (*y)[i]);
            }
            std::fputc('\n', f);
        }
        std::fclose(f);
    };
    write_block(labeled_path, data.labeled_x, data.labeled_s, &data.labeled_y);
    write_block(unlabeled_path, data.unlabeled_x, data.unlabeled_s, nullptr);
}

Eigen::MatrixXd load_x_rows(const std::string& path) {
    CsvTable table = read_csv(path);
    ColumnLayout lay = classify(table, path);
    Eigen::MatrixXd x, s;
    fill_block(table, lay.x_cols, x, s, lay.s_cols);
    return x;
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
}

void fnv_matrix(std::uint64_t& h, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            fnv_bytes(h, &v, sizeof v);
        }
}

} // namespace

std::string dataset_fingerprint(const SemiSupervisedData& data) {
    std::uint64_t h = 1469598103934665603ULL;
    const std::int64_t dims[4] = {data.n(), data.total(), data.p(), data.q()};
    fnv_bytes(h, dims, sizeof dims);
    fnv_matrix(h, data.labeled_x);
    fnv_matrix(h, data.labeled_s);
    fnv_matrix(h, data.labeled_y);
    fnv_matrix(h, data.unlabeled_x);
    fnv_matrix(h, data.unlabeled_s);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ModelArtifact ModelArtifact::from_core(const CrossFitCore& core, const SemiSupervisedData& data,
                                       std::uint64_t seed_in) {
    ModelArtifact a;
    a.link_name = core.link.name();
    a.gamma = core.gamma_full.coefficients;
    a.beta = core.beta_full.coefficients;
    a.lambda_gamma = core.lambda_gamma;
    a.lambda_beta = core.lambda_beta;
    a.lambda_u = core.lambda_u;
    a.k_folds = core.partition.K;
    a.seed = seed_in;
    for (const auto& f : core.gamma_k) a.gamma_folds.push_back({f.coefficients, f.converged});
    for (const auto& f : core.beta_k) a.beta_folds.push_back({f.coefficients, f.converged});
    a.n = data.n();
    a.N = data.total();
    a.p = data.p();
    a.q = data.q();
    a.data_hash = dataset_fingerprint(data);
    return a;
}

std::string ModelArtifact::to_json() const {
    json folds_g = json::array(), folds_b = json::array();
    for (const auto& f : gamma_folds)
        folds_g.push_back({{"coefficients", vec_to_json(f.coefficients)},
                           {"converged", f.converged}});
    for (const auto& f : beta_folds)
        folds_b.push_back({{"coefficients", vec_to_json(f.coefficients)},
                           {"converged", f.converged}});
    json j{{"schema_version", schema_version},
           {"link", link_name},
           {"gamma", vec_to_json(gamma)},
           {"beta", vec_to_json(beta)},
           {"lambda_gamma", lambda_gamma},
           {"lambda_beta", lambda_beta},
           {"lambda_u", lambda_u},
           {"k_folds", k_folds},
           {"seed", seed},
           {"gamma_folds", folds_g},
           {"beta_folds", folds_b},
           {"data", {{"n", n}, {"N", N}, {"p", p}, {"q", q}, {"hash", data_hash}}}};
    return j.dump(2) + "\n";
}

ModelArtifact ModelArtifact::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model artifact: invalid JSON: ") + e.what());
    }
    ModelArtifact a;
    try {
        a.schema_version = j.at("schema_version").get<int>();
        if (a.schema_version != 1)
            throw ConfigError("model artifact: unsupported schema version " +
                              std::to_string(a.schema_version));
        a.link_name = j.at("link").get<std::string>();
        a.gamma = vec_from_json(j.at("gamma"));
        a.beta = vec_from_json(j.at("beta"));
        a.lambda_gamma = j.at("lambda_gamma").get<double>();
        a.lambda_beta = j.at("lambda_beta").get<double>();
        a.lambda_u = j.at("lambda_u").get<double>();
        a.k_folds = j.at("k_folds").get<int>();
        a.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& f : j.at("gamma_folds"))
            a.gamma_folds.push_back({vec_from_json(f.at("coefficients")),
                                     f.at("converged").get<bool>()});
        for (const auto& f : j.at("beta_folds"))
            a.beta_folds.push_back({vec_from_json(f.at("coefficients")),
                                    f.at("converged").get<bool>()});
        const auto& d = j.at("data");
        a.n = d.at("n").get<Eigen::Index>();
        a.N = d.at("N").get<Eigen::Index>();
        a.p = d.at("p").get<Eigen::Index>();
        a.q = d.at("q").get<Eigen::Index>();
        a.data_hash = d.at("hash").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("model artifact: ") + e.what());
    }
    return a;
}

void ModelArtifact::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << to_json();
}

ModelArtifact ModelArtifact::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace sas
