#include "mixsig/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixsig/errors.hpp"
#include "mixsig/select.hpp"
#include "mixsig/stats.hpp"

namespace mixsig {

namespace {

double fmt_g17_value(double x) { return x; }

void append_g17(std::string& out, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", fmt_g17_value(x));
    out += buf;
}

// One Gaussian cluster block: n rows at `mean` with diagonal covariance
// var (scalar) or diag_var (per coordinate).
void fill_gaussian_block(DataMatrix& data, Eigen::Index row0, Eigen::Index n,
                         const Vector& mean, double var, const Vector& diag_var,
                         RngStream& rng) {
    const Eigen::Index d = data.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double sd = std::sqrt(diag_var.size() > 0 ? diag_var[j] : var);
            data(row0 + i, j) = mean[j] + sd * rng.normal();
        }
    }
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::size_t require_count(std::size_t v, const char* what) {
    if (v == 0) throw InputError(std::string("gen_scenario: ") + what + " must be positive");
    return v;
}

Vector mean_or_zero(const ScenarioSpec& spec) {
    if (spec.mu.size() > 0) {
        if (spec.mu.size() != spec.d) throw InputError("gen_scenario: mu dimension mismatch");
        return spec.mu;
    }
    return Vector::Zero(spec.d);
}

}  // namespace

ScenarioKind parse_scenario(const std::string& name) {
    if (name == "two_mix" || name == "two-mix") return ScenarioKind::two_mix;
    if (name == "square") return ScenarioKind::square;
    if (name == "tetrahedron") return ScenarioKind::tetrahedron;
    if (name == "ten_cluster" || name == "ten-cluster") return ScenarioKind::ten_cluster;
    if (name == "single_gaussian" || name == "single-gaussian") {
        return ScenarioKind::single_gaussian;
    }
    if (name == "uniform_rects" || name == "uniform-rects") return ScenarioKind::uniform_rects;
    if (name == "custom") return ScenarioKind::custom;
    throw InputError("unknown scenario: " + name);
}

std::string scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::two_mix: return "two_mix";
        case ScenarioKind::square: return "square";
        case ScenarioKind::tetrahedron: return "tetrahedron";
        case ScenarioKind::ten_cluster: return "ten_cluster";
        case ScenarioKind::single_gaussian: return "single_gaussian";
        case ScenarioKind::uniform_rects: return "uniform_rects";
        case ScenarioKind::custom: return "custom";
    }
    return "?";
}

ScenarioSpec make_scenario(const std::string& name,
                           const std::map<std::string, double>& params) {
    ScenarioSpec spec;
    spec.kind = parse_scenario(name);
    if (auto it = params.find("d"); it != params.end()) spec.d = static_cast<int>(it->second);
    std::vector<std::pair<int, double>> vars;
    double mu1 = 0.0;
    bool has_mu1 = false;
    for (const auto& [key, value] : params) {
        if (key == "d") {
            continue;
        } else if (key == "n") {
            spec.n = static_cast<std::size_t>(value);
        } else if (key == "n_per_cluster") {
            spec.n_per_cluster = static_cast<std::size_t>(value);
        } else if (key == "a") {
            spec.a = value;
        } else if (key == "delta") {
            spec.delta = value;
        } else if (key == "sigma2") {
            spec.sigma2 = value;
        } else if (key == "mu1") {
            mu1 = value;
            has_mu1 = true;
        } else if (key.size() > 3 && key.compare(0, 3, "var") == 0) {
            const int j = std::stoi(key.substr(3));
            if (j < 1 || j > spec.d) throw InputError("scenario parameter out of range: " + key);
            vars.emplace_back(j - 1, value);
        } else {
            throw InputError("unknown scenario parameter: " + key);
        }
    }
    if (has_mu1) {
        spec.mu = Vector::Zero(spec.d);
        spec.mu[0] = mu1;
    }
    if (!vars.empty()) {
        spec.diag_var = Vector::Constant(spec.d, spec.sigma2);
        for (const auto& [j, v] : vars) spec.diag_var[j] = v;
    }
    if (spec.n_per_cluster == 0 && spec.n > 0) {
        std::size_t k = 1;
        if (spec.kind == ScenarioKind::square || spec.kind == ScenarioKind::tetrahedron) k = 4;
        if (spec.kind == ScenarioKind::ten_cluster) k = 10;
        if (k > 1) spec.n_per_cluster = spec.n / k;
    }
    return spec;
}

ScenarioDraw gen_scenario(const ScenarioSpec& spec, RngStream& rng) {
    if (spec.d < 1) throw InputError("gen_scenario: d >= 1 required");
    const Eigen::Index d = spec.d;
    ScenarioDraw out;
    switch (spec.kind) {
        case ScenarioKind::two_mix: {
            const Eigen::Index n = static_cast<Eigen::Index>(require_count(spec.n, "n"));
            if (spec.mu.size() == 0) throw InputError("gen_scenario: two_mix needs mu");
            if (spec.mu.size() != d) throw InputError("gen_scenario: mu dimension mismatch");
            const Eigen::Index n0 = n / 2;
            Vector m0 = spec.paired_sign ? Vector(-spec.mu) : Vector(Vector::Zero(d));
            out.data.resize(n, d);
            fill_gaussian_block(out.data, 0, n0, m0, spec.sigma2, spec.diag_var, rng);
            fill_gaussian_block(out.data, n0, n - n0, spec.mu, spec.sigma2, spec.diag_var,
                                rng);
            out.labels.assign(static_cast<std::size_t>(n), 1);
            std::fill(out.labels.begin(), out.labels.begin() + n0, 0);
            break;
        }
        case ScenarioKind::square: {
            if (d < 2) throw InputError("gen_scenario: square needs d >= 2");
            const Eigen::Index per =
                static_cast<Eigen::Index>(require_count(spec.n_per_cluster, "n_per_cluster"));
            const double h = spec.delta / 2.0;
            const double vx[4] = {h, h, -h, -h};
            const double vy[4] = {h, -h, h, -h};
            out.data.resize(4 * per, d);
            for (int k = 0; k < 4; ++k) {
                Vector mean = Vector::Zero(d);
                mean[0] = vx[k];
                mean[1] = vy[k];
                fill_gaussian_block(out.data, k * per, per, mean, spec.sigma2, spec.diag_var,
                                    rng);
                out.labels.insert(out.labels.end(), static_cast<std::size_t>(per), k);
            }
            break;
        }
        case ScenarioKind::tetrahedron: {
            if (d < 3) throw InputError("gen_scenario: tetrahedron needs d >= 3");
            const Eigen::Index per =
                static_cast<Eigen::Index>(require_count(spec.n_per_cluster, "n_per_cluster"));
            const double s = spec.delta / (2.0 * std::sqrt(2.0));
            const double v[4][3] = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
            out.data.resize(4 * per, d);
            for (int k = 0; k < 4; ++k) {
                Vector mean = Vector::Zero(d);
                for (int j = 0; j < 3; ++j) mean[j] = v[k][j];
                fill_gaussian_block(out.data, k * per, per, mean, spec.sigma2, spec.diag_var,
                                    rng);
                out.labels.insert(out.labels.end(), static_cast<std::size_t>(per), k);
            }
            break;
        }
        case ScenarioKind::ten_cluster: {
            if (d % 5 != 0) throw InputError("gen_scenario: ten_cluster needs d divisible by 5");
            const Eigen::Index per =
                static_cast<Eigen::Index>(require_count(spec.n_per_cluster, "n_per_cluster"));
            const Eigen::Index p = d / 5;
            out.data.resize(10 * per, d);
            for (int k = 0; k < 10; ++k) {
                Vector mean = Vector::Zero(d);
                const int block = k % 5;
                const double sign = k < 5 ? 1.0 : -1.0;
                for (Eigen::Index j = 0; j < p; ++j) mean[block * p + j] = sign * spec.a;
                fill_gaussian_block(out.data, k * per, per, mean, spec.sigma2, spec.diag_var,
                                    rng);
                out.labels.insert(out.labels.end(), static_cast<std::size_t>(per), k);
            }
            break;
        }
        case ScenarioKind::single_gaussian: {
            const Eigen::Index n = static_cast<Eigen::Index>(require_count(spec.n, "n"));
            out.data.resize(n, d);
            fill_gaussian_block(out.data, 0, n, mean_or_zero(spec), spec.sigma2, spec.diag_var,
                                rng);
            out.labels.assign(static_cast<std::size_t>(n), 0);
            break;
        }
        case ScenarioKind::uniform_rects: {
            if (d != 2) throw InputError("gen_scenario: uniform_rects needs d = 2");
            const Eigen::Index n = static_cast<Eigen::Index>(require_count(spec.n, "n"));
            const Eigen::Index n0 = n / 2;
            out.data.resize(n, 2);
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool left = i < n0;
                const double x0 = left ? -2.0 : 2.0;
                out.data(i, 0) = x0 + rng.uniform();
                out.data(i, 1) = rng.uniform();
                out.labels.push_back(left ? 0 : 1);
            }
            break;
        }
        case ScenarioKind::custom: {
            if (spec.custom_means.rows() == 0 || spec.custom_means.cols() != d) {
                throw InputError("gen_scenario: custom needs means with matching dimension");
            }
            const Eigen::Index per =
                static_cast<Eigen::Index>(require_count(spec.n_per_cluster, "n_per_cluster"));
            const Eigen::Index k = spec.custom_means.rows();
            out.data.resize(k * per, d);
            for (Eigen::Index c = 0; c < k; ++c) {
                Vector mean = spec.custom_means.row(c).transpose();
                fill_gaussian_block(out.data, c * per, per, mean, spec.sigma2, spec.diag_var,
                                    rng);
                out.labels.insert(out.labels.end(), static_cast<std::size_t>(per),
                                  static_cast<int>(c));
            }
            break;
        }
    }
    return out;
}

DataMatrix gene_preprocess(const DataMatrix& matrix, std::size_t top_k,
                           std::vector<Eigen::Index>* kept) {
    if (matrix.size() == 0) throw InputError("gene_preprocess: empty matrix");
    if ((matrix.array() < 0.0).any()) {
        throw InputError("gene_preprocess: matrix must be non-negative");
    }
    double min_pos = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            const double v = matrix(i, j);
            if (v > 0.0 && v < min_pos) min_pos = v;
        }
    }
    if (!std::isfinite(min_pos)) {
        throw InputError("gene_preprocess: matrix has no positive entry");
    }
    DataMatrix logged = matrix;
    for (Eigen::Index j = 0; j < logged.cols(); ++j) {
        for (Eigen::Index i = 0; i < logged.rows(); ++i) {
            if (logged(i, j) == 0.0) logged(i, j) = min_pos;
            logged(i, j) = std::log(logged(i, j));
        }
    }

    const Eigen::Index dcols = logged.cols();
    std::vector<double> mad(static_cast<std::size_t>(dcols));
    std::vector<double> col(static_cast<std::size_t>(logged.rows()));
    for (Eigen::Index j = 0; j < dcols; ++j) {
        for (Eigen::Index i = 0; i < logged.rows(); ++i) {
            col[static_cast<std::size_t>(i)] = logged(i, j);
        }
        const double med = median_of(col);
        std::vector<double> dev(col.size());
        for (std::size_t i = 0; i < col.size(); ++i) dev[i] = std::abs(col[i] - med);
        mad[static_cast<std::size_t>(j)] = median_of(dev);
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dcols));
    for (Eigen::Index j = 0; j < dcols; ++j) order[static_cast<std::size_t>(j)] = j;
    const std::size_t keep = std::min(top_k, static_cast<std::size_t>(dcols));
    if (keep < static_cast<std::size_t>(dcols)) {
        // Filtering reorders by decreasing MAD (ties by original index);
        // keeping everything preserves the original column order.
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return mad[static_cast<std::size_t>(a)] > mad[static_cast<std::size_t>(b)];
        });
        order.resize(keep);
    }
    if (kept != nullptr) *kept = order;

    DataMatrix out(logged.rows(), static_cast<Eigen::Index>(keep));
    for (std::size_t j = 0; j < keep; ++j) {
        out.col(static_cast<Eigen::Index>(j)) = logged.col(order[j]);
    }
    return out;
}

double PowerReport::rate(const std::string& method) const {
    auto it = reject_counts.find(method);
    if (it == reject_counts.end() || reps == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(reps);
}

TestOutcome run_flat_method(const DataMatrix& data, TestMethod method, double alpha,
                            const FitConstraints& c, const TreeOptions& opts,
                            RngStream& rng) {
    RiftOptions ro = opts.rift;
    ro.alpha = alpha;
    ro.region.reset();
    switch (method) {
        case TestMethod::rift: return rift(data, c, ro, rng);
        case TestMethod::mrift: return mrift(data, c, ro, rng);
        case TestMethod::l2rift: return l2rift(data, c, ro, opts.l2, rng);
        case TestMethod::sigclust:
        case TestMethod::sigclust_trunc:
            return sigclust_bootstrap(data, opts.sigclust_B, alpha, false, std::nullopt, rng);
        case TestMethod::mardia: return mardia(data, alpha);
        case TestMethod::nn_ks:
            return nn_test(data, NnVariant::ks, alpha, ro.split_ratio, rng);
        case TestMethod::nn_z:
            return nn_test(data, NnVariant::zstat, alpha, ro.split_ratio, rng);
    }
    throw InputError("run_flat_method: unknown method");
}

namespace {

void validate_config(const StudyConfig& config) {
    if (config.reps < 1) throw InputError("study: reps >= 1 required");
    if (!(config.alpha >= 0.0 && config.alpha < 1.0)) {
        throw InputError("study: alpha in [0,1) required");
    }
}

void record(PowerReport& report, PowerReport::Row row, bool with_hist) {
    report.reject_counts.try_emplace(row.method, 0);
    if (row.reject) ++report.reject_counts[row.method];
    if (with_hist) ++report.cluster_hist[row.method][row.k_hat];
    report.rows.push_back(std::move(row));
}

}  // namespace

PowerReport run_power_study(const StudyConfig& config) {
    validate_config(config);
    FitConstraints c;
    PowerReport report;
    report.reps = config.reps;
    for (int rep = 0; rep < config.reps; ++rep) {
        RngStream rep_rng(config.seed, static_cast<std::uint64_t>(rep));
        RngStream gen = rep_rng.derive(0);
        ScenarioDraw draw = gen_scenario(config.scenario, gen);
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            RngStream method_rng = rep_rng.derive(static_cast<std::uint64_t>(m) + 1);
            TestOutcome outcome = run_flat_method(draw.data, config.methods[m], config.alpha,
                                                  c, config.tree, method_rng);
            PowerReport::Row row;
            row.rep = rep;
            row.method = method_name(config.methods[m]);
            row.statistic = outcome.statistic;
            row.p_value = outcome.p_value;
            row.reject = outcome.reject;
            record(report, std::move(row), false);
        }
    }
    return report;
}

PowerReport run_tree_study(const StudyConfig& config) {
    validate_config(config);
    FitConstraints c;
    PowerReport report;
    report.reps = config.reps;
    for (int rep = 0; rep < config.reps; ++rep) {
        RngStream rep_rng(config.seed, static_cast<std::uint64_t>(rep));
        RngStream gen = rep_rng.derive(0);
        ScenarioDraw draw = gen_scenario(config.scenario, gen);
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            RngStream method_rng = rep_rng.derive(static_cast<std::uint64_t>(m) + 1);
            ClusterTree tree;
            if (config.direction == ClusterTree::Direction::topdown) {
                tree = topdown_cluster(draw.data, config.methods[m], config.alpha, c,
                                       config.tree, method_rng);
            } else {
                RngStream grow_rng = method_rng.derive(0);
                RngStream prune_rng = method_rng.derive(1);
                ClusterTree full = grow_full_tree(draw.data, c, config.grow_depth, 0,
                                                  config.tree, grow_rng);
                tree = prune_bottom_up(full, draw.data, config.methods[m], config.alpha, c,
                                       config.tree, prune_rng);
            }
            const auto& root = tree.nodes.at(tree.root);
            PowerReport::Row row;
            row.rep = rep;
            row.method = method_name(config.methods[m]);
            row.statistic = root.outcome ? root.outcome->statistic : 0.0;
            row.p_value = root.outcome ? root.outcome->p_value : 1.0;
            row.k_hat = static_cast<int>(leaf_count(tree));
            row.reject = row.k_hat > 1;
            record(report, std::move(row), true);
        }
    }
    return report;
}

SelectorKind parse_selector(const std::string& name) {
    if (name == "srift-kl" || name == "kl") return SelectorKind::srift_kl;
    if (name == "srift-l2" || name == "l2") return SelectorKind::srift_l2;
    if (name == "aic") return SelectorKind::aic;
    if (name == "bic") return SelectorKind::bic;
    throw InputError("unknown selector: " + name);
}

std::string selector_name(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::srift_kl: return "srift-kl";
        case SelectorKind::srift_l2: return "srift-l2";
        case SelectorKind::aic: return "aic";
        case SelectorKind::bic: return "bic";
    }
    return "?";
}

PowerReport run_select_study(const StudyConfig& config,
                             const std::vector<SelectorKind>& selectors, int K_n) {
    validate_config(config);
    if (K_n < 1) throw InputError("run_select_study: K_n >= 1 required");
    FitConstraints c;
    PowerReport report;
    report.reps = config.reps;
    for (int rep = 0; rep < config.reps; ++rep) {
        RngStream rep_rng(config.seed, static_cast<std::uint64_t>(rep));
        RngStream gen = rep_rng.derive(0);
        ScenarioDraw draw = gen_scenario(config.scenario, gen);
        for (std::size_t m = 0; m < selectors.size(); ++m) {
            RngStream method_rng = rep_rng.derive(static_cast<std::uint64_t>(m) + 1);
            int k_hat = 0;
            switch (selectors[m]) {
                case SelectorKind::srift_kl:
                    k_hat = srift_select(draw.data, K_n, config.alpha, SelectDistance::kl, c,
                                         config.tree.rift, method_rng)
                                .k_hat;
                    break;
                case SelectorKind::srift_l2:
                    k_hat = srift_select(draw.data, K_n, config.alpha, SelectDistance::l2, c,
                                         config.tree.rift, method_rng)
                                .k_hat;
                    break;
                case SelectorKind::aic:
                    k_hat = ic_select(draw.data, K_n, Criterion::aic, c, config.tree.rift,
                                      method_rng);
                    break;
                case SelectorKind::bic:
                    k_hat = ic_select(draw.data, K_n, Criterion::bic, c, config.tree.rift,
                                      method_rng);
                    break;
            }
            PowerReport::Row row;
            row.rep = rep;
            row.method = selector_name(selectors[m]);
            row.statistic = static_cast<double>(k_hat);
            row.p_value = 1.0;
            row.k_hat = k_hat;
            row.reject = k_hat > 1;
            record(report, std::move(row), true);
        }
    }
    return report;
}

std::string report_to_csv(const PowerReport& report) {
    std::string out = "rep,method,statistic,p_value,reject,k_hat\n";
    for (const auto& row : report.rows) {
        out += std::to_string(row.rep);
        out += ',';
        out += row.method;
        out += ',';
        append_g17(out, row.statistic);
        out += ',';
        append_g17(out, row.p_value);
        out += ',';
        out += row.reject ? '1' : '0';
        out += ',';
        if (row.k_hat >= 0) out += std::to_string(row.k_hat);
        out += '\n';
    }
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) table.columns.push_back(field);
    }
    if (table.columns.empty()) throw InputError("CSV header has no columns: " + path);
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(field, &pos);
                if (pos != field.size()) throw std::invalid_argument(field);
                row.push_back(v);
            } catch (const std::exception&) {
                throw InputError("CSV parse error at " + path + ":" +
                                 std::to_string(lineno) + ": '" + field + "'");
            }
        }
        if (row.size() != table.columns.size()) {
            throw InputError("CSV row width mismatch at " + path + ":" +
                             std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        }
    }
    return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
    if (table.columns.size() != static_cast<std::size_t>(table.values.cols())) {
        throw InputError("write_csv: header/value width mismatch");
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write CSV file: " + path);
    std::string buf;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j > 0) buf += ',';
        buf += table.columns[j];
    }
    buf += '\n';
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
            if (j > 0) buf += ',';
            append_g17(buf, table.values(i, j));
        }
        buf += '\n';
    }
    out << buf;
}

}  // namespace mixsig
