// Command-line front end: hierarchical cluster testing, flat two-cluster
// tests, sequential model selection, simulation studies, and expression
// preprocessing. Exit codes: 0 success, 2 bad input, 3 numerical failure.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixsig/bench.hpp"
#include "mixsig/errors.hpp"
#include "mixsig/select.hpp"
#include "mixsig/tree.hpp"

namespace {

using namespace mixsig;

std::string g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string outcome_to_json(const TestOutcome& o) {
    std::string s = "{\n";
    s += "  \"method\": \"" + o.method + "\",\n";
    s += "  \"statistic\": " + g17(o.statistic) + ",\n";
    s += "  \"p_value\": " + g17(o.p_value) + ",\n";
    s += "  \"reject\": " + std::string(o.reject ? "true" : "false") + ",\n";
    s += "  \"alpha\": " + g17(o.alpha) + ",\n";
    s += "  \"aux\": {";
    bool first = true;
    for (const auto& [key, value] : o.aux) {
        if (!first) s += ",";
        first = false;
        s += "\n    \"" + key + "\": " + g17(value);
    }
    s += first ? "}\n" : "\n  }\n";
    s += "}\n";
    return s;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
    std::map<std::string, double> out;
    for (const std::string& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InputError("--param expects key=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        try {
            std::size_t pos = 0;
            out[key] = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
            throw InputError("--param " + key + ": not a number: '" + val + "'");
        }
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
}

struct Args {
    std::string input, out;
    std::string method = "mrift";
    std::string direction = "topdown";
    std::string distance = "kl";
    std::string criterion;
    std::string scenario;
    std::string study = "power";
    std::vector<std::string> methods;
    std::vector<std::string> selectors;
    std::vector<std::string> params;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int kmax = 0;
    int reps = 100;
    int min_node = 0;
    int grow_depth = 2;
    std::size_t top = 500;
    std::size_t sigclust_B = 1000;
};

int run_cluster(const Args& a) {
    CsvTable table = read_csv(a.input);
    FitConstraints c;
    TreeOptions opts;
    opts.min_node_size = a.min_node;
    opts.sigclust_B = a.sigclust_B;
    RngStream rng(a.seed);
    TestMethod method = parse_method(a.method);
    ClusterTree tree;
    if (a.direction == "topdown") {
        tree = topdown_cluster(table.values, method, a.alpha, c, opts, rng);
    } else if (a.direction == "bottomup") {
        RngStream grow_rng = rng.derive(0);
        RngStream prune_rng = rng.derive(1);
        ClusterTree full =
            grow_full_tree(table.values, c, a.grow_depth, opts.min_node_size, opts, grow_rng);
        tree = prune_bottom_up(full, table.values, method, a.alpha, c, opts, prune_rng);
    } else {
        throw InputError("--direction must be topdown or bottomup");
    }
    const std::string json = tree_to_json(tree);
    if (a.out.empty()) {
        std::cout << json;
    } else {
        write_text(a.out, json);
        std::cout << "leaves: " << leaf_count(tree) << "\n";
    }
    return 0;
}

int run_test(const Args& a) {
    CsvTable table = read_csv(a.input);
    FitConstraints c;
    TreeOptions opts;
    opts.sigclust_B = a.sigclust_B;
    RngStream rng(a.seed);
    TestOutcome o =
        run_flat_method(table.values, parse_method(a.method), a.alpha, c, opts, rng);
    std::cout << outcome_to_json(o);
    return 0;
}

int run_selectk(const Args& a) {
    CsvTable table = read_csv(a.input);
    FitConstraints c;
    RiftOptions opts;
    RngStream rng(a.seed);
    const int kmax =
        a.kmax > 0 ? a.kmax : default_kmax(static_cast<std::size_t>(table.values.rows()));
    if (!a.criterion.empty()) {
        Criterion crit;
        if (a.criterion == "aic") {
            crit = Criterion::aic;
        } else if (a.criterion == "bic") {
            crit = Criterion::bic;
        } else {
            throw InputError("--criterion must be aic or bic");
        }
        const int k = ic_select(table.values, kmax, crit, c, opts, rng);
        std::cout << "{\n  \"criterion\": \"" << a.criterion << "\",\n  \"kmax\": " << kmax
                  << ",\n  \"k_hat\": " << k << "\n}\n";
        return 0;
    }
    SelectDistance dist;
    if (a.distance == "kl") {
        dist = SelectDistance::kl;
    } else if (a.distance == "l2") {
        dist = SelectDistance::l2;
    } else {
        throw InputError("--distance must be kl or l2");
    }
    SeqResult res = srift_select(table.values, kmax, a.alpha, dist, c, opts, rng);
    std::string s = "{\n  \"distance\": \"" + a.distance + "\",\n";
    s += "  \"kmax\": " + std::to_string(kmax) + ",\n";
    s += "  \"alpha\": " + g17(a.alpha) + ",\n";
    s += "  \"k_hat\": " + std::to_string(res.k_hat) + ",\n";
    s += "  \"tests\": [";
    for (std::size_t i = 0; i < res.per_j.size(); ++i) {
        const auto& pj = res.per_j[i];
        if (i > 0) s += ",";
        s += "\n    {\"j\": " + std::to_string(pj.j) +
             ", \"rejected\": " + (pj.rejected ? "true" : "false") +
             ", \"max_gamma\": " + g17(pj.max_gamma) + "}";
    }
    s += res.per_j.empty() ? "]\n" : "\n  ]\n";
    s += "}\n";
    std::cout << s;
    return 0;
}

int run_simulate(const Args& a) {
    StudyConfig cfg;
    cfg.scenario = make_scenario(a.scenario, parse_params(a.params));
    cfg.reps = a.reps;
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.grow_depth = a.grow_depth;
    cfg.tree.sigclust_B = a.sigclust_B;
    if (a.direction == "bottomup") {
        cfg.direction = ClusterTree::Direction::bottomup;
    } else if (a.direction != "topdown") {
        throw InputError("--direction must be topdown or bottomup");
    }
    PowerReport report;
    if (a.study == "select") {
        std::vector<SelectorKind> selectors;
        for (const auto& s : a.selectors) selectors.push_back(parse_selector(s));
        if (selectors.empty()) selectors = {SelectorKind::srift_kl};
        const int kmax = a.kmax > 0 ? a.kmax : 6;
        report = run_select_study(cfg, selectors, kmax);
    } else {
        for (const auto& m : a.methods) cfg.methods.push_back(parse_method(m));
        if (cfg.methods.empty()) cfg.methods = {TestMethod::mrift};
        if (a.study == "power") {
            report = run_power_study(cfg);
        } else if (a.study == "tree") {
            report = run_tree_study(cfg);
        } else {
            throw InputError("--study must be power, tree or select");
        }
    }
    const std::string csv = report_to_csv(report);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        write_text(a.out, csv);
        for (const auto& [method, count] : report.reject_counts) {
            std::cout << method << ": " << count << "/" << report.reps << " rejections\n";
        }
    }
    return 0;
}

int run_genes(const Args& a) {
    CsvTable table = read_csv(a.input);
    std::vector<Eigen::Index> kept;
    DataMatrix processed = gene_preprocess(table.values, a.top, &kept);
    CsvTable out;
    for (Eigen::Index j : kept) out.columns.push_back(table.columns[static_cast<std::size_t>(j)]);
    out.values = processed;
    if (a.out.empty()) throw InputError("genes: --out is required");
    write_csv(a.out, out);
    std::cout << "kept " << kept.size() << " of " << table.columns.size() << " columns\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture significance testing toolkit"};
    app.require_subcommand(1);
    Args a;

    const std::string method_list =
        "rift|mrift|l2rift|sigclust|sigclust-trunc|mardia|nn-ks|nn-z";

    CLI::App* cluster = app.add_subcommand("cluster", "Hierarchical significance clustering");
    cluster->add_option("--input", a.input, "CSV data file")->required();
    cluster->add_option("--method", a.method, "Node test: " + method_list);
    cluster->add_option("--direction", a.direction, "topdown|bottomup");
    cluster->add_option("--alpha", a.alpha, "Overall level");
    cluster->add_option("--seed", a.seed, "RNG seed");
    cluster->add_option("--min-node", a.min_node, "Minimum half-sample size per node");
    cluster->add_option("--max-depth", a.grow_depth,
                        "Bottom-up growth depth before pruning (default 2)");
    cluster->add_option("--sigclust-B", a.sigclust_B, "Bootstrap replicates for sigclust");
    cluster->add_option("--out", a.out, "Tree JSON output path (stdout if omitted)");

    CLI::App* test = app.add_subcommand("test", "One two-cluster test, JSON on stdout");
    test->add_option("--input", a.input, "CSV data file")->required();
    test->add_option("--method", a.method, method_list);
    test->add_option("--alpha", a.alpha, "Level");
    test->add_option("--seed", a.seed, "RNG seed");
    test->add_option("--sigclust-B", a.sigclust_B, "Bootstrap replicates for sigclust");

    CLI::App* selectk = app.add_subcommand("selectk", "Estimate the number of components");
    selectk->add_option("--input", a.input, "CSV data file")->required();
    selectk->add_option("--kmax", a.kmax, "Largest candidate k (default min(10, sqrt(n)))");
    selectk->add_option("--distance", a.distance, "kl|l2 for sequential selection");
    selectk->add_option("--criterion", a.criterion, "aic|bic baseline instead");
    selectk->add_option("--alpha", a.alpha, "Level");
    selectk->add_option("--seed", a.seed, "RNG seed");

    CLI::App* simulate = app.add_subcommand("simulate", "Replicated simulation study");
    simulate->add_option("--scenario", a.scenario,
                         "two_mix|square|tetrahedron|ten_cluster|single_gaussian|uniform_rects")
        ->required();
    simulate->add_option("--param", a.params, "Scenario parameter key=value (repeatable)");
    simulate->add_option("--study", a.study, "power|tree|select (default power)");
    simulate->add_option("--method", a.methods, "Test method (repeatable): " + method_list);
    simulate->add_option("--selector", a.selectors,
                         "Selection study method (repeatable): srift-kl|srift-l2|aic|bic");
    simulate->add_option("--direction", a.direction, "Tree study direction");
    simulate->add_option("--grow-depth", a.grow_depth, "Bottom-up growth depth");
    simulate->add_option("--kmax", a.kmax, "Candidate range for selection studies");
    simulate->add_option("--reps", a.reps, "Replications");
    simulate->add_option("--alpha", a.alpha, "Level");
    simulate->add_option("--seed", a.seed, "RNG seed");
    simulate->add_option("--sigclust-B", a.sigclust_B, "Bootstrap replicates for sigclust");
    simulate->add_option("--out", a.out, "Report CSV path (stdout if omitted)");

    CLI::App* genes = app.add_subcommand("genes", "Expression preprocessing");
    genes->add_option("--input", a.input, "Expression CSV (samples x genes)")->required();
    genes->add_option("--top", a.top, "Genes kept by MAD rank (default 500)");
    genes->add_option("--out", a.out, "Processed CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cluster->parsed()) return run_cluster(a);
        if (test->parsed()) return run_test(a);
        if (selectk->parsed()) return run_selectk(a);
        if (simulate->parsed()) return run_simulate(a);
        if (genes->parsed()) return run_genes(a);
    } catch (const mixsig::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const mixsig::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
