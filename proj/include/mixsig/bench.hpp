#pragma once

#include <map>
#include <string>
#include <vector>

#include "mixsig/dist.hpp"
#include "mixsig/relfit.hpp"
#include "mixsig/tree.hpp"

namespace mixsig {

enum class ScenarioKind {
    two_mix,
    square,
    tetrahedron,
    ten_cluster,
    single_gaussian,
    uniform_rects,
    custom,
};

// Simulation scenario. Cluster scenarios (square, tetrahedron, ten_cluster,
// custom) draw exactly n_per_cluster points per component; the others draw n
// points total with an exact half/half component allocation where a mixture
// is involved.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::single_gaussian;
    int d = 2;
    std::size_t n = 0;
    std::size_t n_per_cluster = 0;
    double a = 0.0;       // ten_cluster mean scale
    double delta = 0.0;   // square / tetrahedron side length
    double sigma2 = 1.0;  // isotropic component variance
    Vector mu;            // two_mix / single_gaussian mean (empty = origin)
    Vector diag_var;      // per-coordinate variances (empty = sigma2 * I)
    bool paired_sign = true;    // two_mix: +/-mu when true, 0 vs mu when false
    DataMatrix custom_means;    // custom: one row per component
};

struct ScenarioDraw {
    DataMatrix data;
    std::vector<int> labels;
};

ScenarioKind parse_scenario(const std::string& name);
std::string scenario_name(ScenarioKind kind);

// Build a spec from a CLI-style parameter map. Recognized keys: d, n,
// n_per_cluster, a, delta, sigma2, mu1 (first coordinate of the mean) and
// var1..var<d> (diagonal variances). Unknown keys are an input error.
ScenarioSpec make_scenario(const std::string& name,
                           const std::map<std::string, double>& params);

ScenarioDraw gen_scenario(const ScenarioSpec& spec, RngStream& rng);

// Expression preprocessing: zeros replaced by the global smallest positive
// entry, natural log, then columns ranked by median absolute deviation about
// the column median. The top_k columns are returned in decreasing-MAD order,
// ties broken by original column index. `kept` (optional) receives the
// original indices of the returned columns.
DataMatrix gene_preprocess(const DataMatrix& matrix, std::size_t top_k,
                           std::vector<Eigen::Index>* kept = nullptr);

struct StudyConfig {
    ScenarioSpec scenario;
    std::vector<TestMethod> methods;
    int reps = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    ClusterTree::Direction direction = ClusterTree::Direction::topdown;  // run_tree_study
    int grow_depth = 2;                        // bottom-up growth depth
    TreeOptions tree;                          // test options incl. sigclust_B
};

struct PowerReport {
    struct Row {
        int rep = 0;
        std::string method;
        double statistic = 0.0;
        double p_value = 1.0;
        bool reject = false;
        int k_hat = -1;  // leaves / selected k; -1 = not applicable
    };
    int reps = 0;
    std::vector<Row> rows;
    std::map<std::string, int> reject_counts;
    // method -> (cluster count -> reps); filled by tree/selection studies.
    std::map<std::string, std::map<int, int>> cluster_hist;

    double rate(const std::string& method) const;
};

// One flat two-cluster test on the full sample (no tree).
TestOutcome run_flat_method(const DataMatrix& data, TestMethod method, double alpha,
                            const FitConstraints& c, const TreeOptions& opts,
                            RngStream& rng);

// reps independent replications; rep r uses RngStream(seed, r), with the
// scenario drawn from child stream 0 and method i from child stream i + 1.
PowerReport run_power_study(const StudyConfig& config);

// Same replication discipline, but each method runs a full hierarchical
// clustering (config.direction) and records the leaf count.
PowerReport run_tree_study(const StudyConfig& config);

enum class SelectorKind { srift_kl, srift_l2, aic, bic };
SelectorKind parse_selector(const std::string& name);
std::string selector_name(SelectorKind kind);

// Model-selection study: each selector estimates the number of components
// with candidate range 1..K_n; k_hat histograms land in cluster_hist.
PowerReport run_select_study(const StudyConfig& config,
                             const std::vector<SelectorKind>& selectors, int K_n);

// CSV report: header rep,method,statistic,p_value,reject,k_hat; %.17g reals;
// byte-identical across runs with the same config and seed.
std::string report_to_csv(const PowerReport& report);

// CSV data files: one header row, one observation per row.
struct CsvTable {
    std::vector<std::string> columns;
    DataMatrix values;
};
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace mixsig
