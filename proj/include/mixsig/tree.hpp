#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixsig/relfit.hpp"

namespace mixsig {

// Node-level tests a clustering tree can be driven by.
enum class TestMethod { rift, mrift, l2rift, sigclust, sigclust_trunc, mardia, nn_ks, nn_z };

TestMethod parse_method(const std::string& name);
std::string method_name(TestMethod m);

struct ClusterNode {
    int id = 0;
    int depth = 0;
    int parent = -1;                       // -1 for the root
    std::vector<int> children;             // empty or exactly two ids
    Region region;
    std::vector<Eigen::Index> d1_idx;      // estimation rows (global indices)
    std::vector<Eigen::Index> d2_idx;      // testing rows
    std::optional<Mixture> split;          // routing model of an internal node
    std::optional<TestOutcome> outcome;
    double level = 0.0;                    // significance level spent here
    bool too_small = false;                // below min_node_size, left untested

    bool is_leaf() const { return children.empty(); }
};

struct ClusterTree {
    enum class Direction { topdown, bottomup };

    std::map<int, ClusterNode> nodes;  // id-indexed
    int root = 0;
    double alpha = 0.05;
    TestMethod method = TestMethod::mrift;
    Direction direction = Direction::topdown;
};

struct TreeOptions {
    Eigen::Index min_node_size = 0;  // 0 means the default 2(d+2) per half
    int max_depth = 10;              // grow_full_tree only
    std::size_t sigclust_B = 1000;
    RiftOptions rift;                // jitter, split ratio, EM and MC settings
    L2Integration l2;
};

// Recursive significance-gated splitting: a node splits while its test
// rejects at level alpha / 2^(2 depth + 1).
ClusterTree topdown_cluster(const DataMatrix& data, TestMethod method, double alpha,
                            const FitConstraints& c, const TreeOptions& opts, RngStream& rng);

// Split every eligible node without testing, up to max_depth / min_node_size.
ClusterTree grow_full_tree(const DataMatrix& data, const FitConstraints& c, int max_depth,
                           Eigen::Index min_node_size, const TreeOptions& opts,
                           RngStream& rng);

// Deepest-first sweep over internal nodes of a fully grown tree: a node whose
// test fails to reject at alpha / N_nodes loses its whole subtree. N_nodes is
// the node count of the input tree.
ClusterTree prune_bottom_up(const ClusterTree& tree, const DataMatrix& data,
                            TestMethod method, double alpha, const FitConstraints& c,
                            const TreeOptions& opts, RngStream& rng);

// Leaf id of every row, routed root to leaf through the split posteriors.
std::vector<int> assign_labels(const ClusterTree& tree, const DataMatrix& data);

std::size_t leaf_count(const ClusterTree& tree);

// Stable-key-order JSON with doubles printed to 17 significant digits.
std::string tree_to_json(const ClusterTree& tree);

}  // namespace mixsig
