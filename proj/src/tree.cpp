#include "mixsig/tree.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mixsig/errors.hpp"
#include "mixsig/fitters.hpp"

namespace mixsig {

TestMethod parse_method(const std::string& name) {
    if (name == "rift") return TestMethod::rift;
    if (name == "mrift") return TestMethod::mrift;
    if (name == "l2rift") return TestMethod::l2rift;
    if (name == "sigclust") return TestMethod::sigclust;
    if (name == "sigclust-trunc") return TestMethod::sigclust_trunc;
    if (name == "mardia") return TestMethod::mardia;
    if (name == "nn-ks") return TestMethod::nn_ks;
    if (name == "nn-z") return TestMethod::nn_z;
    throw InputError("unknown test method: " + name);
}

std::string method_name(TestMethod m) {
    switch (m) {
        case TestMethod::rift: return "rift";
        case TestMethod::mrift: return "mrift";
        case TestMethod::l2rift: return "l2rift";
        case TestMethod::sigclust: return "sigclust";
        case TestMethod::sigclust_trunc: return "sigclust-trunc";
        case TestMethod::mardia: return "mardia";
        case TestMethod::nn_ks: return "nn-ks";
        case TestMethod::nn_z: return "nn-z";
    }
    throw InputError("unknown test method tag");
}

namespace {

bool is_rift_family(TestMethod m) {
    return m == TestMethod::rift || m == TestMethod::mrift || m == TestMethod::l2rift;
}

std::vector<Eigen::Index> concat_idx(const std::vector<Eigen::Index>& a,
                                     const std::vector<Eigen::Index>& b) {
    std::vector<Eigen::Index> out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

// The test run at one node, at the node's spending level. For the RIFT
// family `split` must hold the node's 2-component fit; the single-Gaussian
// competitor is refitted on the node's estimation rows.
TestOutcome node_test(TestMethod method, const DataMatrix& data, const ClusterNode& node,
                      const Mixture* split, double level, const FitConstraints& c,
                      const TreeOptions& opts, RngStream& node_rng) {
    const bool root = node.region.whole_space();
    if (is_rift_family(method)) {
        DataMatrix d1 = take_rows(data, node.d1_idx);
        DataMatrix d2 = take_rows(data, node.d2_idx);
        Gaussian p1 = fit_single_gaussian(d1, c);
        RiftOptions ro = opts.rift;
        ro.alpha = level;
        ro.region = root ? std::nullopt : std::optional<Region>(node.region);
        RngStream test_rng = node_rng.derive(3);
        const RelFitVariant variant = method == TestMethod::rift    ? RelFitVariant::mean
                                      : method == TestMethod::mrift ? RelFitVariant::sign
                                                                    : RelFitVariant::l2;
        return relative_fit_test(p1, *split, d2, ro, variant, opts.l2, test_rng);
    }

    DataMatrix all = take_rows(data, concat_idx(node.d1_idx, node.d2_idx));
    RngStream test_rng = node_rng.derive(3);
    switch (method) {
        case TestMethod::sigclust:
        case TestMethod::sigclust_trunc:
            // Inside a tree both variants bootstrap from the truncated null.
            return sigclust_bootstrap(all, opts.sigclust_B, level, false,
                                      root ? std::nullopt : std::optional<Region>(node.region),
                                      test_rng);
        case TestMethod::mardia:
            return mardia(all, level);
        case TestMethod::nn_ks:
            return nn_test(all, NnVariant::ks, level, opts.rift.split_ratio, test_rng);
        case TestMethod::nn_z:
            return nn_test(all, NnVariant::zstat, level, opts.rift.split_ratio, test_rng);
        default:
            throw InputError("node_test: unhandled method");
    }
}

// Fit the routing model of a node on its estimation rows.
Mixture fit_split(const DataMatrix& data, const ClusterNode& node, const FitConstraints& c,
                  const EmOptions& em, RngStream& node_rng) {
    DataMatrix d1 = take_rows(data, node.d1_idx);
    RngStream em_rng = node_rng.derive(1);
    return em_fit(d1, 2, c, em, em_rng);
}

// Side taken by x under the split posterior; ties go left, matching
// region_contains.
Branch route_side(const MixtureEval& eval, const Vector& x) {
    const Mixture& m = eval.model();
    const double l0 = std::log(m.weights[0]) + mvn_logpdf(x, m.components[0]);
    const double l1 = std::log(m.weights[1]) + mvn_logpdf(x, m.components[1]);
    return l0 >= l1 ? Branch::left : Branch::right;
}

void route_rows(const DataMatrix& data, const std::vector<Eigen::Index>& idx,
                const MixtureEval& eval, std::vector<Eigen::Index>& left,
                std::vector<Eigen::Index>& right) {
    for (Eigen::Index i : idx) {
        if (route_side(eval, data.row(i).transpose()) == Branch::left) {
            left.push_back(i);
        } else {
            right.push_back(i);
        }
    }
}

Eigen::Index resolve_min_node(Eigen::Index requested, Eigen::Index d) {
    return requested > 0 ? requested : 2 * (d + 2);
}

// Make two children from a fitted split; returns false when the split is
// degenerate (everything routed to one side).
bool split_node(ClusterTree& tree, int parent_id, const DataMatrix& data,
                const Mixture& split, int& next_id) {
    ClusterNode& parent = tree.nodes.at(parent_id);
    MixtureEval eval(split);
    std::vector<Eigen::Index> d1l, d1r, d2l, d2r;
    route_rows(data, parent.d1_idx, eval, d1l, d1r);
    route_rows(data, parent.d2_idx, eval, d2l, d2r);
    if ((d1l.empty() && d2l.empty()) || (d1r.empty() && d2r.empty())) return false;

    parent.split = split;
    for (int side = 0; side < 2; ++side) {
        ClusterNode child;
        child.id = next_id++;
        child.depth = parent.depth + 1;
        child.parent = parent.id;
        child.region = parent.region;
        child.region.route.emplace_back(split, side == 0 ? Branch::left : Branch::right);
        child.d1_idx = side == 0 ? d1l : d1r;
        child.d2_idx = side == 0 ? d2l : d2r;
        parent.children.push_back(child.id);
        tree.nodes.emplace(child.id, std::move(child));
    }
    return true;
}

}  // namespace

ClusterTree topdown_cluster(const DataMatrix& data, TestMethod method, double alpha,
                            const FitConstraints& c, const TreeOptions& opts,
                            RngStream& rng) {
    if (data.rows() < 16) throw InputError("topdown_cluster: need n >= 16");
    if (alpha < 0.0 || alpha >= 1.0) throw InputError("topdown_cluster: alpha in [0,1)");
    const Eigen::Index min_node = resolve_min_node(opts.min_node_size, data.cols());

    ClusterTree tree;
    tree.alpha = alpha;
    tree.method = method;
    tree.direction = ClusterTree::Direction::topdown;
    tree.root = 0;

    RngStream split_rng = rng.derive(0);
    SplitHalves halves =
        split_halves(static_cast<std::size_t>(data.rows()), opts.rift.split_ratio, split_rng);
    ClusterNode root;
    root.id = 0;
    root.d1_idx = halves.d1;
    root.d2_idx = halves.d2;
    tree.nodes.emplace(0, std::move(root));

    int next_id = 1;
    std::vector<int> work{0};
    while (!work.empty()) {
        const int id = work.back();
        work.pop_back();
        ClusterNode& node = tree.nodes.at(id);
        if (static_cast<Eigen::Index>(node.d1_idx.size()) < min_node ||
            static_cast<Eigen::Index>(node.d2_idx.size()) < min_node) {
            node.too_small = true;
            continue;
        }
        node.level = alpha / std::pow(2.0, 2 * node.depth + 1);
        if (!(node.level > 0.0)) continue;  // level 0 can never reject

        RngStream node_rng = rng.derive(static_cast<std::uint64_t>(id) + 1);
        Mixture split;
        try {
            split = fit_split(data, node, c, opts.rift.em, node_rng);
        } catch (const std::runtime_error&) {
            node.too_small = true;  // degenerate estimation half
            continue;
        }
        node.outcome = node_test(method, data, node, &split, node.level, c, opts, node_rng);
        if (!node.outcome->reject) continue;
        if (split_node(tree, id, data, split, next_id)) {
            const auto& kids = tree.nodes.at(id).children;
            work.push_back(kids[1]);
            work.push_back(kids[0]);
        }
    }
    return tree;
}

ClusterTree grow_full_tree(const DataMatrix& data, const FitConstraints& c, int max_depth,
                           Eigen::Index min_node_size, const TreeOptions& opts,
                           RngStream& rng) {
    if (data.rows() < 16) throw InputError("grow_full_tree: need n >= 16");
    const Eigen::Index min_node = resolve_min_node(min_node_size, data.cols());

    ClusterTree tree;
    tree.direction = ClusterTree::Direction::bottomup;
    tree.root = 0;

    RngStream split_rng = rng.derive(0);
    SplitHalves halves =
        split_halves(static_cast<std::size_t>(data.rows()), opts.rift.split_ratio, split_rng);
    ClusterNode root;
    root.id = 0;
    root.d1_idx = halves.d1;
    root.d2_idx = halves.d2;
    tree.nodes.emplace(0, std::move(root));

    int next_id = 1;
    std::vector<int> work{0};
    while (!work.empty()) {
        const int id = work.back();
        work.pop_back();
        ClusterNode& node = tree.nodes.at(id);
        if (node.depth >= max_depth ||
            static_cast<Eigen::Index>(node.d1_idx.size()) < min_node ||
            static_cast<Eigen::Index>(node.d2_idx.size()) < min_node) {
            continue;
        }
        RngStream node_rng = rng.derive(static_cast<std::uint64_t>(id) + 1);
        Mixture split;
        try {
            split = fit_split(data, node, c, opts.rift.em, node_rng);
        } catch (const std::runtime_error&) {
            continue;  // unsplittable node stays a leaf
        }
        if (split_node(tree, id, data, split, next_id)) {
            const auto& kids = tree.nodes.at(id).children;
            work.push_back(kids[1]);
            work.push_back(kids[0]);
        }
    }
    return tree;
}

ClusterTree prune_bottom_up(const ClusterTree& tree, const DataMatrix& data,
                            TestMethod method, double alpha, const FitConstraints& c,
                            const TreeOptions& opts, RngStream& rng) {
    if (alpha < 0.0 || alpha >= 1.0) throw InputError("prune_bottom_up: alpha in [0,1)");
    for (const auto& [id, node] : tree.nodes) {
        if (!node.is_leaf() && !node.split) {
            throw InputError("prune_bottom_up: internal node lacks its split model");
        }
        if (id != tree.root && node.d1_idx.empty() && node.d2_idx.empty()) {
            throw InputError("prune_bottom_up: tree lacks D1/D2 bookkeeping");
        }
    }

    ClusterTree out = tree;
    out.method = method;
    out.alpha = alpha;
    const double level = alpha / static_cast<double>(tree.nodes.size());

    std::vector<int> internal;
    for (const auto& [id, node] : out.nodes) {
        if (!node.is_leaf()) internal.push_back(id);
    }
    std::sort(internal.begin(), internal.end(), [&](int a, int b) {
        const int da = out.nodes.at(a).depth, db = out.nodes.at(b).depth;
        return da != db ? da > db : a < b;
    });

    for (int id : internal) {
        ClusterNode& node = out.nodes.at(id);
        node.level = level;
        bool keep = false;
        if (level > 0.0) {
            RngStream node_rng = rng.derive(static_cast<std::uint64_t>(id) + 1);
            node.outcome =
                node_test(method, data, node, &*node.split, level, c, opts, node_rng);
            keep = node.outcome->reject;
        }
        if (keep) continue;

        // Delete the whole subtree below this node.
        std::vector<int> doomed = node.children;
        node.children.clear();
        node.split.reset();
        while (!doomed.empty()) {
            const int v = doomed.back();
            doomed.pop_back();
            auto it = out.nodes.find(v);
            doomed.insert(doomed.end(), it->second.children.begin(),
                          it->second.children.end());
            out.nodes.erase(it);
        }
    }
    return out;
}

std::vector<int> assign_labels(const ClusterTree& tree, const DataMatrix& data) {
    for (const auto& [id, node] : tree.nodes) {
        if (node.split && node.split->dim() != data.cols()) {
            throw InputError("assign_labels: dimension mismatch with the tree's splits");
        }
    }
    std::map<int, MixtureEval> evals;
    for (const auto& [id, node] : tree.nodes) {
        if (node.split) evals.emplace(id, MixtureEval(*node.split));
    }
    std::vector<int> labels(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        Vector x = data.row(i).transpose();
        int id = tree.root;
        while (!tree.nodes.at(id).is_leaf()) {
            const ClusterNode& node = tree.nodes.at(id);
            const int side = route_side(evals.at(id), x) == Branch::left ? 0 : 1;
            id = node.children[static_cast<std::size_t>(side)];
        }
        labels[static_cast<std::size_t>(i)] = id;
    }
    return labels;
}

std::size_t leaf_count(const ClusterTree& tree) {
    std::size_t leaves = 0;
    for (const auto& [id, node] : tree.nodes) leaves += node.is_leaf();
    return leaves;
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void json_vector(std::ostringstream& os, const Vector& v) {
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << fmt(v[i]);
    }
    os << ']';
}

void json_matrix(std::ostringstream& os, const Matrix& m) {
    os << '[';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) os << ',';
        json_vector(os, m.row(r).transpose());
    }
    os << ']';
}

}  // namespace

std::string tree_to_json(const ClusterTree& tree) {
    std::ostringstream os;
    os << "{\"method\":\"" << method_name(tree.method) << "\",\"direction\":\""
       << (tree.direction == ClusterTree::Direction::topdown ? "topdown" : "bottomup")
       << "\",\"alpha\":" << fmt(tree.alpha) << ",\"root\":" << tree.root << ",\"nodes\":[";
    bool first = true;
    for (const auto& [id, node] : tree.nodes) {
        if (!first) os << ',';
        first = false;
        os << "{\"id\":" << id << ",\"depth\":" << node.depth
           << ",\"parent\":" << node.parent << ",\"children\":[";
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i) os << ',';
            os << node.children[i];
        }
        os << "],\"method\":\"" << method_name(tree.method) << "\",\"level\":"
           << fmt(node.level);
        if (node.outcome) {
            os << ",\"p_value\":" << fmt(node.outcome->p_value)
               << ",\"reject\":" << (node.outcome->reject ? "true" : "false");
        } else {
            os << ",\"p_value\":null,\"reject\":null";
        }
        os << ",\"n_d1\":" << node.d1_idx.size() << ",\"n_d2\":" << node.d2_idx.size();
        if (node.split) {
            os << ",\"mixture\":{\"weights\":";
            json_vector(os, node.split->weights);
            os << ",\"means\":[";
            for (std::size_t i = 0; i < node.split->k(); ++i) {
                if (i) os << ',';
                json_vector(os, node.split->components[i].mean);
            }
            os << "],\"covariances\":[";
            for (std::size_t i = 0; i < node.split->k(); ++i) {
                if (i) os << ',';
                json_matrix(os, node.split->components[i].cov);
            }
            os << "]}";
        } else {
            os << ",\"mixture\":null";
        }
        os << '}';
    }
    os << "]}";
    return os.str();
}

}  // namespace mixsig
