#pragma once

#include "onlinekm/geometry.hpp"
#include "onlinekm/mtmw.hpp"
#include "onlinekm/random.hpp"

#include <cmath>
#include <vector>

namespace onlinekm::testing {

// A fully materialized tree whose leaves all sit at depth T (root depth 1).
struct ExplicitTree {
    struct TNode {
        std::size_t depth = 1;
        std::size_t parent = 0;
        std::vector<std::size_t> children;
        CenterSet prediction;
    };
    std::vector<TNode> nodes;
    std::size_t T = 1;

    std::vector<std::size_t> at_depth(std::size_t t) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].depth == t) out.push_back(i);
        }
        return out;
    }
};

inline CenterSet random_centers(Rng& rng, std::size_t k, std::size_t d) {
    std::vector<Point> c;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.uniform01();
        c.emplace_back(std::move(v));
    }
    return CenterSet{std::move(c)};
}

inline ExplicitTree random_tree(Rng& rng, std::size_t T, std::size_t max_branch, std::size_t k, std::size_t d) {
    ExplicitTree tree;
    tree.T = T;
    tree.nodes.push_back({1, 0, {}, random_centers(rng, k, d)});
    std::vector<std::size_t> level{0};
    for (std::size_t t = 1; t < T; ++t) {
        std::vector<std::size_t> next;
        for (auto v : level) {
            const std::size_t b = 1 + rng.below(max_branch);
            for (std::size_t c = 0; c < b; ++c) {
                tree.nodes[v].children.push_back(tree.nodes.size());
                next.push_back(tree.nodes.size());
                tree.nodes.push_back({t + 1, v, {}, random_centers(rng, k, d)});
            }
        }
        level = std::move(next);
    }
    return tree;
}

// Path-level MWUA: every root-to-leaf path p starts with weight M(p) and is
// multiplied by (1 - eta * lhat) of its depth-tau node for tau < t. Returns the
// induced distribution over depth-t nodes, in at_depth(t) order.
inline std::vector<double> enumerated_distribution(const ExplicitTree& tree, const std::vector<Point>& xs,
                                                   double eta, double loss_bound, std::size_t t) {
    const auto targets = tree.at_depth(t);
    std::vector<double> mass_of(tree.nodes.size(), 0.0);
    std::vector<double> w(targets.size(), 0.0);
    for (std::size_t leaf : tree.at_depth(tree.T)) {
        // Walk up collecting the path.
        std::vector<std::size_t> path;
        for (std::size_t v = leaf;; v = tree.nodes[v].parent) {
            path.push_back(v);
            if (v == 0) break;
        }
        std::reverse(path.begin(), path.end());
        double m = 1.0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) m /= static_cast<double>(tree.nodes[path[i]].children.size());
        double u = 1.0;
        for (std::size_t tau = 1; tau < t; ++tau) {
            u *= 1.0 - eta * loss(tree.nodes[path[tau - 1]].prediction, xs[tau - 1]) / loss_bound;
        }
        const std::size_t v_t = path[t - 1];
        for (std::size_t j = 0; j < targets.size(); ++j) {
            if (targets[j] == v_t) w[j] += m * u;
        }
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (auto& v : w) v /= total;
    return w;
}

// Runs MassTree over the explicit tree and returns, per depth t, the total
// variation distance to the enumerated distribution; also the worst mass-sum error.
struct EquivalenceResult {
    double max_tv = 0.0;
    double max_mass_error = 0.0;
};

inline EquivalenceResult check_equivalence(const ExplicitTree& tree, const std::vector<Point>& xs, double eta,
                                           double loss_bound) {
    EquivalenceResult r;
    MassTree<std::size_t> mt(0, eta, loss_bound);
    for (std::size_t t = 1; t <= tree.T; ++t) {
        const auto expect = enumerated_distribution(tree, xs, eta, loss_bound, t);
        const auto order = tree.at_depth(t);
        const auto got = mt.distribution();
        double tv = 0.0;
        for (std::size_t i = 0; i < mt.frontier().size(); ++i) {
            const auto label = mt.frontier()[i].label;
            const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), label) - order.begin());
            tv += std::abs(got[i] - expect.at(pos));
        }
        r.max_tv = std::max(r.max_tv, tv / 2.0);
        r.max_mass_error = std::max(r.max_mass_error, std::abs(mt.mass_sum() - 1.0));
        if (t == tree.T) break;
        mt.observe([&](std::size_t v) { return loss(tree.nodes[v].prediction, xs[t - 1]); });
        mt.extend([&](std::size_t v, std::vector<std::size_t>& out) {
            for (auto c : tree.nodes[v].children) out.push_back(c);
        });
    }
    return r;
}

} // namespace onlinekm::testing
