#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace onlinekm {

// Dyadic cube prod [c_a 2^-level, (c_a+1) 2^-level), closed on the upper box face.
struct Region {
    std::uint32_t level = 0;
    std::vector<std::uint64_t> cell;

    static Region root(std::size_t d) { return Region{0, std::vector<std::uint64_t>(d, 0)}; }

    std::size_t dim() const noexcept { return cell.size(); }
    double side() const { return std::ldexp(1.0, -static_cast<int>(level)); }
    double lower(std::size_t a) const { return std::ldexp(static_cast<double>(cell[a]), -static_cast<int>(level)); }
    double upper(std::size_t a) const { return std::ldexp(static_cast<double>(cell[a] + 1), -static_cast<int>(level)); }
    // d * 4^-level, exact
    double diameter2() const { return static_cast<double>(dim()) * std::ldexp(1.0, -2 * static_cast<int>(level)); }
    double diameter() const { return std::sqrt(diameter2()); }
    double volume() const { return std::ldexp(1.0, -static_cast<int>(level * dim())); }

    Point centroid() const {
        Point c = Point::filled(dim(), 0.0);
        for (std::size_t a = 0; a < dim(); ++a) {
            c[a] = std::ldexp(static_cast<double>(2 * cell[a] + 1), -static_cast<int>(level) - 1);
        }
        return c;
    }

    bool contains(const Point& x) const {
        const std::uint64_t top = std::uint64_t{1} << level;
        for (std::size_t a = 0; a < dim(); ++a) {
            const double lo = lower(a);
            const double hi = upper(a);
            if (x[a] < lo) return false;
            if (x[a] >= hi && !(cell[a] + 1 == top && x[a] == 1.0)) return false;
        }
        return true;
    }

    // Squared Euclidean distance from x to the clamped point of the cube.
    double distance2(const Point& x) const {
        double s = 0.0;
        for (std::size_t a = 0; a < dim(); ++a) {
            const double c = std::clamp(x[a], lower(a), upper(a));
            const double diff = x[a] - c;
            s += diff * diff;
        }
        return s;
    }

    // Child with index bits b_a selecting the upper half on axis a.
    Region child(std::size_t index) const {
        Region r{level + 1, cell};
        for (std::size_t a = 0; a < dim(); ++a) r.cell[a] = 2 * cell[a] + ((index >> a) & 1U);
        return r;
    }

    friend bool operator==(const Region&, const Region&) = default;
};

inline double delta_t(double epsilon_hrd, std::size_t t) {
    if (t < 1) throw InvalidInput("delta_t: t must be >= 1");
    const double tt = static_cast<double>(t);
    return epsilon_hrd / (2.0 * tt * tt * tt);
}

// True when R needs no refinement for x at time t: diam(R) <= max(eps * r / 2, delta_t).
inline bool refine_criteria(const Region& r, const Point& x, std::size_t t, double epsilon_hrd) {
    const double dist = std::sqrt(r.distance2(x));
    const double bound = std::max(epsilon_hrd * dist / 2.0, delta_t(epsilon_hrd, t));
    return r.diameter2() <= bound * bound;
}

// Smallest e with 4^e >= d, so sqrt(d') = 2^e >= sqrt(d).
inline int sqrt_dprime_exponent(std::size_t d) {
    int e = 0;
    while ((std::uint64_t{1} << (2 * e)) < d) ++e;
    return e;
}

// Full-grid floor: epsilon_hrd is rounded down so that
// delta_T / sqrt(d') = epsilon_hrd / (2 T^3 sqrt(d')) = 2^-level_max.
struct HrdParams {
    std::size_t d = 1;
    std::size_t T = 1;
    double epsilon_hrd = 0.5;
    double sqrt_dprime = 1.0;
    std::uint32_t level_max = 0; // also the refinement budget Lambda

    static HrdParams derive(std::size_t d, std::size_t T, double epsilon_requested) {
        if (d < 1 || T < 1) throw InvalidInput("hrd: d and T must be >= 1");
        if (!(epsilon_requested > 0.0 && epsilon_requested <= 1.0)) {
            throw InvalidInput("hrd: epsilon_hrd must lie in (0,1]");
        }
        HrdParams p;
        p.d = d;
        p.T = T;
        const int e = sqrt_dprime_exponent(d);
        p.sqrt_dprime = std::ldexp(1.0, e);
        const double tt = static_cast<double>(T);
        const double scale = 2.0 * tt * tt * tt * p.sqrt_dprime; // 2 T^3 sqrt(d')
        const double lm = std::ceil(std::log2(scale / epsilon_requested) - 1e-12);
        if (lm > 62.0) throw ConfigError("hrd: epsilon_hrd is below the dyadic floor (level_max > 62)");
        p.level_max = static_cast<std::uint32_t>(std::max(0.0, lm));
        p.epsilon_hrd = std::ldexp(scale, -static_cast<int>(p.level_max));
        while (p.epsilon_hrd > epsilon_requested) {
            ++p.level_max;
            p.epsilon_hrd = std::ldexp(scale, -static_cast<int>(p.level_max));
        }
        if (p.level_max > 62) throw ConfigError("hrd: epsilon_hrd is below the dyadic floor (level_max > 62)");
        return p;
    }

    double delta_T() const { return delta_t(epsilon_hrd, T); }
    double lambda() const { return static_cast<double>(level_max); }

    // (9 sqrt(d') / epsilon_hrd)^d * log2(T^3)
    double new_leaf_bound() const {
        const double tt = static_cast<double>(T);
        return std::pow(9.0 * sqrt_dprime / epsilon_hrd, static_cast<double>(d)) *
               std::max(1.0, std::log2(tt * tt * tt));
    }
};

struct HrdInsertResult {
    std::vector<std::size_t> new_leaves;
    // Each leaf split during the insert with the leaves now covering it.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> refined;
};

class HrdState {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    struct Node {
        Region region;
        std::size_t parent = npos;
        std::size_t first_child = npos; // children are contiguous, 2^d of them
        std::size_t created_at = 0;
        std::size_t split_at = npos;
    };

    HrdState(std::size_t d, std::size_t T, double epsilon_hrd) : HrdState(HrdParams::derive(d, T, epsilon_hrd)) {}

    explicit HrdState(const HrdParams& p) : params_(p) {
        if (p.d > 16) throw InvalidInput("hrd: d must be <= 16");
        nodes_.push_back(Node{Region::root(p.d), npos, npos, 0, npos});
        leaf_count_ = 1;
    }

    const HrdParams& params() const noexcept { return params_; }
    std::size_t d() const noexcept { return params_.d; }
    std::size_t t() const noexcept { return t_; }
    std::size_t fanout() const noexcept { return std::size_t{1} << params_.d; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t id) const { return nodes_.at(id); }
    std::size_t leaf_count() const noexcept { return leaf_count_; }
    const std::vector<std::pair<WeightedPoint, std::size_t>>& inserted() const noexcept { return inserted_; }

    bool is_leaf_at(std::size_t id, std::size_t t) const {
        const auto& n = nodes_[id];
        return n.created_at <= t && t < n.split_at;
    }
    bool is_leaf(std::size_t id) const { return nodes_[id].split_at == npos; }

    std::vector<std::size_t> leaves() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (is_leaf(i)) out.push_back(i);
        }
        return out;
    }

    // Refines every leaf failing the criteria of wx at time t until all pass.
    HrdInsertResult insert(const WeightedPoint& wx, std::size_t t) {
        require_in_box(wx.point, params_.d, "hrd_insert");
        if (t < 1 || t < t_) throw InvalidInput("hrd_insert: time must be >= 1 and nondecreasing");
        if (t > params_.T) throw InvalidInput("hrd_insert: time exceeds the horizon T");
        if (!(wx.weight <= static_cast<double>(t))) throw InvalidInput("hrd_insert: weight must be <= t");
        t_ = t;
        inserted_.emplace_back(wx, t);

        HrdInsertResult out;
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const std::size_t id = stack.back();
            stack.pop_back();
            // Passing the criteria at a node implies passing it in the whole subtree.
            if (refine_criteria(nodes_[id].region, wx.point, t, params_.epsilon_hrd)) continue;
            if (!is_leaf(id)) {
                push_children(id, stack);
                continue;
            }
            const std::size_t first_new = out.new_leaves.size();
            refine_leaf(id, wx.point, t, out.new_leaves);
            out.refined.emplace_back(
                id, std::vector<std::size_t>(out.new_leaves.begin() + static_cast<std::ptrdiff_t>(first_new),
                                             out.new_leaves.end()));
        }
        return out;
    }

    // Leaf containing x in the current decomposition.
    std::size_t locate(const Point& x) const { return locate_at(x, npos - 1); }

    // Leaf containing x in the decomposition as it stood at the end of step t.
    std::size_t locate_at(const Point& x, std::size_t t) const {
        require_in_box(x, params_.d, "hrd_locate");
        std::size_t id = 0;
        while (!is_leaf_at(id, t)) {
            const auto& n = nodes_[id];
            std::size_t index = 0;
            for (std::size_t a = 0; a < params_.d; ++a) {
                const double mid = std::ldexp(static_cast<double>(2 * n.region.cell[a] + 1),
                                              -static_cast<int>(n.region.level) - 1);
                if (x[a] >= mid) index |= std::size_t{1} << a;
            }
            id = n.first_child + index;
        }
        return id;
    }

    // Leaves at the end of step t lying under node id (id itself when unsplit).
    std::vector<std::size_t> descendant_leaves(std::size_t id, std::size_t t) const {
        std::vector<std::size_t> out;
        std::vector<std::size_t> stack{id};
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            if (is_leaf_at(v, t)) {
                out.push_back(v);
                continue;
            }
            const auto& n = nodes_[v];
            for (std::size_t c = fanout(); c-- > 0;) stack.push_back(n.first_child + c);
        }
        return out;
    }

    CenterSet approximate_centers(const CenterSet& s) const { return approximate_centers_at(s, npos - 1); }

    CenterSet approximate_centers_at(const CenterSet& s, std::size_t t) const {
        std::vector<Point> c;
        c.reserve(s.k());
        for (const auto& p : s.centers) c.push_back(nodes_[locate_at(p, t)].region.centroid());
        return CenterSet{std::move(c)};
    }

    // Number of distinct regions on the root-to-leaf chain of x over all time, minus one.
    std::size_t refinements_along(const Point& x) const {
        return static_cast<std::size_t>(nodes_[locate(x)].region.level);
    }

    // Every current leaf satisfies the criteria of every recorded insert.
    bool criteria_hold() const {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!is_leaf(i)) continue;
            for (const auto& [wx, tau] : inserted_) {
                if (!refine_criteria(nodes_[i].region, wx.point, tau, params_.epsilon_hrd)) return false;
            }
        }
        return true;
    }

    // Lines: level cell_0..cell_{d-1} parent_id created_at (parent_id -1 for the root).
    void dump(std::ostream& os) const {
        for (const auto& n : nodes_) {
            os << n.region.level;
            for (auto c : n.region.cell) os << ' ' << c;
            os << ' ' << (n.parent == npos ? std::string("-1") : std::to_string(n.parent)) << ' ' << n.created_at
               << '\n';
        }
    }

private:
    void push_children(std::size_t id, std::vector<std::size_t>& stack) const {
        const auto& n = nodes_[id];
        for (std::size_t c = fanout(); c-- > 0;) stack.push_back(n.first_child + c);
    }

    // Worklist refinement of one failing leaf, emitting the resulting leaves in cell order.
    void refine_leaf(std::size_t id, const Point& x, std::size_t t, std::vector<std::size_t>& out) {
        std::vector<std::size_t> work{id};
        while (!work.empty()) {
            const std::size_t v = work.back();
            work.pop_back();
            if (refine_criteria(nodes_[v].region, x, t, params_.epsilon_hrd)) {
                out.push_back(v);
                continue;
            }
            split(v, t);
            for (std::size_t c = fanout(); c-- > 0;) work.push_back(nodes_[v].first_child + c);
        }
    }

    void split(std::size_t id, std::size_t t) {
        if (nodes_[id].region.level >= params_.level_max) {
            throw std::logic_error("hrd: refinement below the full-grid floor");
        }
        const std::size_t first = nodes_.size();
        const Region parent_region = nodes_[id].region;
        for (std::size_t c = 0; c < fanout(); ++c) {
            nodes_.push_back(Node{parent_region.child(c), id, npos, t, npos});
        }
        nodes_[id].first_child = first;
        nodes_[id].split_at = t;
        leaf_count_ += fanout() - 1;
    }

    HrdParams params_;
    std::vector<Node> nodes_;
    std::vector<std::pair<WeightedPoint, std::size_t>> inserted_;
    std::size_t leaf_count_ = 0;
    std::size_t t_ = 0;
};

} // namespace onlinekm
