#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace onlinekm {

inline constexpr std::size_t kDefaultFrontierCap = 1'000'000;

// min(1/2, sqrt(mass_budget / T))
inline double default_eta(double mass_budget, std::size_t T) {
    if (!(mass_budget > 0.0)) throw InvalidInput("default_eta: mass budget must be positive");
    if (T < 1) throw InvalidInput("default_eta: T must be >= 1");
    return std::min(0.5, std::sqrt(mass_budget / static_cast<double>(T)));
}

// Neumaier-compensated sum.
template <class It, class F>
double compensated_sum(It first, It last, F value) {
    double s = 0.0;
    double c = 0.0;
    for (; first != last; ++first) {
        const double v = value(*first);
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

/*
    Mass-tree MWUA. Only the depth-t frontier is stored. Each node carries its
    mass M(v) and the log of its uniform path weight
        u(v) = prod over ancestors a of (1 - eta * lhat(a)),
    where lhat(a) is the normalized loss of a's prediction on the point
    observed while a was on the frontier. Sampling is proportional to
    M(v) * u(v), which equals the path-level MWUA marginal of v when every
    root-to-leaf path p starts with weight M(p).
*/
template <class Label>
class MassTree {
public:
    static constexpr std::uint64_t npos = std::numeric_limits<std::uint64_t>::max();

    struct Node {
        std::uint64_t id = 0;
        std::uint64_t parent = npos;
        double mass = 1.0;
        double log_uweight = 0.0;
        double loss = 0.0; // normalized loss at this depth, set by observe
        Label label{};

        double uweight() const { return std::exp(log_uweight); }
    };

    struct ArchivedNode {
        std::size_t depth = 0;
        Node node;
    };

    MassTree(Label root, double eta, double loss_bound, std::size_t frontier_cap = kDefaultFrontierCap,
             bool keep_archive = false)
        : eta_(eta), loss_bound_(loss_bound), cap_(frontier_cap), keep_archive_(keep_archive) {
        if (!(eta > 0.0 && eta <= 0.5)) throw InvalidInput("mtmw: eta must lie in (0, 1/2]");
        if (!(loss_bound > 0.0)) throw InvalidInput("mtmw: loss bound must be positive");
        Node r;
        r.label = std::move(root);
        frontier_.push_back(std::move(r));
        next_id_ = 1;
    }

    std::size_t depth() const noexcept { return depth_; }
    double eta() const noexcept { return eta_; }
    double loss_bound() const noexcept { return loss_bound_; }
    const std::vector<Node>& frontier() const noexcept { return frontier_; }
    const std::vector<ArchivedNode>& archive() const noexcept { return archive_; }
    bool observed() const noexcept { return observed_; }

    double mass_sum() const {
        return compensated_sum(frontier_.begin(), frontier_.end(), [](const Node& n) { return n.mass; });
    }

    // Normalized sampling distribution, proportional to mass * uweight.
    std::vector<double> distribution() const {
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& n : frontier_) mx = std::max(mx, std::log(n.mass) + n.log_uweight);
        std::vector<double> p(frontier_.size());
        double total = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = std::exp(std::log(frontier_[i].mass) + frontier_[i].log_uweight - mx);
            total += p[i];
        }
        for (auto& v : p) v /= total;
        return p;
    }

    std::size_t sample(Rng& rng) const {
        const auto p = distribution();
        return rng.categorical(p);
    }

    // loss_of(label) returns the raw loss in [0, loss_bound]; it is normalized here.
    template <class F>
    void observe(F&& loss_of) {
        if (observed_) throw std::logic_error("mtmw: observe called twice without extend");
        for (auto& n : frontier_) {
            const double raw = loss_of(n.label);
            double l = raw / loss_bound_;
            if (!(l >= -1e-12 && l <= 1.0 + 1e-12)) {
                throw InvalidInput("mtmw: loss outside [0, loss_bound]: " + std::to_string(raw));
            }
            n.loss = std::clamp(l, 0.0, 1.0);
        }
        observed_ = true;
    }

    // Expected normalized loss under the current distribution; valid after observe.
    double expected_loss() const {
        const auto p = distribution();
        double e = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) e += p[i] * frontier_[i].loss;
        return e;
    }

    // expand(label, children) appends at least one child label per node.
    template <class F>
    void extend(F&& expand) {
        if (!observed_) throw std::logic_error("mtmw: extend requires observe first");
        std::vector<Node> next;
        std::vector<Label> kids;
        for (const auto& n : frontier_) {
            kids.clear();
            expand(n.label, kids);
            if (kids.empty()) throw std::logic_error("mtmw: empty expansion for a frontier node");
            if (next.size() + kids.size() > cap_) {
                throw ResourceError("mtmw: frontier exceeds " + std::to_string(cap_) + " nodes at depth " +
                                    std::to_string(depth_ + 1));
            }
            const double mass = n.mass / static_cast<double>(kids.size());
            const double lu = n.log_uweight + std::log1p(-eta_ * n.loss);
            for (auto& label : kids) {
                Node c;
                c.id = next_id_++;
                c.parent = n.id;
                c.mass = mass;
                c.log_uweight = lu;
                c.label = std::move(label);
                next.push_back(std::move(c));
            }
        }
        if (keep_archive_) {
            for (auto& n : frontier_) archive_.push_back({depth_, std::move(n)});
        }
        frontier_ = std::move(next);
        ++depth_;
        observed_ = false;
    }

    // CSV rows t,node_id,parent_id,mass,uweight,normalized_loss for archived and current nodes.
    void dump(std::ostream& os) const {
        os << "t,node_id,parent_id,mass,uweight,normalized_loss\n";
        for (const auto& a : archive_) row(os, a.depth, a.node);
        for (const auto& n : frontier_) row(os, depth_, n);
    }

private:
    static void row(std::ostream& os, std::size_t t, const Node& n) {
        char buf[160];
        const int len = std::snprintf(buf, sizeof buf, "%zu,%llu,%lld,%.17g,%.17g,%.17g\n", t,
                                      static_cast<unsigned long long>(n.id),
                                      n.parent == npos ? -1LL : static_cast<long long>(n.parent), n.mass,
                                      n.uweight(), n.loss);
        os.write(buf, len);
    }

    double eta_;
    double loss_bound_;
    std::size_t cap_;
    bool keep_archive_;
    std::vector<Node> frontier_;
    std::vector<ArchivedNode> archive_;
    std::uint64_t next_id_ = 0;
    std::size_t depth_ = 1;
    bool observed_ = false;
};

} // namespace onlinekm
