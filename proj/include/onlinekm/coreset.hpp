#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace onlinekm {

/*
    Incremental monotone coreset.

    A bank of s incremental clusterers (the bicriteria provider) runs in
    parallel. Each solution i keeps a fixed distance threshold phi_i = d * 4^-i:
    a point within sqrt(phi_i) of its nearest center is assigned to it for
    good, otherwise it opens as a new center. A solution that would exceed
    its center cap turns inactive and ignores the rest of the stream.

    On top of every solution, each (center c, ring j) keeps one sample per
    population guess u = 1..U. A point in ring j of its assigned center joins
    A(i, c, j, u) with probability min(1, zeta / 2^u) while |A| < 2 zeta.
    Samples are append-only, so Q_t (the union of all samples) only grows.
*/

struct CoresetConfig {
    std::size_t k = 2;
    std::size_t d = 1;
    std::size_t T = 1;
    double epsilon_c = 0.5;
    std::size_t zeta = 0;    // 0: derive from epsilon_c
    bool zeta_paper = false; // derive with the eps^-4 polylog form
    double c_s = 2.0;        // solutions: ceil(c_s * log2 T)
    double c_k = 2.0;        // center cap: ceil(c_k * k * log2^2 T)
    double select_alpha = 1.0;
    std::uint64_t seed = 0;
};

inline std::size_t log2_ceil_at_least_one(std::size_t T) {
    std::size_t r = 0;
    while ((std::size_t{1} << r) < T) ++r;
    return std::max<std::size_t>(1, r);
}

// Resolved sizes for a configuration.
struct CoresetParams {
    std::size_t solutions = 1;
    std::size_t center_cap = 1;
    std::size_t guesses = 1; // U
    std::size_t zeta = 4;
    int ring_min = 0;
    int ring_max = 0;

    std::size_t ring_count() const noexcept { return static_cast<std::size_t>(ring_max - ring_min + 1); }

    static CoresetParams derive(const CoresetConfig& cfg) {
        if (cfg.k < 1 || cfg.d < 1 || cfg.T < 1) throw InvalidInput("coreset: k, d and T must be >= 1");
        if (!(cfg.epsilon_c > 0.0 && cfg.epsilon_c < 1.0)) throw InvalidInput("coreset: epsilon_c must lie in (0,1)");
        CoresetParams p;
        const double lg = static_cast<double>(log2_ceil_at_least_one(cfg.T));
        p.guesses = log2_ceil_at_least_one(cfg.T);
        p.solutions = static_cast<std::size_t>(std::ceil(cfg.c_s * lg));
        p.center_cap = static_cast<std::size_t>(std::ceil(cfg.c_k * static_cast<double>(cfg.k) * lg * lg));
        if (cfg.zeta > 0) {
            p.zeta = cfg.zeta;
        } else if (cfg.zeta_paper) {
            const double beta = cfg.c_k * lg * lg;
            p.zeta = static_cast<std::size_t>(
                std::ceil(beta * std::pow(cfg.epsilon_c, -4.0) * static_cast<double>(cfg.k) * lg));
        } else {
            p.zeta = std::max<std::size_t>(
                4, static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.k) / (cfg.epsilon_c * cfg.epsilon_c) * lg)));
        }
        const double t3 = static_cast<double>(cfg.T) * static_cast<double>(cfg.T) * static_cast<double>(cfg.T);
        p.ring_min = -static_cast<int>(std::ceil(std::log2(2.0 * t3)));
        p.ring_max = static_cast<int>(std::ceil(std::log2(std::sqrt(static_cast<double>(cfg.d)))));
        return p;
    }

    // Deterministic cap on the number of (key, member) entries.
    std::size_t size_bound() const noexcept { return solutions * center_cap * ring_count() * guesses * 2 * zeta; }
};

// j = floor(log2 dist), clamped to [ring_min, ring_max]; dist = 0 lands in ring_min.
inline int ring_index(double dist, int ring_min, int ring_max) {
    if (!(dist > 0.0)) return ring_min;
    int e = 0;
    std::frexp(dist, &e); // dist = m * 2^e, m in [0.5, 1)
    return std::clamp(e - 1, ring_min, ring_max);
}

inline int ring_index(const Point& center, const Point& x, int ring_min, int ring_max) {
    return ring_index(std::sqrt(squared_distance(center, x)), ring_min, ring_max);
}

struct Assignment {
    std::size_t solution = 0;
    std::size_t center = 0;
    bool opened = false;
    double dist2 = 0.0;
};

class BicriteriaState {
public:
    struct Solution {
        double phi = 1.0;
        std::vector<Point> centers;
        std::vector<std::size_t> assigned; // points per center
        double cost = 0.0;                 // sum of squared assignment distances
        bool active = true;
    };

    BicriteriaState() = default;
    BicriteriaState(std::size_t solutions, std::size_t d, std::size_t cap) : cap_(cap) {
        solutions_.resize(solutions);
        for (std::size_t i = 0; i < solutions; ++i) {
            solutions_[i].phi = static_cast<double>(d) * std::pow(4.0, -static_cast<double>(i));
        }
    }

    // Assigns or opens x in every active solution; the report lists those solutions only.
    std::vector<Assignment> insert(const Point& x, std::size_t t) {
        if (t != t_ + 1) throw InvalidInput("bicriteria_insert: t must advance by one per call");
        t_ = t;
        std::vector<Assignment> report;
        for (std::size_t i = 0; i < solutions_.size(); ++i) {
            auto& s = solutions_[i];
            if (!s.active) continue;
            std::size_t best = s.centers.size();
            double best_d = 0.0;
            for (std::size_t c = 0; c < s.centers.size(); ++c) {
                const double dd = squared_distance(s.centers[c], x);
                if (best == s.centers.size() || dd < best_d) {
                    best = c;
                    best_d = dd;
                }
            }
            if (best < s.centers.size() && best_d <= s.phi) {
                ++s.assigned[best];
                s.cost += best_d;
                report.push_back({i, best, false, best_d});
            } else if (s.centers.size() < cap_) {
                s.centers.push_back(x);
                s.assigned.push_back(1);
                report.push_back({i, s.centers.size() - 1, true, 0.0});
            } else {
                s.active = false;
            }
        }
        return report;
    }

    const std::vector<Solution>& solutions() const noexcept { return solutions_; }
    std::size_t center_cap() const noexcept { return cap_; }

private:
    std::vector<Solution> solutions_;
    std::size_t cap_ = 1;
    std::size_t t_ = 0;
};

struct SampleKey {
    std::size_t solution = 0;
    std::size_t center = 0;
    int ring = 0;
    std::size_t guess = 1;

    friend auto operator<=>(const SampleKey&, const SampleKey&) = default;
};

struct RetainedEntry {
    SampleKey key;
    std::size_t t = 0; // insertion time, indexes the point table
};

class CoresetState {
public:
    explicit CoresetState(const CoresetConfig& cfg)
        : cfg_(cfg), params_(CoresetParams::derive(cfg)), bicriteria_(params_.solutions, cfg.d, params_.center_cap) {}

    const CoresetConfig& config() const noexcept { return cfg_; }
    const CoresetParams& params() const noexcept { return params_; }
    const BicriteriaState& bicriteria() const noexcept { return bicriteria_; }
    std::size_t t() const noexcept { return t_; }

    // One step: bicriteria assignment, then ring sampling. Returns the entries
    // retained at this step (all carry insertion time t).
    std::vector<RetainedEntry> insert(const Point& x, std::size_t t) {
        require_in_box(x, cfg_.d, "coreset");
        const auto report = bicriteria_.insert(x, t);
        t_ = t;
        points_.push_back(x);
        std::vector<RetainedEntry> fresh;
        for (const auto& a : report) {
            const auto& center = bicriteria_.solutions()[a.solution].centers[a.center];
            const int j = ring_index(center, x, params_.ring_min, params_.ring_max);
            ++ring_count_[{a.solution, a.center, j}];
            for (std::size_t u = 1; u <= params_.guesses; ++u) {
                const SampleKey key{a.solution, a.center, j, u};
                auto& members = samples_[key];
                if (members.size() >= 2 * params_.zeta) continue;
                const double p = std::min(1.0, static_cast<double>(params_.zeta) / std::ldexp(1.0, static_cast<int>(u)));
                const double draw = counter_uniform(cfg_.seed, {t, a.solution, u});
                if (p >= 1.0 || draw < p) {
                    members.push_back(t);
                    fresh.push_back({key, t});
                    ++retained_;
                }
            }
        }
        return fresh;
    }

    const Point& point_at(std::size_t t) const { return points_.at(t - 1); }

    std::size_t ring_population(std::size_t solution, std::size_t center, int ring) const {
        auto it = ring_count_.find({solution, center, ring});
        return it == ring_count_.end() ? 0 : it->second;
    }

    const std::vector<std::size_t>& sample(const SampleKey& key) const {
        static const std::vector<std::size_t> empty;
        auto it = samples_.find(key);
        return it == samples_.end() ? empty : it->second;
    }

    // n(c, j, t) / |A(i, c, j, u)| for a member of the given sample.
    double member_weight(const SampleKey& key) const {
        const auto& members = sample(key);
        if (members.empty()) return 0.0;
        return static_cast<double>(ring_population(key.solution, key.center, key.ring)) /
               static_cast<double>(members.size());
    }

    // The guess u* with 2^(u*-1) <= n < 2^u*, clamped to [1, U].
    std::size_t matching_guess(std::size_t n) const {
        std::size_t u = 1;
        while (u < params_.guesses && (std::size_t{1} << u) <= n) ++u;
        return u;
    }

    // Total number of (key, member) entries, i.e. |Q_t| counted with keys.
    std::size_t retained_count() const noexcept { return retained_; }

    // Every retained (key, insertion time) pair.
    std::vector<RetainedEntry> retained() const {
        std::vector<RetainedEntry> out;
        out.reserve(retained_);
        for (const auto& [key, members] : samples_) {
            for (auto t : members) out.push_back({key, t});
        }
        return out;
    }

    // Solution whose rings define the extracted coreset: among active
    // solutions, the one with fewest centers whose assignment cost is at most
    // select_alpha times the smallest cost estimate
    //   cost_i + kmeans_k(centers_i weighted by assignment counts),
    // which lies within a constant factor of the k-means optimum.
    std::optional<std::size_t> designated_solution() const {
        const auto& sols = bicriteria_.solutions();
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < sols.size(); ++i) {
            if (sols[i].active && !sols[i].centers.empty()) pool.push_back(i);
        }
        if (pool.empty()) {
            for (std::size_t i = 0; i < sols.size(); ++i) {
                if (!sols[i].centers.empty()) pool.push_back(i);
            }
        }
        if (pool.empty()) return std::nullopt;
        double best_estimate = std::numeric_limits<double>::infinity();
        for (auto i : pool) {
            std::vector<WeightedPoint> wc;
            for (std::size_t c = 0; c < sols[i].centers.size(); ++c) {
                wc.push_back({sols[i].centers[c], static_cast<double>(sols[i].assigned[c])});
            }
            const auto sol = cfg_.d == 1 ? exact_1d_dp(wc, cfg_.k)
                                         : lloyd_kmeanspp(wc, cfg_.k, 3, 100, derive_seed(cfg_.seed, i));
            best_estimate = std::min(best_estimate, sols[i].cost + sol.cost);
        }
        std::optional<std::size_t> pick;
        for (auto i : pool) {
            if (sols[i].cost > cfg_.select_alpha * best_estimate) continue;
            if (!pick || sols[i].centers.size() < sols[*pick].centers.size()) pick = i;
        }
        if (!pick) pick = pool.front();
        return pick;
    }

    // The weighted coreset chi(X_{1:t}): members of the designated solution's
    // matching-guess samples, each weighted n(c, j, t) / |A(i, c, j, u*)|.
    std::vector<WeightedPoint> extract() const {
        std::vector<WeightedPoint> out;
        const auto which = designated_solution();
        if (!which) return out;
        for (const auto& [ring, n] : ring_count_) {
            const auto [i, c, j] = ring;
            if (i != *which || n == 0) continue;
            const SampleKey key{i, c, j, matching_guess(n)};
            const auto& members = sample(key);
            if (members.empty()) continue;
            const double w = static_cast<double>(n) / static_cast<double>(members.size());
            for (auto t : members) out.push_back({points_[t - 1], w});
        }
        return out;
    }

    // CSV rows: t_inserted,solution_i,center_id,j,u,weight,coord_0..coord_{d-1}
    void dump(std::ostream& os) const {
        os << "t_inserted,solution_i,center_id,j,u,weight";
        for (std::size_t a = 0; a < cfg_.d; ++a) os << ",coord_" << a;
        os << '\n';
        for (const auto& [key, members] : samples_) {
            const double w = member_weight(key);
            for (auto t : members) {
                os << t << ',' << key.solution << ',' << key.center << ',' << key.ring << ',' << key.guess << ','
                   << format_weight(w);
                for (std::size_t a = 0; a < cfg_.d; ++a) os << ',' << format_weight(points_[t - 1][a]);
                os << '\n';
            }
        }
    }

private:
    static std::string format_weight(double v) {
        char buf[32];
        const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf, static_cast<std::size_t>(n));
    }

    CoresetConfig cfg_;
    CoresetParams params_;
    BicriteriaState bicriteria_;
    std::vector<Point> points_;
    std::map<SampleKey, std::vector<std::size_t>> samples_;
    std::map<std::tuple<std::size_t, std::size_t, int>, std::size_t> ring_count_;
    std::size_t retained_ = 0;
    std::size_t t_ = 0;
};

} // namespace onlinekm
