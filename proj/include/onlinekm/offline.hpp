#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/grid.hpp"
#include "onlinekm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace onlinekm {

// Hindsight oracles for the offline k-means optimum.
struct OracleKind {
    enum class Kind { exact_1d_dp, lloyd_kmeanspp, grid_bruteforce };

    Kind kind = Kind::exact_1d_dp;
    int restarts = 10;
    int iterations = 300;
    double grid_delta = 0.1;
    std::uint64_t seed = 0;
    std::uint64_t budget = 5'000'000;

    static OracleKind exact() { return {}; }
    static OracleKind lloyd(int restarts = 10, std::uint64_t seed = 0, int iterations = 300) {
        OracleKind o;
        o.kind = Kind::lloyd_kmeanspp;
        o.restarts = restarts;
        o.seed = seed;
        o.iterations = iterations;
        return o;
    }
    static OracleKind grid(double delta) {
        OracleKind o;
        o.kind = Kind::grid_bruteforce;
        o.grid_delta = delta;
        return o;
    }
};

inline std::string to_string(OracleKind::Kind k) {
    switch (k) {
    case OracleKind::Kind::exact_1d_dp: return "exact_1d_dp";
    case OracleKind::Kind::lloyd_kmeanspp: return "lloyd_kmeanspp";
    case OracleKind::Kind::grid_bruteforce: return "grid_bruteforce";
    }
    return "unknown";
}

struct Solution {
    CenterSet centers;
    double cost = 0.0;
};

namespace detail {

inline void require_solvable(std::span<const WeightedPoint> pts, std::size_t k) {
    if (k == 0) throw InvalidInput("k must be at least 1");
    if (pts.empty()) throw InvalidInput("oracle input is empty");
    const std::size_t d = pts.front().point.dim();
    for (const auto& wp : pts) {
        if (wp.point.dim() != d) throw InvalidInput("dimension mismatch in oracle input");
        if (wp.weight < 0.0) throw InvalidInput("negative weight in oracle input");
    }
}

// Pads a center list to exactly k entries by repeating the first center.
inline CenterSet pad_to_k(std::vector<Point> centers, std::size_t k) {
    while (centers.size() < k) centers.push_back(centers.front());
    return CenterSet{std::move(centers)};
}

} // namespace detail

// Exact weighted 1D k-means. Identical coordinates are merged, then the
// O(m^2 k) interval DP over sorted distinct values finds the optimal
// contiguous partition.
inline Solution exact_1d_dp(std::span<const WeightedPoint> pts, std::size_t k) {
    detail::require_solvable(pts, k);
    if (pts.front().point.dim() != 1) throw InvalidInput("exact_1d_dp requires d = 1");

    std::map<double, double> grouped;
    for (const auto& wp : pts) grouped[wp.point[0]] += wp.weight;
    std::vector<double> xs, ws;
    for (auto [x, w] : grouped) {
        if (w > 0.0) {
            xs.push_back(x);
            ws.push_back(w);
        }
    }
    if (xs.empty()) throw InvalidInput("oracle input has zero total weight");

    const std::size_t m = xs.size();
    const std::size_t kk = std::min(k, m);

    // Shift by the weighted mean to limit cancellation in S2 - S1^2/W.
    double wsum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        wsum += ws[i];
        mean += ws[i] * xs[i];
    }
    mean /= wsum;
    std::vector<double> W(m + 1, 0.0), S1(m + 1, 0.0), S2(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double y = xs[i] - mean;
        W[i + 1] = W[i] + ws[i];
        S1[i + 1] = S1[i] + ws[i] * y;
        S2[i + 1] = S2[i] + ws[i] * y * y;
    }
    // SSE of the half-open group [a, b).
    auto sse = [&](std::size_t a, std::size_t b) {
        const double w = W[b] - W[a];
        const double s1 = S1[b] - S1[a];
        return std::max(0.0, (S2[b] - S2[a]) - s1 * s1 / w);
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(kk + 1, std::vector<double>(m + 1, inf));
    std::vector<std::vector<std::size_t>> cut(kk + 1, std::vector<std::size_t>(m + 1, 0));
    dp[0][0] = 0.0;
    for (std::size_t c = 1; c <= kk; ++c) {
        for (std::size_t j = c; j <= m; ++j) {
            for (std::size_t i = c - 1; i < j; ++i) {
                if (dp[c - 1][i] == inf) continue;
                const double v = dp[c - 1][i] + sse(i, j);
                if (v < dp[c][j]) {
                    dp[c][j] = v;
                    cut[c][j] = i;
                }
            }
        }
    }

    std::vector<Point> centers;
    std::size_t j = m;
    for (std::size_t c = kk; c >= 1; --c) {
        const std::size_t i = cut[c][j];
        const double w = W[j] - W[i];
        centers.push_back(Point{mean + (S1[j] - S1[i]) / w});
        j = i;
    }
    std::reverse(centers.begin(), centers.end());
    Solution sol{detail::pad_to_k(std::move(centers), k), 0.0};
    sol.cost = weighted_loss(sol.centers, pts);
    return sol;
}

namespace detail {

inline CenterSet kmeanspp_seed(std::span<const WeightedPoint> pts, std::size_t k, Rng& rng) {
    std::vector<double> w(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) w[i] = pts[i].weight;
    std::vector<Point> centers;
    centers.push_back(pts[rng.categorical(w)].point);
    std::vector<double> d2(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = squared_distance(pts[i].point, centers.back());
    while (centers.size() < k) {
        std::vector<double> score(pts.size());
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            score[i] = pts[i].weight * d2[i];
            total += score[i];
        }
        const std::size_t pick = total > 0.0 ? rng.categorical(score) : rng.categorical(w);
        centers.push_back(pts[pick].point);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(pts[i].point, centers.back()));
        }
    }
    return CenterSet{std::move(centers)};
}

// Lloyd iterations until relative improvement < 1e-10 or the iteration cap.
inline Solution lloyd_refine(std::span<const WeightedPoint> pts, CenterSet centers, int max_iter) {
    const std::size_t k = centers.k();
    const std::size_t d = pts.front().point.dim();
    double cost = weighted_loss(centers, pts);
    for (int it = 0; it < max_iter && cost > 0.0; ++it) {
        std::vector<std::vector<double>> acc(k, std::vector<double>(d, 0.0));
        std::vector<double> mass(k, 0.0);
        for (const auto& wp : pts) {
            const std::size_t c = nearest_center_index(centers, wp.point);
            mass[c] += wp.weight;
            for (std::size_t a = 0; a < d; ++a) acc[c][a] += wp.weight * wp.point[a];
        }
        CenterSet next = centers;
        for (std::size_t c = 0; c < k; ++c) {
            if (mass[c] <= 0.0) continue;
            std::vector<double> v(d);
            for (std::size_t a = 0; a < d; ++a) v[a] = acc[c][a] / mass[c];
            next.centers[c] = Point(std::move(v));
        }
        const double next_cost = weighted_loss(next, pts);
        if (next_cost > cost) break;
        const bool converged = (cost - next_cost) < 1e-10 * cost;
        centers = std::move(next);
        cost = next_cost;
        if (converged) break;
    }
    return {std::move(centers), cost};
}

} // namespace detail

// Best of `restarts` k-means++ seeded Lloyd runs; ties go to the lowest restart.
// Each restart draws from its own derived seed, so the result does not depend
// on execution order. An optional warm start is evaluated as one more candidate.
inline Solution lloyd_kmeanspp(std::span<const WeightedPoint> pts, std::size_t k, int restarts, int iterations,
                               std::uint64_t seed, const std::optional<CenterSet>& warm_start = std::nullopt) {
    detail::require_solvable(pts, k);
    double total_w = 0.0;
    for (const auto& wp : pts) total_w += wp.weight;
    if (!(total_w > 0.0)) throw InvalidInput("oracle input has zero total weight");

    std::optional<Solution> best;
    if (warm_start && warm_start->k() == k) best = detail::lloyd_refine(pts, *warm_start, iterations);
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        Solution s = detail::lloyd_refine(pts, detail::kmeanspp_seed(pts, k, rng), iterations);
        if (!best || s.cost < best->cost) best = std::move(s);
    }
    return *best;
}

// Exhaustive search over all k-subsets of the delta-grid sites.
inline Solution grid_bruteforce(std::span<const WeightedPoint> pts, std::size_t k, double delta,
                                std::uint64_t budget = 5'000'000) {
    detail::require_solvable(pts, k);
    const std::size_t d = pts.front().point.dim();
    const auto sites = grid_sites(delta, d);
    if (sites.size() < k) throw InvalidInput("grid has fewer sites than k");
    const auto count = binomial(sites.size(), k);
    if (count > budget) {
        throw ResourceError("grid_bruteforce: " + std::to_string(count) + " experts exceed the budget of " +
                            std::to_string(budget));
    }
    std::vector<std::vector<double>> dist(pts.size(), std::vector<double>(sites.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t s = 0; s < sites.size(); ++s) dist[i][s] = squared_distance(pts[i].point, sites[s]);
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_idx;
    for_each_combination(sites.size(), k, [&](const std::vector<std::size_t>& c) {
        double cost = 0.0;
        for (std::size_t i = 0; i < pts.size() && cost < best; ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (auto s : c) m = std::min(m, dist[i][s]);
            cost += pts[i].weight * m;
        }
        if (cost < best) {
            best = cost;
            best_idx = c;
        }
    });
    std::vector<Point> centers;
    for (auto s : best_idx) centers.push_back(sites[s]);
    Solution sol{CenterSet{std::move(centers)}, 0.0};
    sol.cost = weighted_loss(sol.centers, pts);
    return sol;
}

inline Solution solve(const OracleKind& oracle, std::span<const WeightedPoint> pts, std::size_t k,
                      const std::optional<CenterSet>& warm_start = std::nullopt) {
    switch (oracle.kind) {
    case OracleKind::Kind::exact_1d_dp: return exact_1d_dp(pts, k);
    case OracleKind::Kind::lloyd_kmeanspp:
        return lloyd_kmeanspp(pts, k, oracle.restarts, oracle.iterations, oracle.seed, warm_start);
    case OracleKind::Kind::grid_bruteforce: return grid_bruteforce(pts, k, oracle.grid_delta, oracle.budget);
    }
    throw InvalidInput("unknown oracle kind");
}

inline Solution solve(const OracleKind& oracle, std::span<const Point> pts, std::size_t k) {
    const auto w = unit_weights(pts);
    return solve(oracle, std::span<const WeightedPoint>(w), k);
}

// Growing stream prefix with identical points merged into one weighted entry.
class History {
public:
    void add(const Point& x, double weight = 1.0) {
        auto [it, inserted] = index_.try_emplace(x, entries_.size());
        if (inserted) {
            entries_.push_back({x, weight});
        } else {
            entries_[it->second].weight += weight;
        }
        count_ += weight;
    }
    std::span<const WeightedPoint> points() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    double total_weight() const noexcept { return count_; }

private:
    std::vector<WeightedPoint> entries_;
    std::map<Point, std::size_t> index_;
    double count_ = 0.0;
};

struct RegretPoint {
    std::size_t t = 0;
    double cum_loss = 0.0;
    double opt = 0.0;
    double regret = 0.0;
    bool exact = true; // false when opt was linearly interpolated
};

enum class OptSchedule { every_step, geometric };

// Steps 1,2,4,...,T plus T.
inline std::vector<std::size_t> geometric_schedule(std::size_t T) {
    std::vector<std::size_t> out;
    for (std::size_t t = 1; t <= T; t *= 2) out.push_back(t);
    if (out.empty() || out.back() != T) out.push_back(T);
    return out;
}

// Regret halted at t for every t: cumulative algorithm loss on X_{1:t}
// minus the oracle cost of X_{1:t}.
inline std::vector<RegretPoint> regret_series(std::span<const double> alg_losses, std::span<const Point> pts,
                                              std::size_t k, const OracleKind& oracle,
                                              OptSchedule schedule = OptSchedule::every_step) {
    if (alg_losses.size() != pts.size()) throw InvalidInput("regret_series: loss and stream lengths differ");
    const std::size_t T = pts.size();
    std::vector<RegretPoint> out(T);
    std::vector<char> scheduled(T + 1, schedule == OptSchedule::every_step ? 1 : 0);
    if (schedule == OptSchedule::geometric) {
        for (auto t : geometric_schedule(T)) scheduled[t] = 1;
    }
    History hist;
    double cum = 0.0;
    std::optional<CenterSet> warm;
    for (std::size_t t = 1; t <= T; ++t) {
        cum += alg_losses[t - 1];
        hist.add(pts[t - 1]);
        out[t - 1].t = t;
        out[t - 1].cum_loss = cum;
        if (scheduled[t]) {
            auto sol = solve(oracle, hist.points(), k, warm);
            warm = sol.centers;
            out[t - 1].opt = sol.cost;
            out[t - 1].exact = true;
        }
    }
    if (schedule == OptSchedule::geometric) {
        std::size_t prev = 0;
        for (std::size_t t = 1; t <= T; ++t) {
            if (!scheduled[t]) continue;
            for (std::size_t u = prev + 1; u < t; ++u) {
                // Before the first scheduled step the only anchor is opt(0) = 0.
                const double lo = prev == 0 ? 0.0 : out[prev - 1].opt;
                const double frac = static_cast<double>(u - prev) / static_cast<double>(t - prev);
                out[u - 1].opt = lo + frac * (out[t - 1].opt - lo);
                out[u - 1].exact = false;
            }
            prev = t;
        }
    }
    for (auto& r : out) r.regret = r.cum_loss - r.opt;
    return out;
}

} // namespace onlinekm
