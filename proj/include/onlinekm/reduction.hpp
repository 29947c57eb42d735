#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/random.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace onlinekm {

using AlgorithmFactory = std::function<std::unique_ptr<OnlineAlgorithm>(std::uint64_t seed)>;

struct ReductionConfig {
    std::vector<Point> points; // P
    std::size_t T = 1;
    std::uint64_t seed = 0;
    AlgorithmFactory make;
};

struct ReductionResult {
    CenterSet centers;
    double cost = 0.0;
    std::size_t best_step = 0;     // 1-based step of the returned prediction
    std::vector<double> costs;     // cost on P of every step's prediction
};

// Streams T points drawn uniformly with replacement from P through the online
// algorithm and returns the prediction that is cheapest on all of P.
inline ReductionResult offline_via_online(const ReductionConfig& cfg) {
    if (cfg.points.empty()) throw InvalidInput("reduction: point set must be nonempty");
    if (cfg.T < 1) throw InvalidInput("reduction: T must be >= 1");
    if (!cfg.make) throw InvalidInput("reduction: no online algorithm given");
    const std::size_t d = cfg.points.front().dim();
    for (const auto& p : cfg.points) require_in_box(p, d, "reduction");

    Rng sampler(derive_seed(cfg.seed, 0));
    auto alg = cfg.make(derive_seed(cfg.seed, 1));
    ReductionResult out;
    out.cost = std::numeric_limits<double>::infinity();
    out.costs.reserve(cfg.T);
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        auto pred = alg->predict();
        const double c = total_loss(pred, cfg.points);
        out.costs.push_back(c);
        if (c < out.cost) {
            out.cost = c;
            out.centers = std::move(pred);
            out.best_step = t;
        }
        alg->observe(cfg.points[sampler.below(cfg.points.size())]);
    }
    return out;
}

} // namespace onlinekm
