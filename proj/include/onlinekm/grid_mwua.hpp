#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/grid.hpp"
#include "onlinekm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace onlinekm {

inline constexpr std::uint64_t kDefaultExpertBudget = 5'000'000;

// All k-subsets of the delta-grid sites, enumerated lexicographically.
struct GridExpertSpace {
    double delta = 1.0;
    std::size_t d = 1;
    std::size_t k = 1;
    std::vector<Point> sites;
    std::vector<std::uint32_t> members; // expert e owns members[e*k .. e*k+k)

    std::size_t site_count() const noexcept { return sites.size(); }
    std::size_t expert_count() const noexcept { return k == 0 ? 0 : members.size() / k; }

    CenterSet expert(std::size_t e) const {
        std::vector<Point> c;
        c.reserve(k);
        for (std::size_t j = 0; j < k; ++j) c.push_back(sites[members[e * k + j]]);
        return CenterSet{std::move(c)};
    }

    // Loss of every expert on x, from one pass over the sites.
    void losses(const Point& x, std::vector<double>& out) const {
        std::vector<double> site_d(sites.size());
        for (std::size_t s = 0; s < sites.size(); ++s) site_d[s] = squared_distance(sites[s], x);
        const std::size_t n = expert_count();
        out.resize(n);
        for (std::size_t e = 0; e < n; ++e) {
            double m = site_d[members[e * k]];
            for (std::size_t j = 1; j < k; ++j) m = std::min(m, site_d[members[e * k + j]]);
            out[e] = m;
        }
    }
};

inline GridExpertSpace build_space(double delta, std::size_t d, std::size_t k,
                                   std::uint64_t budget = kDefaultExpertBudget) {
    if (d < 1) throw InvalidInput("build_space: d must be >= 1");
    if (k < 1) throw InvalidInput("build_space: k must be >= 1");
    GridExpertSpace space;
    space.delta = delta;
    space.d = d;
    space.k = k;
    space.sites = grid_sites(delta, d);
    if (space.sites.size() < k) throw InvalidInput("build_space: fewer sites than k");
    const std::uint64_t count = binomial(space.sites.size(), k);
    if (count > budget) {
        throw ResourceError("grid expert space has " + std::to_string(count) + " experts, budget is " +
                            std::to_string(budget));
    }
    space.members.reserve(static_cast<std::size_t>(count) * k);
    for_each_combination(space.sites.size(), k, [&](const std::vector<std::size_t>& c) {
        for (auto s : c) space.members.push_back(static_cast<std::uint32_t>(s));
    });
    return space;
}

// min(1/2, sqrt(ln N / T))
inline double default_eta(const GridExpertSpace& space, std::size_t T) {
    if (T < 1) throw InvalidInput("default_eta: T must be >= 1");
    const double n = static_cast<double>(space.expert_count());
    return std::min(0.5, std::sqrt(std::log(n) / static_cast<double>(T)));
}

// Weights are kept as logs so long streams cannot underflow; weight(e) is
// exp(log_weights[e]) = prod (1 - eta * loss/d) over the observed prefix.
struct MwuaState {
    std::vector<double> log_weights;
    double eta = 0.5;
    std::size_t t = 0;

    MwuaState() = default;
    MwuaState(const GridExpertSpace& space, double eta_) : log_weights(space.expert_count(), 0.0), eta(eta_) {
        if (!(eta > 0.0 && eta <= 0.5)) throw InvalidInput("mwua: eta must lie in (0, 1/2]");
    }

    double weight(std::size_t e) const { return std::exp(log_weights[e]); }

    std::vector<double> distribution() const {
        const double mx = *std::max_element(log_weights.begin(), log_weights.end());
        std::vector<double> p(log_weights.size());
        double total = 0.0;
        for (std::size_t e = 0; e < p.size(); ++e) total += (p[e] = std::exp(log_weights[e] - mx));
        for (auto& v : p) v /= total;
        return p;
    }

    std::size_t sample(Rng& rng) const {
        const auto p = distribution();
        return rng.categorical(p);
    }

    // Linear multiplicative update with losses normalized by d into [0,1].
    void update(const GridExpertSpace& space, const Point& x) {
        std::vector<double> l;
        space.losses(x, l);
        const double norm = static_cast<double>(space.d);
        for (std::size_t e = 0; e < l.size(); ++e) log_weights[e] += std::log1p(-eta * (l[e] / norm));
        ++t;
    }
};

// Samples the step prediction from the current weights, then observes x.
inline CenterSet mwua_step(MwuaState& state, const GridExpertSpace& space, const Point& x, Rng& rng) {
    if (state.log_weights.size() != space.expert_count()) throw InvalidInput("mwua_step: state does not match space");
    const auto pick = state.sample(rng);
    state.update(space, x);
    return space.expert(pick);
}

class GridMwua final : public OnlineAlgorithm {
public:
    GridMwua(GridExpertSpace space, double eta, std::uint64_t seed)
        : space_(std::move(space)), state_(space_, eta), rng_(seed) {}

    CenterSet predict() override { return space_.expert(state_.sample(rng_)); }

    void observe(const Point& x) override {
        require_in_box(x, space_.d, "grid_mwua");
        state_.update(space_, x);
    }

    double expected_loss(const Point& x) override {
        std::vector<double> l;
        space_.losses(x, l);
        const auto p = state_.distribution();
        double e = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) e += p[i] * l[i];
        return e;
    }

    std::string name() const override { return "grid_mwua"; }

    const GridExpertSpace& space() const noexcept { return space_; }
    const MwuaState& state() const noexcept { return state_; }

private:
    GridExpertSpace space_;
    MwuaState state_;
    Rng rng_;
};

} // namespace onlinekm
