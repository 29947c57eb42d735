#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace onlinekm {

// Follow-The-Leader: predicts the oracle optimum of the observed prefix.
// On an exact tie with the previous leader, the previous leader is kept.
class Ftl final : public OnlineAlgorithm {
public:
    Ftl(std::size_t k, std::size_t d, OracleKind oracle, std::optional<CenterSet> initial = std::nullopt)
        : k_(k), d_(d), oracle_(oracle) {
        if (k < 1 || d < 1) throw InvalidInput("ftl: k and d must be >= 1");
        leader_ = initial ? *initial : CenterSet::replicate(Point::filled(d, 0.5), k);
        if (leader_.k() != k) throw InvalidInput("ftl: initial center set must have k centers");
    }

    CenterSet predict() override { return leader_; }

    void observe(const Point& x) override {
        require_in_box(x, d_, "ftl");
        hist_.add(x);
        ++t_;
        auto sol = solve(oracle_, hist_.points(), k_, leader_);
        if (weighted_loss(leader_, hist_.points()) > sol.cost) {
            leader_ = std::move(sol.centers);
            log_.emplace_back(t_ + 1, leader_);
        }
    }

    double expected_loss(const Point& x) override { return loss(leader_, x); }

    std::string name() const override { return "ftl"; }

    const CenterSet& leader() const noexcept { return leader_; }
    // (t, leader) for every step t whose prediction differs from step t-1.
    const std::vector<std::pair<std::size_t, CenterSet>>& leader_log() const noexcept { return log_; }
    const History& history() const noexcept { return hist_; }

private:
    std::size_t k_;
    std::size_t d_;
    OracleKind oracle_;
    CenterSet leader_;
    History hist_;
    std::size_t t_ = 0;
    std::vector<std::pair<std::size_t, CenterSet>> log_;
};

// MWUA over the distinct leaders seen so far. A leader entering at step t gets
// the weight it would have had from the start: prod_{tau < t} (1 - eta * loss/d).
class MwuaFtl final : public OnlineAlgorithm {
public:
    MwuaFtl(std::size_t k, std::size_t d, OracleKind oracle, double eta, std::uint64_t seed)
        : ftl_(k, d, oracle), d_(d), eta_(eta), rng_(seed) {
        if (!(eta > 0.0 && eta <= 0.5)) throw InvalidInput("mwua_ftl: eta must lie in (0, 1/2]");
        admit(ftl_.leader());
    }

    // sqrt(ln T / T), capped at 1/2; the expert count never exceeds T.
    static double default_eta(std::size_t T) {
        if (T < 2) return 0.5;
        const double t = static_cast<double>(T);
        return std::min(0.5, std::sqrt(std::log(t) / t));
    }

    CenterSet predict() override {
        const auto p = distribution();
        return experts_[rng_.categorical(p)];
    }

    void observe(const Point& x) override {
        const double norm = static_cast<double>(d_);
        for (std::size_t e = 0; e < experts_.size(); ++e) log_w_[e] += std::log1p(-eta_ * loss(experts_[e], x) / norm);
        stream_.push_back(x);
        ftl_.observe(x);
        admit(ftl_.leader());
    }

    double expected_loss(const Point& x) override {
        const auto p = distribution();
        double e = 0.0;
        for (std::size_t i = 0; i < experts_.size(); ++i) e += p[i] * loss(experts_[i], x);
        return e;
    }

    std::string name() const override { return "mwua_ftl"; }

    std::vector<double> distribution() const {
        const double mx = *std::max_element(log_w_.begin(), log_w_.end());
        std::vector<double> p(log_w_.size());
        double total = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] = std::exp(log_w_[i] - mx));
        for (auto& v : p) v /= total;
        return p;
    }

    const std::vector<CenterSet>& experts() const noexcept { return experts_; }
    const std::vector<double>& log_weights() const noexcept { return log_w_; }
    double eta() const noexcept { return eta_; }

private:
    void admit(const CenterSet& leader) {
        auto key = leader.canonical();
        if (index_.count(key.centers)) return;
        double lw = 0.0;
        const double norm = static_cast<double>(d_);
        for (const auto& x : stream_) lw += std::log1p(-eta_ * loss(leader, x) / norm);
        index_.emplace(key.centers, experts_.size());
        experts_.push_back(leader);
        log_w_.push_back(lw);
    }

    Ftl ftl_;
    std::size_t d_;
    double eta_;
    Rng rng_;
    std::vector<Point> stream_;
    std::vector<CenterSet> experts_;
    std::vector<double> log_w_;
    std::map<std::vector<Point>, std::size_t> index_;
};

} // namespace onlinekm
