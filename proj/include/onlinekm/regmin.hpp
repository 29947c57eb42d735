#pragma once

#include "onlinekm/coreset.hpp"
#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/hrd.hpp"
#include "onlinekm/mtmw.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/random.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace onlinekm {

inline constexpr std::size_t kRegMinMaxK = 4;
inline constexpr double kDefaultA = 34.0 * 34.0;

struct RegMinParams {
    double epsilon = 0.5;
    double epsilon_star = 0.0;
    double epsilon_c = 0.0;
    double epsilon_hrd = 0.0; // after the full-grid re-rounding
    double eta = 0.5;
    double lambda = 0.0;
    double beta_bound = 0.0;
    double mass_budget = 0.0;
    double sqrt_dprime = 1.0;
    HrdParams hrd;
};

// Largest power of two <= v (v > 0).
inline double floor_pow2(double v) {
    int e = 0;
    const double m = std::frexp(v, &e);
    return m == 0.5 ? v : std::ldexp(1.0, e - 1);
}

namespace detail {

inline RegMinParams finish_params(double epsilon, std::size_t k, std::size_t d, std::size_t T, double eps_star,
                                  double eps_c, double eps_hrd_requested) {
    RegMinParams p;
    p.epsilon = epsilon;
    p.epsilon_star = eps_star;
    p.epsilon_c = eps_c;
    p.hrd = HrdParams::derive(d, T, eps_hrd_requested);
    p.epsilon_hrd = p.hrd.epsilon_hrd;
    p.sqrt_dprime = p.hrd.sqrt_dprime;
    p.lambda = p.hrd.lambda();
    const double tt = static_cast<double>(T);
    const double log_t3 = std::max(1.0, std::log2(tt * tt * tt));
    p.beta_bound = static_cast<double>(d) * std::log2(9.0 * p.sqrt_dprime / p.epsilon_hrd) + std::log2(log_t3);
    const double kk = static_cast<double>(k);
    p.mass_budget = kk * kk * p.lambda * p.beta_bound;
    p.eta = default_eta(p.mass_budget, T);
    return p;
}

} // namespace detail

// eps* = largest power of two <= eps^2 / (a k^2 log2(T^3 sqrt(d'))); eps_c = eps_hrd = eps*.
inline RegMinParams derive_params(double epsilon, std::size_t k, std::size_t d, std::size_t T,
                                  double a = kDefaultA) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("derive_params: epsilon must lie in (0,1)");
    if (k < 1 || d < 1 || T < 1) throw InvalidInput("derive_params: k, d and T must be >= 1");
    if (!(a > 0.0)) throw InvalidInput("derive_params: a must be positive");
    const double sdp = std::ldexp(1.0, sqrt_dprime_exponent(d));
    const double tt = static_cast<double>(T);
    const double lg = std::max(1.0, std::log2(tt * tt * tt * sdp));
    const double kk = static_cast<double>(k);
    const double raw = epsilon * epsilon / (a * kk * kk * lg);
    const double eps_star = floor_pow2(raw);
    return detail::finish_params(epsilon, k, d, T, eps_star, eps_star, eps_star);
}

struct RegMinConfig {
    double epsilon = 0.5;
    std::size_t k = 2;
    std::size_t d = 1;
    std::size_t T = 1;
    double a = kDefaultA;
    // Desk-scale overrides of the derived eps_c / eps_hrd; unset means eps*.
    std::optional<double> epsilon_c;
    std::optional<double> epsilon_hrd;
    bool zeta_paper = false;
    std::size_t zeta = 0;
    std::size_t frontier_cap = kDefaultFrontierCap;
    std::uint64_t seed = 0;
    OracleKind oracle = OracleKind::exact();
    bool keep_archive = false;

    RegMinParams resolve() const {
        const auto base = derive_params(epsilon, k, d, T, a);
        if (!epsilon_c && !epsilon_hrd) return base;
        return detail::finish_params(epsilon, k, d, T, base.epsilon_star, epsilon_c.value_or(base.epsilon_c),
                                     epsilon_hrd.value_or(base.epsilon_star));
    }
};

// 2k log2(a k T^3 sqrt(d') / eps^2) sqrt(d'^3 T)
inline double regret_bound(const RegMinConfig& cfg) {
    const double sdp = std::ldexp(1.0, sqrt_dprime_exponent(cfg.d));
    const double dp = sdp * sdp;
    const double tt = static_cast<double>(cfg.T);
    const double kk = static_cast<double>(cfg.k);
    return 2.0 * kk * std::log2(cfg.a * kk * tt * tt * tt * sdp / (cfg.epsilon * cfg.epsilon)) *
           std::sqrt(dp * dp * dp * tt);
}

struct RegMinStep {
    std::size_t t = 0;
    double loss = 0.0;          // sampled prediction
    double expected_loss = 0.0; // frontier average under the sampling distribution
    std::size_t frontier = 0;
    std::size_t leaves = 0;
    std::size_t coreset = 0;
    double mass_sum = 1.0;
};

struct RegMinWitness {
    CenterSet opt_centers;
    double loss = 0.0;  // sum over t of loss(approximate centers at t, x_t)
    double bound = 0.0; // (1 + eps_c + 8 (eps_hrd + eps_c) k Lambda) OPT + d k Lambda
    std::size_t changes = 0;
    bool in_frontier = false;
    bool holds() const { return loss <= bound; }
};

struct RegMinReport {
    RegMinParams params;
    std::vector<RegMinStep> steps;
    double cum_loss = 0.0;
    double cum_expected_loss = 0.0;
    double opt = 0.0;
    double regret = 0.0;
    double eps_regret = 0.0;
    double eps_regret_expected = 0.0;
    std::size_t max_frontier = 0;
    RegMinWitness witness;
};

class RegMin final : public OnlineAlgorithm {
public:
    using Label = std::array<std::uint32_t, kRegMinMaxK>;

    explicit RegMin(const RegMinConfig& cfg)
        : cfg_(cfg),
          params_(cfg.resolve()),
          coreset_(coreset_config(cfg, params_)),
          hrd_(params_.hrd),
          tree_(Label{}, params_.eta, static_cast<double>(cfg.d), cfg.frontier_cap, cfg.keep_archive),
          rng_(derive_seed(cfg.seed, 1)) {
        if (cfg.k > kRegMinMaxK) throw InvalidInput("regmin: k must be <= " + std::to_string(kRegMinMaxK));
        sync_centroids();
    }

    const RegMinParams& params() const noexcept { return params_; }
    const CoresetState& coreset() const noexcept { return coreset_; }
    const HrdState& hrd() const noexcept { return hrd_; }
    const MassTree<Label>& tree() const noexcept { return tree_; }
    std::size_t t() const noexcept { return t_; }

    CenterSet predict() override {
        picked_ = tree_.sample(rng_);
        return prediction(tree_.frontier()[picked_].label);
    }

    double expected_loss(const Point& x) override {
        const auto p = tree_.distribution();
        double e = 0.0;
        const auto& f = tree_.frontier();
        for (std::size_t i = 0; i < f.size(); ++i) e += p[i] * label_loss(f[i].label, x);
        return e;
    }

    // One step after predict: coreset update, HRD update, MTMW feed.
    void observe(const Point& x) override {
        require_in_box(x, cfg_.d, "regmin");
        if (t_ >= cfg_.T) throw InvalidInput("regmin: stream is longer than T");
        const std::size_t t = ++t_;

        const auto fresh = coreset_.insert(x, t);
        std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> refined;
        if (!fresh.empty()) {
            double w = 0.0;
            for (const auto& e : fresh) w = std::max(w, coreset_.member_weight(e.key));
            const auto res = hrd_.insert({x, std::min(w, static_cast<double>(t))}, t);
            for (const auto& [old_leaf, now] : res.refined) {
                auto& v = refined[static_cast<std::uint32_t>(old_leaf)];
                for (auto id : now) v.push_back(static_cast<std::uint32_t>(id));
            }
            sync_centroids();
        }

        tree_.observe([&](const Label& label) { return label_loss(label, x); });
        last_expected_ = tree_.expected_loss() * static_cast<double>(cfg_.d);
        if (t == cfg_.T) return;
        const std::size_t k = cfg_.k;
        tree_.extend([&](const Label& label, std::vector<Label>& out) {
            bool touched = false;
            for (std::size_t i = 0; i < k && !touched; ++i) touched = refined.count(label[i]) > 0;
            if (!touched) {
                out.push_back(label);
                return;
            }
            // Ordered tensor product of each region's replacement leaves.
            std::array<const std::vector<std::uint32_t>*, kRegMinMaxK> opts{};
            std::array<std::vector<std::uint32_t>, kRegMinMaxK> self{};
            for (std::size_t i = 0; i < k; ++i) {
                auto it = refined.find(label[i]);
                if (it != refined.end()) {
                    opts[i] = &it->second;
                } else {
                    self[i] = {label[i]};
                    opts[i] = &self[i];
                }
            }
            std::array<std::size_t, kRegMinMaxK> pos{};
            while (true) {
                Label c{};
                for (std::size_t i = 0; i < k; ++i) c[i] = (*opts[i])[pos[i]];
                out.push_back(c);
                std::size_t i = k;
                while (i > 0) {
                    --i;
                    if (++pos[i] < opts[i]->size()) break;
                    pos[i] = 0;
                    if (i == 0) return;
                }
            }
        });
    }

    std::string name() const override { return "regmin"; }

    // Expected loss of the step just observed under the distribution it was sampled from.
    double last_expected_loss() const noexcept { return last_expected_; }

    CenterSet prediction(const Label& label) const {
        std::vector<Point> c;
        c.reserve(cfg_.k);
        for (std::size_t i = 0; i < cfg_.k; ++i) c.push_back(hrd_.node(label[i]).region.centroid());
        return CenterSet{std::move(c)};
    }

    double label_loss(const Label& label, const Point& x) const {
        const std::size_t d = cfg_.d;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cfg_.k; ++i) {
            const double* c = &centroids_[static_cast<std::size_t>(label[i]) * d];
            double s = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                const double diff = x[a] - c[a];
                s += diff * diff;
            }
            best = std::min(best, s);
        }
        return best;
    }

private:
    static CoresetConfig coreset_config(const RegMinConfig& cfg, const RegMinParams& p) {
        CoresetConfig c;
        c.k = cfg.k;
        c.d = cfg.d;
        c.T = cfg.T;
        c.epsilon_c = p.epsilon_c;
        c.zeta = cfg.zeta;
        c.zeta_paper = cfg.zeta_paper;
        c.seed = derive_seed(cfg.seed, 2);
        return c;
    }

    void sync_centroids() {
        const auto& nodes = hrd_.nodes();
        const std::size_t d = cfg_.d;
        for (std::size_t id = centroids_.size() / d; id < nodes.size(); ++id) {
            const auto c = nodes[id].region.centroid();
            for (std::size_t a = 0; a < d; ++a) centroids_.push_back(c[a]);
        }
    }

    RegMinConfig cfg_;
    RegMinParams params_;
    CoresetState coreset_;
    HrdState hrd_;
    MassTree<Label> tree_;
    Rng rng_;
    std::vector<double> centroids_;
    std::size_t picked_ = 0;
    std::size_t t_ = 0;
    double last_expected_ = 0.0;
};

// Sums the loss of the approximate centers of S* along the recorded HRD:
// the step-t prediction uses the decomposition as of the end of step t-1.
inline RegMinWitness trace_witness(const RegMin& alg, std::span<const Point> stream, const CenterSet& s_star,
                                   double opt, std::size_t k, std::size_t d) {
    RegMinWitness w;
    w.opt_centers = s_star;
    const auto& hrd = alg.hrd();
    std::vector<std::size_t> prev;
    for (std::size_t t = 1; t <= stream.size(); ++t) {
        std::vector<std::size_t> regions;
        std::vector<Point> c;
        for (const auto& p : s_star.centers) {
            const auto id = hrd.locate_at(p, t - 1);
            regions.push_back(id);
            c.push_back(hrd.node(id).region.centroid());
        }
        if (t > 1 && regions != prev) ++w.changes;
        prev = regions;
        w.loss += loss(CenterSet{std::move(c)}, stream[t - 1]);
    }
    const auto& p = alg.params();
    const double kk = static_cast<double>(k);
    w.bound = (1.0 + p.epsilon_c + 8.0 * (p.epsilon_hrd + p.epsilon_c) * kk * p.lambda) * opt +
              static_cast<double>(d) * kk * p.lambda;
    RegMin::Label want{};
    for (std::size_t i = 0; i < prev.size(); ++i) want[i] = static_cast<std::uint32_t>(prev[i]);
    for (const auto& n : alg.tree().frontier()) {
        if (n.label == want) {
            w.in_frontier = true;
            break;
        }
    }
    return w;
}

inline RegMinReport run_regmin(const RegMinConfig& cfg, std::span<const Point> stream) {
    if (stream.size() != cfg.T) throw InvalidInput("regmin: stream length must equal T");
    RegMin alg(cfg);
    RegMinReport rep;
    rep.params = alg.params();
    rep.steps.reserve(cfg.T);
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        const auto& x = stream[t - 1];
        RegMinStep s;
        s.t = t;
        s.frontier = alg.tree().frontier().size();
        s.mass_sum = alg.tree().mass_sum();
        const auto pred = alg.predict();
        s.loss = loss(pred, x);
        alg.observe(x);
        s.expected_loss = alg.last_expected_loss();
        s.leaves = alg.hrd().leaf_count();
        s.coreset = alg.coreset().retained_count();
        rep.cum_loss += s.loss;
        rep.cum_expected_loss += s.expected_loss;
        rep.max_frontier = std::max(rep.max_frontier, s.frontier);
        rep.steps.push_back(s);
    }
    const auto sol = solve(cfg.oracle, stream, cfg.k);
    rep.opt = sol.cost;
    rep.regret = rep.cum_loss - rep.opt;
    rep.eps_regret = rep.cum_loss - (1.0 + cfg.epsilon) * rep.opt;
    rep.eps_regret_expected = rep.cum_expected_loss - (1.0 + cfg.epsilon) * rep.opt;
    rep.witness = trace_witness(alg, stream, sol.centers, rep.opt, cfg.k, cfg.d);
    return rep;
}

} // namespace onlinekm
