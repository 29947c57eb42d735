#pragma once

#include "onlinekm/error.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/random.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace onlinekm {

struct GmmComponent {
    Point mean;
    double stddev = 0.1;
    double weight = 1.0;
};

struct StreamSpec {
    enum class Kind { gmm, ftl_adversarial, uniform, csv };

    Kind kind = Kind::uniform;
    std::size_t T = 1;
    std::size_t d = 1;
    std::uint64_t seed = 0;

    std::vector<GmmComponent> components; // gmm

    double delta = 0.1; // ftl_adversarial
    std::size_t k = 2;  // ftl_adversarial

    std::string path;       // csv
    bool normalize = true;  // csv
    bool header = false;    // csv
};

inline std::string to_string(StreamSpec::Kind k) {
    switch (k) {
    case StreamSpec::Kind::gmm: return "gmm";
    case StreamSpec::Kind::ftl_adversarial: return "ftl_adversarial";
    case StreamSpec::Kind::uniform: return "uniform";
    case StreamSpec::Kind::csv: return "csv";
    }
    return "unknown";
}

// Every violated precondition, in a stable order; empty means valid.
inline std::vector<std::string> validate(const StreamSpec& spec) {
    std::vector<std::string> errs;
    if (spec.T < 1) errs.push_back("stream: T must be >= 1");
    if (spec.d < 1) errs.push_back("stream: d must be >= 1");
    switch (spec.kind) {
    case StreamSpec::Kind::gmm: {
        if (spec.components.empty()) errs.push_back("stream: gmm needs at least one component");
        double wsum = 0.0;
        for (std::size_t i = 0; i < spec.components.size(); ++i) {
            const auto& c = spec.components[i];
            const std::string tag = "stream: component " + std::to_string(i);
            if (c.mean.dim() != spec.d) errs.push_back(tag + " mean has wrong dimension");
            else if (!c.mean.in_unit_box()) errs.push_back(tag + " mean outside [0,1]^d");
            if (!(c.stddev >= 0.0)) errs.push_back(tag + " stddev must be >= 0");
            if (!(c.weight >= 0.0)) errs.push_back(tag + " weight must be >= 0");
            wsum += c.weight;
        }
        if (!spec.components.empty() && std::abs(wsum - 1.0) > 1e-9) errs.push_back("stream: gmm weights must sum to 1");
        break;
    }
    case StreamSpec::Kind::ftl_adversarial:
        if (!(spec.delta > 0.0 && spec.delta < 0.25)) errs.push_back("stream: delta must lie in (0, 1/4)");
        if (spec.k < 2) errs.push_back("stream: ftl_adversarial needs k >= 2");
        if (spec.d != 1) errs.push_back("stream: ftl_adversarial is one-dimensional (d = 1)");
        break;
    case StreamSpec::Kind::uniform: break;
    case StreamSpec::Kind::csv:
        if (spec.path.empty()) errs.push_back("stream: csv needs a path");
        break;
    }
    return errs;
}

inline std::vector<Point> gen_uniform(std::size_t T, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> out;
    out.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> c(d);
        for (auto& v : c) v = rng.uniform01();
        out.emplace_back(std::move(c));
    }
    return out;
}

// T i.i.d. mixture samples, each coordinate clamped into [0,1].
inline std::vector<Point> gen_gmm(const StreamSpec& spec) {
    StreamSpec checked = spec;
    checked.kind = StreamSpec::Kind::gmm;
    if (auto errs = validate(checked); !errs.empty()) throw InvalidInput(errs.front());
    Rng rng(spec.seed);
    std::vector<double> weights;
    for (const auto& c : spec.components) weights.push_back(c.weight);
    std::vector<Point> out;
    out.reserve(spec.T);
    for (std::size_t t = 0; t < spec.T; ++t) {
        const auto& comp = spec.components[rng.categorical(weights)];
        std::vector<double> c(spec.d);
        for (std::size_t a = 0; a < spec.d; ++a) c[a] = std::clamp(rng.normal(comp.mean[a], comp.stddev), 0.0, 1.0);
        out.emplace_back(std::move(c));
    }
    return out;
}

// Two-dimensional mixtures with standard deviation 0.1 and equal weights.
// Means are fixed choices that satisfy these separation rules:
//   WellSepGMM3  pairwise mean distance >= 0.6 (> 3 std)
//   IllSepGMM3   equilateral triangle of side 0.07 (0.7 std)
//   WellSepGMM4  square corners, side 0.6
inline StreamSpec gmm_preset(const std::string& name, std::size_t T, std::uint64_t seed) {
    StreamSpec s;
    s.kind = StreamSpec::Kind::gmm;
    s.T = T;
    s.d = 2;
    s.seed = seed;
    std::vector<Point> means;
    if (name == "WellSepGMM3") {
        means = {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.8}};
    } else if (name == "IllSepGMM3") {
        const double side = 0.07;
        const double h = side * std::sqrt(3.0) / 2.0;
        means = {{0.5 - side / 2, 0.5 - h / 3}, {0.5 + side / 2, 0.5 - h / 3}, {0.5, 0.5 + 2 * h / 3}};
    } else if (name == "WellSepGMM4") {
        means = {{0.2, 0.2}, {0.8, 0.2}, {0.2, 0.8}, {0.8, 0.8}};
    } else {
        throw InvalidInput("unknown gmm preset '" + name + "'");
    }
    for (auto& m : means) s.components.push_back({m, 0.1, 1.0 / static_cast<double>(means.size())});
    return s;
}

/*
    Adaptive adversary against Follow-The-Leader with an exact 1D oracle.

    Core locations -delta, 0, 1-delta are translated by +delta to {0, delta, 1}
    (losses are translation invariant). For k > 2 the core is contracted by
    1/(2k) and k-2 anchors sit equally spaced in (1/(2k), 1]; an anchor point is
    emitted whenever the current leader fails to give every anchor its own
    cluster.

    The adversary runs the same leader rule as Ftl: the leader of X_{1:t-1} is
    the exact optimum, except that the previous leader is kept when it is at
    least as good (exact ties).
*/
class FtlAdversary {
public:
    enum class LeaderType { high_isolated, low_isolated };

    FtlAdversary(double delta, std::size_t k) : delta_(delta), k_(k) {
        if (!(delta > 0.0 && delta < 0.25)) throw InvalidInput("ftl_adversarial: delta must lie in (0, 1/4)");
        if (k < 2) throw InvalidInput("ftl_adversarial: k must be >= 2");
        scale_ = k == 2 ? 1.0 : 1.0 / (2.0 * static_cast<double>(k));
        locations_ = {0.0, delta * scale_, scale_};
        for (std::size_t i = 1; i + 2 <= k; ++i) {
            locations_.push_back(scale_ + static_cast<double>(i) * (1.0 - scale_) / static_cast<double>(k - 2));
        }
        counts_.assign(locations_.size(), 0);
        leader_ = CenterSet::replicate(Point{0.5}, k);
    }

    static constexpr std::size_t kLow = 0;
    static constexpr std::size_t kMid = 1;
    static constexpr std::size_t kHigh = 2;

    const std::vector<double>& locations() const noexcept { return locations_; }
    double scale() const noexcept { return scale_; }

    Point next() {
        std::size_t loc = kHigh;
        if (t_ > 0) {
            update_leader();
            loc = choose();
        }
        ++counts_[loc];
        ++t_;
        hist_.add(Point{locations_[loc]});
        return Point{locations_[loc]};
    }

    std::size_t flips() const noexcept { return flips_; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }

    // Classifies a 2-cluster core leader: which core location sits alone.
    LeaderType classify(const CenterSet& leader) const {
        if (counts_[kMid] > 0 && counts_[kHigh] > 0 &&
            nearest_center_index(leader, Point{locations_[kMid]}) ==
                nearest_center_index(leader, Point{locations_[kHigh]})) {
            return LeaderType::low_isolated;
        }
        return LeaderType::high_isolated;
    }

private:
    void update_leader() {
        auto sol = exact_1d_dp(hist_.points(), k_);
        if (weighted_loss(leader_, hist_.points()) > sol.cost) leader_ = std::move(sol.centers);
        const auto type = classify(leader_);
        if (has_type_ && type != type_) ++flips_;
        type_ = type;
        has_type_ = true;
    }

    std::size_t choose() const {
        std::size_t weakest = locations_.size();
        for (std::size_t a = 3; a < locations_.size(); ++a) {
            if (!anchor_isolated(a) && (weakest == locations_.size() || counts_[a] < counts_[weakest])) weakest = a;
        }
        if (weakest != locations_.size()) return weakest;
        if (type_ == LeaderType::low_isolated) return kHigh;
        return counts_[kLow] <= counts_[kMid] ? kLow : kMid;
    }

    bool anchor_isolated(std::size_t a) const {
        if (counts_[a] == 0) return false;
        const auto c = nearest_center_index(leader_, Point{locations_[a]});
        for (std::size_t b = 0; b < locations_.size(); ++b) {
            if (b != a && counts_[b] > 0 && nearest_center_index(leader_, Point{locations_[b]}) == c) return false;
        }
        return true;
    }

    double delta_;
    std::size_t k_;
    double scale_ = 1.0;
    std::vector<double> locations_;
    std::vector<std::size_t> counts_;
    History hist_;
    CenterSet leader_;
    LeaderType type_ = LeaderType::high_isolated;
    bool has_type_ = false;
    std::size_t flips_ = 0;
    std::size_t t_ = 0;
};

inline std::vector<Point> gen_ftl_adversarial(double delta, std::size_t T, std::size_t k) {
    if (T < 1) throw InvalidInput("ftl_adversarial: T must be >= 1");
    FtlAdversary adv(delta, k);
    std::vector<Point> out;
    out.reserve(T);
    for (std::size_t t = 0; t < T; ++t) out.push_back(adv.next());
    return out;
}

// n*: the largest n such that, with one point at 1-delta and n points at each
// of -delta and 0, isolating 1-delta is still optimal. Binary search against
// the exact 1D oracle.
inline std::size_t ftl_flip_threshold(double delta) {
    if (!(delta > 0.0 && delta < 0.25)) throw InvalidInput("ftl_adversarial: delta must lie in (0, 1/4)");
    auto high_isolated_optimal = [delta](std::size_t n) {
        const double nn = static_cast<double>(n);
        std::vector<WeightedPoint> pts{{Point{0.0}, nn}, {Point{delta}, nn}, {Point{1.0}, 1.0}};
        const auto sol = exact_1d_dp(pts, 2);
        const CenterSet high{{Point{delta / 2.0}, Point{1.0}}};
        return weighted_loss(high, pts) <= sol.cost;
    };
    std::size_t lo = 1;
    std::size_t hi = 2;
    while (high_isolated_optimal(hi)) {
        lo = hi;
        hi *= 2;
    }
    if (!high_isolated_optimal(lo)) return 0;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (high_isolated_optimal(mid) ? lo : hi) = mid;
    }
    return lo;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

// One point per line, d comma-separated decimals. Rows are 1-based in errors.
inline std::vector<Point> load_csv(const std::string& path, bool normalize, std::size_t d, bool header = false) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open csv '" + path + "'");
    std::vector<Point> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (header && row == 1) continue;
        if (detail::trim(line).empty()) continue;
        std::vector<double> coords;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            const auto field = detail::trim(rest.substr(0, comma));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
                throw ParseError("csv row " + std::to_string(row) + ": non-numeric field '" + std::string(field) + "'",
                                 row);
            }
            coords.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (coords.size() != d) {
            throw ParseError("csv row " + std::to_string(row) + ": expected " + std::to_string(d) + " fields, got " +
                                 std::to_string(coords.size()),
                             row);
        }
        out.emplace_back(std::move(coords));
    }
    if (normalize && !out.empty()) {
        for (std::size_t a = 0; a < d; ++a) {
            double lo = out.front()[a], hi = out.front()[a];
            for (const auto& p : out) {
                lo = std::min(lo, p[a]);
                hi = std::max(hi, p[a]);
            }
            for (auto& p : out) p[a] = hi > lo ? std::clamp((p[a] - lo) / (hi - lo), 0.0, 1.0) : 0.0;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i].in_unit_box()) {
            throw ParseError("csv row " + std::to_string(i + 1 + (header ? 1 : 0)) +
                                 ": point outside [0,1]^d (enable normalization)",
                             i + 1);
        }
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline void write_csv(const std::vector<Point>& pts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& p : pts) {
        for (std::size_t a = 0; a < p.dim(); ++a) {
            if (a) out << ',';
            out << format_double(p[a]);
        }
        out << '\n';
    }
}

inline std::vector<Point> generate(const StreamSpec& spec) {
    if (auto errs = validate(spec); !errs.empty()) throw InvalidInput(errs.front());
    switch (spec.kind) {
    case StreamSpec::Kind::gmm: return gen_gmm(spec);
    case StreamSpec::Kind::ftl_adversarial: return gen_ftl_adversarial(spec.delta, spec.T, spec.k);
    case StreamSpec::Kind::uniform: return gen_uniform(spec.T, spec.d, spec.seed);
    case StreamSpec::Kind::csv: {
        auto pts = load_csv(spec.path, spec.normalize, spec.d, spec.header);
        if (pts.size() > spec.T) pts.resize(spec.T);
        return pts;
    }
    }
    throw InvalidInput("unknown stream kind");
}

} // namespace onlinekm
