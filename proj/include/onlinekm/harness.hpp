#pragma once

#include "onlinekm/coreset.hpp"
#include "onlinekm/error.hpp"
#include "onlinekm/ftl.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/grid_mwua.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/reduction.hpp"
#include "onlinekm/regmin.hpp"
#include "onlinekm/streams.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace onlinekm {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct AlgoSpec {
    enum class Kind { ftl, mwua_ftl, grid_mwua, regmin };

    Kind kind = Kind::ftl;
    std::string label;          // output name; defaults to the kind name
    bool expected_loss = false; // record the expected instead of the sampled loss
    double eta = 0.0;           // 0: algorithm default
    double delta = 0.25;        // grid_mwua
    std::uint64_t budget = kDefaultExpertBudget;
    // regmin
    double epsilon = 0.5;
    double a = kDefaultA;
    std::optional<double> epsilon_c;
    std::optional<double> epsilon_hrd;
    bool zeta_paper = false;
    std::size_t zeta = 0;
    std::size_t frontier_cap = kDefaultFrontierCap;
};

inline std::string to_string(AlgoSpec::Kind k) {
    switch (k) {
    case AlgoSpec::Kind::ftl: return "ftl";
    case AlgoSpec::Kind::mwua_ftl: return "mwua_ftl";
    case AlgoSpec::Kind::grid_mwua: return "grid_mwua";
    case AlgoSpec::Kind::regmin: return "regmin";
    }
    return "unknown";
}

struct ExperimentConfig {
    StreamSpec stream;
    std::size_t k = 2;
    std::vector<AlgoSpec> algorithms;
    OracleKind oracle;
    std::vector<std::uint64_t> seeds{0};
    bool opt_every_step = false;
    bool svg = true;
};

inline RegMinConfig regmin_config(const AlgoSpec& a, std::size_t k, std::size_t d, std::size_t T,
                                  const OracleKind& oracle, std::uint64_t seed) {
    RegMinConfig c;
    c.epsilon = a.epsilon;
    c.k = k;
    c.d = d;
    c.T = T;
    c.a = a.a;
    c.epsilon_c = a.epsilon_c;
    c.epsilon_hrd = a.epsilon_hrd;
    c.zeta_paper = a.zeta_paper;
    c.zeta = a.zeta;
    c.frontier_cap = a.frontier_cap;
    c.seed = seed;
    c.oracle = oracle;
    return c;
}

inline std::unique_ptr<OnlineAlgorithm> make_algorithm(const AlgoSpec& a, std::size_t k, std::size_t d,
                                                       std::size_t T, const OracleKind& oracle, std::uint64_t seed) {
    switch (a.kind) {
    case AlgoSpec::Kind::ftl: return std::make_unique<Ftl>(k, d, oracle);
    case AlgoSpec::Kind::mwua_ftl:
        return std::make_unique<MwuaFtl>(k, d, oracle, a.eta > 0.0 ? a.eta : MwuaFtl::default_eta(T), seed);
    case AlgoSpec::Kind::grid_mwua: {
        auto space = build_space(a.delta, d, k, a.budget);
        const double eta = a.eta > 0.0 ? a.eta : default_eta(space, T);
        return std::make_unique<GridMwua>(std::move(space), eta, seed);
    }
    case AlgoSpec::Kind::regmin: return std::make_unique<RegMin>(regmin_config(a, k, d, T, oracle, seed));
    }
    throw ConfigError("unknown algorithm kind");
}

// ---- JSON config ---------------------------------------------------------

namespace detail {

class JsonReader {
public:
    JsonReader(const json& j, std::string where, std::vector<std::string>& errs)
        : j_(j), where_(std::move(where)), errs_(errs) {
        if (!j_.is_object()) errs_.push_back(where_ + ": expected an object");
    }

    bool ok() const { return j_.is_object(); }
    bool has(const std::string& key) const { return ok() && j_.contains(key); }
    const json& raw(const std::string& key) const { return j_.at(key); }
    void mark(const std::string& key) { seen_.insert(key); }

    template <class V>
    void get(const std::string& key, V& out) {
        seen_.insert(key);
        if (!has(key)) return;
        try {
            out = j_.at(key).get<V>();
        } catch (const json::exception&) {
            errs_.push_back(where_ + "." + key + ": wrong type");
        }
    }

    template <class V>
    void get(const std::string& key, std::optional<V>& out) {
        seen_.insert(key);
        if (!has(key)) return;
        try {
            out = j_.at(key).get<V>();
        } catch (const json::exception&) {
            errs_.push_back(where_ + "." + key + ": wrong type");
        }
    }

    void error(const std::string& msg) { errs_.push_back(where_ + ": " + msg); }

    // Reports every key that was never read.
    void finish() {
        if (!ok()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) errs_.push_back(where_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string>& errs_;
    std::set<std::string> seen_;
};

inline std::string join_errors(const std::vector<std::string>& errs) {
    std::string s;
    for (const auto& e : errs) s += (s.empty() ? "" : "\n") + e;
    return s;
}

} // namespace detail

inline StreamSpec parse_stream(const json& j, std::vector<std::string>& errs, const std::string& where = "stream") {
    detail::JsonReader r(j, where, errs);
    StreamSpec s;
    if (!r.ok()) return s;
    std::string kind = "uniform";
    std::string preset;
    r.get("kind", kind);
    r.get("preset", preset);
    r.get("T", s.T);
    r.get("d", s.d);
    r.get("seed", s.seed);
    r.get("delta", s.delta);
    r.get("k", s.k);
    r.get("path", s.path);
    r.get("normalize", s.normalize);
    r.get("header", s.header);
    if (kind == "gmm") s.kind = StreamSpec::Kind::gmm;
    else if (kind == "ftl_adversarial") s.kind = StreamSpec::Kind::ftl_adversarial;
    else if (kind == "uniform") s.kind = StreamSpec::Kind::uniform;
    else if (kind == "csv") s.kind = StreamSpec::Kind::csv;
    else r.error("unknown kind '" + kind + "'");
    r.mark("components");
    if (!preset.empty()) {
        if (s.kind != StreamSpec::Kind::gmm) r.error("preset requires kind 'gmm'");
        if (r.has("components")) r.error("preset and components are exclusive");
        try {
            auto p = gmm_preset(preset, s.T, s.seed);
            s.d = p.d;
            s.components = std::move(p.components);
        } catch (const InvalidInput& e) {
            r.error(e.what());
        }
    } else if (r.has("components")) {
        const auto& arr = r.raw("components");
        if (!arr.is_array()) {
            r.error("components must be an array");
        } else {
            for (std::size_t i = 0; i < arr.size(); ++i) {
                detail::JsonReader c(arr[i], where + ".components[" + std::to_string(i) + "]", errs);
                if (!c.ok()) continue;
                GmmComponent g;
                std::vector<double> mean;
                c.get("mean", mean);
                c.get("stddev", g.stddev);
                c.get("weight", g.weight);
                g.mean = Point(std::move(mean));
                c.finish();
                s.components.push_back(std::move(g));
            }
        }
    }
    r.finish();
    for (const auto& e : validate(s)) errs.push_back(e);
    return s;
}

inline OracleKind parse_oracle(const json& j, std::vector<std::string>& errs) {
    detail::JsonReader r(j, "oracle", errs);
    OracleKind o;
    if (!r.ok()) return o;
    std::string kind = "exact_1d_dp";
    r.get("kind", kind);
    r.get("restarts", o.restarts);
    r.get("iterations", o.iterations);
    r.get("delta", o.grid_delta);
    r.get("seed", o.seed);
    r.get("budget", o.budget);
    if (kind == "exact_1d_dp") o.kind = OracleKind::Kind::exact_1d_dp;
    else if (kind == "lloyd_kmeanspp") o.kind = OracleKind::Kind::lloyd_kmeanspp;
    else if (kind == "grid_bruteforce") o.kind = OracleKind::Kind::grid_bruteforce;
    else r.error("unknown kind '" + kind + "'");
    if (o.restarts < 1) r.error("restarts must be >= 1");
    if (o.iterations < 1) r.error("iterations must be >= 1");
    r.finish();
    return o;
}

inline AlgoSpec parse_algo(const json& j, std::vector<std::string>& errs, const std::string& where) {
    detail::JsonReader r(j, where, errs);
    AlgoSpec a;
    if (!r.ok()) return a;
    std::string kind;
    std::string loss = "sampled";
    r.get("algo", kind);
    r.get("label", a.label);
    r.get("loss", loss);
    r.get("eta", a.eta);
    r.get("delta", a.delta);
    r.get("budget", a.budget);
    r.get("epsilon", a.epsilon);
    r.get("a", a.a);
    r.get("epsilon_c", a.epsilon_c);
    r.get("epsilon_hrd", a.epsilon_hrd);
    r.get("zeta_paper", a.zeta_paper);
    r.get("zeta", a.zeta);
    r.get("frontier_cap", a.frontier_cap);
    if (kind == "ftl") a.kind = AlgoSpec::Kind::ftl;
    else if (kind == "mwua_ftl") a.kind = AlgoSpec::Kind::mwua_ftl;
    else if (kind == "grid_mwua") a.kind = AlgoSpec::Kind::grid_mwua;
    else if (kind == "regmin") a.kind = AlgoSpec::Kind::regmin;
    else r.error("unknown algo '" + kind + "'");
    if (loss == "sampled") a.expected_loss = false;
    else if (loss == "expected") a.expected_loss = true;
    else r.error("loss must be 'sampled' or 'expected'");
    if (a.label.empty()) a.label = kind;
    r.finish();
    return a;
}

// Checks every algorithm against (k, d, T); returns all violations.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> errs;
    const std::size_t d = c.stream.d;
    if (c.k < 1) errs.push_back("k must be >= 1");
    if (c.algorithms.empty()) errs.push_back("algorithms must be nonempty");
    if (c.seeds.empty()) errs.push_back("seeds must be nonempty");
    if (c.oracle.kind == OracleKind::Kind::exact_1d_dp && d != 1) {
        errs.push_back("oracle: exact_1d_dp requires d = 1");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
        const auto& a = c.algorithms[i];
        const std::string tag = "algorithms[" + std::to_string(i) + "]";
        if (!labels.insert(a.label).second) errs.push_back(tag + ": duplicate label '" + a.label + "'");
        for (char ch : a.label) {
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
                errs.push_back(tag + ": label may only contain [A-Za-z0-9_-]");
                break;
            }
        }
        if (a.eta < 0.0 || a.eta > 0.5) errs.push_back(tag + ": eta must lie in (0, 1/2] (0 selects the default)");
        switch (a.kind) {
        case AlgoSpec::Kind::ftl:
        case AlgoSpec::Kind::mwua_ftl: break;
        case AlgoSpec::Kind::grid_mwua:
            if (!(a.delta > 0.0 && a.delta <= 1.0)) errs.push_back(tag + ": delta must lie in (0, 1]");
            break;
        case AlgoSpec::Kind::regmin:
            if (!(a.epsilon > 0.0 && a.epsilon < 1.0)) errs.push_back(tag + ": epsilon must lie in (0, 1)");
            if (c.k > kRegMinMaxK) errs.push_back(tag + ": regmin supports k <= " + std::to_string(kRegMinMaxK));
            if (a.epsilon_c && !(*a.epsilon_c > 0.0 && *a.epsilon_c < 1.0)) {
                errs.push_back(tag + ": epsilon_c must lie in (0, 1)");
            }
            if (a.epsilon_hrd && !(*a.epsilon_hrd > 0.0 && *a.epsilon_hrd <= 1.0)) {
                errs.push_back(tag + ": epsilon_hrd must lie in (0, 1]");
            }
            break;
        }
    }
    return errs;
}

inline ExperimentConfig parse_experiment(const json& j) {
    std::vector<std::string> errs;
    detail::JsonReader r(j, "config", errs);
    ExperimentConfig c;
    if (!r.ok()) throw ConfigError(detail::join_errors(errs));
    r.mark("stream");
    r.mark("algorithms");
    r.mark("oracle");
    if (r.has("stream")) c.stream = parse_stream(r.raw("stream"), errs);
    else errs.push_back("config: missing 'stream'");
    c.k = c.stream.k;
    r.get("k", c.k);
    if (r.has("oracle")) c.oracle = parse_oracle(r.raw("oracle"), errs);
    else if (c.stream.d > 1) c.oracle = OracleKind::lloyd();
    if (r.has("algorithms") && r.raw("algorithms").is_array()) {
        const auto& arr = r.raw("algorithms");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            c.algorithms.push_back(parse_algo(arr[i], errs, "algorithms[" + std::to_string(i) + "]"));
        }
    } else {
        errs.push_back("config: 'algorithms' must be an array");
    }
    r.get("seeds", c.seeds);
    r.get("opt_every_step", c.opt_every_step);
    r.get("svg", c.svg);
    r.finish();
    if (errs.empty()) errs = validate(c);
    if (!errs.empty()) throw ConfigError(detail::join_errors(errs));
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

// ---- runs ----------------------------------------------------------------

struct RunRecord {
    std::size_t t = 0;
    std::string algo;
    std::uint64_t seed = 0;
    double inst_loss = 0.0;
    double cum_loss = 0.0;
    double opt = 0.0;
    double regret = 0.0;
    std::optional<double> eps_regret;
    bool opt_exact = true;
};

struct RunResult {
    std::string algo;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
};

// Worker count: ONLINEKLUST_THREADS if set and positive, else the hardware count.
inline std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ONLINEKLUST_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<std::size_t>(v);
    }
    return n;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure in
// index order is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::min(n, std::max<std::size_t>(1, threads));
    if (w <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < w; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Oracle cost of every prefix; schedule as in regret_series.
inline std::vector<RegretPoint> opt_series(std::span<const Point> stream, std::size_t k, const OracleKind& oracle,
                                           bool every_step) {
    const std::vector<double> zeros(stream.size(), 0.0);
    return regret_series(zeros, stream, k, oracle, every_step ? OptSchedule::every_step : OptSchedule::geometric);
}

inline RunResult run_cell(const ExperimentConfig& c, const AlgoSpec& a, std::uint64_t seed,
                          std::span<const Point> stream, std::span<const RegretPoint> opt) {
    const std::size_t T = stream.size();
    auto alg = make_algorithm(a, c.k, c.stream.d, T, c.oracle, seed);
    RunResult res;
    res.algo = a.label;
    res.seed = seed;
    res.records.reserve(T);
    double cum = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const auto& x = stream[t - 1];
        const auto pred = alg->predict();
        const double inst = a.expected_loss ? alg->expected_loss(x) : loss(pred, x);
        alg->observe(x);
        cum += inst;
        RunRecord r;
        r.t = t;
        r.algo = a.label;
        r.seed = seed;
        r.inst_loss = inst;
        r.cum_loss = cum;
        r.opt = opt[t - 1].opt;
        r.opt_exact = opt[t - 1].exact;
        r.regret = cum - r.opt;
        if (a.kind == AlgoSpec::Kind::regmin) r.eps_regret = cum - (1.0 + a.epsilon) * r.opt;
        res.records.push_back(std::move(r));
    }
    return res;
}

inline std::string csv_header() { return "schema_version,t,algo,seed,inst_loss,cum_loss,opt,regret,eps_regret,opt_exact\n"; }

inline std::string csv_rows(const RunResult& r) {
    std::string s = csv_header();
    for (const auto& rec : r.records) {
        s += std::to_string(kSchemaVersion) + ',' + std::to_string(rec.t) + ',' + rec.algo + ',' +
             std::to_string(rec.seed) + ',' + format_double(rec.inst_loss) + ',' + format_double(rec.cum_loss) + ',' +
             format_double(rec.opt) + ',' + format_double(rec.regret) + ',' +
             (rec.eps_regret ? format_double(*rec.eps_regret) : std::string()) + ',' + (rec.opt_exact ? "1" : "0") +
             '\n';
    }
    return s;
}

struct SeriesStats {
    std::string name;
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> stddev; // sample standard deviation, 0 for one seed
};

// Mean and spread of regret across seeds for each algorithm, in config order.
inline std::vector<SeriesStats> aggregate(const ExperimentConfig& c, const std::vector<RunResult>& runs) {
    std::vector<SeriesStats> out;
    for (const auto& a : c.algorithms) {
        std::vector<const RunResult*> mine;
        for (const auto& r : runs) {
            if (r.algo == a.label) mine.push_back(&r);
        }
        if (mine.empty()) continue;
        SeriesStats s;
        s.name = a.label;
        const std::size_t T = mine.front()->records.size();
        const double n = static_cast<double>(mine.size());
        for (std::size_t i = 0; i < T; ++i) {
            double m = 0.0;
            for (auto* r : mine) m += r->records[i].regret;
            m /= n;
            double v = 0.0;
            for (auto* r : mine) v += (r->records[i].regret - m) * (r->records[i].regret - m);
            s.t.push_back(static_cast<double>(i + 1));
            s.mean.push_back(m);
            s.stddev.push_back(mine.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string aggregate_csv(const std::vector<SeriesStats>& series, std::size_t n_seeds) {
    std::string s = "schema_version,algo,t,n_seeds,mean_regret,std_regret\n";
    for (const auto& ser : series) {
        for (std::size_t i = 0; i < ser.t.size(); ++i) {
            s += std::to_string(kSchemaVersion) + ',' + ser.name + ',' +
                 std::to_string(static_cast<std::size_t>(ser.t[i])) + ',' + std::to_string(n_seeds) + ',' +
                 format_double(ser.mean[i]) + ',' + format_double(ser.stddev[i]) + '\n';
        }
    }
    return s;
}

// ---- SVG -----------------------------------------------------------------

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf, static_cast<std::size_t>(n));
}

} // namespace detail

// Line chart of mean regret with a +-1 std band per series.
inline std::string render_svg(const std::vector<SeriesStats>& series, const std::string& title = "regret halted at t") {
    if (series.empty()) throw InvalidInput("render_svg: no series");
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const double W = 800, H = 500, L = 70, R = 170, Tm = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            x0 = std::min(x0, s.t[i]);
            x1 = std::max(x1, s.t[i]);
            y0 = std::min(y0, s.mean[i] - s.stddev[i]);
            y1 = std::max(y1, s.mean[i] + s.stddev[i]);
        }
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pw = W - L - R, ph = H - Tm - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return Tm + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
    o << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    o << "<text x=\"" << detail::fmt("%.2f", L + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << Tm + ph << "\" x2=\"" << L + pw << "\" y2=\"" << Tm + ph
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << Tm + ph << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0;
        const double fy = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << detail::fmt("%.2f", px(fx)) << "\" y=\"" << Tm + ph + 18
          << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::fmt("%.4g", fx) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << detail::fmt("%.2f", py(fy) + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << detail::fmt("%.4g", fy) << "</text>\n";
    }
    o << "<text x=\"" << detail::fmt("%.2f", L + pw / 2) << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">t</text>\n";
    o << "<text x=\"18\" y=\"" << detail::fmt("%.2f", Tm + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << detail::fmt("%.2f", Tm + ph / 2) << ")\">regret</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = palette[si % (sizeof palette / sizeof palette[0])];
        if (s.t.size() == 1) {
            o << "<circle cx=\"" << detail::fmt("%.2f", px(s.t[0])) << "\" cy=\"" << detail::fmt("%.2f", py(s.mean[0]))
              << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        } else {
            o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.t.size(); ++i) {
                o << detail::fmt("%.2f", px(s.t[i])) << ',' << detail::fmt("%.2f", py(s.mean[i] + s.stddev[i])) << ' ';
            }
            for (std::size_t i = s.t.size(); i-- > 0;) {
                o << detail::fmt("%.2f", px(s.t[i])) << ',' << detail::fmt("%.2f", py(s.mean[i] - s.stddev[i])) << ' ';
            }
            o << "\"/>\n";
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.t.size(); ++i) {
                o << detail::fmt("%.2f", px(s.t[i])) << ',' << detail::fmt("%.2f", py(s.mean[i])) << ' ';
            }
            o << "\"/>\n";
        }
        const double ly = Tm + 10 + 20.0 * static_cast<double>(si);
        o << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 40 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << s.name << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

struct ExperimentOutput {
    std::vector<RunResult> runs;
    std::vector<SeriesStats> series;
    std::vector<std::filesystem::path> files;
};

// Runs the (algorithm x seed) matrix and writes one CSV per cell, an
// aggregate CSV and, if enabled, regret.svg into out_dir.
inline ExperimentOutput run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                       std::size_t threads = thread_budget()) {
    if (auto errs = validate(c); !errs.empty()) throw ConfigError(detail::join_errors(errs));
    const auto stream = generate(c.stream);
    if (stream.empty()) throw ConfigError("stream is empty");
    const auto opt = opt_series(stream, c.k, c.oracle, c.opt_every_step);

    ExperimentOutput out;
    const std::size_t cells = c.algorithms.size() * c.seeds.size();
    out.runs.resize(cells);
    parallel_for(cells, threads, [&](std::size_t i) {
        const auto& a = c.algorithms[i / c.seeds.size()];
        out.runs[i] = run_cell(c, a, c.seeds[i % c.seeds.size()], stream, opt);
    });

    std::filesystem::create_directories(out_dir);
    for (const auto& r : out.runs) {
        auto p = out_dir / (r.algo + "_seed" + std::to_string(r.seed) + ".csv");
        write_text(p, csv_rows(r));
        out.files.push_back(p);
    }
    out.series = aggregate(c, out.runs);
    auto agg = out_dir / "aggregate.csv";
    write_text(agg, aggregate_csv(out.series, c.seeds.size()));
    out.files.push_back(agg);
    if (c.svg) {
        auto svg = out_dir / "regret.svg";
        write_text(svg, render_svg(out.series));
        out.files.push_back(svg);
    }
    return out;
}

// ---- reduction and coreset validation configs ------------------------------

struct ReduceJob {
    std::vector<Point> points;
    std::size_t T = 1;
    std::size_t k = 2;
    AlgoSpec algorithm;
    OracleKind oracle;
    std::vector<std::uint64_t> seeds{0};
};

inline ReduceJob parse_reduce(const json& j) {
    std::vector<std::string> errs;
    detail::JsonReader r(j, "config", errs);
    ReduceJob job;
    if (!r.ok()) throw ConfigError(detail::join_errors(errs));
    r.mark("points");
    r.mark("stream");
    r.mark("algorithm");
    r.mark("oracle");
    r.get("T", job.T);
    r.get("k", job.k);
    r.get("seeds", job.seeds);
    if (r.has("points")) {
        std::vector<std::vector<double>> raw;
        try {
            raw = r.raw("points").get<std::vector<std::vector<double>>>();
        } catch (const json::exception&) {
            errs.push_back("config.points: expected an array of coordinate arrays");
        }
        for (auto& p : raw) job.points.emplace_back(std::move(p));
    } else if (r.has("stream")) {
        const auto spec = parse_stream(r.raw("stream"), errs);
        if (errs.empty()) job.points = generate(spec);
    } else {
        errs.push_back("config: needs 'points' or 'stream'");
    }
    if (r.has("algorithm")) job.algorithm = parse_algo(r.raw("algorithm"), errs, "algorithm");
    else errs.push_back("config: missing 'algorithm'");
    if (r.has("oracle")) job.oracle = parse_oracle(r.raw("oracle"), errs);
    r.finish();
    if (job.points.empty() && errs.empty()) errs.push_back("config: point set is empty");
    if (!job.points.empty()) {
        const std::size_t d = job.points.front().dim();
        for (std::size_t i = 0; i < job.points.size(); ++i) {
            if (job.points[i].dim() != d || !job.points[i].in_unit_box()) {
                errs.push_back("config.points[" + std::to_string(i) + "]: wrong dimension or outside [0,1]^d");
                break;
            }
        }
        if (job.oracle.kind == OracleKind::Kind::exact_1d_dp && d != 1) job.oracle = OracleKind::lloyd();
    }
    if (job.T < 1) errs.push_back("config: T must be >= 1");
    if (job.seeds.empty()) errs.push_back("config: seeds must be nonempty");
    if (!errs.empty()) throw ConfigError(detail::join_errors(errs));
    return job;
}

struct CoresetJob {
    StreamSpec stream;
    CoresetConfig coreset;
    std::vector<std::uint64_t> seeds{0};
    std::size_t center_sets = 20;
    std::uint64_t center_seed = 0;
};

inline CoresetJob parse_coreset_job(const json& j) {
    std::vector<std::string> errs;
    detail::JsonReader r(j, "config", errs);
    CoresetJob job;
    if (!r.ok()) throw ConfigError(detail::join_errors(errs));
    r.mark("stream");
    if (r.has("stream")) job.stream = parse_stream(r.raw("stream"), errs);
    else errs.push_back("config: missing 'stream'");
    job.coreset.k = job.stream.k;
    r.get("k", job.coreset.k);
    r.get("epsilon_c", job.coreset.epsilon_c);
    r.get("zeta", job.coreset.zeta);
    r.get("zeta_paper", job.coreset.zeta_paper);
    r.get("c_s", job.coreset.c_s);
    r.get("c_k", job.coreset.c_k);
    r.get("seeds", job.seeds);
    r.get("center_sets", job.center_sets);
    r.get("center_seed", job.center_seed);
    r.finish();
    job.coreset.d = job.stream.d;
    job.coreset.T = job.stream.T;
    if (!(job.coreset.epsilon_c > 0.0 && job.coreset.epsilon_c < 1.0)) errs.push_back("config: epsilon_c must lie in (0,1)");
    if (job.coreset.k < 1) errs.push_back("config: k must be >= 1");
    if (job.seeds.empty()) errs.push_back("config: seeds must be nonempty");
    if (!errs.empty()) throw ConfigError(detail::join_errors(errs));
    return job;
}

struct CoresetTrial {
    std::uint64_t seed = 0;
    std::size_t trial = 0;
    double full = 0.0;
    double coreset = 0.0;
    bool within = false;
};

// For each seed, builds the coreset over the stream and compares weighted
// coreset loss with full-data loss on random center sets.
inline std::vector<CoresetTrial> coreset_trials(const CoresetJob& job) {
    const auto stream = generate(job.stream);
    std::vector<CoresetTrial> out;
    Rng centers_rng(job.center_seed);
    std::vector<CenterSet> sets;
    for (std::size_t i = 0; i < job.center_sets; ++i) {
        std::vector<Point> c;
        for (std::size_t j = 0; j < job.coreset.k; ++j) {
            std::vector<double> v(job.stream.d);
            for (auto& x : v) x = centers_rng.uniform01();
            c.emplace_back(std::move(v));
        }
        sets.push_back(CenterSet{std::move(c)});
    }
    for (auto seed : job.seeds) {
        CoresetConfig cfg = job.coreset;
        cfg.seed = seed;
        cfg.T = stream.size();
        CoresetState st(cfg);
        for (std::size_t t = 1; t <= stream.size(); ++t) st.insert(stream[t - 1], t);
        const auto chi = st.extract();
        for (std::size_t i = 0; i < sets.size(); ++i) {
            CoresetTrial tr;
            tr.seed = seed;
            tr.trial = i;
            tr.full = total_loss(sets[i], stream);
            tr.coreset = weighted_loss(sets[i], chi);
            const double e = cfg.epsilon_c;
            tr.within = tr.coreset >= (1.0 - e) * tr.full && tr.coreset <= (1.0 + e) * tr.full;
            out.push_back(tr);
        }
    }
    return out;
}

} // namespace onlinekm
