#include "onlinekm/onlinekm.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

using namespace onlinekm;

namespace {

int cmd_run(const std::string& config, const std::string& out, bool every_step, int threads) {
    auto cfg = parse_experiment(read_json_file(config));
    if (every_step) cfg.opt_every_step = true;
    const auto res = run_experiment(cfg, out, threads > 0 ? static_cast<std::size_t>(threads) : thread_budget());
    for (const auto& r : res.runs) {
        const auto& last = r.records.back();
        std::printf("%s seed=%llu T=%zu cum_loss=%.6g opt=%.6g regret=%.6g\n", r.algo.c_str(),
                    static_cast<unsigned long long>(r.seed), last.t, last.cum_loss, last.opt, last.regret);
    }
    std::printf("wrote %zu files to %s\n", res.files.size(), out.c_str());
    return 0;
}

int cmd_gen_stream(const std::string& spec_path, const std::string& out) {
    std::vector<std::string> errs;
    const auto spec = parse_stream(read_json_file(spec_path), errs);
    if (!errs.empty()) throw ConfigError(detail::join_errors(errs));
    const auto pts = generate(spec);
    write_csv(pts, out);
    std::printf("wrote %zu points (d=%zu) to %s\n", pts.size(), spec.d, out.c_str());
    return 0;
}

int cmd_reduce(const std::string& config, const std::string& out) {
    const auto job = parse_reduce(read_json_file(config));
    const std::size_t d = job.points.front().dim();
    const double opt = solve(job.oracle, job.points, job.k).cost;
    std::string csv = "schema_version,seed,cost,opt,gap,best_step\n";
    std::size_t close = 0;
    for (auto seed : job.seeds) {
        ReductionConfig rc;
        rc.points = job.points;
        rc.T = job.T;
        rc.seed = seed;
        rc.make = [&](std::uint64_t s) { return make_algorithm(job.algorithm, job.k, d, job.T, job.oracle, s); };
        const auto r = offline_via_online(rc);
        if (r.cost <= opt + 0.05) ++close;
        csv += std::to_string(kSchemaVersion) + ',' + std::to_string(seed) + ',' + format_double(r.cost) + ',' +
               format_double(opt) + ',' + format_double(r.cost - opt) + ',' + std::to_string(r.best_step) + '\n';
    }
    if (out.empty()) std::cout << csv;
    else write_text(out, csv);
    std::printf("seeds within opt+0.05: %zu/%zu\n", close, job.seeds.size());
    return 0;
}

int cmd_validate_coreset(const std::string& config, const std::string& out) {
    const auto job = parse_coreset_job(read_json_file(config));
    const auto trials = coreset_trials(job);
    std::string csv = "schema_version,seed,trial,full_loss,coreset_loss,ratio,within\n";
    std::size_t ok = 0;
    for (const auto& t : trials) {
        ok += t.within ? 1 : 0;
        csv += std::to_string(kSchemaVersion) + ',' + std::to_string(t.seed) + ',' + std::to_string(t.trial) + ',' +
               format_double(t.full) + ',' + format_double(t.coreset) + ',' +
               format_double(t.full > 0.0 ? t.coreset / t.full : 1.0) + ',' + (t.within ? "1" : "0") + '\n';
    }
    if (out.empty()) std::cout << csv;
    else write_text(out, csv);
    std::printf("within (1 +- %.3g): %zu/%zu\n", job.coreset.epsilon_c, ok, trials.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"online k-means regret experiments"};
    app.require_subcommand(1);

    std::string config, out, spec;
    bool every_step = false;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run an experiment matrix");
    run->add_option("--config", config, "experiment JSON")->required();
    run->add_option("--out", out, "output directory")->required();
    run->add_flag("--opt-every-step", every_step, "exact oracle cost at every t");
    run->add_option("--threads", threads, "worker cap (overrides ONLINEKLUST_THREADS)");

    auto* gen = app.add_subcommand("gen-stream", "write a stream as CSV");
    gen->add_option("--spec", spec, "stream JSON")->required();
    gen->add_option("--out", out, "output CSV")->required();

    auto* reduce = app.add_subcommand("reduce", "offline k-means through an online algorithm");
    reduce->add_option("--config", config, "reduction JSON")->required();
    reduce->add_option("--out", out, "output CSV (default stdout)");

    auto* vc = app.add_subcommand("validate-coreset", "coreset cost-preservation trials");
    vc->add_option("--config", config, "coreset JSON")->required();
    vc->add_option("--out", out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config, out, every_step, threads);
        if (gen->parsed()) return cmd_gen_stream(spec, out);
        if (reduce->parsed()) return cmd_reduce(config, out);
        if (vc->parsed()) return cmd_validate_coreset(config, out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource guard: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
