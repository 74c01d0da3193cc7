#include "penlab/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "penlab/capacity.hpp"
#include "penlab/diagnostics.hpp"
#include "penlab/hash.hpp"
#include "penlab/noise.hpp"
#include "penlab/solver.hpp"
#include "penlab/validation.hpp"

namespace penlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers; the first exception is rethrown.
void worker_pool(int count, int threads, const std::function<void(int)>& fn)
{
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    const int n = std::clamp(threads, 1, std::max(count, 1));
    if (n == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n; ++w) {
            pool.emplace_back(body);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

// Collector: every artifact is rendered into memory first and written here.
class Collector {
public:
    Collector(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

    void write(const std::string& name, const std::string& body)
    {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << body;
        if (!out) {
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        }
        manifest_.files.push_back({name, fnv1a_hex(body), body.size()});
    }

private:
    fs::path dir_;
    RunManifest& manifest_;
};

std::string trajectory_csv(const TrajectoryRecord& rec)
{
    std::ostringstream os;
    const Grid& g = rec.grid();
    os << "step,t,node,x,y,u\n";
    for (std::size_t j = 0; j < rec.u.levels.size(); ++j) {
        const Field& f = rec.u.levels[j];
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Vec2 x = g.node_coord(i);
            os << j << ',' << fmt_exact(g.time(static_cast<int>(j))) << ',' << i << ',' << fmt_exact(x[0]) << ','
               << fmt_exact(g.dim() == 2 ? x[1] : 0.0) << ',' << fmt_exact(f[i]) << '\n';
        }
    }
    return os.str();
}

std::string ledger_csv(const TrajectoryRecord& rec)
{
    std::ostringstream os;
    os << "step,t,kinetic,dissipation,reaction,penalty,noise,ito,step_residual,cumulative,coercivity_bound,grad_pp,"
          "flux_dual,newton_iterations\n";
    const Grid& g = rec.grid();
    for (std::size_t j = 0; j < rec.ledger.size(); ++j) {
        const EnergyEntry& e = rec.ledger[j];
        os << j + 1 << ',' << fmt_exact(g.time(static_cast<int>(j) + 1)) << ',' << fmt_exact(e.kinetic) << ','
           << fmt_exact(e.dissipation) << ',' << fmt_exact(e.reaction) << ',' << fmt_exact(e.penalty) << ','
           << fmt_exact(e.noise) << ',' << fmt_exact(e.ito) << ',' << fmt_exact(e.step_residual) << ','
           << fmt_exact(e.cumulative) << ',' << fmt_exact(e.coercivity_bound) << ',' << fmt_exact(e.grad_pp) << ','
           << fmt_exact(e.flux_dual) << ',' << e.newton_iterations << '\n';
    }
    return os.str();
}

void norms_rows(std::ostream& os, const TrajectoryRecord& rec, bool with_n)
{
    const Grid& g = rec.grid();
    for (std::size_t j = 0; j < rec.norms.size(); ++j) {
        const LevelNorms& l = rec.norms[j];
        if (with_n) {
            os << fmt_exact(rec.n) << ',';
        }
        os << j << ',' << fmt_exact(g.time(static_cast<int>(j))) << ',' << fmt_exact(l.l2) << ',' << fmt_exact(l.grad_p)
           << ',' << fmt_exact(l.neg_l2) << ',' << fmt_exact(l.neg_p) << ',' << fmt_exact(l.neg_inf) << '\n';
    }
}

std::string norms_csv(const TrajectoryRecord& rec)
{
    std::ostringstream os;
    os << "step,t,l2,grad_p,neg_l2,neg_p,neg_inf\n";
    norms_rows(os, rec, false);
    return os.str();
}

std::string ensemble_csv(const EnsembleSummary& s)
{
    std::ostringstream os;
    os << "quantity,count,mean,variance,std_error\n";
    auto row = [&](const char* name, const RunningStat& r) {
        os << name << ',' << r.count << ',' << fmt_exact(r.mean()) << ',' << fmt_exact(r.variance()) << ','
           << fmt_exact(r.std_error()) << '\n';
    };
    row("sup_l2_sq", s.sup_l2_sq);
    row("grad_pp", s.grad_pp);
    row("flux_dual", s.flux_dual);
    row("penalty", s.penalty);
    row("neg_l2_sq", s.neg_l2_sq);
    return os.str();
}

ordered_json manifest_json(const RunManifest& m)
{
    ordered_json j;
    j["version"] = m.version;
    j["command"] = m.command;
    j["complete"] = m.complete;
    if (!m.error.empty()) {
        j["error"] = m.error;
    }
    j["config_fingerprint"] = m.config_fingerprint;
    j["config_source"] = m.config_source;
    j["config"] = m.config_canonical;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["runs"] = ordered_json::array();
    for (const auto& r : m.runs) {
        j["runs"].push_back({{"label", r.label}, {"seed", r.seed}, {"fingerprint", r.fingerprint}, {"wall_time", r.wall_time}});
    }
    j["files"] = ordered_json::array();
    for (const auto& f : m.files) {
        j["files"].push_back({{"name", f.name}, {"fnv1a64", f.hash}, {"bytes", f.bytes}});
    }
    return j;
}

TrajectoryRecord timed_solve(const SolverConfig& sc, const NoisePath& path, RunRecord& rr)
{
    const auto t0 = std::chrono::steady_clock::now();
    TrajectoryRecord rec = solve_trajectory(sc, path);
    rr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rr.seed = path.seed();
    rr.fingerprint = rec.fingerprint;
    return rec;
}

int do_single(const ExperimentConfig& cfg, RunManifest& m, Collector& out, std::ostream& log)
{
    RunRecord rr{"single", 0, "", 0.0};
    const TrajectoryRecord rec = timed_solve(cfg.solver_config(cfg.n), NoisePath(cfg.seed, cfg.nt, cfg.modes), rr);
    m.runs.push_back(rr);
    out.write("trajectory.csv", trajectory_csv(rec));
    out.write("ledger.csv", ledger_csv(rec));
    out.write("norms.csv", norms_csv(rec));
    log << "single: n=" << cfg.n << " seed=" << cfg.seed << " energy residual " << energy_residual(rec) << "\n";
    return kExitOk;
}

int do_sweep(const ExperimentConfig& cfg, int threads, RunManifest& m, Collector& out, std::ostream& log)
{
    const NoisePath path(cfg.seed, cfg.nt, cfg.modes);
    const int count = static_cast<int>(cfg.sweep.size());
    std::vector<std::optional<TrajectoryRecord>> recs(static_cast<std::size_t>(count));
    std::vector<RunRecord> rrs(static_cast<std::size_t>(count));
    worker_pool(count, threads, [&](int k) {
        const double n = cfg.sweep[static_cast<std::size_t>(k)];
        rrs[static_cast<std::size_t>(k)].label = "sweep n=" + fmt_exact(n);
        recs[static_cast<std::size_t>(k)] = timed_solve(cfg.solver_config(n), path, rrs[static_cast<std::size_t>(k)]);
    });
    std::vector<const TrajectoryRecord*> ptrs;
    for (int k = 0; k < count; ++k) {
        m.runs.push_back(rrs[static_cast<std::size_t>(k)]);
        ptrs.push_back(&*recs[static_cast<std::size_t>(k)]);
    }
    const SweepReport report = sweep_report(ptrs);
    std::ostringstream rep;
    write_sweep_csv(rep, report);
    out.write("sweep_report.csv", rep.str());
    std::ostringstream norms;
    norms << "n,step,t,l2,grad_p,neg_l2,neg_p,neg_inf\n";
    for (const auto* r : ptrs) {
        norms_rows(norms, *r, true);
    }
    out.write("sweep_norms.csv", norms.str());
    log << "sweep: " << report.rows.size() << " rows";
    if (report.slope) {
        log << ", slope " << *report.slope;
    }
    log << "\n";
    return kExitOk;
}

int do_ensemble(const ExperimentConfig& cfg, int threads, RunManifest& m, Collector& out, std::ostream& log)
{
    const SolverConfig sc = cfg.solver_config(cfg.n);
    const int paths = cfg.num_paths;
    std::vector<std::optional<PathStatistics>> stats(static_cast<std::size_t>(paths));
    std::vector<std::string> errors(static_cast<std::size_t>(paths));
    std::vector<RunRecord> rrs(static_cast<std::size_t>(paths));
    worker_pool(paths, threads, [&](int k) {
        auto& rr = rrs[static_cast<std::size_t>(k)];
        rr.label = "path " + std::to_string(k);
        rr.seed = path_seed(cfg.base_seed, k);
        try {
            stats[static_cast<std::size_t>(k)] = path_statistics(timed_solve(sc, NoisePath(rr.seed, cfg.nt, cfg.modes), rr));
        } catch (const StepError& ex) {
            errors[static_cast<std::size_t>(k)] = ex.what();
        }
    });
    EnsembleSummary summary;
    summary.requested = paths;
    for (int k = 0; k < paths; ++k) {
        m.runs.push_back(rrs[static_cast<std::size_t>(k)]);
        if (stats[static_cast<std::size_t>(k)]) {
            summary.add(*stats[static_cast<std::size_t>(k)]);
        } else {
            summary.failures.emplace_back(k, errors[static_cast<std::size_t>(k)]);
        }
    }
    out.write("ensemble_summary.csv", ensemble_csv(summary));
    std::ostringstream fail;
    fail << "path,seed,error\n";
    for (const auto& [k, msg] : summary.failures) {
        fail << k << ',' << path_seed(cfg.base_seed, k) << ",\"" << msg << "\"\n";
    }
    out.write("ensemble_failures.csv", fail.str());
    log << "ensemble: " << summary.sup_l2_sq.count << "/" << paths << " paths, E sup|u|^2 = " << summary.sup_l2_sq.mean()
        << "\n";
    return summary.failures.empty() ? kExitOk : kExitRuntime;
}

int do_capacity(const ExperimentConfig& cfg, RunManifest& m, Collector& out, std::ostream& log)
{
    const CapacityProblem prob = cfg.capacity_problem();
    const auto t0 = std::chrono::steady_clock::now();
    const CapacityResult res = estimate_capacity(prob);
    const SandwichReport s = capacity_sandwich(prob);
    m.runs.push_back({"capacity", 0, cfg.fingerprint(),
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    ordered_json j;
    j["grid"] = prob.grid.describe();
    j["cells"] = cfg.cap_cells;
    j["cell_count"] = prob.set.count();
    j["value"] = res.value;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["gradient_part"] = res.parts.A;
    j["time_derivative_part"] = res.parts.B;
    j["lebesgue_lower_bound"] = std::sqrt(prob.set.lebesgue_measure());
    j["lebesgue_check"] = lebesgue_lower_bound_check(prob, res.value);
    j["sandwich"] = {{"base", s.base},
                     {"extended", s.extended},
                     {"reflected_candidate", s.reflected_candidate},
                     {"ratio", s.ratio},
                     {"within_5pct", s.within(0.05)}};
    out.write("capacity.json", j.dump(2) + "\n");
    log << "capacity: " << res.value << " (" << res.iterations << " iterations), extended/base " << s.ratio << "\n";
    return kExitOk;
}

int do_validate(const ExperimentConfig& cfg, int threads, RunManifest& m, Collector& out, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<CheckResult> results = validation_suite(cfg, threads);
    m.runs.push_back({"validate", cfg.seed, cfg.fingerprint(),
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    std::ostringstream os;
    write_report_csv(os, results);
    out.write("validate_report.csv", os.str());
    int failed = 0;
    for (const auto& r : results) {
        log << format_result_line(r) << "\n";
        failed += r.passed ? 0 : 1;
    }
    log << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitValidation;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name)
{
    if (name == "single") return Command::Single;
    if (name == "sweep") return Command::Sweep;
    if (name == "ensemble") return Command::Ensemble;
    if (name == "capacity") return Command::Capacity;
    if (name == "validate") return Command::Validate;
    return std::nullopt;
}

std::string command_name(Command c)
{
    switch (c) {
    case Command::Single: return "single";
    case Command::Sweep: return "sweep";
    case Command::Ensemble: return "ensemble";
    case Command::Capacity: return "capacity";
    case Command::Validate: return "validate";
    }
    return "?";
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts)
{
    if (opts.seed_override) {
        cfg.seed = *opts.seed_override;
        cfg.base_seed = *opts.seed_override;
    }
    if (!opts.out_dir.empty()) {
        cfg.out_dir = opts.out_dir;
    }
    return cfg;
}

int run(const ExperimentConfig& base, const RunOptions& opts, std::ostream& log)
{
    const ExperimentConfig cfg = apply_overrides(base, opts);
    if (auto probs = cfg.problems(); !probs.empty()) {
        log << ConfigError(probs).what() << "\n";
        return kExitConfig;
    }

    RunManifest m;
    m.command = command_name(opts.command);
    m.config_fingerprint = cfg.fingerprint();
    m.config_canonical = cfg.canonical();
    m.config_source = opts.config_source;
    m.started = utc_now();

    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        log << "cannot create output directory " << dir << ": " << ec.message() << "\n";
        return kExitRuntime;
    }
    Collector out(dir, m);
    const int threads = std::max(1, opts.threads);

    int code = kExitRuntime;
    try {
        switch (opts.command) {
        case Command::Single: code = do_single(cfg, m, out, log); break;
        case Command::Sweep: code = do_sweep(cfg, threads, m, out, log); break;
        case Command::Ensemble: code = do_ensemble(cfg, threads, m, out, log); break;
        case Command::Capacity: code = do_capacity(cfg, m, out, log); break;
        case Command::Validate: code = do_validate(cfg, threads, m, out, log); break;
        }
        m.complete = code != kExitRuntime;
    } catch (const StepError& ex) {
        m.error = std::string(ex.what()) + " (step " + std::to_string(ex.step_index()) + ")";
    } catch (const std::exception& ex) {
        m.error = ex.what();
    }
    if (!m.error.empty()) {
        log << m.command << " failed: " << m.error << "\n";
        code = kExitRuntime;
    }
    m.finished = utc_now();
    std::ofstream(dir / "manifest.json") << manifest_json(m).dump(2) << "\n";
    return code;
}

}  // namespace penlab
