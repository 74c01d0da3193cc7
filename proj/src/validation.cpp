#include "penlab/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "penlab/capacity.hpp"
#include "penlab/diagnostics.hpp"
#include "penlab/hash.hpp"
#include "penlab/models.hpp"
#include "penlab/noise.hpp"
#include "penlab/solver.hpp"

namespace penlab {

namespace {

const std::vector<double> kSweep{1.0, 10.0, 100.0, 1000.0, 10000.0};

void parallel_for(int count, int threads, const std::function<void(int)>& fn)
{
    const int nthreads = std::clamp(threads, 1, std::max(count, 1));
    if (nthreads == 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += nthreads) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

CheckResult make(std::string id, std::string name, bool passed, double measured, double threshold, std::string detail)
{
    CheckResult r;
    r.id = std::move(id);
    r.name = std::move(name);
    r.passed = passed;
    r.measured = measured;
    r.threshold = threshold;
    r.detail = std::move(detail);
    return r;
}

CheckResult guarded(const std::string& id, const std::string& name, const std::function<CheckResult()>& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = fn();
    } catch (const std::exception& ex) {
        r = make(id, name, false, std::nan(""), std::nan(""), std::string("error: ") + ex.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

NoisePath path_for(const ExperimentConfig& cfg, int index, int nt)
{
    return NoisePath(path_seed(cfg.base_seed, index), nt, cfg.modes);
}

/// max_{j,i} (a - b)
double max_excess(const TrajectoryRecord& a, const TrajectoryRecord& b)
{
    double worst = -1e300;
    for (std::size_t j = 0; j < a.u.levels.size(); ++j) {
        for (std::size_t i = 0; i < a.u.levels[j].size(); ++i) {
            worst = std::max(worst, a.u.levels[j][i] - b.u.levels[j][i]);
        }
    }
    return worst;
}

struct SweepStats {
    std::vector<double> functional;  // path mean of penalty_functional
    std::vector<double> neg_rms;     // sqrt of path mean of ||u^-||^2_{L2(Q_T)}
};

SweepStats penalty_sweep(const ExperimentConfig& cfg, const std::vector<double>& ns, int threads)
{
    const int paths = cfg.num_paths;
    const int K = static_cast<int>(ns.size());
    std::vector<double> fun(static_cast<std::size_t>(paths * K));
    std::vector<double> neg(static_cast<std::size_t>(paths * K));
    parallel_for(paths * K, threads, [&](int idx) {
        const int s = idx / K;
        const int k = idx % K;
        const SolverConfig sc = cfg.solver_config(ns[static_cast<std::size_t>(k)]);
        const TrajectoryRecord rec = solve_trajectory(sc, path_for(cfg, s, cfg.nt));
        fun[static_cast<std::size_t>(idx)] = penalty_functional(rec);
        const double v = neg_l2_spacetime(rec);
        neg[static_cast<std::size_t>(idx)] = v * v;
    });
    SweepStats st;
    for (int k = 0; k < K; ++k) {
        double f = 0.0;
        double q = 0.0;
        for (int s = 0; s < paths; ++s) {
            f += fun[static_cast<std::size_t>(s * K + k)];
            q += neg[static_cast<std::size_t>(s * K + k)];
        }
        st.functional.push_back(f / paths);
        st.neg_rms.push_back(std::sqrt(q / paths));
    }
    return st;
}

CheckResult penalty_bound_check(const std::string& id, const std::string& name, const ExperimentConfig& cfg,
                                int threads)
{
    const SweepStats st = penalty_sweep(cfg, kSweep, threads);
    double hi = 0.0;
    double lo = 1e300;
    for (std::size_t k = 0; k < kSweep.size(); ++k) {
        if (kSweep[k] >= 100.0) {
            hi = std::max(hi, st.functional[k]);
            lo = std::min(lo, st.functional[k]);
        }
    }
    const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    const auto slope = loglog_slope(kSweep, st.neg_rms);
    const bool slope_ok = slope && *slope <= -0.4;
    std::ostringstream os;
    os << "paths=" << cfg.num_paths << " p=" << cfg.p << " penalty=" << penalty_kind_name(cfg.penalty) << " functional=[";
    for (std::size_t k = 0; k < kSweep.size(); ++k) {
        os << (k ? " " : "") << num(st.functional[k]);
    }
    os << "] tail_ratio=" << num(ratio) << " slope=" << (slope ? num(*slope) : std::string("absent")) << " (<= -0.4)";
    return make(id, name, ratio < 10.0 && slope_ok, ratio, 10.0, os.str());
}

std::vector<CheckResult> run_all(const std::vector<std::function<CheckResult()>>& fns)
{
    std::vector<CheckResult> out;
    for (const auto& f : fns) {
        out.push_back(f());
    }
    return out;
}

}  // namespace

// Acceptance ------------------------------------------------------------------

CheckResult accept_comparison(const ExperimentConfig& cfg, int threads)
{
    return guarded("A1", "comparison principle", [&] {
        const SolverConfig g_cfg = cfg.solver_config(cfg.n);
        SolverConfig f_cfg = g_cfg;
        f_cfg.reaction.positive_part += 0.5;
        f_cfg.u0 *= 0.8;
        constexpr int pairs = 20;
        std::vector<double> worst(pairs);
        parallel_for(pairs, threads, [&](int s) {
            const NoisePath path = path_for(cfg, s, cfg.nt);
            worst[static_cast<std::size_t>(s)] = max_excess(solve_trajectory(f_cfg, path), solve_trajectory(g_cfg, path));
        });
        const double m = *std::max_element(worst.begin(), worst.end());
        const double thr = 10.0 * cfg.newton_tol;
        return make("A1", "comparison principle", m <= thr, m, thr,
                    "20 seed pairs, f = g + 0.5 id+, u0 = 0.8 v0; max_{t,x}(u - v)");
    });
}

CheckResult accept_monotonicity(const ExperimentConfig& cfg, int threads)
{
    return guarded("A2", "monotonicity in n", [&] {
        const std::vector<double> ns{1.0, 10.0, 100.0, 1000.0};
        const int paths = cfg.num_paths;
        std::vector<double> worst(static_cast<std::size_t>(paths));
        parallel_for(paths, threads, [&](int s) {
            const NoisePath path = path_for(cfg, s, cfg.nt);
            std::vector<TrajectoryRecord> recs;
            for (double n : ns) {
                recs.push_back(solve_trajectory(cfg.solver_config(n), path));
            }
            double w = -1e300;
            for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
                w = std::max(w, max_excess(recs[k], recs[k + 1]));
            }
            worst[static_cast<std::size_t>(s)] = w;
        });
        const double m = *std::max_element(worst.begin(), worst.end());
        const double thr = 10.0 * cfg.newton_tol;
        return make("A2", "monotonicity in n", m <= thr, m, thr,
                    std::to_string(paths) + " paths, n in {1,10,100,1000}; max_{t,x}(u_n - u_m), n < m");
    });
}

CheckResult accept_penalty_bound(const ExperimentConfig& cfg, int threads)
{
    return guarded("A3", "penalty bound n|u-|^2", [&] {
        ExperimentConfig c = cfg;
        c.penalty = PenaltyKind::Linear;
        return penalty_bound_check("A3", "penalty bound n|u-|^2", c, threads);
    });
}

CheckResult accept_power_penalty(const ExperimentConfig& cfg, int threads)
{
    return guarded("A4", "power penalty bound n|u-|_p^p", [&] {
        ExperimentConfig c = cfg;
        c.dim = 1;
        c.p = 1.5;
        c.penalty = PenaltyKind::Power;
        c.penalty_exponent = 0.0;
        return penalty_bound_check("A4", "power penalty bound n|u-|_p^p", c, threads);
    });
}

CheckResult accept_energy_identity(const ExperimentConfig& cfg, int threads)
{
    return guarded("A5", "energy identity", [&] {
        const std::vector<int> factors{8, 4, 2, 1};
        const int fine_nt = cfg.nt * 8;
        const int paths = cfg.num_paths;
        const int F = static_cast<int>(factors.size());
        std::vector<double> res(static_cast<std::size_t>(paths * F));
        std::vector<double> diss(static_cast<std::size_t>(paths));
        parallel_for(paths * F, threads, [&](int idx) {
            const int s = idx / F;
            const int k = idx % F;
            const int f = factors[static_cast<std::size_t>(k)];
            ExperimentConfig c = cfg;
            c.nt = fine_nt / f;
            const NoisePath fine = path_for(cfg, s, fine_nt);
            const TrajectoryRecord rec = solve_trajectory(c.solver_config(cfg.n), f == 1 ? fine : fine.coarsened(f));
            res[static_cast<std::size_t>(idx)] = energy_residual(rec);
            if (f == 1) {
                double d = 0.0;
                for (const auto& e : rec.ledger) {
                    d += e.dissipation;
                }
                diss[static_cast<std::size_t>(s)] = d;
            }
        });
        std::vector<double> rms(static_cast<std::size_t>(F), 0.0);
        for (int k = 0; k < F; ++k) {
            for (int s = 0; s < paths; ++s) {
                const double r = res[static_cast<std::size_t>(s * F + k)];
                rms[static_cast<std::size_t>(k)] += r * r;
            }
            rms[static_cast<std::size_t>(k)] = std::sqrt(rms[static_cast<std::size_t>(k)] / paths);
        }
        double dmean = 0.0;
        for (double d : diss) {
            dmean += d;
        }
        dmean /= paths;
        bool monotone = true;
        for (int k = 0; k + 1 < F; ++k) {
            monotone = monotone && rms[static_cast<std::size_t>(k) + 1] < rms[static_cast<std::size_t>(k)];
        }
        const double rel = rms.back() / dmean;
        std::ostringstream os;
        os << "rms residual over " << paths << " paths at nt=";
        for (int k = 0; k < F; ++k) {
            os << fine_nt / factors[static_cast<std::size_t>(k)] << ":" << num(rms[static_cast<std::size_t>(k)]) << " ";
        }
        os << "monotone=" << (monotone ? "yes" : "no") << " dissipation=" << num(dmean);
        return make("A5", "energy identity", monotone && rel < 0.01, rel, 0.01, os.str());
    });
}

CheckResult accept_measure(const ExperimentConfig& cfg, int threads)
{
    return guarded("A6", "measure diagnostics", [&] {
        const int paths = cfg.num_paths;
        const int K = static_cast<int>(kSweep.size());
        const Grid g = cfg.grid();
        const double T = g.T();
        const Vec2 L = g.extent();
        const int d = g.dim();
        auto s_of = [&](const Vec2& x, int k) { return x[static_cast<std::size_t>(k)] / L[static_cast<std::size_t>(k)]; };
        auto prod = [&](const std::function<double(double)>& f, const Vec2& x) {
            return d == 2 ? f(s_of(x, 0)) * f(s_of(x, 1)) : f(s_of(x, 0));
        };
        const std::vector<SpaceTimeTest> tests{
            [](double, const Vec2&) { return 1.0; },
            [&](double t, const Vec2&) { return std::exp(-t / T); },
            [&](double, const Vec2& x) { return prod([](double s) { return 0.5 + 0.5 * std::cos(std::numbers::pi * s); }, x); },
            [&](double t, const Vec2& x) {
                return 1.0 + 0.5 * std::cos(std::numbers::pi * t / T) *
                                 prod([](double s) { return std::sin(2.0 * std::numbers::pi * s); }, x);
            },
            [&](double t, const Vec2& x) {
                return (1.0 + t / T) * prod([](double s) { return std::exp(-(s - 0.5) * (s - 0.5) / 0.1); }, x);
            },
        };
        const int P = static_cast<int>(tests.size()) + 2;  // mass, phi mass, tests
        std::vector<double> vals(static_cast<std::size_t>(paths * K * P));
        const WeightField phi = WeightField::distance_weight(g);
        parallel_for(paths * K, threads, [&](int idx) {
            const int s = idx / K;
            const int k = idx % K;
            const TrajectoryRecord rec =
                solve_trajectory(cfg.solver_config(kSweep[static_cast<std::size_t>(k)]), path_for(cfg, s, cfg.nt));
            const MeasureGrid m = eta_density(rec);
            double* out = &vals[static_cast<std::size_t>(idx * P)];
            out[0] = m.mass();
            out[1] = weighted_mass(m, phi);
            for (std::size_t q = 0; q < tests.size(); ++q) {
                out[q + 2] = pair_with(m, tests[q]);
            }
        });
        auto mean = [&](int k, int q) {
            double acc = 0.0;
            for (int s = 0; s < paths; ++s) {
                acc += vals[static_cast<std::size_t>((s * K + k) * P + q)];
            }
            return acc / paths;
        };
        std::vector<double> phi_mass;
        for (int k = 0; k < K; ++k) {
            phi_mass.push_back(mean(k, 1));
        }
        std::vector<double> sorted = phi_mass;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        const double mx = sorted.back();
        const bool bounded = mx <= 10.0 * median;
        const int k3 = 3;
        const int k4 = 4;
        const double mass4 = mean(k4, 0);
        double worst = 0.0;
        for (int q = 1; q < P; ++q) {
            const double diff = std::abs(mean(k4, q) - mean(k3, q));
            worst = std::max(worst, (diff - 1e-8) / std::max(mass4, 1e-300));
        }
        const bool stable = worst <= 0.2;
        std::ostringstream os;
        os << "paths=" << paths << " phi_mass=[";
        for (int k = 0; k < K; ++k) {
            os << (k ? " " : "") << num(phi_mass[static_cast<std::size_t>(k)]);
        }
        os << "] max/median=" << num(mx / median) << " (<= 10); mass(1e3)=" << num(mean(k3, 0)) << " mass(1e4)=" << num(mass4)
           << " worst pairing change/mass(1e4)=" << num(worst) << " (<= 0.2)";
        return make("A6", "measure diagnostics", bounded && stable, worst, 0.2, os.str());
    });
}

CheckResult accept_complementarity(const ExperimentConfig& cfg, int threads)
{
    return guarded("A7", "complementarity", [&] {
        const int paths = cfg.num_paths;
        constexpr double K = 1.0;
        std::vector<double> rel(static_cast<std::size_t>(paths));
        std::vector<double> disjoint(static_cast<std::size_t>(paths));
        std::vector<char> ok(static_cast<std::size_t>(paths));
        parallel_for(paths, threads, [&](int s) {
            const NoisePath path = path_for(cfg, s, cfg.nt);
            const TrajectoryRecord rm = solve_trajectory(cfg.solver_config(10.0), path);
            const TrajectoryRecord rn = solve_trajectory(cfg.solver_config(10000.0), path);
            const MeasureGrid eta = eta_density(rn);
            const double mass = eta.mass();
            const double comp = complementarity(rm, eta, K);
            double sup = 0.0;
            for (const auto& lvl : rm.u.levels) {
                sup = std::max(sup, norm(lvl, NormKind::Linf));
            }
            const double dis = disjoint_support_max(rm, rn);
            rel[static_cast<std::size_t>(s)] = mass > 0.0 ? comp / (mass * K) : comp;
            disjoint[static_cast<std::size_t>(s)] = sup > 0.0 ? dis / sup : dis;
            ok[static_cast<std::size_t>(s)] = comp <= 1e-3 * mass * K && dis <= 10.0 * cfg.newton_tol * sup;
        });
        const double worst = *std::max_element(rel.begin(), rel.end());
        const double worst_dis = *std::max_element(disjoint.begin(), disjoint.end());
        const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
        return make("A7", "complementarity", all_ok, worst, 1e-3,
                    std::to_string(paths) + " paths, m=10, n=1e4, K=1; max (u_m)+(u_n)-/|u_m|_inf=" + num(worst_dis) +
                        " (<= 10 newton_tol)");
    });
}

CheckResult accept_heat_regression(const ExperimentConfig& cfg, int /*threads*/)
{
    return guarded("A8", "heat regression", [&] {
        ExperimentConfig c = cfg;
        c.dim = 1;
        c.extent = 1.0;
        c.nx = 128;
        c.p = 2.0;
        c.convection = 0.0;
        c.reaction = "zero";
        c.amp = 0.0;
        c.profile = "sine-bump";
        c.profile_scale = 1.0;
        const double h = 1.0 / 129.0;
        c.nt = 1664;
        c.T = c.nt * h * h;
        const SolverConfig sc = c.solver_config(0.0);
        const TrajectoryRecord rec = solve_trajectory(sc, NoisePath(c.seed, c.nt, c.modes));
        const Grid& g = rec.grid();
        const double pi = std::numbers::pi;
        double worst = 0.0;
        for (int j = 1; j <= g.nt(); ++j) {
            const double t = g.time(j);
            const Field exact = Field::from_function(g, [&](const Vec2& x) { return std::exp(-pi * pi * t) * std::sin(pi * x[0]); });
            Field diff = rec.u.levels[static_cast<std::size_t>(j)];
            diff -= exact;
            worst = std::max(worst, norm(diff, NormKind::L2) / norm(exact, NormKind::L2));
        }
        return make("A8", "heat regression", worst < 0.01, worst, 0.01,
                    "nx=128, dt=h^2, nt=1664, T=" + num(c.T) + "; max relative L2 error over all levels");
    });
}

CheckResult accept_noise_sampler(const ExperimentConfig& cfg, int /*threads*/)
{
    return guarded("A9", "noise sampler", [&] {
        const Grid g = Grid::build(1, 1.0, 63, 1.0, 1);
        NoiseSpec spec;
        spec.modes = 8;
        spec.decay = 2.0;
        spec.amp = cfg.amp;
        const QWienerNoise noise(spec, g);
        constexpr int draws = 10000;
        constexpr double dt = 0.01;
        const std::size_t node = 31;  // x = 0.5
        const NoisePath path(cfg.seed, draws, spec.modes);
        double s1 = 0.0;
        double s2 = 0.0;
        for (int j = 0; j < draws; ++j) {
            const double v = sample_increment(noise, path, j, dt)[node];
            s1 += v;
            s2 += v * v;
        }
        const double mean = s1 / draws;
        const double var = (s2 - draws * mean * mean) / (draws - 1);
        const double expected = noise.variance_rate(node) * dt;
        const double se = expected * std::sqrt(2.0 / (draws - 1));
        const double z = std::abs(var - expected) / se;
        const NoisePath replay(cfg.seed, draws, spec.modes);
        bool identical = replay == path;
        for (int j = 0; j < draws && identical; j += 97) {
            const Field a = sample_increment(noise, path, j, dt);
            const Field b = sample_increment(noise, replay, j, dt);
            identical = std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
        }
        return make("A9", "noise sampler", z <= 3.0 && identical, z, 3.0,
                    "K=8, gamma=2, dt=0.01, 1e4 draws at x=0.5: var=" + num(var) + " expected=" + num(expected) +
                        " replay=" + (identical ? "bitwise" : "MISMATCH"));
    });
}

CheckResult accept_capacity(const ExperimentConfig& cfg, int threads)
{
    return guarded("A10", "capacity lab", [&] {
        const Grid g = Grid::build(1, 1.0, 7, 1.0, 8);
        std::ostringstream os;
        bool ok = true;

        const CapacityResult empty = estimate_capacity(CapacityProblem(g, CellSet(g)));
        ok = ok && empty.value == 0.0;
        os << "empty=" << num(empty.value);

        std::mt19937_64 rng(cfg.seed);
        std::bernoulli_distribution coin(0.12);
        auto random_set = [&](const CellSet& base) {
            CellSet s = base;
            for (int j = 0; j < g.nt(); ++j) {
                for (std::size_t i = 0; i < g.num_nodes(); ++i) {
                    if (coin(rng)) {
                        s.insert(j, i);
                    }
                }
            }
            if (s.empty()) {
                s.insert(0, 0);
            }
            return s;
        };
        std::vector<std::pair<CellSet, CellSet>> nested;
        for (int k = 0; k < 10; ++k) {
            CellSet small = random_set(CellSet(g));
            CellSet big = random_set(small);
            nested.emplace_back(std::move(small), std::move(big));
        }
        std::vector<double> est_small(nested.size());
        std::vector<double> est_big(nested.size());
        std::vector<char> lower_ok(nested.size());
        parallel_for(static_cast<int>(nested.size()), threads, [&](int k) {
            const CapacityProblem ps(g, nested[static_cast<std::size_t>(k)].first);
            const CapacityProblem pb(g, nested[static_cast<std::size_t>(k)].second);
            est_small[static_cast<std::size_t>(k)] = estimate_capacity(ps).value;
            est_big[static_cast<std::size_t>(k)] = estimate_capacity(pb).value;
            lower_ok[static_cast<std::size_t>(k)] = lebesgue_lower_bound_check(ps, est_small[static_cast<std::size_t>(k)]) &&
                                                    lebesgue_lower_bound_check(pb, est_big[static_cast<std::size_t>(k)]);
        });
        int mono_fail = 0;
        for (std::size_t k = 0; k < nested.size(); ++k) {
            if (est_small[k] > est_big[k] + 1e-4 * std::max(1.0, est_big[k])) {
                ++mono_fail;
            }
            if (!lower_ok[k]) {
                ok = false;
            }
        }
        ok = ok && mono_fail == 0;
        os << " nested_violations=" << mono_fail;

        std::vector<CellSet> sandwich_sets;
        sandwich_sets.push_back(CellSet::parse(g, "3:3,3:3"));
        sandwich_sets.push_back(CellSet::parse(g, "0:7,3:3"));
        sandwich_sets.push_back(CellSet::parse(g, "2:5,1:5"));
        sandwich_sets.push_back(nested[0].first);
        sandwich_sets.push_back(nested[1].second);
        std::vector<SandwichReport> reps(sandwich_sets.size());
        parallel_for(static_cast<int>(sandwich_sets.size()), threads, [&](int k) {
            reps[static_cast<std::size_t>(k)] = capacity_sandwich(CapacityProblem(g, sandwich_sets[static_cast<std::size_t>(k)]));
        });
        os << " sandwich_ratios=[";
        for (std::size_t k = 0; k < reps.size(); ++k) {
            ok = ok && reps[k].within(0.05);
            ok = ok && lebesgue_lower_bound_check(CapacityProblem(g, sandwich_sets[k]), reps[k].base);
            os << (k ? " " : "") << num(reps[k].ratio);
        }
        const double golden_err = std::abs(reps[0].base - kCentralCellCapacity) / kCentralCellCapacity;
        ok = ok && golden_err < 0.01;
        os << "] central=" << num(reps[0].base) << " golden=" << num(kCentralCellCapacity)
           << " lower_bound=" << num(std::sqrt(sandwich_sets[0].lebesgue_measure()));
        return make("A10", "capacity lab", ok, golden_err, 0.01, os.str());
    });
}

CheckResult accept_auditor(const ExperimentConfig& cfg, int /*threads*/)
{
    return guarded("A11", "assumption auditor", [&] {
        constexpr int samples = 10000;
        const FluxModel builtin = cfg.flux_model();
        const AuditReport a = audit_assumptions(builtin, samples, cfg.seed);
        const AuditReport a0 = audit_assumptions(builtin.with_eps(0.0), samples, cfg.seed + 1);

        const Grid g = cfg.grid();
        const FluxModel plain(g.dim(), cfg.p, cfg.eps_reg);
        const Field psi = Field::from_function(g, [&](const Vec2& x) {
            double v = 0.3 * std::sin(2.0 * std::numbers::pi * x[0] / g.extent()[0]);
            if (g.dim() == 2) {
                v *= std::sin(std::numbers::pi * x[1] / g.extent()[1]);
            }
            return v;
        });
        const AuditReport shifted = audit_assumptions(obstacle_shift(plain, psi), samples, cfg.seed + 2);

        AuditBox box;
        box.dim = g.dim();
        box.p = cfg.p;
        const FluxFunction adversarial = [](const Vec2&, double, const Vec2& xi) { return Vec2{-xi[0], -xi[1]}; };
        const AuditReport bad = audit_assumptions(adversarial, builtin.structural_constants(), box, samples, cfg.seed + 3);

        const int clean = a.total_violations() + a0.total_violations() + shifted.total_violations();
        const bool ok = clean == 0 && bad.monotonicity_violations > 0;
        return make("A11", "assumption auditor", ok, clean, 0.0,
                    "builtin: " + std::to_string(a.total_violations()) + ", builtin eps=0: " +
                        std::to_string(a0.total_violations()) + ", shifted: " + std::to_string(shifted.total_violations()) +
                        ", adversarial monotonicity violations: " + std::to_string(bad.monotonicity_violations));
    });
}

std::vector<CheckResult> acceptance_suite(const ExperimentConfig& cfg, int threads)
{
    return run_all({
        [&] { return accept_comparison(cfg, threads); },
        [&] { return accept_monotonicity(cfg, threads); },
        [&] { return accept_penalty_bound(cfg, threads); },
        [&] { return accept_power_penalty(cfg, threads); },
        [&] { return accept_energy_identity(cfg, threads); },
        [&] { return accept_measure(cfg, threads); },
        [&] { return accept_complementarity(cfg, threads); },
        [&] { return accept_heat_regression(cfg, threads); },
        [&] { return accept_noise_sampler(cfg, threads); },
        [&] { return accept_capacity(cfg, threads); },
        [&] { return accept_auditor(cfg, threads); },
    });
}

// Invariants ------------------------------------------------------------------

namespace {

Field random_field(const Grid& g, std::mt19937_64& rng, int components = 1, Location loc = Location::Node)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g, loc, components);
    for (double& v : f.values()) {
        v = u(rng);
    }
    return f;
}

CheckResult inv_ibp(std::uint64_t seed)
{
    return guarded("G1", "integration by parts", [&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (const Grid& g : {Grid::build(1, 1.0, 5, 1.0, 1), Grid::build(2, 1.0, 5, 4, 1.0, 1)}) {
            const Field w = random_field(g, rng);
            const Field gn = random_field(g, rng, g.dim());
            const Field gc = random_field(g, rng, g.dim(), Location::Cell);
            const double lhs = inner(divergence(gn), w);
            const Field gw = gradient(w);
            double rhs = 0.0;
            for (std::size_t k = 0; k < gw.size(); ++k) {
                rhs -= gn[k] * gw[k];
            }
            rhs *= g.node_weight();
            worst = std::max(worst, std::abs(lhs - rhs));
            const double lhs_c = inner(cell_divergence(gc), w);
            const Field cw = cell_gradient(w);
            double rhs_c = 0.0;
            for (std::size_t k = 0; k < cw.size(); ++k) {
                rhs_c -= gc[k] * cw[k];
            }
            rhs_c *= g.cell_weight();
            worst = std::max(worst, std::abs(lhs_c - rhs_c));
        }
        return make("G1", "integration by parts", worst < 1e-12, worst, 1e-12, "nodal and cell pairs, 1D nx=5 and 2D 5x4");
    });
}

CheckResult inv_norms(std::uint64_t seed)
{
    return guarded("G2", "norm homogeneity and monotonicity", [&] {
        std::mt19937_64 rng(seed);
        const Grid g = Grid::build(2, 1.0, 6, 5, 1.0, 1);
        const Field f = random_field(g, rng);
        double worst = 0.0;
        bool monotone = true;
        for (auto [kind, p] : std::vector<std::pair<NormKind, double>>{
                 {NormKind::L1, 1.0}, {NormKind::L2, 2.0}, {NormKind::Lp, 3.0}, {NormKind::Linf, 2.0}, {NormKind::W1p, 2.5}}) {
            const double base = norm(f, kind, p);
            const double scaled = norm(-2.5 * Field(f), kind, p);
            worst = std::max(worst, std::abs(scaled - 2.5 * base) / std::max(base, 1e-300));
            if (kind != NormKind::W1p) {
                Field bigger = f;
                for (double& v : bigger.values()) {
                    v *= 1.1;
                }
                monotone = monotone && norm(bigger, kind, p) >= base;
            }
        }
        return make("G2", "norm homogeneity and monotonicity", worst < 1e-14 && monotone, worst, 1e-14,
                    "L1, L2, L3, Linf, W1p(2.5)");
    });
}

CheckResult inv_parts(std::uint64_t seed)
{
    return guarded("G3", "positive/negative parts and truncation", [&] {
        std::mt19937_64 rng(seed);
        const Grid g = Grid::build(1, 1.0, 50, 1.0, 1);
        const Field f = random_field(g, rng);
        const auto [pos, neg] = pos_neg_parts(f);
        bool exact = true;
        for (std::size_t i = 0; i < f.size(); ++i) {
            exact = exact && pos[i] - neg[i] == f[i] && pos[i] * neg[i] == 0.0;
        }
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        double worst = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const double r = u(rng);
            const double s = u(rng);
            worst = std::max(worst, std::abs(truncate_value(r, 2.0) - truncate_value(s, 2.0)) - std::abs(r - s));
        }
        return make("G3", "positive/negative parts and truncation", exact && worst <= 0.0, worst, 0.0,
                    std::string("reconstruction ") + (exact ? "exact" : "inexact") + "; max(|T(r)-T(s)| - |r-s|)");
    });
}

CheckResult inv_flux_monotone(const ExperimentConfig& cfg)
{
    return guarded("M1", "flux monotonicity sampling", [&] {
        int v = 0;
        for (double eps : {0.0, 1e-8, 0.1}) {
            v += audit_assumptions(cfg.flux_model().with_eps(eps), 10000, cfg.seed + 11).monotonicity_violations;
        }
        return make("M1", "flux monotonicity sampling", v == 0, v, 0.0, "eps in {0, 1e-8, 0.1}, 1e4 samples each");
    });
}

CheckResult inv_smooth_pos()
{
    return guarded("M2", "smooth positive part bounds", [&] {
        double worst = 0.0;
        double approx = 0.0;
        for (double delta : {0.01, 0.3, 1.0, 2.5}) {
            const SmoothPosApprox s(delta);
            for (int k = -2000; k <= 2000; ++k) {
                const double r = 3.0 * delta * k / 1000.0;
                const double v = s.value(r);
                const double d1 = s.derivative(r);
                const double d2 = s.second_derivative(r);
                const double rp = std::max(r, 0.0);
                worst = std::max({worst, -v, v - rp, -d1, d1 - 1.0, -d2, d2 - 1.5 / delta});
                if (r < 0.0 || r > delta) {
                    worst = std::max(worst, std::abs(d2));
                }
                approx = std::max(approx, std::abs(v - rp) - 0.5 * delta);
            }
        }
        const double m = std::max(worst, approx);
        return make("M2", "smooth positive part bounds", m <= 1e-12, m, 1e-12,
                    "0 <= eta <= r+, 0 <= eta' <= 1, 0 <= eta'' <= 3/(2 delta), |eta - r+| <= delta/2");
    });
}

CheckResult inv_smooth_pos_fd()
{
    return guarded("M3", "smooth positive part derivative consistency", [&] {
        const SmoothPosApprox s(1.0);
        double worst_ratio = 1e300;
        for (double r : {0.2, 0.5, 0.8, 1.7}) {
            auto err = [&](double hstep) {
                return std::abs((s.value(r + hstep) - s.value(r - hstep)) / (2.0 * hstep) - s.derivative(r));
            };
            const double e1 = err(1e-2);
            const double e2 = err(5e-3);
            if (e1 > 1e-13) {
                worst_ratio = std::min(worst_ratio, e1 / e2);
            }
        }
        return make("M3", "smooth positive part derivative consistency", worst_ratio >= 3.5, worst_ratio, 3.5,
                    "central difference error ratio under step halving (O(h^2) gives 4)");
    });
}

CheckResult inv_reaction()
{
    return guarded("M4", "reaction and penalty sign", [&] {
        bool ok = true;
        for (PenaltyKind kind : {PenaltyKind::Linear, PenaltyKind::Power}) {
            ReactionModel r;
            r.linear = 0.3;
            r.positive_part = 0.5;
            r.penalty_kind = kind;
            r.exponent = 1.5;
            for (int k = -100; k <= 100; ++k) {
                const double v = 0.05 * k;
                ok = ok && r.with_n(0.0).eval(v) == r.base(v);
                if (v < 0.0) {
                    ok = ok && r.with_n(7.0).eval(v) < r.base(v);
                } else {
                    ok = ok && r.with_n(7.0).eval(v) == r.base(v);
                }
            }
        }
        return make("M4", "reaction and penalty sign", ok, ok ? 0.0 : 1.0, 0.0,
                    "n=0 equals base; penalty strictly negative for v<0, inactive for v>=0");
    });
}

CheckResult inv_noise(const ExperimentConfig& cfg)
{
    return guarded("N1", "noise replay and amplitude linearity", [&] {
        const Grid g = cfg.grid();
        NoiseSpec a = cfg.noise_spec();
        NoiseSpec b = a;
        b.amp = 2.0 * a.amp;
        const QWienerNoise na(a, g);
        const QWienerNoise nb(b, g);
        const NoisePath p1(cfg.seed, 50, a.modes);
        const NoisePath p2(cfg.seed, 50, a.modes);
        bool ok = p1 == p2;
        for (int j = 0; j < 50 && ok; ++j) {
            const Field x = sample_increment(na, p1, j, g.dt());
            const Field y = sample_increment(na, p2, j, g.dt());
            const Field z = sample_increment(nb, p1, j, g.dt());
            for (std::size_t i = 0; i < x.size(); ++i) {
                ok = ok && x[i] == y[i] && z[i] == 2.0 * x[i];
            }
        }
        return make("N1", "noise replay and amplitude linearity", ok, ok ? 0.0 : 1.0, 0.0,
                    "bitwise replay; doubling amp doubles every increment exactly");
    });
}

CheckResult inv_noise_clt(const ExperimentConfig& cfg)
{
    return guarded("N2", "noise central-limit consistency", [&] {
        const Grid g = Grid::build(1, 1.0, 63, 1.0, 10);
        const QWienerNoise noise(cfg.noise_spec(), g);
        const std::size_t node = 20;
        constexpr int paths = 10000;
        double s1 = 0.0;
        double s2 = 0.0;
        for (int k = 0; k < paths; ++k) {
            const NoisePath path(path_seed(cfg.base_seed + 77, k), g.nt(), noise.spec().modes);
            double sum = 0.0;
            for (int j = 0; j < g.nt(); ++j) {
                sum += sample_increment(noise, path, j, g.dt())[node];
            }
            s1 += sum;
            s2 += sum * sum;
        }
        const double mean = s1 / paths;
        const double var = (s2 - paths * mean * mean) / (paths - 1);
        const double expected = noise.variance_rate(node) * g.T();
        const double z = std::abs(var - expected) / (expected * std::sqrt(2.0 / (paths - 1)));
        return make("N2", "noise central-limit consistency", z <= 3.0, z, 3.0,
                    "variance of the time-sum over 1e4 paths vs sum_k lambda_k e_k(x)^2 T (in standard errors)");
    });
}

CheckResult inv_solver_nonneg(const ExperimentConfig& cfg)
{
    return guarded("S1", "noise-free non-negativity", [&] {
        ExperimentConfig c = cfg;
        c.amp = 0.0;
        c.reaction = "zero";
        double worst = 0.0;
        for (double n : {0.0, 100.0}) {
            const TrajectoryRecord rec = solve_trajectory(c.solver_config(n), NoisePath(c.seed, c.nt, c.modes));
            for (const auto& ln : rec.norms) {
                worst = std::max(worst, ln.neg_inf);
            }
        }
        return make("S1", "noise-free non-negativity", worst <= cfg.newton_tol, worst, cfg.newton_tol,
                    "amp=0, f=0, n in {0, 100}; max |u^-|_inf");
    });
}

CheckResult inv_solver_determinism(const ExperimentConfig& cfg)
{
    return guarded("S2", "trajectory determinism", [&] {
        const SolverConfig sc = cfg.solver_config(cfg.n);
        const NoisePath path(cfg.seed, cfg.nt, cfg.modes);
        const TrajectoryRecord a = solve_trajectory(sc, path);
        const TrajectoryRecord b = solve_trajectory(sc, path);
        bool same = a.fingerprint == b.fingerprint;
        for (std::size_t j = 0; j < a.u.levels.size() && same; ++j) {
            same = std::memcmp(a.u.levels[j].values().data(), b.u.levels[j].values().data(),
                               a.u.levels[j].size() * sizeof(double)) == 0;
        }
        return make("S2", "trajectory determinism", same, same ? 0.0 : 1.0, 0.0, "same config and seed, bitwise");
    });
}

CheckResult inv_ledger(const ExperimentConfig& cfg)
{
    return guarded("S3", "ledger finiteness and coercivity", [&] {
        const TrajectoryRecord rec = solve_trajectory(cfg.solver_config(cfg.n), NoisePath(cfg.seed, cfg.nt, cfg.modes));
        double worst = -1e300;
        bool finite = true;
        for (const auto& e : rec.ledger) {
            finite = finite && std::isfinite(e.kinetic) && std::isfinite(e.dissipation) && std::isfinite(e.reaction) &&
                     std::isfinite(e.penalty) && std::isfinite(e.noise) && std::isfinite(e.step_residual);
            worst = std::max(worst, e.coercivity_bound - e.dissipation - 1e-12 * (1.0 + std::abs(e.dissipation)));
        }
        return make("S3", "ledger finiteness and coercivity", finite && worst <= 0.0, worst, 0.0,
                    "max over steps of (kappa|D| + C1|grad u|_p^p) dt - dissipation");
    });
}

CheckResult inv_heat_residual(const ExperimentConfig& cfg)
{
    return guarded("S4", "energy residual under dt halving", [&] {
        ExperimentConfig c = cfg;
        c.p = 2.0;
        c.convection = 0.0;
        c.amp = 0.0;
        c.reaction = "zero";
        c.nt = 100;
        c.T = 0.1;
        const double r1 = energy_residual(solve_trajectory(c.solver_config(0.0), NoisePath(c.seed, c.nt, c.modes)));
        c.nt = 200;
        const double r2 = energy_residual(solve_trajectory(c.solver_config(0.0), NoisePath(c.seed, c.nt, c.modes)));
        const double ratio = r1 / r2;
        return make("S4", "energy residual under dt halving", ratio >= 1.5, ratio, 1.5,
                    "noise-free heat case, nt 100 -> 200: residuals " + num(r1) + " -> " + num(r2));
    });
}

CheckResult inv_ensemble(const ExperimentConfig& cfg, int threads)
{
    return guarded("S5", "ensemble bounds independent of n", [&] {
        const std::vector<double> ns{1.0, 10.0, 100.0, 1000.0};
        std::vector<EnsembleSummary> sums;
        for (double n : ns) {
            sums.push_back(monte_carlo(cfg.solver_config(n), cfg.num_paths, cfg.base_seed, threads));
        }
        double worst = 0.0;
        auto spread = [&](auto get) {
            double lo = 1e300;
            double hi = 0.0;
            for (const auto& s : sums) {
                lo = std::min(lo, get(s));
                hi = std::max(hi, get(s));
            }
            return lo > 0.0 ? (hi - lo) / lo : 0.0;
        };
        worst = std::max(worst, spread([](const EnsembleSummary& s) { return s.sup_l2_sq.mean(); }));
        worst = std::max(worst, spread([](const EnsembleSummary& s) { return s.grad_pp.mean(); }));
        worst = std::max(worst, spread([](const EnsembleSummary& s) { return s.flux_dual.mean(); }));
        int failures = 0;
        for (const auto& s : sums) {
            failures += static_cast<int>(s.failures.size());
        }
        return make("S5", "ensemble bounds independent of n", worst < 0.5 && failures == 0, worst, 0.5,
                    "relative spread of E sup|u|^2, E int|grad u|^p, E int|a|^p' over n in {1,10,100,1000}");
    });
}

CheckResult inv_diagnostics(const ExperimentConfig& cfg)
{
    return guarded("D1", "measure densities and pairing linearity", [&] {
        const NoisePath path(cfg.seed, cfg.nt, cfg.modes);
        const TrajectoryRecord rm = solve_trajectory(cfg.solver_config(100.0), path);
        const TrajectoryRecord rn = solve_trajectory(cfg.solver_config(1000.0), path);
        const MeasureGrid m = eta_density(rn);
        bool nonneg = true;
        for (int j = 0; j < m.time_cells(); ++j) {
            for (std::size_t i = 0; i < m.nodes(); ++i) {
                nonneg = nonneg && m.density(j, i) >= 0.0;
            }
        }
        const SpaceTimeTest f = [](double t, const Vec2& x) { return 1.0 + t * x[0]; };
        const SpaceTimeTest h = [](double t, const Vec2& x) { return std::cos(3.0 * x[0]) + t; };
        const double lin = std::abs(pair_with(m, [&](double t, const Vec2& x) { return 2.0 * f(t, x) - 3.0 * h(t, x); }) -
                                    (2.0 * pair_with(m, f) - 3.0 * pair_with(m, h)));
        const double scale = std::max(1.0, m.mass());
        const double dis = disjoint_support_max(rm, rn);
        double sup = 0.0;
        for (const auto& lvl : rm.u.levels) {
            sup = std::max(sup, norm(lvl, NormKind::Linf));
        }
        const bool ok = nonneg && lin <= 1e-12 * scale && dis <= 10.0 * cfg.newton_tol * sup &&
                        std::abs(pair_with(m, [](double, const Vec2&) { return 1.0; }) - m.mass()) <= 1e-12 * scale;
        return make("D1", "measure densities and pairing linearity", ok, lin / scale, 1e-12,
                    "densities >= 0, pairing linear, (u_100)+(u_1000)- = " + num(dis));
    });
}

CheckResult inv_capacity(const ExperimentConfig& cfg)
{
    return guarded("C1", "capacity subadditivity and time doubling", [&] {
        const Grid g = Grid::build(1, 1.0, 7, 1.0, 8);
        std::mt19937_64 rng(cfg.seed + 5);
        std::bernoulli_distribution coin(0.1);
        double worst = -1e300;
        for (int k = 0; k < 5; ++k) {
            CellSet a(g);
            CellSet b(g);
            for (int j = 0; j < g.nt(); ++j) {
                for (std::size_t i = 0; i < g.num_nodes(); ++i) {
                    if (coin(rng)) {
                        a.insert(j, i);
                    }
                    if (coin(rng)) {
                        b.insert(j, i);
                    }
                }
            }
            const double ea = estimate_capacity(CapacityProblem(g, a)).value;
            const double eb = estimate_capacity(CapacityProblem(g, b)).value;
            const double eu = estimate_capacity(CapacityProblem(g, a.united(b))).value;
            worst = std::max(worst, eu - ea - eb - 1e-6);
        }
        const double one = estimate_capacity(CapacityProblem(g, CellSet::parse(g, "3:3,3:3"))).value;
        const double two = estimate_capacity(CapacityProblem(g, CellSet::parse(g, "3:4,3:3"))).value;
        const SandwichReport s = capacity_sandwich(CapacityProblem(g, CellSet::parse(g, "3:3,3:3")));
        const bool ok = worst <= 0.0 && two >= one - 1e-6 * one && s.reflected_candidate <= 3.0 * s.base;
        return make("C1", "capacity subadditivity and time doubling", ok, worst, 0.0,
                    "cap(E1 u E2) - cap(E1) - cap(E2); one slab " + num(one) + " two slabs " + num(two) +
                        "; reflected candidate/base = " + num(s.reflected_candidate / s.base));
    });
}

}  // namespace

std::vector<CheckResult> invariant_suite(const ExperimentConfig& cfg, int threads)
{
    return run_all({
        [&] { return inv_ibp(cfg.seed); },
        [&] { return inv_norms(cfg.seed); },
        [&] { return inv_parts(cfg.seed); },
        [&] { return inv_flux_monotone(cfg); },
        [&] { return inv_smooth_pos(); },
        [&] { return inv_smooth_pos_fd(); },
        [&] { return inv_reaction(); },
        [&] { return inv_noise(cfg); },
        [&] { return inv_noise_clt(cfg); },
        [&] { return inv_solver_nonneg(cfg); },
        [&] { return inv_solver_determinism(cfg); },
        [&] { return inv_ledger(cfg); },
        [&] { return inv_heat_residual(cfg); },
        [&] { return inv_ensemble(cfg, threads); },
        [&] { return inv_diagnostics(cfg); },
        [&] { return inv_capacity(cfg); },
    });
}

std::vector<CheckResult> validation_suite(const ExperimentConfig& cfg, int threads)
{
    std::vector<CheckResult> out = invariant_suite(cfg, threads);
    for (auto& r : acceptance_suite(cfg, threads)) {
        out.push_back(std::move(r));
    }
    return out;
}

void write_report_csv(std::ostream& os, const std::vector<CheckResult>& results)
{
    os << "id,name,passed,measured,threshold,detail\n";
    for (const auto& r : results) {
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), '"', '\'');
        os << r.id << ',' << r.name << ',' << (r.passed ? "pass" : "fail") << ',' << fmt_exact(r.measured) << ','
           << fmt_exact(r.threshold) << ",\"" << detail << "\"\n";
    }
}

std::string format_result_line(const CheckResult& r)
{
    std::ostringstream os;
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ": measured=" << num(r.measured)
       << " threshold=" << num(r.threshold) << " | " << r.detail;
    return os.str();
}

}  // namespace penlab
