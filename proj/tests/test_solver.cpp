#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "penlab/solver.hpp"

using namespace penlab;

namespace {

SolverConfig heat_config(int nx, double T, int nt)
{
    const Grid g = Grid::build(1, 1.0, nx, T, nt);
    NoiseSpec noise;
    noise.amp = 0.0;
    return SolverConfig{g, FluxModel(1, 2.0, 0.0), ReactionModel{}, noise,
                        Field::from_function(g, [](const Vec2& x) { return std::sin(M_PI * x[0]); })};
}

SolverConfig small_config(double n, int nt = 100)
{
    const Grid g = Grid::build(1, 1.0, 32, 0.2, nt);
    ReactionModel r;
    r.n = n;
    NoiseSpec noise;
    noise.amp = 0.3;
    return SolverConfig{g, FluxModel(1, 3.0, 1e-8, Convection{0.5, {1.0, 0.0}}), r, noise,
                        Field::from_function(g, [](const Vec2& x) { return std::sin(M_PI * x[0]); })};
}

double max_diff(const TrajectoryRecord& a, const TrajectoryRecord& b)
{
    double m = -1e300;
    for (std::size_t j = 0; j < a.u.levels.size(); ++j) {
        for (std::size_t i = 0; i < a.u.levels[j].size(); ++i) {
            m = std::max(m, a.u.levels[j][i] - b.u.levels[j][i]);
        }
    }
    return m;
}

}  // namespace

TEST(Step, ZeroIsFixedPoint)
{
    SolverConfig c = heat_config(16, 0.1, 10);
    c.u0 = Field::scalar(c.grid);
    const Field u = step(c.u0, c, Field::scalar(c.grid));
    for (double v : u.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Step, HeatKernel)
{
    const double h = 1.0 / 129.0;
    const int nt = 400;
    const SolverConfig c = heat_config(128, nt * h * h, nt);
    const TrajectoryRecord rec = solve_trajectory(c, NoisePath(1, nt, c.noise.modes));
    const double t = c.grid.T();
    const Field exact = Field::from_function(c.grid, [&](const Vec2& x) { return std::exp(-M_PI * M_PI * t) * std::sin(M_PI * x[0]); });
    Field err = rec.u.levels.back();
    err -= exact;
    EXPECT_LT(norm(err, NormKind::L2) / norm(exact, NormKind::L2), 0.01);
}

TEST(Step, LargePenaltyPushesUp)
{
    SolverConfig c = small_config(1e6);
    c.noise.amp = 0.0;
    const Field u = Field::from_function(c.grid, [](const Vec2& x) { return std::sin(3 * M_PI * x[0]); });
    const Field v = step(u, c, Field::scalar(c.grid));
    const double before = norm(pos_neg_parts(u).second, NormKind::Linf);
    const double after = norm(pos_neg_parts(v).second, NormKind::Linf);
    EXPECT_LT(after, before);
    EXPECT_LT(after, 1e-3 * before);
}

TEST(Step, NewtonResidualBelowTolerance)
{
    const SolverConfig c = small_config(100.0);
    const PenalizedStepper stepper(c);
    const NoisePath path(4, c.grid.nt(), c.noise.modes);
    const QWienerNoise noise(c.noise, c.grid);
    const Field dW = sample_increment(noise, path, 0, c.grid.dt());
    const StepResult r = stepper.step(c.u0, dW);
    EXPECT_LE(r.residual, c.newton_tol);
    EXPECT_LE(norm(stepper.residual(c.u0, dW, r.u), NormKind::L2), 10 * c.newton_tol);
}

TEST(Config, ValidateRejects)
{
    SolverConfig c = small_config(1.0);
    c.reaction.n = -1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config(1.0);
    c.newton_tol = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, FingerprintTracksN)
{
    const SolverConfig a = small_config(1.0);
    const SolverConfig b = a.with_n(10.0);
    EXPECT_NE(a.fingerprint(), b.fingerprint());
    EXPECT_EQ(a.base_fingerprint(), b.base_fingerprint());
    EXPECT_EQ(a.fingerprint(), small_config(1.0).fingerprint());
}

TEST(Trajectory, ZeroSteps)
{
    SolverConfig c = small_config(1.0, 0);
    const TrajectoryRecord rec = solve_trajectory(c, NoisePath(1, 0, c.noise.modes));
    EXPECT_EQ(rec.u.levels.size(), 1u);
    EXPECT_TRUE(rec.ledger.empty());
}

TEST(Trajectory, NoiseFreeStaysNonNegative)
{
    for (double n : {0.0, 10.0, 1e4}) {
        SolverConfig c = small_config(n);
        c.noise.amp = 0.0;
        const TrajectoryRecord rec = solve_trajectory(c, NoisePath(1, c.grid.nt(), c.noise.modes));
        for (const auto& l : rec.norms) {
            EXPECT_LE(l.neg_inf, c.newton_tol);
        }
    }
}

TEST(Trajectory, BitwiseDeterministic)
{
    const SolverConfig c = small_config(100.0);
    const NoisePath path(12, c.grid.nt(), c.noise.modes);
    const TrajectoryRecord a = solve_trajectory(c, path);
    const TrajectoryRecord b = solve_trajectory(c, path);
    EXPECT_EQ(a.fingerprint, b.fingerprint);
    for (std::size_t j = 0; j < a.u.levels.size(); ++j) {
        ASSERT_EQ(std::memcmp(a.u.levels[j].values().data(), b.u.levels[j].values().data(),
                              a.u.levels[j].size() * sizeof(double)),
                  0);
    }
}

TEST(Trajectory, ComparisonPrinciple)
{
    const SolverConfig g = small_config(100.0);
    SolverConfig f = g;
    f.reaction.positive_part += 0.5;
    f.u0 *= 0.8;
    for (int s = 0; s < 5; ++s) {
        const NoisePath path(path_seed(3, s), g.grid.nt(), g.noise.modes);
        EXPECT_LE(max_diff(solve_trajectory(f, path), solve_trajectory(g, path)), 10 * g.newton_tol);
    }
}

TEST(Trajectory, MonotoneInPenalty)
{
    const NoisePath path(8, 100, 16);
    const TrajectoryRecord a = solve_trajectory(small_config(1.0), path);
    const TrajectoryRecord b = solve_trajectory(small_config(100.0), path);
    const TrajectoryRecord c = solve_trajectory(small_config(1e4), path);
    EXPECT_LE(max_diff(a, b), 1e-9);
    EXPECT_LE(max_diff(b, c), 1e-9);
}

TEST(Energy, ZeroCase)
{
    SolverConfig c = heat_config(16, 0.1, 20);
    c.u0 = Field::scalar(c.grid);
    EXPECT_EQ(energy_residual(solve_trajectory(c, NoisePath(1, 20, c.noise.modes))), 0.0);
}

TEST(Energy, ResidualHalvesWithDt)
{
    const double r1 = energy_residual(solve_trajectory(heat_config(32, 0.1, 100), NoisePath(1, 100, 16)));
    const double r2 = energy_residual(solve_trajectory(heat_config(32, 0.1, 200), NoisePath(1, 200, 16)));
    EXPECT_GE(r1 / r2, 1.5);
}

TEST(Energy, DissipationAboveCoercivityBound)
{
    const TrajectoryRecord rec = solve_trajectory(small_config(100.0), NoisePath(2, 100, 16));
    for (const auto& e : rec.ledger) {
        EXPECT_GE(e.dissipation, e.coercivity_bound - 1e-12);
        EXPECT_GE(e.penalty, 0.0);
    }
}

TEST(Ensemble, SinglePathMatchesRecord)
{
    const SolverConfig c = small_config(10.0);
    const EnsembleSummary s = monte_carlo(c, 1, 77);
    const PathStatistics p = path_statistics(solve_trajectory(c, NoisePath(path_seed(77, 0), c.grid.nt(), c.noise.modes)));
    EXPECT_EQ(s.sup_l2_sq.count, 1);
    EXPECT_DOUBLE_EQ(s.sup_l2_sq.mean(), p.sup_l2_sq);
    EXPECT_DOUBLE_EQ(s.grad_pp.mean(), p.grad_pp);
    EXPECT_DOUBLE_EQ(s.penalty.mean(), p.penalty);
}

TEST(Ensemble, NoNoiseNoVariance)
{
    SolverConfig c = small_config(10.0, 40);
    c.noise.amp = 0.0;
    const EnsembleSummary s = monte_carlo(c, 4, 1, 2);
    EXPECT_EQ(s.grad_pp.variance(), 0.0);
    EXPECT_EQ(s.sup_l2_sq.variance(), 0.0);
}

TEST(Ensemble, ThreadCountDoesNotChangeResult)
{
    const SolverConfig c = small_config(10.0, 40);
    const EnsembleSummary a = monte_carlo(c, 6, 5, 1);
    const EnsembleSummary b = monte_carlo(c, 6, 5, 3);
    EXPECT_EQ(a.grad_pp.sum, b.grad_pp.sum);
    EXPECT_EQ(a.penalty.sumsq, b.penalty.sumsq);
}

TEST(Ensemble, BoundsIndependentOfN)
{
    double lo = 1e300;
    double hi = 0.0;
    for (double n : {1.0, 10.0, 100.0, 1000.0}) {
        const double v = monte_carlo(small_config(n), 4, 9).grad_pp.mean();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_LT((hi - lo) / lo, 0.5);
}
