#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "penlab/diagnostics.hpp"

using namespace penlab;

namespace {

TrajectoryRecord make_record(const Grid& g, double n, const std::vector<std::vector<double>>& levels)
{
    TrajectoryRecord rec(g);
    rec.n = n;
    for (const auto& v : levels) {
        rec.u.levels.push_back(Field::from_values(g, v));
    }
    return rec;
}

SolverConfig sweep_config(double n)
{
    const Grid g = Grid::build(1, 1.0, 32, 1.0, 100);
    ReactionModel r;
    r.n = n;
    return SolverConfig{g, FluxModel(1, 3.0, 1e-8, Convection{0.5, {1.0, 0.0}}), r, NoiseSpec{},
                        Field::from_function(g, [](const Vec2& x) { return std::sin(M_PI * x[0]); })};
}

}  // namespace

TEST(Eta, SingleNodeArithmetic)
{
    const Grid g = Grid::build(1, 1.5, 2, 0.1, 1);
    ASSERT_DOUBLE_EQ(g.h(), 0.5);
    const TrajectoryRecord rec = make_record(g, 10.0, {{0.0, 0.0}, {-0.2, 0.0}});
    const MeasureGrid m = eta_density(rec);
    EXPECT_NEAR(m.mass(), 0.1, 1e-15);
    EXPECT_NEAR(m.density(0, 0), 2.0, 1e-15);
    EXPECT_EQ(m.density(0, 1), 0.0);
}

TEST(Eta, ZeroCases)
{
    const Grid g = Grid::build(1, 1.0, 3, 1.0, 2);
    EXPECT_EQ(eta_density(make_record(g, 10.0, {{1, 2, 3}, {0, 1, 0}, {0.5, 0.5, 0.5}})).mass(), 0.0);
    EXPECT_EQ(eta_density(make_record(g, 0.0, {{1, 2, 3}, {-1, 1, 0}, {0.5, -0.5, 0.5}})).mass(), 0.0);
    MeasureGrid m(g, 1.0);
    EXPECT_THROW(m.set_density(0, 0, -1.0), std::invalid_argument);
}

TEST(Eta, PowerPenaltyDensity)
{
    const Grid g = Grid::build(1, 1.0, 2, 1.0, 1);
    TrajectoryRecord rec = make_record(g, 3.0, {{0, 0}, {-4.0, 1.0}});
    rec.penalty_kind = PenaltyKind::Power;
    rec.penalty_exponent = 1.5;
    EXPECT_NEAR(eta_density(rec).density(0, 0), 6.0, 1e-14);
}

TEST(WeightedMass, Examples)
{
    // two cells in time, nodes at x = 1/3, 2/3
    const Grid g = Grid::build(1, 1.0, 2, 1.0, 2);
    const TrajectoryRecord rec = make_record(g, 1.0, {{0, 0}, {-1.0, 0.0}, {0.0, -2.0}});
    const MeasureGrid m = eta_density(rec);
    const double w = g.dt() * g.h();
    EXPECT_NEAR(weighted_mass(m, WeightField::constant(g)), 3.0 * w, 1e-15);
    // phi = min(1, dist) = 1/3 at both nodes
    EXPECT_NEAR(weighted_mass(m, WeightField::distance_weight(g)), (1.0 / 3.0) * 3.0 * w, 1e-15);
    const MeasureGrid zero(g, 1.0);
    EXPECT_EQ(weighted_mass(zero, WeightField::distance_weight(g)), 0.0);
}

TEST(PairWith, Examples)
{
    const Grid g = Grid::build(1, 1.0, 9, 1.0, 3);
    // symmetric about x = 1/2; the centre node carries nothing
    std::vector<double> v(9);
    for (int i = 0; i < 9; ++i) {
        v[static_cast<std::size_t>(i)] = i == 4 ? 0.0 : -std::sin(M_PI * (i + 1) / 10.0);
    }
    const TrajectoryRecord rec = make_record(g, 5.0, {std::vector<double>(9, 0.0), v, v, v});
    const MeasureGrid m = eta_density(rec);
    EXPECT_NEAR(pair_with(m, [](double, const Vec2&) { return 1.0; }), m.mass(), 1e-14);
    EXPECT_EQ(pair_with(m, [](double, const Vec2&) { return 0.0; }), 0.0);
    EXPECT_NEAR(pair_with(m, [](double, const Vec2& x) { return x[0] < 0.5 ? 1.0 : 0.0; }), 0.5 * m.mass(), 1e-14);

    SpaceTimeField ones(g);
    for (int j = 0; j <= g.nt(); ++j) {
        ones.levels.push_back(Field::from_function(g, [](const Vec2&) { return 1.0; }));
    }
    EXPECT_NEAR(pair_with(m, ones), m.mass(), 1e-14);
}

TEST(Complementarity, Examples)
{
    const Grid g = Grid::build(1, 1.0, 3, 1.0, 1);
    const TrajectoryRecord neg = make_record(g, 1.0, {{0, 0, 0}, {-1, -0.5, 0}});
    const TrajectoryRecord mixed = make_record(g, 10.0, {{0, 0, 0}, {-1, 0.3, 0.2}});
    EXPECT_EQ(complementarity(neg, eta_density(mixed), 1.0), 0.0);
    const TrajectoryRecord pos = make_record(g, 10.0, {{0, 0, 0}, {1, 1, 1}});
    EXPECT_EQ(complementarity(mixed, eta_density(pos), 1.0), 0.0);
    // both negative-free / overlapping support: (u_m)^+ = 0.3 at node 1 while eta_n lives there
    const TrajectoryRecord m1 = make_record(g, 1.0, {{0, 0, 0}, {0, 0.3, 0}});
    const TrajectoryRecord n1 = make_record(g, 10.0, {{0, 0, 0}, {0, -0.1, 0}});
    EXPECT_NEAR(complementarity(m1, eta_density(n1), 0.2), 0.2 * 10 * 0.1 * g.dt() * g.h(), 1e-15);
    EXPECT_THROW(complementarity(n1, eta_density(m1), 1.0), std::invalid_argument);
    EXPECT_THROW(complementarity(m1, eta_density(n1), 0.0), std::invalid_argument);
}

TEST(Disjoint, CoupledRunsHaveDisjointSupports)
{
    const NoisePath path(3, 100, 16);
    const TrajectoryRecord a = solve_trajectory(sweep_config(10.0), path);
    const TrajectoryRecord b = solve_trajectory(sweep_config(1000.0), path);
    double sup = 0.0;
    for (const auto& l : a.u.levels) {
        sup = std::max(sup, norm(l, NormKind::Linf));
    }
    EXPECT_LE(disjoint_support_max(a, b), 10 * 1e-10 * sup);
    const MeasureGrid eta = eta_density(b);
    EXPECT_LE(complementarity(a, eta, 1.0), 1e-3 * eta.mass() + 1e-15);
}

TEST(Sweep, SingleRowAndAbsentSlope)
{
    const NoisePath path(1, 100, 16);
    const std::vector<TrajectoryRecord> one{solve_trajectory(sweep_config(10.0), path)};
    const SweepReport r = sweep_report(one);
    EXPECT_EQ(r.rows.size(), 1u);
    EXPECT_FALSE(r.slope.has_value());
    std::ostringstream os;
    write_sweep_csv(os, r);
    EXPECT_NE(os.str().find("n,neg_l2,sqrt_n_neg_l2,mass,phi_mass,complementarity,slope"), std::string::npos);
}

TEST(Sweep, NonNegativeRunsGiveZeros)
{
    SolverConfig c = sweep_config(1.0);
    c.noise.amp = 0.0;
    const NoisePath path(1, 100, 16);
    std::vector<TrajectoryRecord> recs;
    for (double n : {1.0, 2.0, 4.0}) {
        recs.push_back(solve_trajectory(c.with_n(n), path));
    }
    const SweepReport r = sweep_report(recs);
    ASSERT_EQ(r.rows.size(), 3u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.neg_l2, 0.0);
        EXPECT_EQ(row.mass, 0.0);
        EXPECT_EQ(row.complementarity, 0.0);
    }
}

TEST(Sweep, RejectsMismatchedRecords)
{
    const TrajectoryRecord a = solve_trajectory(sweep_config(1.0), NoisePath(1, 100, 16));
    const TrajectoryRecord b = solve_trajectory(sweep_config(10.0), NoisePath(2, 100, 16));
    EXPECT_THROW(sweep_report(std::vector<const TrajectoryRecord*>{&a, &b}), std::invalid_argument);
}

TEST(Sweep, SlopeOfNegativePart)
{
    const NoisePath path(5, 100, 16);
    std::vector<TrajectoryRecord> recs;
    for (double n : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
        recs.push_back(solve_trajectory(sweep_config(n), path));
    }
    const SweepReport r = sweep_report(recs);
    ASSERT_TRUE(r.slope.has_value());
    EXPECT_LT(*r.slope, -0.4);
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        EXPECT_LE(r.rows[k].neg_l2, r.rows[k - 1].neg_l2);
    }
}

TEST(LogLog, ExactPowerLaw)
{
    const auto s = loglog_slope({1, 10, 100}, {2, 0.2, 0.02});
    ASSERT_TRUE(s.has_value());
    EXPECT_NEAR(*s, -1.0, 1e-12);
    EXPECT_FALSE(loglog_slope({1}, {1}).has_value());
    EXPECT_FALSE(loglog_slope({1, 10}, {0, 0}).has_value());
}
