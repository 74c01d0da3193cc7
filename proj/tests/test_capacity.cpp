#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "penlab/capacity.hpp"
#include "penlab/validation.hpp"

using namespace penlab;

namespace {

Grid golden_grid()
{
    return Grid::build(1, 1.0, 7, 1.0, 8);
}

// Second oracle: (sqrt A + sqrt B)^2 = min_theta A/theta + B/(1-theta). For fixed theta the
// problem is a quadratic program; with v = 1 imposed on E it is a dense linear solve. The
// quadratic forms are assembled from w_norm by polarization.
double theta_qp_capacity(const CapacityProblem& prob)
{
    const Grid& g = prob.grid;
    const std::size_t N = static_cast<std::size_t>(g.nt()) * g.num_nodes();
    Eigen::MatrixXd MA(N, N);
    Eigen::MatrixXd MB(N, N);
    std::vector<double> e(N, 0.0);
    auto parts = [&](std::size_t i, std::size_t k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[i] += 1.0;
        e[k] += 1.0;
        return w_norm(g, e);
    };
    std::vector<WNorm> diag(N);
    for (std::size_t i = 0; i < N; ++i) {
        std::fill(e.begin(), e.end(), 0.0);
        e[i] = 1.0;
        diag[i] = w_norm(g, e);
    }
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < N; ++k) {
            if (i == k) {
                MA(i, i) = diag[i].A;
                MB(i, i) = diag[i].B;
            } else {
                const WNorm s = parts(i, k);
                MA(i, k) = 0.5 * (s.A - diag[i].A - diag[k].A);
                MB(i, k) = 0.5 * (s.B - diag[i].B - diag[k].B);
            }
        }
    }
    std::vector<Eigen::Index> fixed;
    std::vector<Eigen::Index> free;
    for (std::size_t i = 0; i < N; ++i) {
        (prob.set.mask()[i] ? fixed : free).push_back(static_cast<Eigen::Index>(i));
    }
    auto value = [&](double theta) {
        const Eigen::MatrixXd M = MA / theta + MB / (1.0 - theta);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
        for (auto i : fixed) {
            v(i) = 1.0;
        }
        Eigen::MatrixXd Mff(free.size(), free.size());
        Eigen::VectorXd rhs(free.size());
        for (std::size_t a = 0; a < free.size(); ++a) {
            double r = 0.0;
            for (auto f : fixed) {
                r -= M(free[a], f);
            }
            rhs(static_cast<Eigen::Index>(a)) = r;
            for (std::size_t b = 0; b < free.size(); ++b) {
                Mff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = M(free[a], free[b]);
            }
        }
        const Eigen::VectorXd vf = Mff.ldlt().solve(rhs);
        for (std::size_t a = 0; a < free.size(); ++a) {
            v(free[a]) = vf(static_cast<Eigen::Index>(a));
        }
        return v.dot(M * v);
    };
    // golden-section search on theta
    double lo = 1e-6;
    double hi = 1.0 - 1e-6;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = value(x1);
    double f2 = value(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = value(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = value(x2);
        }
    }
    return std::sqrt(std::min(f1, f2));
}

CellSet random_set(const Grid& g, std::mt19937_64& rng, double p, CellSet base)
{
    std::bernoulli_distribution coin(p);
    for (int j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            if (coin(rng)) {
                base.insert(j, i);
            }
        }
    }
    return base;
}

}  // namespace

TEST(CellSet, ParseAndAlgebra)
{
    const Grid g = golden_grid();
    const CellSet a = CellSet::parse(g, "3:3,3:3");
    EXPECT_EQ(a.count(), 1u);
    EXPECT_TRUE(a.contains(3, 3));
    const CellSet b = CellSet::parse(g, "2:4,1:5;0:0,0:0");
    EXPECT_EQ(b.count(), 16u);
    EXPECT_TRUE(a.subset_of(b));
    EXPECT_FALSE(b.subset_of(a));
    EXPECT_EQ(a.united(b).count(), 16u);
    EXPECT_NEAR(a.lebesgue_measure(), g.dt() * g.h(), 1e-15);
    EXPECT_TRUE(CellSet::parse(g, "").empty());
    EXPECT_THROW(CellSet::parse(g, "0:9,0:0"), std::invalid_argument);
    EXPECT_THROW(CellSet::parse(g, "garbage"), std::invalid_argument);
}

TEST(Capacity, RejectsLargeGrids)
{
    const Grid g = Grid::build(1, 1.0, 40, 1.0, 8);
    EXPECT_THROW(estimate_capacity(CapacityProblem(g, CellSet(g))), std::invalid_argument);
}

TEST(Capacity, EmptySet)
{
    const Grid g = golden_grid();
    const CapacityProblem p(g, CellSet(g));
    const CapacityResult r = estimate_capacity(p);
    EXPECT_EQ(r.value, 0.0);
    for (double v : r.minimizer) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_TRUE(lebesgue_lower_bound_check(p, r.value));
    EXPECT_EQ(reflected_capacity(p).value, 0.0);
}

TEST(Capacity, GoldenCentralCell)
{
    const Grid g = golden_grid();
    const CapacityProblem p(g, CellSet::parse(g, "3:3,3:3"));
    const CapacityResult r = estimate_capacity(p);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, kCentralCellCapacity, 1e-6 * kCentralCellCapacity);
    EXPECT_NEAR(w_norm(g, r.minimizer).value(), r.value, 1e-12);
    EXPECT_GE(r.minimizer[3 * g.num_nodes() + 3], 1.0 - 1e-12);
}

TEST(Capacity, ThetaQpOracleAgrees)
{
    const Grid g = golden_grid();
    for (const char* cells : {"3:3,3:3", "2:3,2:4", "0:0,0:6"}) {
        const CapacityProblem p(g, CellSet::parse(g, cells));
        EXPECT_NEAR(estimate_capacity(p).value, theta_qp_capacity(p), 1e-5) << cells;
    }
    EXPECT_NEAR(theta_qp_capacity(CapacityProblem(g, CellSet::parse(g, "3:3,3:3"))), kCentralCellCapacity, 1e-8);
}

TEST(Capacity, LebesgueLowerBound)
{
    const Grid g = golden_grid();
    const CapacityProblem central(g, CellSet::parse(g, "3:3,3:3"));
    EXPECT_LE(std::sqrt(g.dt() * g.h()), estimate_capacity(central).value);
    const CapacityProblem full(g, CellSet::parse(g, "0:7,0:6"));
    const double est = estimate_capacity(full).value;
    EXPECT_TRUE(lebesgue_lower_bound_check(full, est));
    EXPECT_LE(std::sqrt(full.set.lebesgue_measure()), est);
}

TEST(Capacity, NestedSetsAreMonotone)
{
    const Grid g = golden_grid();
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 4; ++k) {
        const CellSet small = random_set(g, rng, 0.1, CellSet(g));
        const CellSet big = random_set(g, rng, 0.1, small);
        const double a = estimate_capacity(CapacityProblem(g, small)).value;
        const double b = estimate_capacity(CapacityProblem(g, big)).value;
        EXPECT_LE(a, b + 1e-4 * std::max(1.0, b));
    }
}

TEST(Capacity, SubadditiveAndTimeDoubling)
{
    const Grid g = golden_grid();
    std::mt19937_64 rng(7);
    for (int k = 0; k < 3; ++k) {
        const CellSet a = random_set(g, rng, 0.08, CellSet(g));
        const CellSet b = random_set(g, rng, 0.08, CellSet(g));
        const double ea = estimate_capacity(CapacityProblem(g, a)).value;
        const double eb = estimate_capacity(CapacityProblem(g, b)).value;
        EXPECT_LE(estimate_capacity(CapacityProblem(g, a.united(b))).value, ea + eb + 1e-6);
    }
    const double one = estimate_capacity(CapacityProblem(g, CellSet::parse(g, "3:3,3:3"))).value;
    const double two = estimate_capacity(CapacityProblem(g, CellSet::parse(g, "3:4,3:3"))).value;
    EXPECT_GE(two, one);
}

TEST(Capacity, ReflectionSandwich)
{
    const Grid g = golden_grid();
    const CapacityProblem p(g, CellSet::parse(g, "3:3,3:3"));
    const SandwichReport s = capacity_sandwich(p);
    EXPECT_GE(s.extended, s.base - 1e-6);
    EXPECT_LE(s.extended, 3.0 * s.base + 1e-6);
    EXPECT_TRUE(s.within(0.05));
    EXPECT_LE(s.reflected_candidate, 3.0 * s.base);

    const CapacityResult base = estimate_capacity(p);
    const CapacityProblem ext = reflected_problem(p);
    EXPECT_EQ(ext.grid.nt(), 3 * g.nt());
    const std::vector<double> vhat = reflect_extension(g, base.minimizer);
    EXPECT_NEAR(w_norm(ext.grid, vhat).value(), s.reflected_candidate, 1e-12);
    for (int j = 0; j < ext.grid.nt(); ++j) {
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            if (ext.set.contains(j, i)) {
                EXPECT_GE(vhat[static_cast<std::size_t>(j) * g.num_nodes() + i], 1.0 - 1e-12);
            }
        }
    }
}
