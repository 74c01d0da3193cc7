#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "penlab/field.hpp"
#include "penlab/grid.hpp"
#include "penlab/solver.hpp"

namespace penlab {

/**
 * Cell density of eta_n = n pen(u_n) on Q_T. Time cell j (0..nt-1) carries the
 * density of level j+1, so that mass = sum_{j,i} d_{j,i} dt h^d.
 */
class MeasureGrid {
public:
    MeasureGrid(const Grid& grid, double n);

    const Grid& grid() const { return grid_; }
    double n() const { return n_; }
    int time_cells() const { return grid_.nt(); }
    std::size_t nodes() const { return grid_.num_nodes(); }

    double density(int j, std::size_t i) const { return values_[static_cast<std::size_t>(j) * nodes() + i]; }
    void set_density(int j, std::size_t i, double d);
    double cell_volume() const { return grid_.dt() * grid_.node_weight(); }
    double mass() const;

private:
    Grid grid_;
    double n_;
    std::vector<double> values_;
};

struct WeightField {
    Field phi;

    static WeightField distance_weight(const Grid& grid);  // min(1, dist(x, boundary))
    static WeightField constant(const Grid& grid, double c = 1.0);
};

MeasureGrid eta_density(const TrajectoryRecord& rec);

/// sum d_{j,i} w(x_i) dt h^d
double weighted_mass(const MeasureGrid& m, const WeightField& w);

using SpaceTimeTest = std::function<double(double t, const Vec2& x)>;

/// sum d_{j,i} test(t_{j+1}, x_i) dt h^d
double pair_with(const MeasureGrid& m, const SpaceTimeTest& test);
/// Same pairing against levels 1..nt of a stored field.
double pair_with(const MeasureGrid& m, const SpaceTimeField& test);

/// sum T_K((u_m)^+) d eta_n over Q_T; requires m <= n and a shared grid.
double complementarity(const TrajectoryRecord& rec_m, const MeasureGrid& meas_n, double K);

/// max over levels and nodes of (u_m)^+ (u_n)^-
double disjoint_support_max(const TrajectoryRecord& rec_m, const TrajectoryRecord& rec_n);

/// ||u^-||_{L2(Q_T)} over levels 1..nt
double neg_l2_spacetime(const TrajectoryRecord& rec);
/// n ||u^-||^2_{L2(Q_T)} for the linear penalty, n ||u^-||^q_{Lq(Q_T)} for the power penalty.
double penalty_functional(const TrajectoryRecord& rec);

struct SweepRow {
    double n = 0.0;
    double neg_l2 = 0.0;
    double sqrt_n_neg_l2 = 0.0;
    double mass = 0.0;
    double phi_mass = 0.0;
    double complementarity = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::optional<double> slope;  // log-log fit of neg_l2 against n
    double K = 1.0;
    std::string note;
};

/// Records must share grid, noise path and every setting except n; rows keep the input order.
SweepReport sweep_report(const std::vector<const TrajectoryRecord*>& records, double K = 1.0);
SweepReport sweep_report(const std::vector<TrajectoryRecord>& records, double K = 1.0);

/// Least-squares slope of log y against log x over the pairs with x, y > 0.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_sweep_csv(std::ostream& os, const SweepReport& report);

}  // namespace penlab
