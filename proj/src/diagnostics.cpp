#include "penlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "penlab/hash.hpp"

namespace penlab {

MeasureGrid::MeasureGrid(const Grid& grid, double n)
    : grid_(grid), n_(n), values_(static_cast<std::size_t>(grid.nt()) * grid.num_nodes(), 0.0)
{
}

void MeasureGrid::set_density(int j, std::size_t i, double d)
{
    if (!(d >= 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("MeasureGrid: densities must be finite and non-negative");
    }
    values_[static_cast<std::size_t>(j) * nodes() + i] = d;
}

double MeasureGrid::mass() const
{
    double s = 0.0;
    for (double d : values_) {
        s += d;
    }
    return s * cell_volume();
}

WeightField WeightField::distance_weight(const Grid& grid)
{
    Field phi = Field::scalar(grid);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] = std::min(1.0, grid.boundary_distance(i));
    }
    return {phi};
}

WeightField WeightField::constant(const Grid& grid, double c)
{
    return {Field::from_function(grid, [c](const Vec2&) { return c; })};
}

MeasureGrid eta_density(const TrajectoryRecord& rec)
{
    const Grid& g = rec.grid();
    MeasureGrid m(g, rec.n);
    if (rec.n == 0.0) {
        return m;
    }
    ReactionModel pen;
    pen.penalty_kind = rec.penalty_kind;
    pen.exponent = rec.penalty_exponent;
    const int levels = static_cast<int>(rec.u.levels.size());
    for (int j = 0; j + 1 < levels && j < g.nt(); ++j) {
        const Field& u = rec.u.levels[static_cast<std::size_t>(j) + 1];
        for (std::size_t i = 0; i < u.size(); ++i) {
            m.set_density(j, i, rec.n * pen.penalty(u[i]));
        }
    }
    return m;
}

double weighted_mass(const MeasureGrid& m, const WeightField& w)
{
    if (!(w.phi.grid() == m.grid())) {
        throw std::invalid_argument("weighted_mass: grid mismatch");
    }
    double s = 0.0;
    for (int j = 0; j < m.time_cells(); ++j) {
        for (std::size_t i = 0; i < m.nodes(); ++i) {
            s += m.density(j, i) * w.phi[i];
        }
    }
    return s * m.cell_volume();
}

double pair_with(const MeasureGrid& m, const SpaceTimeTest& test)
{
    const Grid& g = m.grid();
    double s = 0.0;
    for (int j = 0; j < m.time_cells(); ++j) {
        const double t = g.time(j + 1);
        for (std::size_t i = 0; i < m.nodes(); ++i) {
            const double d = m.density(j, i);
            if (d != 0.0) {
                s += d * test(t, g.node_coord(i));
            }
        }
    }
    return s * m.cell_volume();
}

double pair_with(const MeasureGrid& m, const SpaceTimeField& test)
{
    if (!(test.grid == m.grid()) || static_cast<int>(test.levels.size()) != m.time_cells() + 1) {
        throw std::invalid_argument("pair_with: test field must have nt + 1 levels on the measure grid");
    }
    double s = 0.0;
    for (int j = 0; j < m.time_cells(); ++j) {
        const Field& f = test.levels[static_cast<std::size_t>(j) + 1];
        for (std::size_t i = 0; i < m.nodes(); ++i) {
            s += m.density(j, i) * f[i];
        }
    }
    return s * m.cell_volume();
}

double complementarity(const TrajectoryRecord& rec_m, const MeasureGrid& meas_n, double K)
{
    if (!(rec_m.grid() == meas_n.grid())) {
        throw std::invalid_argument("complementarity: grid mismatch");
    }
    if (rec_m.n > meas_n.n()) {
        throw std::invalid_argument("complementarity: needs m <= n");
    }
    if (!(K > 0.0)) {
        throw std::invalid_argument("complementarity: K must be positive");
    }
    double s = 0.0;
    for (int j = 0; j < meas_n.time_cells(); ++j) {
        const Field& u = rec_m.u.levels[static_cast<std::size_t>(j) + 1];
        for (std::size_t i = 0; i < meas_n.nodes(); ++i) {
            s += truncate_value(std::max(u[i], 0.0), K) * meas_n.density(j, i);
        }
    }
    return s * meas_n.cell_volume();
}

double disjoint_support_max(const TrajectoryRecord& rec_m, const TrajectoryRecord& rec_n)
{
    if (!(rec_m.grid() == rec_n.grid()) || rec_m.u.levels.size() != rec_n.u.levels.size()) {
        throw std::invalid_argument("disjoint_support_max: records differ in shape");
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < rec_m.u.levels.size(); ++j) {
        const Field& a = rec_m.u.levels[j];
        const Field& b = rec_n.u.levels[j];
        for (std::size_t i = 0; i < a.size(); ++i) {
            worst = std::max(worst, std::max(a[i], 0.0) * std::max(-b[i], 0.0));
        }
    }
    return worst;
}

double neg_l2_spacetime(const TrajectoryRecord& rec)
{
    const double dt = rec.grid().dt();
    double s = 0.0;
    for (std::size_t j = 1; j < rec.norms.size(); ++j) {
        s += dt * rec.norms[j].neg_l2 * rec.norms[j].neg_l2;
    }
    return std::sqrt(s);
}

double penalty_functional(const TrajectoryRecord& rec)
{
    if (rec.penalty_kind == PenaltyKind::Linear) {
        const double v = neg_l2_spacetime(rec);
        return rec.n * v * v;
    }
    const Grid& g = rec.grid();
    const double q = rec.penalty_exponent;
    double s = 0.0;
    for (std::size_t j = 1; j < rec.u.levels.size(); ++j) {
        for (double v : rec.u.levels[j].values()) {
            if (v < 0.0) {
                s += std::pow(-v, q);
            }
        }
    }
    return rec.n * s * g.dt() * g.node_weight();
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) {
        return std::nullopt;
    }
    const double k = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) {
        return std::nullopt;
    }
    return sxy / sxx;
}

SweepReport sweep_report(const std::vector<const TrajectoryRecord*>& records, double K)
{
    SweepReport rep;
    rep.K = K;
    rep.note = "q.e. statements are checked nodewise with solver-tolerance slack";
    if (records.empty()) {
        return rep;
    }
    const TrajectoryRecord& first = *records.front();
    const TrajectoryRecord* smallest = &first;
    for (const TrajectoryRecord* r : records) {
        if (!(r->grid() == first.grid()) || r->seed != first.seed || r->base_fingerprint != first.base_fingerprint) {
            throw std::invalid_argument("sweep_report: records must share grid, noise path and configuration apart from n");
        }
        if (r->n < smallest->n) {
            smallest = r;
        }
    }
    const WeightField phi = WeightField::distance_weight(first.grid());
    std::vector<double> ns;
    std::vector<double> negs;
    for (const TrajectoryRecord* r : records) {
        const MeasureGrid m = eta_density(*r);
        SweepRow row;
        row.n = r->n;
        row.neg_l2 = neg_l2_spacetime(*r);
        row.sqrt_n_neg_l2 = std::sqrt(r->n) * row.neg_l2;
        row.mass = m.mass();
        row.phi_mass = weighted_mass(m, phi);
        row.complementarity = complementarity(*smallest, m, K);
        rep.rows.push_back(row);
        ns.push_back(row.n);
        negs.push_back(row.neg_l2);
    }
    rep.slope = loglog_slope(ns, negs);
    return rep;
}

SweepReport sweep_report(const std::vector<TrajectoryRecord>& records, double K)
{
    std::vector<const TrajectoryRecord*> ptrs;
    for (const auto& r : records) {
        ptrs.push_back(&r);
    }
    return sweep_report(ptrs, K);
}

void write_sweep_csv(std::ostream& os, const SweepReport& report)
{
    os << "n,neg_l2,sqrt_n_neg_l2,mass,phi_mass,complementarity,slope\n";
    const std::string slope = report.slope ? fmt_exact(*report.slope) : std::string();
    for (const auto& r : report.rows) {
        os << fmt_exact(r.n) << ',' << fmt_exact(r.neg_l2) << ',' << fmt_exact(r.sqrt_n_neg_l2) << ','
           << fmt_exact(r.mass) << ',' << fmt_exact(r.phi_mass) << ',' << fmt_exact(r.complementarity) << ',' << slope
           << '\n';
    }
}

}  // namespace penlab
