#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "penlab/grid.hpp"

namespace penlab {

/// Union of space-time cells (time slab j, interior node i) with measure dt h^d each.
class CellSet {
public:
    /// Inclusive index box; y bounds are ignored in 1D.
    struct Range {
        int t_lo = 0;
        int t_hi = 0;
        int x_lo = 0;
        int x_hi = 0;
        int y_lo = 0;
        int y_hi = 0;
    };

    explicit CellSet(const Grid& grid);
    static CellSet from_ranges(const Grid& grid, const std::vector<Range>& ranges);
    /// "tlo:thi,xlo:xhi[,ylo:yhi];..." with inclusive 0-based indices; "" is the empty set.
    static CellSet parse(const Grid& grid, const std::string& text);

    const Grid& grid() const { return grid_; }
    std::size_t slabs() const { return static_cast<std::size_t>(grid_.nt()); }
    std::size_t nodes() const { return grid_.num_nodes(); }
    std::size_t size() const { return mask_.size(); }

    bool contains(int j, std::size_t i) const { return mask_[static_cast<std::size_t>(j) * nodes() + i] != 0; }
    void insert(int j, std::size_t i) { mask_[static_cast<std::size_t>(j) * nodes() + i] = 1; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
    bool subset_of(const CellSet& other) const;
    CellSet united(const CellSet& other) const;
    double lebesgue_measure() const;
    const std::vector<char>& mask() const { return mask_; }

private:
    Grid grid_;
    std::vector<char> mask_;
};

struct CapacityProblem {
    Grid grid;
    CellSet set;
    int max_iters = 20000;
    double rel_tol = 1e-6;
    int window = 50;

    CapacityProblem(const Grid& g, CellSet e) : grid(g), set(std::move(e)) {}
    /// Coarse grids only: nx, ny, nt <= 32 and the set must live on `grid`.
    void validate() const;
};

struct WNorm {
    double A = 0.0;  // sum_j dt |grad v_j|^2
    double B = 0.0;  // sum_j dt |(v_{j+1} - v_j)/dt|_{H^-1}^2
    double value() const;
};

/// Discrete L2(H1_0) + L2(H^-1) time-derivative norm of v (slab-major, nt x N).
WNorm w_norm(const Grid& grid, const std::vector<double>& v);

struct CapacityResult {
    double value = 0.0;
    std::vector<double> minimizer;  // slab-major, nt x N
    int iterations = 0;
    bool converged = true;
    WNorm parts;
};

/// Projected accelerated descent on the discrete capacity problem (feasible, so an upper bound).
CapacityResult estimate_capacity(const CapacityProblem& prob);

/// lambda(E)^{1/2} <= estimate + tol
bool lebesgue_lower_bound_check(const CapacityProblem& prob, double estimate, double tol = 1e-9);

/// Problem on (-T, 2T) x D with 3 nt slabs and E in the middle third.
CapacityProblem reflected_problem(const CapacityProblem& prob);
/// Even reflection of a base field to the extended cylinder.
std::vector<double> reflect_extension(const Grid& grid, const std::vector<double>& v);
CapacityResult reflected_capacity(const CapacityProblem& prob);

struct SandwichReport {
    double base = 0.0;
    double extended = 0.0;
    double reflected_candidate = 0.0;  // norm of the reflected base minimizer
    double ratio = 0.0;                // extended / base
    bool within(double slack) const;   // base (1 - slack) <= extended <= base (3 + slack)
};

SandwichReport capacity_sandwich(const CapacityProblem& prob);

}  // namespace penlab
