#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace penlab {

using Vec2 = std::array<double, 2>;

/**
 * Uniform tensor grid over the space-time cylinder (0,T) x D, D a box in
 * one or two dimensions.
 *
 * Only interior nodes carry unknowns; the boundary ring is an implicit zero
 * (homogeneous Dirichlet). Node (i, j) with 1 <= i <= nx, 1 <= j <= ny sits
 * at (i*hx, j*hy) and is stored at linear index (i-1) + nx*(j-1).
 *
 * Cells are the elements used for gradients and fluxes: the nx+1 intervals
 * in 1D, and in 2D every square of the (nx+1) x (ny+1) partition split along
 * its diagonal into two right triangles.
 */
class Grid {
public:
    static Grid build(int dim, double extent, int nx, double T, int nt);
    static Grid build(int dim, double extent, int nx, int ny, double T, int nt);
    static Grid build(int dim, Vec2 extent, int nx, int ny, double T, int nt);

    int dim() const { return dim_; }
    Vec2 extent() const { return extent_; }
    int nx() const { return nx_; }
    int ny() const { return dim_ == 2 ? ny_ : 1; }
    double h() const { return h_[0]; }
    double hy() const { return h_[1]; }
    Vec2 spacing() const { return h_; }
    double T() const { return T_; }
    double dt() const { return dt_; }
    int nt() const { return nt_; }

    std::size_t num_nodes() const;
    std::size_t num_cells() const;

    /// Quadrature weight of a node (h^d) and of a cell (h in 1D, hx*hy/2 in 2D).
    double node_weight() const;
    double cell_weight() const;
    double domain_measure() const;

    Vec2 node_coord(std::size_t node) const;
    Vec2 cell_centroid(std::size_t cell) const;
    std::size_t cell_containing(const Vec2& x) const;
    double time(int level) const { return level * dt_; }

    /// Distance from an interior node to the boundary of the box.
    double boundary_distance(std::size_t node) const;

    /// Linear index of lattice node (i, j) or -1 when it lies on the boundary ring.
    long node_index(int i, int j = 1) const;

    /// Same spatial mesh with a different time discretization.
    Grid with_time(double T, int nt) const;

    std::string describe() const;

    bool operator==(const Grid& other) const = default;

private:
    Grid() = default;

    int dim_ = 1;
    Vec2 extent_{1.0, 1.0};
    int nx_ = 0;
    int ny_ = 1;
    Vec2 h_{0.0, 1.0};
    double T_ = 0.0;
    double dt_ = 0.0;
    int nt_ = 0;
};

/**
 * Sparse description of the cell gradient: every (cell, component) entry is
 * (u[plus] - u[minus]) * inv_h, with -1 standing for a boundary node.
 */
struct GradientStencil {
    struct Entry {
        long plus;
        long minus;
        double inv_h;
    };

    explicit GradientStencil(const Grid& grid);

    int dim;
    std::size_t cells;
    int vertices_per_cell;
    std::vector<Entry> entries;  // cells * dim, cell-major
    std::vector<std::array<long, 3>> vertex_nodes;  // -1 on the boundary ring
    std::vector<std::array<Vec2, 3>> vertex_coords;
};

}  // namespace penlab
