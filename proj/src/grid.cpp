#include "penlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace penlab {

Grid Grid::build(int dim, double extent, int nx, double T, int nt)
{
    if (dim != 1) {
        throw std::invalid_argument("1D builder called with dim=" + std::to_string(dim));
    }
    return build(dim, Vec2{extent, extent}, nx, 1, T, nt);
}

Grid Grid::build(int dim, double extent, int nx, int ny, double T, int nt)
{
    return build(dim, Vec2{extent, extent}, nx, ny, T, nt);
}

Grid Grid::build(int dim, Vec2 extent, int nx, int ny, double T, int nt)
{
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("dim must be 1 or 2, got " + std::to_string(dim));
    }
    if (nx < 2) {
        throw std::invalid_argument("nx too small (need nx >= 2)");
    }
    if (dim == 2 && ny < 2) {
        throw std::invalid_argument("ny too small (need ny >= 2)");
    }
    if (!(extent[0] > 0.0) || (dim == 2 && !(extent[1] > 0.0))) {
        throw std::invalid_argument("extent must be positive");
    }
    if (!(T > 0.0)) {
        throw std::invalid_argument("T must be positive");
    }
    if (nt < 0) {
        throw std::invalid_argument("nt must be non-negative");
    }
    Grid g;
    g.dim_ = dim;
    g.extent_ = extent;
    g.nx_ = nx;
    g.ny_ = dim == 2 ? ny : 1;
    g.h_[0] = extent[0] / (nx + 1);
    g.h_[1] = dim == 2 ? extent[1] / (ny + 1) : 1.0;
    if (dim == 1) {
        g.extent_[1] = 1.0;
    }
    g.T_ = T;
    g.nt_ = nt;
    g.dt_ = nt > 0 ? T / nt : 0.0;
    return g;
}

Grid Grid::with_time(double T, int nt) const
{
    return build(dim_, extent_, nx_, ny_, T, nt);
}

std::size_t Grid::num_nodes() const
{
    return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny());
}

std::size_t Grid::num_cells() const
{
    if (dim_ == 1) {
        return static_cast<std::size_t>(nx_ + 1);
    }
    return 2 * static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1);
}

double Grid::node_weight() const
{
    return dim_ == 1 ? h_[0] : h_[0] * h_[1];
}

double Grid::cell_weight() const
{
    return dim_ == 1 ? h_[0] : 0.5 * h_[0] * h_[1];
}

double Grid::domain_measure() const
{
    return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1];
}

Vec2 Grid::node_coord(std::size_t node) const
{
    const auto i = static_cast<int>(node % nx_) + 1;
    const auto j = static_cast<int>(node / nx_) + 1;
    return {i * h_[0], dim_ == 2 ? j * h_[1] : 0.0};
}

Vec2 Grid::cell_centroid(std::size_t cell) const
{
    if (dim_ == 1) {
        return {(static_cast<double>(cell) + 0.5) * h_[0], 0.0};
    }
    const std::size_t square = cell / 2;
    const double a = static_cast<double>(square % (nx_ + 1));
    const double b = static_cast<double>(square / (nx_ + 1));
    // lower-right triangle (a,b),(a+1,b),(a+1,b+1); upper-left (a,b),(a+1,b+1),(a,b+1)
    if (cell % 2 == 0) {
        return {(a + 2.0 / 3.0) * h_[0], (b + 1.0 / 3.0) * h_[1]};
    }
    return {(a + 1.0 / 3.0) * h_[0], (b + 2.0 / 3.0) * h_[1]};
}

std::size_t Grid::cell_containing(const Vec2& x) const
{
    const double fx = std::clamp(x[0] / h_[0], 0.0, static_cast<double>(nx_ + 1));
    const int a = std::min(static_cast<int>(fx), nx_);
    if (dim_ == 1) {
        return static_cast<std::size_t>(a);
    }
    const double fy = std::clamp(x[1] / h_[1], 0.0, static_cast<double>(ny_ + 1));
    const int b = std::min(static_cast<int>(fy), ny_);
    const std::size_t square = static_cast<std::size_t>(a) + static_cast<std::size_t>(nx_ + 1) * b;
    return (fx - a >= fy - b) ? 2 * square : 2 * square + 1;
}

double Grid::boundary_distance(std::size_t node) const
{
    const Vec2 x = node_coord(node);
    double d = std::min(x[0], extent_[0] - x[0]);
    if (dim_ == 2) {
        d = std::min({d, x[1], extent_[1] - x[1]});
    }
    return d;
}

long Grid::node_index(int i, int j) const
{
    if (i < 1 || i > nx_) {
        return -1;
    }
    if (dim_ == 1) {
        return i - 1;
    }
    if (j < 1 || j > ny_) {
        return -1;
    }
    return static_cast<long>(i - 1) + static_cast<long>(nx_) * (j - 1);
}

std::string Grid::describe() const
{
    std::ostringstream os;
    os << "Grid(dim=" << dim_ << ", nx=" << nx_;
    if (dim_ == 2) {
        os << ", ny=" << ny_;
    }
    os << ", h=" << h_[0] << ", T=" << T_ << ", nt=" << nt_ << ", dt=" << dt_ << ")";
    return os.str();
}

GradientStencil::GradientStencil(const Grid& grid)
    : dim(grid.dim()), cells(grid.num_cells()), vertices_per_cell(grid.dim() + 1)
{
    const Vec2 h = grid.spacing();
    entries.reserve(cells * dim);
    vertex_nodes.reserve(cells);
    vertex_coords.reserve(cells);
    auto coord = [&](int i, int j) { return Vec2{i * h[0], dim == 2 ? j * h[1] : 0.0}; };

    if (dim == 1) {
        for (int a = 0; a <= grid.nx(); ++a) {
            entries.push_back({grid.node_index(a + 1), grid.node_index(a), 1.0 / h[0]});
            vertex_nodes.push_back({grid.node_index(a), grid.node_index(a + 1), -1});
            vertex_coords.push_back({coord(a, 0), coord(a + 1, 0), coord(a + 1, 0)});
        }
        return;
    }
    for (int b = 0; b <= grid.ny(); ++b) {
        for (int a = 0; a <= grid.nx(); ++a) {
            // lower-right
            entries.push_back({grid.node_index(a + 1, b), grid.node_index(a, b), 1.0 / h[0]});
            entries.push_back({grid.node_index(a + 1, b + 1), grid.node_index(a + 1, b), 1.0 / h[1]});
            vertex_nodes.push_back({grid.node_index(a, b), grid.node_index(a + 1, b), grid.node_index(a + 1, b + 1)});
            vertex_coords.push_back({coord(a, b), coord(a + 1, b), coord(a + 1, b + 1)});
            // upper-left
            entries.push_back({grid.node_index(a + 1, b + 1), grid.node_index(a, b + 1), 1.0 / h[0]});
            entries.push_back({grid.node_index(a, b + 1), grid.node_index(a, b), 1.0 / h[1]});
            vertex_nodes.push_back({grid.node_index(a, b), grid.node_index(a + 1, b + 1), grid.node_index(a, b + 1)});
            vertex_coords.push_back({coord(a, b), coord(a + 1, b + 1), coord(a, b + 1)});
        }
    }
}

}  // namespace penlab
