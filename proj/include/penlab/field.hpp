#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "penlab/grid.hpp"

namespace penlab {

enum class Location { Node, Cell };

/**
 * Grid function. Node fields live on interior nodes only, so every scalar
 * node field satisfies the homogeneous Dirichlet condition by construction.
 * Vector fields store `components` values per point, point-major.
 */
class Field {
public:
    Field(const Grid& grid, Location loc, int components = 1);

    static Field scalar(const Grid& grid) { return Field(grid, Location::Node, 1); }
    static Field from_values(const Grid& grid, std::vector<double> values);
    static Field from_function(const Grid& grid, const std::function<double(const Vec2&)>& fn);

    const Grid& grid() const { return grid_; }
    Location location() const { return loc_; }
    int components() const { return components_; }
    bool is_scalar() const { return components_ == 1; }
    std::size_t points() const;
    std::optional<int> time_index;

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool all_finite() const;
    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double c);
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double c, Field a) { return a *= c; }

private:
    void require_compatible(const Field& other) const;

    Grid grid_;
    Location loc_;
    int components_;
    std::vector<double> values_;
};

/// One field per time level 0..nt.
struct SpaceTimeField {
    explicit SpaceTimeField(const Grid& grid) : grid(grid) {}

    Grid grid;
    std::vector<Field> levels;
};

enum class NormKind { L1, Lp, L2, Linf, W1p };

// Nodal calculus. Centered differences using the zero boundary ring; the
// divergence is the negative adjoint of `gradient` in the h^d pairing.
Field gradient(const Field& f);
Field divergence(const Field& g);

// Element calculus used by the solver: piecewise-constant gradients on cells
// and the divergence that is their negative adjoint, so that
// sum_i div(g)_i w_i h^d = - sum_c g_c . grad(w)_c |c|.
Field cell_gradient(const Field& f);
Field cell_gradient(const Field& f, const GradientStencil& stencil);
Field cell_divergence(const Field& g);
Field cell_divergence(const Field& g, const GradientStencil& stencil);

/// Quadrature norm; node weight h^d, cell weight |c|. W1p uses cell gradients.
double norm(const Field& f, NormKind which, double p = 2.0);

/// Discrete L^2 inner product with the same quadrature as `norm`.
double inner(const Field& a, const Field& b);

std::pair<Field, Field> pos_neg_parts(const Field& f);

inline double truncate_value(double r, double K) { return r > K ? K : (r < -K ? -K : r); }
Field truncate(const Field& f, double K);

}  // namespace penlab
