#include "penlab/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace penlab {

namespace {

double node_value(std::span<const double> u, long idx)
{
    return idx < 0 ? 0.0 : u[static_cast<std::size_t>(idx)];
}

void require_scalar_node(const Field& f, const char* op)
{
    if (!f.is_scalar() || f.location() != Location::Node) {
        throw std::invalid_argument(std::string(op) + ": expected a scalar node field");
    }
}

}  // namespace

Field::Field(const Grid& grid, Location loc, int components)
    : grid_(grid), loc_(loc), components_(components)
{
    if (components < 1) {
        throw std::invalid_argument("Field needs at least one component");
    }
    values_.assign(points() * static_cast<std::size_t>(components), 0.0);
}

Field Field::from_values(const Grid& grid, std::vector<double> values)
{
    Field f(grid, Location::Node, 1);
    if (values.size() != f.size()) {
        throw std::invalid_argument("value count does not match the number of interior nodes");
    }
    f.values_ = std::move(values);
    return f;
}

Field Field::from_function(const Grid& grid, const std::function<double(const Vec2&)>& fn)
{
    Field f(grid, Location::Node, 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.values_[i] = fn(grid.node_coord(i));
    }
    return f;
}

std::size_t Field::points() const
{
    return loc_ == Location::Node ? grid_.num_nodes() : grid_.num_cells();
}

bool Field::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Field::require_compatible(const Field& other) const
{
    if (loc_ != other.loc_ || components_ != other.components_ || !(grid_ == other.grid_)) {
        throw std::invalid_argument("incompatible fields");
    }
}

Field& Field::operator+=(const Field& other)
{
    require_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += other.values_[i];
    }
    return *this;
}

Field& Field::operator-=(const Field& other)
{
    require_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] -= other.values_[i];
    }
    return *this;
}

Field& Field::operator*=(double c)
{
    for (double& v : values_) {
        v *= c;
    }
    return *this;
}

Field gradient(const Field& f)
{
    require_scalar_node(f, "gradient");
    const Grid& g = f.grid();
    const int d = g.dim();
    Field out(g, Location::Node, d);
    auto u = f.values();
    for (int j = 1; j <= g.ny(); ++j) {
        for (int i = 1; i <= g.nx(); ++i) {
            const auto k = static_cast<std::size_t>(g.node_index(i, j));
            out[k * d] = (node_value(u, g.node_index(i + 1, j)) - node_value(u, g.node_index(i - 1, j))) / (2.0 * g.h());
            if (d == 2) {
                out[k * d + 1] = (node_value(u, g.node_index(i, j + 1)) - node_value(u, g.node_index(i, j - 1))) / (2.0 * g.hy());
            }
        }
    }
    return out;
}

Field divergence(const Field& gf)
{
    const Grid& g = gf.grid();
    const int d = g.dim();
    if (gf.location() != Location::Node || gf.components() != d) {
        throw std::invalid_argument("divergence: expected a node vector field");
    }
    Field out = Field::scalar(g);
    auto v = gf.values();
    auto comp = [&](long idx, int c) { return idx < 0 ? 0.0 : v[static_cast<std::size_t>(idx) * d + c]; };
    for (int j = 1; j <= g.ny(); ++j) {
        for (int i = 1; i <= g.nx(); ++i) {
            const auto k = static_cast<std::size_t>(g.node_index(i, j));
            double s = (comp(g.node_index(i + 1, j), 0) - comp(g.node_index(i - 1, j), 0)) / (2.0 * g.h());
            if (d == 2) {
                s += (comp(g.node_index(i, j + 1), 1) - comp(g.node_index(i, j - 1), 1)) / (2.0 * g.hy());
            }
            out[k] = s;
        }
    }
    return out;
}

Field cell_gradient(const Field& f)
{
    return cell_gradient(f, GradientStencil(f.grid()));
}

Field cell_gradient(const Field& f, const GradientStencil& st)
{
    require_scalar_node(f, "cell_gradient");
    Field out(f.grid(), Location::Cell, st.dim);
    auto u = f.values();
    for (std::size_t e = 0; e < st.entries.size(); ++e) {
        const auto& en = st.entries[e];
        out[e] = (node_value(u, en.plus) - node_value(u, en.minus)) * en.inv_h;
    }
    return out;
}

Field cell_divergence(const Field& g)
{
    return cell_divergence(g, GradientStencil(g.grid()));
}

Field cell_divergence(const Field& gf, const GradientStencil& st)
{
    if (gf.location() != Location::Cell || gf.components() != st.dim) {
        throw std::invalid_argument("cell_divergence: expected a cell vector field");
    }
    const Grid& g = gf.grid();
    Field out = Field::scalar(g);
    const double scale = g.cell_weight() / g.node_weight();
    for (std::size_t e = 0; e < st.entries.size(); ++e) {
        const auto& en = st.entries[e];
        const double flux = gf[e] * en.inv_h * scale;
        if (en.plus >= 0) {
            out[static_cast<std::size_t>(en.plus)] -= flux;
        }
        if (en.minus >= 0) {
            out[static_cast<std::size_t>(en.minus)] += flux;
        }
    }
    return out;
}

double norm(const Field& f, NormKind which, double p)
{
    if (p < 1.0) {
        throw std::invalid_argument("norm: p must be >= 1");
    }
    if (which == NormKind::W1p) {
        return norm(cell_gradient(f), NormKind::Lp, p);
    }
    const double w = f.location() == Location::Node ? f.grid().node_weight() : f.grid().cell_weight();
    const int m = f.components();
    const std::size_t n = f.points();
    auto magnitude = [&](std::size_t k) {
        if (m == 1) {
            return std::abs(f[k]);
        }
        double s = 0.0;
        for (int c = 0; c < m; ++c) {
            s += f[k * m + c] * f[k * m + c];
        }
        return std::sqrt(s);
    };
    switch (which) {
    case NormKind::Linf: {
        double r = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            r = std::max(r, magnitude(k));
        }
        return r;
    }
    case NormKind::L1:
        p = 1.0;
        break;
    case NormKind::L2:
        p = 2.0;
        break;
    default:
        break;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        s += std::pow(magnitude(k), p);
    }
    return std::pow(s * w, 1.0 / p);
}

double inner(const Field& a, const Field& b)
{
    if (a.size() != b.size() || a.location() != b.location()) {
        throw std::invalid_argument("inner: incompatible fields");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    const double w = a.location() == Location::Node ? a.grid().node_weight() : a.grid().cell_weight();
    return s * w;
}

std::pair<Field, Field> pos_neg_parts(const Field& f)
{
    Field pos = f;
    Field neg = f;
    for (std::size_t k = 0; k < f.size(); ++k) {
        pos[k] = f[k] > 0.0 ? f[k] : 0.0;
        neg[k] = f[k] < 0.0 ? -f[k] : 0.0;
    }
    return {std::move(pos), std::move(neg)};
}

Field truncate(const Field& f, double K)
{
    if (!(K > 0.0)) {
        throw std::invalid_argument("truncate: K must be positive");
    }
    Field out = f;
    for (double& v : out.values()) {
        v = truncate_value(v, K);
    }
    return out;
}

}  // namespace penlab
