#include "penlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace penlab {

namespace {

double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
double length(const Vec2& a) { return std::sqrt(dot(a, a)); }

}  // namespace

FluxModel::FluxModel(int dim, double p, double eps_reg, Convection convection)
    : dim_(dim), p_(p), eps_(eps_reg), convection_(convection)
{
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("FluxModel: dim must be 1 or 2");
    }
    if (!(p > 1.0)) {
        throw std::invalid_argument("FluxModel: p must exceed 1");
    }
    if (eps_reg < 0.0) {
        throw std::invalid_argument("FluxModel: eps_reg must be non-negative");
    }
    if (dim == 1) {
        convection_.direction = {1.0, 0.0};
    } else {
        const double len = length(convection_.direction);
        if (len == 0.0) {
            throw std::invalid_argument("FluxModel: zero convection direction");
        }
        convection_.direction = {convection_.direction[0] / len, convection_.direction[1] / len};
    }
}

FluxModel FluxModel::with_eps(double eps) const
{
    FluxModel m = *this;
    if (eps < 0.0) {
        throw std::invalid_argument("FluxModel: eps_reg must be non-negative");
    }
    m.eps_ = eps;
    return m;
}

FluxModel FluxModel::with_coefficient(Field coefficient) const
{
    if (coefficient.location() != Location::Cell || !coefficient.is_scalar()) {
        throw std::invalid_argument("FluxModel: coefficient must be a scalar cell field");
    }
    for (double k : coefficient.values()) {
        if (!(k > 0.0) || !std::isfinite(k)) {
            throw std::invalid_argument("FluxModel: coefficient must be positive and finite");
        }
    }
    if (shift_ && !(shift_->grid() == coefficient.grid())) {
        throw std::invalid_argument("FluxModel: coefficient and shift live on different grids");
    }
    FluxModel m = *this;
    m.coefficient_ = std::move(coefficient);
    return m;
}

std::size_t FluxModel::locate(const Vec2& x) const
{
    if (coefficient_) {
        return coefficient_->grid().cell_containing(x);
    }
    if (shift_) {
        return shift_->grid().cell_containing(x);
    }
    return 0;
}

double FluxModel::coefficient_at(std::size_t cell) const
{
    return coefficient_ ? (*coefficient_)[cell] : 1.0;
}

Vec2 FluxModel::shift_at(std::size_t cell) const
{
    if (!shift_) {
        return {0.0, 0.0};
    }
    if (dim_ == 1) {
        return {(*shift_)[cell], 0.0};
    }
    return {(*shift_)[2 * cell], (*shift_)[2 * cell + 1]};
}

Vec2 FluxModel::diffusive(std::size_t cell, const Vec2& xi) const
{
    const Vec2 s = shift_at(cell);
    const Vec2 z{xi[0] + s[0], dim_ == 2 ? xi[1] + s[1] : 0.0};
    const double r2 = dot(z, z) + eps_ * eps_;
    double w;
    if (p_ == 2.0) {
        w = 1.0;
    } else if (r2 == 0.0) {
        w = 0.0;  // zeta = 0 and eps = 0: the flux vanishes for every p > 1
    } else {
        w = std::pow(r2, 0.5 * (p_ - 2.0));
    }
    const double k = coefficient_at(cell);
    return {k * w * z[0], k * w * z[1]};
}

double FluxModel::diffusivity(std::size_t cell, const Vec2& xi) const
{
    const Vec2 s = shift_at(cell);
    const Vec2 z{xi[0] + s[0], dim_ == 2 ? xi[1] + s[1] : 0.0};
    const double r2 = std::max(dot(z, z) + eps_ * eps_, 1e-300);
    return coefficient_at(cell) * (p_ == 2.0 ? 1.0 : std::pow(r2, 0.5 * (p_ - 2.0)));
}

std::array<double, 4> FluxModel::diffusive_jacobian(std::size_t cell, const Vec2& xi) const
{
    const Vec2 s = shift_at(cell);
    const Vec2 z{xi[0] + s[0], dim_ == 2 ? xi[1] + s[1] : 0.0};
    const double k = coefficient_at(cell);
    if (p_ == 2.0) {
        return {k, 0.0, 0.0, k};
    }
    // (r2)^{(p-2)/2} [ I + (p-2) z z^T / r2 ], r2 = |z|^2 + eps^2; floored to stay finite at z = 0.
    const double r2 = std::max(dot(z, z) + eps_ * eps_, 1e-300);
    const double w = std::pow(r2, 0.5 * (p_ - 2.0));
    const double c = (p_ - 2.0) / r2;
    return {k * w * (1.0 + c * z[0] * z[0]), k * w * c * z[0] * z[1], k * w * c * z[0] * z[1],
            k * w * (1.0 + c * z[1] * z[1])};
}

double FluxModel::potential(std::size_t cell, const Vec2& xi) const
{
    const Vec2 s = shift_at(cell);
    const Vec2 z{xi[0] + s[0], dim_ == 2 ? xi[1] + s[1] : 0.0};
    const double r2 = dot(z, z) + eps_ * eps_;
    return coefficient_at(cell) * std::pow(r2, 0.5 * p_) / p_;
}

Vec2 FluxModel::eval_cell(std::size_t cell, double lambda, const Vec2& xi) const
{
    const Vec2 d = diffusive(cell, xi);
    const Vec2 f = convection_.eval(lambda);
    return {d[0] + f[0], dim_ == 2 ? d[1] + f[1] : 0.0};
}

Vec2 FluxModel::eval(const Vec2& x, double lambda, const Vec2& xi) const
{
    return eval_cell(locate(x), lambda, xi);
}

Vec2 eval_flux(const FluxModel& m, const Vec2& x, double lambda, const Vec2& xi)
{
    return m.eval(x, lambda, xi);
}

StructuralConstants FluxModel::structural_constants(double lambda_box) const
{
    const double p = p_;
    double kmin = 1.0;
    double kmax = 1.0;
    if (coefficient_) {
        auto v = coefficient_->values();
        kmin = *std::min_element(v.begin(), v.end());
        kmax = *std::max_element(v.begin(), v.end());
    }
    double smax = 0.0;
    if (shift_) {
        for (std::size_t c = 0; c < shift_->points(); ++c) {
            smax = std::max(smax, length(shift_at(c)));
        }
    }
    const double eps = eps_;
    const double cabs = convection_.lipschitz();
    const double gamma = p >= 2.0 ? std::pow(2.0, p - 2.0) : 1.0;

    // A_eps(z).z >= alpha |z|^p - beta
    double alpha = 1.0;
    double beta = 0.0;
    if (p < 2.0 && eps > 0.0) {
        alpha = std::pow(2.0, 0.5 * (p - 2.0));
        beta = alpha * std::pow(eps, p);
    }

    double mu;
    double K0;
    if (smax == 0.0) {
        mu = kmin * alpha;
        K0 = kmax * beta;
    } else {
        // |A(z)| s <= gamma s |z|^{p-1} + gamma s eps^{p-1} [p >= 2], then Young with weight alpha/2
        // and |z|^p >= 2^{1-p} |xi|^p - s^p.
        const double delta = alpha * p / (2.0 * (p - 1.0));
        const double young = std::pow(delta, 1.0 - p) * std::pow(gamma * smax, p) / p;
        const double eps_term = p >= 2.0 ? gamma * std::pow(eps, p - 1.0) * smax : 0.0;
        mu = kmin * alpha * std::pow(2.0, -p);
        K0 = kmax * (0.5 * alpha * std::pow(smax, p) + beta + eps_term + young);
    }

    StructuralConstants c;
    if (cabs > 0.0) {
        const double B = cabs * lambda_box;
        const double tstar = std::pow(2.0 * B / (mu * p), 1.0 / (p - 1.0));
        c.C1 = 0.5 * mu;
        c.kappa = -K0 - B * tstar * (p - 1.0) / p;
    } else {
        c.C1 = mu;
        c.kappa = -K0;
    }
    c.C2 = kmax * gamma;
    c.g = kmax * gamma * std::pow(smax + eps, p - 1.0);
    if (p >= 2.0) {
        c.C3 = cabs;
        c.g += cabs;
    } else {
        c.C3 = cabs * std::pow(lambda_box, 2.0 - p);
    }
    c.C4 = 0.0;
    c.h = cabs;
    return c;
}

FluxModel obstacle_shift(const FluxModel& m, const Field& psi)
{
    if (m.has_convection()) {
        throw std::invalid_argument("obstacle_shift: the flux must not depend on lambda (convection active)");
    }
    if (!psi.is_scalar() || psi.location() != Location::Node) {
        throw std::invalid_argument("obstacle_shift: psi must be a scalar node field");
    }
    if (psi.grid().dim() != m.dim()) {
        throw std::invalid_argument("obstacle_shift: dimension mismatch");
    }
    if (m.coefficient_ && !(m.coefficient_->grid() == psi.grid())) {
        throw std::invalid_argument("obstacle_shift: psi lives on a different grid than the coefficient");
    }
    FluxModel out = m;
    Field grad = cell_gradient(psi);
    if (out.shift_) {
        if (!(out.shift_->grid() == psi.grid())) {
            throw std::invalid_argument("obstacle_shift: grid mismatch with existing shift");
        }
        *out.shift_ += grad;
    } else {
        out.shift_ = std::move(grad);
    }
    return out;
}

// Reaction ------------------------------------------------------------------

double ReactionModel::base(double v) const
{
    double f = linear * v + positive_part * std::max(v, 0.0);
    if (power_coef != 0.0 && v != 0.0) {
        f += power_coef * std::pow(std::abs(v), exponent - 2.0) * v;
    }
    return f;
}

double ReactionModel::base_lipschitz() const
{
    // the power term is not Lipschitz for exponent < 2; it is reported separately
    return std::abs(linear) + std::abs(positive_part);
}

double ReactionModel::penalty(double v) const
{
    if (v >= 0.0) {
        return 0.0;
    }
    return penalty_kind == PenaltyKind::Linear ? -v : std::pow(-v, exponent - 1.0);
}

double ReactionModel::penalty_slope(double v) const
{
    if (v >= 0.0 || n == 0.0) {
        return 0.0;
    }
    if (penalty_kind == PenaltyKind::Linear) {
        return n;
    }
    return n * (exponent - 1.0) * std::pow(std::max(-v, 1e-300), exponent - 2.0);
}

double ReactionModel::penalty_potential(double v) const
{
    if (v >= 0.0) {
        return 0.0;
    }
    if (penalty_kind == PenaltyKind::Linear) {
        return 0.5 * n * v * v;
    }
    return n * std::pow(-v, exponent) / exponent;
}

double eval_reaction(const ReactionModel& r, double v)
{
    return r.eval(v);
}

// Smooth positive part ------------------------------------------------------

SmoothPosApprox::SmoothPosApprox(double delta) : delta_(delta)
{
    if (!(delta > 0.0)) {
        throw std::invalid_argument("SmoothPosApprox: delta must be positive");
    }
}

double SmoothPosApprox::value(double r) const
{
    const double d = delta_;
    if (r < 0.0) {
        return 0.0;
    }
    if (r > d) {
        return r - 0.5 * d;
    }
    return -r * r * r * r / (2.0 * d * d * d) + r * r * r / (d * d);
}

double SmoothPosApprox::derivative(double r) const
{
    const double d = delta_;
    if (r < 0.0) {
        return 0.0;
    }
    if (r > d) {
        return 1.0;
    }
    return -2.0 * r * r * r / (d * d * d) + 3.0 * r * r / (d * d);
}

double SmoothPosApprox::second_derivative(double r) const
{
    const double d = delta_;
    if (r < 0.0 || r > d) {
        return 0.0;
    }
    return -6.0 * r * r / (d * d * d) + 6.0 * r / (d * d);
}

double smooth_pos(const SmoothPosApprox& s, double r)
{
    return s.value(r);
}

// Auditor -------------------------------------------------------------------

std::string AuditReport::summary() const
{
    std::ostringstream os;
    os << "samples=" << samples << " monotonicity=" << monotonicity_violations << " coercivity=" << coercivity_violations
       << " growth=" << growth_violations << " lipschitz=" << lipschitz_violations << " (kappa=" << constants.kappa
       << ", C1=" << constants.C1 << ", C2=" << constants.C2 << ", C3=" << constants.C3 << ", C4=" << constants.C4
       << ", g=" << constants.g << ", h=" << constants.h << ")";
    return os.str();
}

AuditReport audit_assumptions(const FluxFunction& flux, const StructuralConstants& k, const AuditBox& box,
                              int sample_count, std::uint64_t seed)
{
    const double p = box.p;
    if (sample_count < 1) {
        throw std::invalid_argument("audit_assumptions: sample_count must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = box.dim;
    auto draw_vec = [&](double radius) {
        const double r = radius * unit(rng);
        if (d == 1) {
            return Vec2{unit(rng) < 0.5 ? -r : r, 0.0};
        }
        const double th = 2.0 * std::numbers::pi * unit(rng);
        return Vec2{r * std::cos(th), r * std::sin(th)};
    };
    auto draw_scalar = [&](double radius) { return radius * (2.0 * unit(rng) - 1.0); };
    constexpr std::size_t max_witnesses = 5;

    AuditReport rep;
    rep.samples = sample_count;
    rep.constants = k;
    auto record = [&](int& counter, const char* name, AuditViolation v) {
        if (counter < static_cast<int>(max_witnesses)) {
            v.condition = name;
            rep.witnesses.push_back(v);
        }
        ++counter;
    };

    for (int s = 0; s < sample_count; ++s) {
        const Vec2 x{box.domain[0] * unit(rng), d == 2 ? box.domain[1] * unit(rng) : 0.0};
        const double lam = draw_scalar(box.lambda_max);
        const double lam2 = draw_scalar(box.lambda_max);
        const Vec2 xi = draw_vec(box.xi_max);
        const Vec2 zeta = draw_vec(box.xi_max);
        const Vec2 a_xi = flux(x, lam, xi);
        const Vec2 a_zeta = flux(x, lam, zeta);
        const double xin = length(xi);

        const double mono = (a_xi[0] - a_zeta[0]) * (xi[0] - zeta[0]) + (a_xi[1] - a_zeta[1]) * (xi[1] - zeta[1]);
        if (!(mono > 0.0) && (xi[0] != zeta[0] || xi[1] != zeta[1])) {
            record(rep.monotonicity_violations, "monotonicity", {{}, x, lam, lam, xi, zeta, mono, 0.0});
        }

        const double coer = dot(a_xi, xi);
        const double coer_rhs = k.kappa + k.C1 * std::pow(xin, p);
        if (!(coer >= coer_rhs - 1e-10 * (1.0 + std::abs(coer_rhs)))) {
            record(rep.coercivity_violations, "coercivity", {{}, x, lam, lam, xi, xi, coer, coer_rhs});
        }

        const double growth = length(a_xi);
        const double growth_rhs = k.C2 * std::pow(xin, p - 1.0) + k.C3 * std::pow(std::abs(lam), p - 1.0) + k.g;
        if (!(growth <= growth_rhs + 1e-10 * (1.0 + growth_rhs))) {
            record(rep.growth_violations, "growth", {{}, x, lam, lam, xi, xi, growth, growth_rhs});
        }

        const Vec2 a_l2 = flux(x, lam2, xi);
        const double lip = length({a_xi[0] - a_l2[0], a_xi[1] - a_l2[1]});
        const double lip_rhs = (k.C4 * std::pow(xin, p - 1.0) + k.h) * std::abs(lam - lam2);
        if (!(lip <= lip_rhs + 1e-10 * (1.0 + lip_rhs))) {
            record(rep.lipschitz_violations, "lipschitz", {{}, x, lam, lam2, xi, xi, lip, lip_rhs});
        }
    }
    return rep;
}

AuditReport audit_assumptions(const FluxModel& m, int sample_count, std::uint64_t seed, Vec2 domain)
{
    AuditBox box;
    box.dim = m.dim();
    box.p = m.p();
    if (m.coefficient()) {
        domain = m.coefficient()->grid().extent();
    } else if (m.shift()) {
        domain = m.shift()->grid().extent();
    }
    box.domain = domain;
    FluxFunction fn = [&m](const Vec2& x, double lam, const Vec2& xi) { return m.eval(x, lam, xi); };
    return audit_assumptions(fn, m.structural_constants(box.lambda_max), box, sample_count, seed);
}

}  // namespace penlab
