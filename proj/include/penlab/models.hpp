#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "penlab/field.hpp"
#include "penlab/grid.hpp"

namespace penlab {

/// Constants of the coercivity, growth and Lipschitz conditions on the flux.
struct StructuralConstants {
    double kappa = 0.0;
    double C1 = 1.0;
    double C2 = 1.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double g = 0.0;
    double h = 0.0;
};

/// Convection F(lambda) = amplitude * lambda * direction, Lipschitz constant |amplitude|.
struct Convection {
    double amplitude = 0.0;
    Vec2 direction{1.0, 0.0};

    Vec2 eval(double lambda) const { return {amplitude * lambda * direction[0], amplitude * lambda * direction[1]}; }
    double lipschitz() const { return amplitude < 0 ? -amplitude : amplitude; }
};

/**
 * Diffusion-convection flux
 *
 *   a(x, lambda, xi) = k(x) (|zeta|^2 + eps^2)^{(p-2)/2} zeta + F(lambda),  zeta = xi + s(x)
 *
 * with an optional cell-wise coefficient k > 0 and an optional cell-wise
 * shift s (set by `obstacle_shift`). With eps = 0, k = 1, s = 0 this is the
 * p-Laplace flux plus convection.
 */
class FluxModel {
public:
    explicit FluxModel(int dim, double p, double eps_reg = 1e-8, Convection convection = {});

    int dim() const { return dim_; }
    double p() const { return p_; }
    double eps_reg() const { return eps_; }
    const Convection& convection() const { return convection_; }
    bool has_convection() const { return convection_.amplitude != 0.0; }

    FluxModel with_eps(double eps) const;
    FluxModel with_coefficient(Field coefficient) const;

    const std::optional<Field>& coefficient() const { return coefficient_; }
    const std::optional<Field>& shift() const { return shift_; }

    /// Full flux at a point; points are located in the grid only when cell data is attached.
    Vec2 eval(const Vec2& x, double lambda, const Vec2& xi) const;
    Vec2 eval_cell(std::size_t cell, double lambda, const Vec2& xi) const;

    /// lambda-independent part k(x) A_eps(xi + s(x)) and its Jacobian with respect to xi.
    Vec2 diffusive(std::size_t cell, const Vec2& xi) const;
    std::array<double, 4> diffusive_jacobian(std::size_t cell, const Vec2& xi) const;
    /// Secant coefficient k (|zeta|^2+eps^2)^{(p-2)/2} used by the fixed-point fallback.
    double diffusivity(std::size_t cell, const Vec2& xi) const;
    Vec2 shift_at(std::size_t cell) const;
    /// Potential whose gradient in xi is `diffusive`.
    double potential(std::size_t cell, const Vec2& xi) const;

    /// Candidate constants valid for |lambda| <= lambda_box (the growth and
    /// Lipschitz bounds hold globally; coercivity uses the box when convection
    /// or a shift is present).
    StructuralConstants structural_constants(double lambda_box = 10.0) const;

    friend FluxModel obstacle_shift(const FluxModel& m, const Field& psi);

private:
    std::size_t locate(const Vec2& x) const;
    double coefficient_at(std::size_t cell) const;

    int dim_;
    double p_;
    double eps_;
    Convection convection_;
    std::optional<Field> coefficient_;
    std::optional<Field> shift_;
};

/// Remark-style obstacle shift: returns a~(x, xi) = a(x, xi + grad psi(x)).
FluxModel obstacle_shift(const FluxModel& m, const Field& psi);

Vec2 eval_flux(const FluxModel& m, const Vec2& x, double lambda, const Vec2& xi);

enum class PenaltyKind { Linear, Power };

/**
 * Reaction f(r) = linear*r + positive_part*r^+ + power_coef*|r|^{q-2} r with
 * penalty -n r^- (linear kind) or -n (r^-)^{q-1} (power kind, q = exponent).
 */
struct ReactionModel {
    double linear = 0.0;
    double positive_part = 0.0;
    double power_coef = 0.0;
    PenaltyKind penalty_kind = PenaltyKind::Linear;
    double exponent = 2.0;
    double n = 0.0;

    double base(double v) const;
    double base_lipschitz() const;
    /// Magnitude of the penalty: r^- or (r^-)^{q-1}. Non-negative.
    double penalty(double v) const;
    /// d/dv of -penalty(v), i.e. the (non-negative) slope the penalty adds to the equation.
    double penalty_slope(double v) const;
    /// Antiderivative of -n penalty: convex, zero for v >= 0.
    double penalty_potential(double v) const;
    double eval(double v) const { return base(v) - n * penalty(v); }

    ReactionModel with_n(double strength) const
    {
        ReactionModel r = *this;
        r.n = strength;
        return r;
    }
};

double eval_reaction(const ReactionModel& r, double v);

/// C^2 quartic-spline approximation of r -> r^+.
class SmoothPosApprox {
public:
    explicit SmoothPosApprox(double delta);

    double delta() const { return delta_; }
    double value(double r) const;
    double derivative(double r) const;
    double second_derivative(double r) const;

private:
    double delta_;
};

double smooth_pos(const SmoothPosApprox& s, double r);

// Assumption auditing ------------------------------------------------------

using FluxFunction = std::function<Vec2(const Vec2& x, double lambda, const Vec2& xi)>;

struct AuditBox {
    double p = 2.0;  // growth exponent the constants refer to
    double lambda_max = 10.0;
    double xi_max = 10.0;
    Vec2 domain{1.0, 1.0};
    int dim = 1;
};

struct AuditViolation {
    std::string condition;
    Vec2 x{};
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Vec2 xi{};
    Vec2 zeta{};
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AuditReport {
    int samples = 0;
    StructuralConstants constants;
    int monotonicity_violations = 0;
    int coercivity_violations = 0;
    int growth_violations = 0;
    int lipschitz_violations = 0;
    std::vector<AuditViolation> witnesses;  // first few of each kind

    int total_violations() const
    {
        return monotonicity_violations + coercivity_violations + growth_violations + lipschitz_violations;
    }
    bool ok() const { return total_violations() == 0; }
    std::string summary() const;
};

AuditReport audit_assumptions(const FluxFunction& flux, const StructuralConstants& constants, const AuditBox& box,
                              int sample_count, std::uint64_t seed);
AuditReport audit_assumptions(const FluxModel& m, int sample_count, std::uint64_t seed, Vec2 domain = {1.0, 1.0});

}  // namespace penlab
