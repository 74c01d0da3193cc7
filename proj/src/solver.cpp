#include "penlab/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "penlab/hash.hpp"

namespace penlab {

namespace {

/// SPD system; tridiagonal storage in 1D, sparse LDL^T otherwise.
class SpdMatrix {
public:
    SpdMatrix(int dim, std::size_t n) : dim_(dim), n_(n)
    {
        if (dim_ == 1) {
            diag_.assign(n, 0.0);
            off_.assign(n > 0 ? n - 1 : 0, 0.0);
        }
    }

    void add(long i, long j, double v)
    {
        if (i < 0 || j < 0) {
            return;
        }
        if (dim_ == 1) {
            if (i == j) {
                diag_[static_cast<std::size_t>(i)] += v;
            } else if (j == i + 1 || i == j + 1) {
                // symmetric: each off-diagonal pair is added twice by the assembly
                off_[static_cast<std::size_t>(std::min(i, j))] += 0.5 * v;
            }
            return;
        }
        triplets_.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }

    bool solve(std::vector<double>& b)
    {
        if (dim_ == 1) {
            return solve_tridiagonal(b);
        }
        Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        A.setFromTriplets(triplets_.begin(), triplets_.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success) {
            return false;
        }
        Eigen::Map<Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
        Eigen::VectorXd x = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success) {
            return false;
        }
        rhs = x;
        return true;
    }

private:
    bool solve_tridiagonal(std::vector<double>& b)
    {
        const std::size_t n = n_;
        std::vector<double> c(n, 0.0);
        double denom = diag_[0];
        if (!(denom > 0.0)) {
            return false;
        }
        c[0] = n > 1 ? off_[0] / denom : 0.0;
        b[0] /= denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = diag_[i] - off_[i - 1] * c[i - 1];
            if (!(denom > 0.0)) {
                return false;
            }
            c[i] = i + 1 < n ? off_[i] / denom : 0.0;
            b[i] = (b[i] - off_[i - 1] * b[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            b[i] -= c[i] * b[i + 1];
        }
        return true;
    }

    int dim_;
    std::size_t n_;
    std::vector<double> diag_;
    std::vector<double> off_;
    std::vector<Eigen::Triplet<double>> triplets_;
};

double dot2(const std::array<double, 2>& a, const std::array<double, 2>& b) { return a[0] * b[0] + a[1] * b[1]; }

std::string penalty_name(PenaltyKind k) { return k == PenaltyKind::Linear ? "linear" : "power"; }

}  // namespace

// Config ----------------------------------------------------------------------

void SolverConfig::validate() const
{
    if (flux.dim() != grid.dim()) {
        throw std::invalid_argument("solver config: flux dimension differs from grid dimension");
    }
    if (!(u0.grid() == grid) || !u0.is_scalar() || u0.location() != Location::Node) {
        throw std::invalid_argument("solver config: u0 must be a scalar node field on the solver grid");
    }
    if (!u0.all_finite()) {
        throw std::invalid_argument("solver config: u0 has non-finite values");
    }
    for (double v : u0.values()) {
        if (v < 0.0) {
            throw std::invalid_argument("solver config: u0 must be non-negative");
        }
    }
    if (!(newton_tol > 0.0)) {
        throw std::invalid_argument("solver config: newton_tol must be positive");
    }
    if (newton_max_iters < 1) {
        throw std::invalid_argument("solver config: newton_max_iters must be >= 1");
    }
    if (reaction.n < 0.0) {
        throw std::invalid_argument("solver config: penalty strength must be non-negative");
    }
    if (reaction.penalty_kind == PenaltyKind::Power && !(reaction.exponent > 1.0)) {
        throw std::invalid_argument("solver config: power penalty needs exponent > 1");
    }
    noise.validate();
}

namespace {

void write_config(std::ostringstream& os, const SolverConfig& c, bool include_n)
{
    const Grid& g = c.grid;
    os << "grid:" << g.dim() << ',' << fmt_exact(g.extent()[0]) << ',' << fmt_exact(g.extent()[1]) << ',' << g.nx() << ','
       << g.ny() << ',' << fmt_exact(g.T()) << ',' << g.nt() << ';';
    os << "flux:" << fmt_exact(c.flux.p()) << ',' << fmt_exact(c.flux.eps_reg()) << ','
       << fmt_exact(c.flux.convection().amplitude) << ',' << fmt_exact(c.flux.convection().direction[0]) << ','
       << fmt_exact(c.flux.convection().direction[1]) << ',';
    os << (c.flux.coefficient() ? hash_values(c.flux.coefficient()->values()) : std::string("-")) << ',';
    os << (c.flux.shift() ? hash_values(c.flux.shift()->values()) : std::string("-")) << ';';
    os << "reaction:" << fmt_exact(c.reaction.linear) << ',' << fmt_exact(c.reaction.positive_part) << ','
       << fmt_exact(c.reaction.power_coef) << ',' << penalty_name(c.reaction.penalty_kind) << ','
       << fmt_exact(c.reaction.exponent);
    if (include_n) {
        os << ',' << fmt_exact(c.reaction.n);
    }
    os << ';';
    os << "noise:" << c.noise.modes << ',' << fmt_exact(c.noise.decay) << ',' << fmt_exact(c.noise.amp) << ';';
    os << "u0:" << hash_values(c.u0.values()) << ';';
    os << "newton:" << fmt_exact(c.newton_tol) << ',' << c.newton_max_iters << ';';
}

}  // namespace

std::string SolverConfig::fingerprint() const
{
    std::ostringstream os;
    write_config(os, *this, true);
    return fnv1a_hex(os.str());
}

std::string SolverConfig::base_fingerprint() const
{
    std::ostringstream os;
    write_config(os, *this, false);
    return fnv1a_hex(os.str());
}

// Stepper -------------------------------------------------------------------

PenalizedStepper::PenalizedStepper(const SolverConfig& cfg) : cfg_(cfg), stencil_(cfg.grid)
{
    cfg_.validate();
    const Convection& conv = cfg_.flux.convection();
    const Vec2 dir{conv.amplitude * conv.direction[0], conv.amplitude * conv.direction[1]};
    upwind_vertex_.resize(stencil_.cells, 0);
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        int best = 0;
        double best_score = -1e300;
        for (int k = 0; k < stencil_.vertices_per_cell; ++k) {
            const double score = dot2(dir, stencil_.vertex_coords[c][static_cast<std::size_t>(k)]);
            if (score > best_score + 1e-14) {
                best_score = score;
                best = k;
            }
        }
        upwind_vertex_[c] = best;
    }
}

double PenalizedStepper::upwind_value(const Field& u_old, std::size_t cell) const
{
    const long node = stencil_.vertex_nodes[cell][static_cast<std::size_t>(upwind_vertex_[cell])];
    return node < 0 ? 0.0 : u_old[static_cast<std::size_t>(node)];
}

PenalizedStepper::Frozen PenalizedStepper::freeze(const Field& u_old, const Field& dW) const
{
    const double dt = cfg_.grid.dt();
    Frozen fz;
    fz.rhs.resize(u_old.size());
    for (std::size_t i = 0; i < u_old.size(); ++i) {
        fz.rhs[i] = u_old[i] + dW[i] - dt * cfg_.reaction.base(u_old[i]);
    }
    fz.conv.resize(stencil_.cells);
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        fz.conv[c] = cfg_.flux.convection().eval(upwind_value(u_old, c));
    }
    return fz;
}

void PenalizedStepper::cell_gradients(std::span<const double> v, std::vector<double>& grad) const
{
    grad.resize(stencil_.entries.size());
    for (std::size_t e = 0; e < stencil_.entries.size(); ++e) {
        const auto& en = stencil_.entries[e];
        const double up = en.plus >= 0 ? v[static_cast<std::size_t>(en.plus)] : 0.0;
        const double um = en.minus >= 0 ? v[static_cast<std::size_t>(en.minus)] : 0.0;
        grad[e] = (up - um) * en.inv_h;
    }
}

double PenalizedStepper::energy(const Frozen& fz, std::span<const double> v, std::vector<double>& grad) const
{
    const Grid& g = cfg_.grid;
    const double dt = g.dt();
    const int d = stencil_.dim;
    double node_part = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double diff = v[i] - fz.rhs[i];
        node_part += 0.5 * diff * diff + dt * cfg_.reaction.penalty_potential(v[i]);
    }
    cell_gradients(v, grad);
    double cell_part = 0.0;
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
        cell_part += cfg_.flux.potential(c, xi) + dot2(fz.conv[c], xi);
    }
    return g.node_weight() * node_part + dt * g.cell_weight() * cell_part;
}

void PenalizedStepper::residual_into(const Frozen& fz, std::span<const double> v, std::vector<double>& grad,
                                     std::vector<double>& r) const
{
    const Grid& g = cfg_.grid;
    const double dt = g.dt();
    const int d = stencil_.dim;
    const double n = cfg_.reaction.n;
    r.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        r[i] = v[i] - fz.rhs[i] - dt * n * cfg_.reaction.penalty(v[i]);
    }
    cell_gradients(v, grad);
    const double scale = dt * g.cell_weight() / g.node_weight();
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
        const Vec2 a = cfg_.flux.diffusive(c, xi);
        for (int k = 0; k < d; ++k) {
            const auto& en = stencil_.entries[c * d + k];
            const double flux = (a[static_cast<std::size_t>(k)] + fz.conv[c][static_cast<std::size_t>(k)]) * en.inv_h * scale;
            // -dt div(a) adds +flux at the plus node and -flux at the minus node
            if (en.plus >= 0) {
                r[static_cast<std::size_t>(en.plus)] += flux;
            }
            if (en.minus >= 0) {
                r[static_cast<std::size_t>(en.minus)] -= flux;
            }
        }
    }
}

double PenalizedStepper::residual_norm(std::span<const double> r) const
{
    double s = 0.0;
    for (double x : r) {
        s += x * x;
    }
    return std::sqrt(s * cfg_.grid.node_weight());
}

bool PenalizedStepper::fixed_point(const Frozen& fz, std::vector<double>& v, int& iterations, double& res) const
{
    const Grid& g = cfg_.grid;
    const double dt = g.dt();
    const int d = stencil_.dim;
    const std::size_t N = v.size();
    const double scale = dt * g.cell_weight() / g.node_weight();
    const ReactionModel& rx = cfg_.reaction;
    std::vector<double> grad;
    std::vector<double> r;
    const int budget = 20 * cfg_.newton_max_iters;
    for (int it = 0; it < budget; ++it) {
        residual_into(fz, v, grad, r);
        res = residual_norm(r);
        if (!std::isfinite(res)) {
            return false;
        }
        if (res <= cfg_.newton_tol) {
            return true;
        }
        ++iterations;
        SpdMatrix A(d, N);
        std::vector<double> b(fz.rhs);
        for (std::size_t i = 0; i < N; ++i) {
            double sigma = 0.0;
            if (v[i] < 0.0 && rx.n > 0.0) {
                sigma = rx.penalty_kind == PenaltyKind::Linear
                            ? rx.n
                            : std::min(rx.n * std::pow(-v[i], rx.exponent - 2.0), 1e12);
            }
            A.add(static_cast<long>(i), static_cast<long>(i), 1.0 + dt * sigma);
        }
        for (std::size_t c = 0; c < stencil_.cells; ++c) {
            const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
            const double D = cfg_.flux.diffusivity(c, xi);
            const Vec2 s = cfg_.flux.shift_at(c);
            for (int k = 0; k < d; ++k) {
                const auto& ek = stencil_.entries[c * d + k];
                const double coef = scale * D * ek.inv_h * ek.inv_h;
                A.add(ek.plus, ek.plus, coef);
                A.add(ek.minus, ek.minus, coef);
                A.add(ek.plus, ek.minus, -coef);
                A.add(ek.minus, ek.plus, -coef);
                // explicit part: -(D s_k + F_k) enters the rhs through the divergence
                const double flux = (D * s[static_cast<std::size_t>(k)] + fz.conv[c][static_cast<std::size_t>(k)]) * ek.inv_h * scale;
                if (ek.plus >= 0) {
                    b[static_cast<std::size_t>(ek.plus)] -= flux;
                }
                if (ek.minus >= 0) {
                    b[static_cast<std::size_t>(ek.minus)] += flux;
                }
            }
        }
        if (!A.solve(b)) {
            return false;
        }
        v = std::move(b);
    }
    residual_into(fz, v, grad, r);
    res = residual_norm(r);
    return res <= cfg_.newton_tol;
}

StepResult PenalizedStepper::step(const Field& u_old, const Field& dW, int step_index) const
{
    const Grid& g = cfg_.grid;
    if (!(u_old.grid() == g) || !(dW.grid() == g)) {
        throw std::invalid_argument("step: fields must live on the solver grid");
    }
    const double dt = g.dt();
    const int d = stencil_.dim;
    const std::size_t N = u_old.size();
    const double wn = g.node_weight();
    const double scale = dt * g.cell_weight() / wn;
    const ReactionModel& rx = cfg_.reaction;
    const Frozen fz = freeze(u_old, dW);

    std::vector<double> v(fz.rhs);
    std::vector<double> grad;
    std::vector<double> scratch;
    std::vector<double> r;
    std::vector<double> trial(N);
    std::vector<double> r_trial;
    std::vector<double> shorter(N);

    StepResult out{u_old, 0, 0.0, false};
    bool converged = false;
    bool stalled = false;
    for (int it = 0; it <= cfg_.newton_max_iters; ++it) {
        residual_into(fz, v, grad, r);
        const double res = residual_norm(r);
        out.residual = res;
        if (!std::isfinite(res)) {
            throw StepError(StepError::Kind::NonFinite, res, step_index,
                            "non-finite residual in step " + std::to_string(step_index));
        }
        if (res <= cfg_.newton_tol) {
            converged = true;
            break;
        }
        if (it == cfg_.newton_max_iters) {
            break;
        }
        ++out.iterations;

        SpdMatrix H(d, N);
        for (std::size_t i = 0; i < N; ++i) {
            H.add(static_cast<long>(i), static_cast<long>(i), 1.0 + dt * rx.penalty_slope(v[i]));
        }
        for (std::size_t c = 0; c < stencil_.cells; ++c) {
            const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
            const auto J = cfg_.flux.diffusive_jacobian(c, xi);
            for (int a = 0; a < d; ++a) {
                const auto& ea = stencil_.entries[c * d + a];
                for (int b = 0; b < d; ++b) {
                    const auto& eb = stencil_.entries[c * d + b];
                    const double coef = scale * J[static_cast<std::size_t>(a * 2 + b)] * ea.inv_h * eb.inv_h;
                    if (coef == 0.0) {
                        continue;
                    }
                    H.add(ea.plus, eb.plus, coef);
                    H.add(ea.minus, eb.minus, coef);
                    H.add(ea.plus, eb.minus, -coef);
                    H.add(ea.minus, eb.plus, -coef);
                }
            }
        }
        std::vector<double> delta(r.size());
        for (std::size_t i = 0; i < N; ++i) {
            delta[i] = -r[i];
        }
        if (!H.solve(delta)) {
            stalled = true;
            break;
        }

        // Armijo on the convex energy; a strict residual decrease is also accepted
        // so that steps below energy round-off still make progress.
        const double e0 = energy(fz, v, scratch);
        double slope = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            slope += wn * r[i] * delta[i];
        }
        double t = 1.0;
        double et = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < N; ++i) {
                trial[i] = v[i] + t * delta[i];
            }
            et = energy(fz, trial, scratch);
            residual_into(fz, trial, scratch, r_trial);
            const double rt = residual_norm(r_trial);
            if (std::isfinite(et) && (et <= e0 + 1e-4 * t * slope || rt < (1.0 - 1e-4 * t) * res)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (accepted && t == 1.0 && et < e0) {
            // For p < 2 the full step can jump across a kink of the flux
            // (xi -> -xi); keep halving while the energy still drops.
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t i = 0; i < N; ++i) {
                    shorter[i] = v[i] + 0.5 * t * delta[i];
                }
                const double es = energy(fz, shorter, scratch);
                if (!(es < et - 1e-14 * std::abs(et))) {
                    break;
                }
                t *= 0.5;
                et = es;
                trial.swap(shorter);
            }
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        v.swap(trial);
    }

    if (!converged) {
        // Fallback from the best point so far.
        int extra = 0;
        double res = out.residual;
        out.used_fallback = true;
        const bool ok = fixed_point(fz, v, extra, res);
        out.iterations += extra;
        out.residual = res;
        if (!std::isfinite(res)) {
            throw StepError(StepError::Kind::NonFinite, res, step_index,
                            "non-finite residual in step " + std::to_string(step_index));
        }
        if (!ok) {
            std::ostringstream os;
            os << "inner solve did not converge in step " << step_index << " (residual " << res
               << (stalled ? ", Newton stalled" : ", iteration budget exhausted") << ")";
            throw StepError(StepError::Kind::NonConvergence, res, step_index, os.str());
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
        out.u[i] = v[i];
    }
    out.u.time_index = step_index + 1;
    if (!out.u.all_finite()) {
        throw StepError(StepError::Kind::NonFinite, out.residual, step_index, "non-finite state after step " + std::to_string(step_index));
    }
    return out;
}

Field PenalizedStepper::residual(const Field& u_old, const Field& dW, const Field& v) const
{
    const Frozen fz = freeze(u_old, dW);
    std::vector<double> grad;
    std::vector<double> r;
    residual_into(fz, v.values(), grad, r);
    return Field::from_values(cfg_.grid, std::move(r));
}

double PenalizedStepper::dissipation(const Field& u_old, const Field& v) const
{
    const Grid& g = cfg_.grid;
    const int d = stencil_.dim;
    std::vector<double> grad;
    cell_gradients(v.values(), grad);
    double s = 0.0;
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
        const Vec2 a = cfg_.flux.eval_cell(c, upwind_value(u_old, c), xi);
        s += dot2(a, xi);
    }
    return g.dt() * g.cell_weight() * s;
}

double PenalizedStepper::flux_dual_power(const Field& u_old, const Field& v) const
{
    const int d = stencil_.dim;
    const double pp = cfg_.flux.p() / (cfg_.flux.p() - 1.0);
    std::vector<double> grad;
    cell_gradients(v.values(), grad);
    double s = 0.0;
    for (std::size_t c = 0; c < stencil_.cells; ++c) {
        const Vec2 xi{grad[c * d], d == 2 ? grad[c * d + 1] : 0.0};
        const Vec2 a = cfg_.flux.eval_cell(c, upwind_value(u_old, c), xi);
        s += std::pow(std::sqrt(dot2(a, a)), pp);
    }
    return cfg_.grid.cell_weight() * s;
}

Field step(const Field& u_j, const SolverConfig& cfg, const Field& dW_j)
{
    return PenalizedStepper(cfg).step(u_j, dW_j).u;
}

// Trajectories ----------------------------------------------------------------

LevelNorms level_norms(const Field& u, double p)
{
    LevelNorms ln;
    ln.l2 = norm(u, NormKind::L2);
    ln.grad_p = norm(u, NormKind::W1p, p);
    const auto neg = pos_neg_parts(u).second;
    ln.neg_l2 = norm(neg, NormKind::L2);
    ln.neg_p = norm(neg, NormKind::Lp, p);
    ln.neg_inf = norm(neg, NormKind::Linf);
    return ln;
}

TrajectoryRecord solve_trajectory(const SolverConfig& cfg, const NoisePath& path)
{
    const auto t0 = std::chrono::steady_clock::now();
    const PenalizedStepper stepper(cfg);
    const Grid& g = cfg.grid;
    const int nt = g.nt();
    if (path.steps() != nt) {
        throw std::invalid_argument("solve_trajectory: noise path has " + std::to_string(path.steps()) +
                                    " steps, grid has " + std::to_string(nt));
    }
    const QWienerNoise noise(cfg.noise, g);
    const double hs = hs_norm_sq(noise);
    const double p = cfg.flux.p();
    const StructuralConstants k = cfg.flux.structural_constants();
    const double dt = g.dt();
    const double wn = g.node_weight();

    TrajectoryRecord rec(g);
    rec.fingerprint = cfg.fingerprint();
    rec.base_fingerprint = cfg.base_fingerprint();
    rec.seed = path.seed();
    rec.n = cfg.reaction.n;
    rec.p = p;
    rec.penalty_kind = cfg.reaction.penalty_kind;
    rec.penalty_exponent = cfg.reaction.exponent;
    rec.u.levels.reserve(static_cast<std::size_t>(nt) + 1);
    rec.norms.reserve(static_cast<std::size_t>(nt) + 1);
    rec.stochastic_integral.reserve(static_cast<std::size_t>(nt) + 1);
    rec.ledger.reserve(static_cast<std::size_t>(nt));

    Field u = cfg.u0;
    u.time_index = 0;
    rec.u.levels.push_back(u);
    rec.norms.push_back(level_norms(u, p));
    rec.stochastic_integral.push_back(0.0);

    double cumulative = 0.0;
    for (int j = 0; j < nt; ++j) {
        const Field dW = sample_increment(noise, path, j, dt);
        StepResult sr = stepper.step(u, dW, j);
        const Field& un = sr.u;

        EnergyEntry e;
        e.kinetic = 0.5 * inner(un, un) - 0.5 * inner(u, u);
        e.dissipation = stepper.dissipation(u, un);
        double react = 0.0;
        double pen = 0.0;
        for (std::size_t i = 0; i < un.size(); ++i) {
            react += cfg.reaction.base(u[i]) * un[i];
            pen += -cfg.reaction.n * cfg.reaction.penalty(un[i]) * un[i];
        }
        e.reaction = dt * wn * react;
        e.penalty = dt * wn * pen;
        e.noise = inner(u, dW);
        e.ito = 0.5 * hs * dt;
        e.step_residual = e.kinetic + e.dissipation + e.reaction + e.penalty - e.noise - e.ito;
        cumulative += e.step_residual;
        e.cumulative = cumulative;
        const double gp = std::pow(norm(un, NormKind::W1p, p), p);
        e.grad_pp = dt * gp;
        e.coercivity_bound = dt * (k.kappa * g.domain_measure() + k.C1 * gp);
        e.flux_dual = dt * stepper.flux_dual_power(u, un);
        e.newton_iterations = sr.iterations;

        rec.stochastic_integral.push_back(rec.stochastic_integral.back() + e.noise);
        rec.ledger.push_back(e);
        rec.norms.push_back(level_norms(un, p));
        rec.u.levels.push_back(un);
        u = un;
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

double energy_residual(const TrajectoryRecord& rec)
{
    return rec.ledger.empty() ? 0.0 : std::abs(rec.ledger.back().cumulative);
}

// Ensembles -------------------------------------------------------------------

double RunningStat::variance() const
{
    if (count < 2) {
        return 0.0;
    }
    const double m = mean();
    return std::max(0.0, (sumsq - count * m * m) / (count - 1));
}

double RunningStat::std_error() const
{
    return count > 1 ? std::sqrt(variance() / count) : 0.0;
}

PathStatistics path_statistics(const TrajectoryRecord& rec)
{
    PathStatistics s;
    for (const auto& ln : rec.norms) {
        s.sup_l2_sq = std::max(s.sup_l2_sq, ln.l2 * ln.l2);
    }
    const double dt = rec.grid().dt();
    for (std::size_t j = 0; j < rec.ledger.size(); ++j) {
        s.grad_pp += rec.ledger[j].grad_pp;
        s.flux_dual += rec.ledger[j].flux_dual;
        const double neg = rec.norms[j + 1].neg_l2;
        s.neg_l2_sq += dt * neg * neg;
    }
    s.penalty = rec.n * s.neg_l2_sq;
    return s;
}

void EnsembleSummary::add(const PathStatistics& s)
{
    sup_l2_sq.add(s.sup_l2_sq);
    grad_pp.add(s.grad_pp);
    flux_dual.add(s.flux_dual);
    penalty.add(s.penalty);
    neg_l2_sq.add(s.neg_l2_sq);
}

void EnsembleSummary::merge(const EnsembleSummary& o)
{
    requested += o.requested;
    sup_l2_sq.merge(o.sup_l2_sq);
    grad_pp.merge(o.grad_pp);
    flux_dual.merge(o.flux_dual);
    penalty.merge(o.penalty);
    neg_l2_sq.merge(o.neg_l2_sq);
    failures.insert(failures.end(), o.failures.begin(), o.failures.end());
}

std::uint64_t path_seed(std::uint64_t base_seed, int path_index)
{
    return base_seed ^ static_cast<std::uint64_t>(path_index);
}

EnsembleSummary monte_carlo(const SolverConfig& cfg, int num_paths, std::uint64_t base_seed, int threads)
{
    if (num_paths < 1) {
        throw std::invalid_argument("monte_carlo: num_paths must be >= 1");
    }
    cfg.validate();
    std::vector<std::optional<PathStatistics>> stats(static_cast<std::size_t>(num_paths));
    std::vector<std::string> errors(static_cast<std::size_t>(num_paths));
    auto work = [&](int worker, int stride) {
        for (int i = worker; i < num_paths; i += stride) {
            try {
                const NoisePath path(path_seed(base_seed, i), cfg.grid.nt(), cfg.noise.modes);
                stats[static_cast<std::size_t>(i)] = path_statistics(solve_trajectory(cfg, path));
            } catch (const std::exception& ex) {
                errors[static_cast<std::size_t>(i)] = ex.what();
            }
        }
    };
    const int nthreads = std::clamp(threads, 1, num_paths);
    if (nthreads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back(work, w, nthreads);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    // reduce in path order so the result does not depend on the thread count
    EnsembleSummary out;
    out.requested = num_paths;
    for (int i = 0; i < num_paths; ++i) {
        if (stats[static_cast<std::size_t>(i)]) {
            out.add(*stats[static_cast<std::size_t>(i)]);
        } else {
            out.failures.emplace_back(i, errors[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

}  // namespace penlab
