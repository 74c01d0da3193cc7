#include "penlab/capacity.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace penlab {

// Cell sets -------------------------------------------------------------------

CellSet::CellSet(const Grid& grid) : grid_(grid), mask_(static_cast<std::size_t>(grid.nt()) * grid.num_nodes(), 0) {}

CellSet CellSet::from_ranges(const Grid& grid, const std::vector<Range>& ranges)
{
    CellSet s(grid);
    const int nx = grid.nx();
    const int ny = grid.ny();
    for (const auto& r : ranges) {
        const int ylo = grid.dim() == 2 ? r.y_lo : 0;
        const int yhi = grid.dim() == 2 ? r.y_hi : 0;
        if (r.t_lo < 0 || r.t_hi >= grid.nt() || r.t_lo > r.t_hi || r.x_lo < 0 || r.x_hi >= nx || r.x_lo > r.x_hi ||
            ylo < 0 || yhi >= ny || ylo > yhi) {
            std::ostringstream os;
            os << "cell range " << r.t_lo << ':' << r.t_hi << ',' << r.x_lo << ':' << r.x_hi << " outside the grid (nt="
               << grid.nt() << ", nx=" << nx << ')';
            throw std::invalid_argument(os.str());
        }
        for (int j = r.t_lo; j <= r.t_hi; ++j) {
            for (int b = ylo; b <= yhi; ++b) {
                for (int a = r.x_lo; a <= r.x_hi; ++a) {
                    s.insert(j, static_cast<std::size_t>(grid.node_index(a + 1, b + 1)));
                }
            }
        }
    }
    return s;
}

namespace {

std::pair<int, int> parse_interval(const std::string& tok)
{
    const auto colon = tok.find(':');
    try {
        if (colon == std::string::npos) {
            const int v = std::stoi(tok);
            return {v, v};
        }
        return {std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))};
    } catch (const std::exception&) {
        throw std::invalid_argument("bad cell interval '" + tok + "'");
    }
}

}  // namespace

CellSet CellSet::parse(const Grid& grid, const std::string& text)
{
    std::vector<Range> ranges;
    std::stringstream all(text);
    std::string item;
    while (std::getline(all, item, ';')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
        if (item.empty()) {
            continue;
        }
        std::vector<std::string> parts;
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            parts.push_back(tok);
        }
        const std::size_t want = grid.dim() == 2 ? 3 : 2;
        if (parts.size() != want) {
            throw std::invalid_argument("cell range '" + item + "' needs " + std::to_string(want) + " intervals");
        }
        Range r;
        std::tie(r.t_lo, r.t_hi) = parse_interval(parts[0]);
        std::tie(r.x_lo, r.x_hi) = parse_interval(parts[1]);
        if (want == 3) {
            std::tie(r.y_lo, r.y_hi) = parse_interval(parts[2]);
        }
        ranges.push_back(r);
    }
    return from_ranges(grid, ranges);
}

std::size_t CellSet::count() const
{
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
}

bool CellSet::subset_of(const CellSet& other) const
{
    if (!(grid_ == other.grid_)) {
        return false;
    }
    for (std::size_t k = 0; k < mask_.size(); ++k) {
        if (mask_[k] && !other.mask_[k]) {
            return false;
        }
    }
    return true;
}

CellSet CellSet::united(const CellSet& other) const
{
    if (!(grid_ == other.grid_)) {
        throw std::invalid_argument("CellSet::united: grid mismatch");
    }
    CellSet out(*this);
    for (std::size_t k = 0; k < mask_.size(); ++k) {
        out.mask_[k] = static_cast<char>(mask_[k] | other.mask_[k]);
    }
    return out;
}

double CellSet::lebesgue_measure() const
{
    return static_cast<double>(count()) * grid_.dt() * grid_.node_weight();
}

void CapacityProblem::validate() const
{
    if (grid.nx() > 32 || grid.ny() > 32 || grid.nt() > 32) {
        throw std::invalid_argument("capacity problems are limited to nx, ny, nt <= 32");
    }
    if (grid.nt() < 1) {
        throw std::invalid_argument("capacity problem needs nt >= 1");
    }
    if (!(set.grid() == grid)) {
        throw std::invalid_argument("capacity set lives on a different grid");
    }
    if (max_iters < 1 || window < 1 || !(rel_tol > 0.0)) {
        throw std::invalid_argument("capacity optimizer settings must be positive");
    }
}

// Norm ------------------------------------------------------------------------

namespace {

/// L = -Delta_h with the zero ring, symmetric positive definite.
class DirichletLaplacian {
public:
    explicit DirichletLaplacian(const Grid& g) : g_(g), n_(g.num_nodes())
    {
        if (g.dim() == 2) {
            std::vector<Eigen::Triplet<double>> trip;
            const double ax = 1.0 / (g.h() * g.h());
            const double ay = 1.0 / (g.hy() * g.hy());
            for (int b = 1; b <= g.ny(); ++b) {
                for (int a = 1; a <= g.nx(); ++a) {
                    const int k = static_cast<int>(g.node_index(a, b));
                    trip.emplace_back(k, k, 2.0 * ax + 2.0 * ay);
                    const long nb[4] = {g.node_index(a - 1, b), g.node_index(a + 1, b), g.node_index(a, b - 1),
                                        g.node_index(a, b + 1)};
                    const double w[4] = {ax, ax, ay, ay};
                    for (int q = 0; q < 4; ++q) {
                        if (nb[q] >= 0) {
                            trip.emplace_back(k, static_cast<int>(nb[q]), -w[q]);
                        }
                    }
                }
            }
            A_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
            A_.setFromTriplets(trip.begin(), trip.end());
            ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(A_);
        }
    }

    void apply(const double* v, double* out) const
    {
        if (g_.dim() == 1) {
            const double a = 1.0 / (g_.h() * g_.h());
            for (std::size_t i = 0; i < n_; ++i) {
                const double left = i > 0 ? v[i - 1] : 0.0;
                const double right = i + 1 < n_ ? v[i + 1] : 0.0;
                out[i] = a * (2.0 * v[i] - left - right);
            }
            return;
        }
        Eigen::Map<const Eigen::VectorXd> x(v, static_cast<Eigen::Index>(n_));
        Eigen::Map<Eigen::VectorXd> y(out, static_cast<Eigen::Index>(n_));
        y = A_ * x;
    }

    void solve(const double* rhs, double* out) const
    {
        if (g_.dim() == 1) {
            const double a = 1.0 / (g_.h() * g_.h());
            std::vector<double> c(n_);
            double denom = 2.0 * a;
            c[0] = -a / denom;
            out[0] = rhs[0] / denom;
            for (std::size_t i = 1; i < n_; ++i) {
                denom = 2.0 * a + a * c[i - 1];
                c[i] = -a / denom;
                out[i] = (rhs[i] + a * out[i - 1]) / denom;
            }
            for (std::size_t i = n_ - 1; i-- > 0;) {
                out[i] -= c[i] * out[i + 1];
            }
            return;
        }
        Eigen::Map<const Eigen::VectorXd> b(rhs, static_cast<Eigen::Index>(n_));
        Eigen::Map<Eigen::VectorXd> x(out, static_cast<Eigen::Index>(n_));
        x = ldlt_->solve(b);
    }

private:
    Grid g_;
    std::size_t n_;
    Eigen::SparseMatrix<double> A_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

/// Evaluates the norm parts and, optionally, the gradient of sqrt(A) + sqrt(B).
class WObjective {
public:
    explicit WObjective(const Grid& g) : g_(g), lap_(g), N_(g.num_nodes()), nt_(static_cast<std::size_t>(g.nt())) {}

    WNorm parts(const std::vector<double>& v, std::vector<double>* grad) const
    {
        const double dt = g_.dt();
        const double w = g_.node_weight();
        std::vector<double> Lv(N_);
        std::vector<double> diff(N_);
        std::vector<double> z(nt_ > 1 ? (nt_ - 1) * N_ : 0);
        WNorm out;
        if (grad) {
            grad->assign(v.size(), 0.0);
        }
        std::vector<double> gA(grad ? v.size() : 0, 0.0);
        for (std::size_t j = 0; j < nt_; ++j) {
            lap_.apply(&v[j * N_], Lv.data());
            double s = 0.0;
            for (std::size_t i = 0; i < N_; ++i) {
                s += v[j * N_ + i] * Lv[i];
                if (grad) {
                    gA[j * N_ + i] = 2.0 * dt * w * Lv[i];
                }
            }
            out.A += dt * w * s;
        }
        for (std::size_t j = 0; j + 1 < nt_; ++j) {
            for (std::size_t i = 0; i < N_; ++i) {
                diff[i] = v[(j + 1) * N_ + i] - v[j * N_ + i];
            }
            lap_.solve(diff.data(), &z[j * N_]);
            double s = 0.0;
            for (std::size_t i = 0; i < N_; ++i) {
                s += diff[i] * z[j * N_ + i];
            }
            out.B += w * s / dt;
        }
        if (grad) {
            const double sa = out.A > 0.0 ? 0.5 / std::sqrt(out.A) : 0.0;
            const double sb = out.B > 0.0 ? 0.5 / std::sqrt(out.B) : 0.0;
            const double cb = 2.0 * w / dt;
            for (std::size_t j = 0; j < nt_; ++j) {
                for (std::size_t i = 0; i < N_; ++i) {
                    double gb = 0.0;
                    if (j >= 1) {
                        gb += z[(j - 1) * N_ + i];
                    }
                    if (j + 1 < nt_) {
                        gb -= z[j * N_ + i];
                    }
                    (*grad)[j * N_ + i] = sa * gA[j * N_ + i] + sb * cb * gb;
                }
            }
        }
        return out;
    }

private:
    Grid g_;
    DirichletLaplacian lap_;
    std::size_t N_;
    std::size_t nt_;
};

}  // namespace

double WNorm::value() const
{
    return std::sqrt(std::max(A, 0.0)) + std::sqrt(std::max(B, 0.0));
}

WNorm w_norm(const Grid& grid, const std::vector<double>& v)
{
    if (v.size() != static_cast<std::size_t>(grid.nt()) * grid.num_nodes()) {
        throw std::invalid_argument("w_norm: field must have nt x N values");
    }
    return WObjective(grid).parts(v, nullptr);
}

// Optimizer -------------------------------------------------------------------

namespace {

CapacityResult optimize(const CapacityProblem& prob)
{
    const std::size_t M = prob.set.size();
    CapacityResult res;
    res.minimizer.assign(M, 0.0);
    if (prob.set.empty()) {
        return res;
    }
    std::vector<double> lb(M);
    for (std::size_t k = 0; k < M; ++k) {
        lb[k] = prob.set.mask()[k] ? 1.0 : 0.0;
    }
    const WObjective obj(prob.grid);
    auto project = [&](std::vector<double>& x) {
        for (std::size_t k = 0; k < M; ++k) {
            x[k] = std::max(x[k], lb[k]);
        }
    };

    std::vector<double> x = lb;
    std::vector<double> y = x;
    std::vector<double> x_new(M);
    std::vector<double> g;
    double fx = obj.parts(x, nullptr).value();
    double t = 1.0;
    double L = 1.0;
    std::vector<double> history{fx};
    res.converged = false;
    int it = 0;
    for (; it < prob.max_iters; ++it) {
        const double fy = obj.parts(y, &g).value();
        double f_new = 0.0;
        for (int bt = 0; bt < 100; ++bt) {
            double lin = 0.0;
            double quad = 0.0;
            for (std::size_t k = 0; k < M; ++k) {
                x_new[k] = y[k] - g[k] / L;
            }
            project(x_new);
            for (std::size_t k = 0; k < M; ++k) {
                const double d = x_new[k] - y[k];
                lin += g[k] * d;
                quad += d * d;
            }
            f_new = obj.parts(x_new, nullptr).value();
            if (f_new <= fy + lin + 0.5 * L * quad + 1e-15 * std::abs(fy)) {
                break;
            }
            L *= 2.0;
        }
        if (f_new > fx) {
            // restart from the last iterate
            t = 1.0;
            y = x;
            L *= 2.0;
            history.push_back(fx);
        } else {
            const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_new;
            for (std::size_t k = 0; k < M; ++k) {
                y[k] = x_new[k] + beta * (x_new[k] - x[k]);
            }
            project(y);
            x.swap(x_new);
            fx = f_new;
            t = t_new;
            L *= 0.9;
            history.push_back(fx);
        }
        const std::size_t h = history.size();
        if (h > static_cast<std::size_t>(prob.window)) {
            const double old = history[h - 1 - static_cast<std::size_t>(prob.window)];
            if (old - fx <= prob.rel_tol * fx) {
                res.converged = true;
                ++it;
                break;
            }
        }
    }
    res.iterations = it;
    res.minimizer = x;
    res.parts = obj.parts(x, nullptr);
    res.value = res.parts.value();
    return res;
}

}  // namespace

CapacityResult estimate_capacity(const CapacityProblem& prob)
{
    prob.validate();
    return optimize(prob);
}

bool lebesgue_lower_bound_check(const CapacityProblem& prob, double estimate, double tol)
{
    return std::sqrt(prob.set.lebesgue_measure()) <= estimate + tol;
}

CapacityProblem reflected_problem(const CapacityProblem& prob)
{
    const Grid& g = prob.grid;
    const int nt = g.nt();
    const Grid ext = Grid::build(g.dim(), g.extent(), g.nx(), g.ny(), 3.0 * g.T(), 3 * nt);
    CellSet e(ext);
    for (int j = 0; j < nt; ++j) {
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            if (prob.set.contains(j, i)) {
                e.insert(j + nt, i);
            }
        }
    }
    CapacityProblem out(ext, e);
    out.max_iters = prob.max_iters;
    out.rel_tol = prob.rel_tol;
    out.window = prob.window;
    return out;
}

std::vector<double> reflect_extension(const Grid& grid, const std::vector<double>& v)
{
    const std::size_t N = grid.num_nodes();
    const std::size_t nt = static_cast<std::size_t>(grid.nt());
    if (v.size() != nt * N) {
        throw std::invalid_argument("reflect_extension: field must have nt x N values");
    }
    std::vector<double> out(3 * nt * N);
    for (std::size_t k = 0; k < 3 * nt; ++k) {
        std::size_t src;
        if (k < nt) {
            src = nt - 1 - k;
        } else if (k < 2 * nt) {
            src = k - nt;
        } else {
            src = 3 * nt - 1 - k;
        }
        std::copy_n(&v[src * N], N, &out[k * N]);
    }
    return out;
}

CapacityResult reflected_capacity(const CapacityProblem& prob)
{
    prob.validate();
    // the extended cylinder has 3 nt slabs; the coarse-grid limit applies to the base problem
    return optimize(reflected_problem(prob));
}

bool SandwichReport::within(double slack) const
{
    return extended >= base * (1.0 - slack) && extended <= base * (3.0 + slack);
}

SandwichReport capacity_sandwich(const CapacityProblem& prob)
{
    SandwichReport rep;
    const CapacityResult base = estimate_capacity(prob);
    const CapacityResult ext = reflected_capacity(prob);
    rep.base = base.value;
    rep.extended = ext.value;
    const CapacityProblem ep = reflected_problem(prob);
    rep.reflected_candidate = w_norm(ep.grid, reflect_extension(prob.grid, base.minimizer)).value();
    rep.ratio = base.value > 0.0 ? ext.value / base.value : 0.0;
    return rep;
}

}  // namespace penlab
