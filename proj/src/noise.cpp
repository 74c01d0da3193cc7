#include "penlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "penlab/philox.hpp"

namespace penlab {

double NoiseSpec::eigenvalue(int k) const
{
    return amp * amp * std::pow(static_cast<double>(k), -decay);
}

double NoiseSpec::smoothing_index(int dim) const
{
    return 0.5 * dim * (decay - 1.0);
}

void NoiseSpec::validate() const
{
    if (modes < 1) {
        throw std::invalid_argument("noise: modes must be >= 1");
    }
    if (!(decay > 1.0)) {
        throw std::invalid_argument("noise: trace-class violation (decay gamma must exceed 1)");
    }
    if (!(amp >= 0.0) || !std::isfinite(amp)) {
        throw std::invalid_argument("noise: amp must be finite and non-negative");
    }
}

RegularityReport validate_regularity(const NoiseSpec& spec, double p, int dim)
{
    RegularityReport r;
    r.required_index = std::max(0.5 * dim, 0.5 * (2.0 + dim) - dim / p);
    r.effective_index = spec.smoothing_index(dim);
    r.satisfied = r.effective_index > r.required_index;
    std::ostringstream os;
    if (r.satisfied) {
        os << "noise smoothness " << r.effective_index << " exceeds required index " << r.required_index;
    } else {
        os << "warning: noise smoothness " << r.effective_index << " does not exceed required index "
           << r.required_index << " (decay gamma > " << 1.0 + 2.0 * r.required_index / dim << " needed)";
    }
    r.message = os.str();
    return r;
}

NoisePath::NoisePath(std::uint64_t seed, int steps, int modes) : seed_(seed), steps_(steps), modes_(modes)
{
    if (steps < 0 || modes < 1) {
        throw std::invalid_argument("NoisePath: need steps >= 0 and modes >= 1");
    }
    const Philox4x32 gen(seed);
    draws_.resize(static_cast<std::size_t>(steps) * modes);
    for (int j = 0; j < steps; ++j) {
        for (int k = 0; k < modes; ++k) {
            draws_[static_cast<std::size_t>(j) * modes + k] = gen.normal(static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k));
        }
    }
}

NoisePath NoisePath::coarsened(int factor) const
{
    if (factor < 1 || steps_ % factor != 0) {
        throw std::invalid_argument("NoisePath::coarsened: factor must divide the step count");
    }
    NoisePath out;
    out.seed_ = seed_;
    out.steps_ = steps_ / factor;
    out.modes_ = modes_;
    out.draws_.assign(static_cast<std::size_t>(out.steps_) * modes_, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(factor));
    for (int j = 0; j < out.steps_; ++j) {
        for (int k = 0; k < modes_; ++k) {
            double s = 0.0;
            for (int m = 0; m < factor; ++m) {
                s += draw(j * factor + m, k);
            }
            out.draws_[static_cast<std::size_t>(j) * modes_ + k] = s * scale;
        }
    }
    return out;
}

QWienerNoise::QWienerNoise(const NoiseSpec& spec, const Grid& grid) : spec_(spec), grid_(grid)
{
    spec.validate();
    const int K = spec.modes;
    const std::size_t N = grid.num_nodes();
    const double pi = std::numbers::pi;
    const Vec2 L = grid.extent();

    // (laplace eigenvalue, k1, k2) ranked ascending
    std::vector<std::tuple<double, int, int>> ranked;
    if (grid.dim() == 1) {
        for (int k = 1; k <= K; ++k) {
            ranked.emplace_back(std::pow(k * pi / L[0], 2), k, 0);
        }
    } else {
        for (int k1 = 1; k1 <= K; ++k1) {
            for (int k2 = 1; k2 <= K; ++k2) {
                ranked.emplace_back(std::pow(k1 * pi / L[0], 2) + std::pow(k2 * pi / L[1], 2), k1, k2);
            }
        }
        std::sort(ranked.begin(), ranked.end());
        ranked.resize(static_cast<std::size_t>(K));
    }

    eigenvalues_.resize(K);
    sqrt_eigenvalues_.resize(K);
    laplace_.resize(K);
    basis_.resize(static_cast<std::size_t>(K) * N);
    for (int k = 0; k < K; ++k) {
        const auto [mu, k1, k2] = ranked[static_cast<std::size_t>(k)];
        eigenvalues_[k] = spec.eigenvalue(k + 1);
        sqrt_eigenvalues_[k] = spec.amp * std::pow(static_cast<double>(k + 1), -0.5 * spec.decay);
        laplace_[k] = mu;
        for (std::size_t i = 0; i < N; ++i) {
            const Vec2 x = grid.node_coord(i);
            double e = std::sqrt(2.0 / L[0]) * std::sin(k1 * pi * x[0] / L[0]);
            if (grid.dim() == 2) {
                e *= std::sqrt(2.0 / L[1]) * std::sin(k2 * pi * x[1] / L[1]);
            }
            basis_[static_cast<std::size_t>(k) * N + i] = e;
        }
    }
}

double QWienerNoise::variance_rate(std::size_t node) const
{
    double s = 0.0;
    for (int k = 0; k < spec_.modes; ++k) {
        s += eigenvalues_[k] * mode(k, node) * mode(k, node);
    }
    return s;
}

Field sample_increment(const QWienerNoise& noise, const NoisePath& path, int step_index, double dt)
{
    if (step_index < 0 || step_index >= path.steps()) {
        throw std::out_of_range("sample_increment: step index " + std::to_string(step_index) + " outside [0, " +
                                std::to_string(path.steps()) + ")");
    }
    if (path.modes() < noise.spec().modes) {
        throw std::invalid_argument("sample_increment: path has fewer modes than the noise spec");
    }
    if (dt < 0.0) {
        throw std::invalid_argument("sample_increment: dt must be non-negative");
    }
    Field out = Field::scalar(noise.grid());
    const std::size_t N = out.size();
    const double sdt = std::sqrt(dt);
    for (int k = 0; k < noise.spec().modes; ++k) {
        const double coef = noise.sqrt_eigenvalue(k) * sdt * path.draw(step_index, k);
        if (coef == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < N; ++i) {
            out[i] += coef * noise.mode(k, i);
        }
    }
    out.time_index = step_index;
    return out;
}

double hs_norm_sq(const QWienerNoise& noise)
{
    const std::size_t N = noise.grid().num_nodes();
    const double w = noise.grid().node_weight();
    double s = 0.0;
    for (int k = 0; k < noise.spec().modes; ++k) {
        double nk = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            nk += noise.mode(k, i) * noise.mode(k, i);
        }
        s += noise.eigenvalue(k) * nk * w;
    }
    return s;
}

}  // namespace penlab
