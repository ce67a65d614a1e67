#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfolab/mark_law.hpp"
#include "perfolab/rng.hpp"
#include "perfolab/vec.hpp"

namespace perfolab {

struct Correlation {
    enum class Kind { Independent, GaussianCopula };
    Kind kind = Kind::Independent;
    double gamma_decay = 0.0;  // latent correlation (1+r^gamma)^-1
};

struct ProcessConfig {
    double intensity = 1.0;  // points per unit volume
    Box window;
    MarkLaw mark_law = MarkLaw::constant(1.0);
    Correlation correlation;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(intensity >= 0)) throw std::invalid_argument("intensity must be >= 0");
        if (window.dim < 1 || window.dim > kMaxDim)
            throw std::invalid_argument("window dimension must be 1..3");
        if (!(window.volume() > 0)) throw std::invalid_argument("window must have positive volume");
    }

    // moment condition <rho^{n-q}> < +inf; for Pareto this is beta > n-q+1
    void validate_for_exponents(int n, double q) const {
        if (mark_law.kind() == MarkLaw::Kind::Pareto &&
            !(mark_law.param_b() > n - q + 1.0))
            throw std::invalid_argument("pareto tail too heavy: requires beta > n-q+1");
        if (!mark_law.has_moment(n - q))
            throw std::invalid_argument("mark law lacks the n-q moment");
    }
};

// One draw of the marked point process on the blown-up window.
struct ProcessRealization {
    std::vector<Vec> points;
    std::vector<double> marks;  // empty until sample_marks
    ProcessConfig config;
    std::uint64_t seed = 0;

    int dim() const { return config.window.dim; }

    void check_invariants() const {
        if (!marks.empty() && marks.size() != points.size())
            throw std::logic_error("points and marks must have equal length");
        for (double m : marks)
            if (!(m > 0)) throw std::logic_error("marks must be strictly positive");
        for (const Vec& p : points)
            if (!config.window.contains(p)) throw std::logic_error("point outside window");
    }
};

// Homogeneous Poisson sampling: count from Poisson(lambda * vol), then
// uniform placement.  Exact for stationary intensity.
inline ProcessRealization sample_points(const ProcessConfig& config) {
    config.validate();
    ProcessRealization r;
    r.config = config;
    r.seed = config.seed;
    Rng rng(derive_seed(config.seed, "points"));
    const double mean = config.intensity * config.window.volume();
    const std::uint64_t count = rng.poisson(mean);
    r.points.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Vec p{};
        for (int d = 0; d < config.window.dim; ++d)
            p[d] = rng.uniform(config.window.lo[d], config.window.hi[d]);
        r.points[i] = p;
    }
    return r;
}

namespace detail {

inline bool cholesky_in_place(std::vector<double>& a, int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0) return false;
        const double dj = std::sqrt(d);
        a[j * n + j] = dj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / dj;
        }
        for (int k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
    }
    return true;
}

// Cyclic Jacobi eigendecomposition for symmetric matrices.  The kernel
// (1+r^gamma)^-1 need not be positive definite on a finite configuration,
// so the sampler projects onto the PSD cone by clipping eigenvalues.
inline void jacobi_eigen(std::vector<double>& a, std::vector<double>& v,
                         std::vector<double>& eig, int n) {
    v.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-24 * n * n) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eig.resize(n);
    for (int i = 0; i < n; ++i) eig[i] = a[i * n + i];
}

}  // namespace detail

// Fills marks.  Independent marking draws i.i.d. from the law; the Gaussian
// copula draws a latent correlated Gaussian vector and pushes it through the
// law's inverse CDF, giving mark correlations that decay like (1+r^gamma)^-1.
inline ProcessRealization sample_marks(const ProcessRealization& input) {
    ProcessRealization r = input;
    const auto& cfg = r.config;
    const std::size_t n = r.points.size();
    r.marks.resize(n);
    Rng rng(derive_seed(r.seed, "marks"));

    if (cfg.correlation.kind == Correlation::Kind::Independent) {
        for (std::size_t i = 0; i < n; ++i) r.marks[i] = cfg.mark_law.quantile(rng.uniform01());
        r.check_invariants();
        return r;
    }

    const double gamma = cfg.correlation.gamma_decay;
    if (!(gamma > cfg.window.dim))
        throw std::invalid_argument("copula decay must exceed the dimension (mixing condition)");
    if (n == 0) return r;

    // dense latent covariance; intended for moderate point counts
    const int ni = static_cast<int>(n);
    std::vector<double> cov(n * n);
    for (int i = 0; i < ni; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double rij = dist(r.points[i], r.points[j], cfg.window.dim);
            const double c = 1.0 / (1.0 + std::pow(rij, gamma));
            cov[i * n + j] = cov[j * n + i] = c;
        }
    }
    // factor Sigma = B B^T; fall back to eigenvalue clipping when the
    // configuration makes Sigma indefinite
    std::vector<double> B = cov;
    if (!detail::cholesky_in_place(B, ni)) {
        std::vector<double> work = cov, V, eig;
        detail::jacobi_eigen(work, V, eig, ni);
        B.assign(n * n, 0.0);
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < ni; ++j)
                B[i * n + j] = V[i * n + j] * std::sqrt(std::fmax(eig[j], 0.0));
    }
    std::vector<double> z(n), latent(n);
    for (auto& v : z) v = rng.normal();
    for (int i = 0; i < ni; ++i) {
        double s = 0;
        double var = 0;
        for (int k = 0; k < ni; ++k) {
            s += B[i * n + k] * z[k];
            var += B[i * n + k] * B[i * n + k];
        }
        latent[i] = var > 0 ? s / std::sqrt(var) : 0.0;  // exact unit marginals
    }
    for (int i = 0; i < ni; ++i)
        r.marks[i] = cfg.mark_law.quantile(normal_cdf(latent[i]));
    r.check_invariants();
    return r;
}

// delta-isolated sub-process: keeps points whose nearest neighbour in the
// *original* realization lies at distance >= delta.
inline ProcessRealization thin(const ProcessRealization& input, double delta) {
    if (delta < 0) throw std::invalid_argument("thinning distance must be >= 0");
    if (delta == 0 || input.points.size() < 2) return input;
    const int dim = input.dim();
    SpatialHash hash(input.points, dim, delta);
    ProcessRealization out;
    out.config = input.config;
    out.seed = input.seed;
    out.points.reserve(input.points.size());
    const bool with_marks = !input.marks.empty();
    for (std::size_t i = 0; i < input.points.size(); ++i) {
        const double nn =
            hash.nearest_other(input.points[i], delta, static_cast<int>(i));
        if (nn >= delta) {
            out.points.push_back(input.points[i]);
            if (with_marks) out.marks.push_back(input.marks[i]);
        }
    }
    return out;
}

// blown-up nearest-neighbour distance per point (+inf for singletons)
inline std::vector<double> nearest_neighbor_distances(const std::vector<Vec>& pts, int dim,
                                                      double search_radius) {
    std::vector<double> out(pts.size(), HUGE_VAL);
    if (pts.size() < 2) return out;
    SpatialHash hash(pts, dim, search_radius);
    for (std::size_t i = 0; i < pts.size(); ++i)
        out[i] = hash.nearest_other(pts[i], search_radius, static_cast<int>(i));
    return out;
}

}  // namespace perfolab
