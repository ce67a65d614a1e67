#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "perfolab/numeric.hpp"
#include "perfolab/process.hpp"
#include "perfolab/vec.hpp"

namespace perfolab {

// Bounded star-shaped domain centred at the origin: box or ball.
struct DomainDescriptor {
    enum class Shape { BoxShape, BallShape };
    Shape shape = Shape::BoxShape;
    int dim = 3;
    Vec half_widths = make_vec(0.5, 0.5, 0.5);  // box
    double radius = 0.5;                        // ball

    static DomainDescriptor box(int dim, const Vec& half_widths) {
        DomainDescriptor d;
        d.shape = Shape::BoxShape;
        d.dim = dim;
        d.half_widths = half_widths;
        return d;
    }
    static DomainDescriptor ball(int dim, double radius) {
        DomainDescriptor d;
        d.shape = Shape::BallShape;
        d.dim = dim;
        d.radius = radius;
        return d;
    }

    bool contains(const Vec& p) const {
        if (shape == Shape::BoxShape) {
            for (int d = 0; d < dim; ++d)
                if (std::fabs(p[d]) > half_widths[d]) return false;
            return true;
        }
        return norm(p, dim) <= radius;
    }

    double volume() const {
        if (shape == Shape::BoxShape) {
            double v = 1;
            for (int d = 0; d < dim; ++d) v *= 2 * half_widths[d];
            return v;
        }
        return perfolab::unit_ball_volume(dim) * std::pow(radius, dim);
    }

    double dist_to_boundary(const Vec& p) const {
        if (shape == Shape::BallShape) return radius - norm(p, dim);
        double m = HUGE_VAL;
        for (int d = 0; d < dim; ++d)
            m = std::fmin(m, half_widths[d] - std::fabs(p[d]));
        return m;
    }

    Box bounding_box() const {
        if (shape == Shape::BoxShape) return Box::centered(dim, half_widths);
        return Box::centered(dim, make_vec(radius, radius, radius));
    }
};

// alpha_eps = eps^{n/(n-q)} and the blow-up ratio K = eps/alpha_eps.
struct CriticalScale {
    double alpha_eps;
    double K;
};

inline CriticalScale critical_scale(double eps, int n, double q) {
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    if (!(q > 1.0 && q < n)) throw std::invalid_argument("requires 1 < q < n");
    CriticalScale s;
    s.alpha_eps = std::pow(eps, static_cast<double>(n) / (n - q));
    s.K = std::pow(eps, -q / (n - q));
    return s;
}

struct Hole {
    Vec centre;     // physical coordinates eps * x_i
    double radius;  // alpha_eps * rho_i
    int source;     // index into the generating realization
};

// eps-scaled perforated domain.  Holes live in physical coordinates; the
// blown-up configuration stays in the ProcessRealization.
struct PerforatedDomain {
    double eps = 1.0;
    int n = 3;
    double q = 2.0;
    double alpha_eps = 1.0;
    DomainDescriptor domain;
    std::vector<Hole> holes;
    std::vector<Vec> hole_centres;  // backing store for the spatial index
    SpatialHash index;

    std::vector<int> query_neighbors(const Vec& centre, double radius) const {
        if (radius < 0) throw std::invalid_argument("radius must be >= 0");
        return index.query(centre, radius);
    }
};

inline PerforatedDomain build_perforated_domain(const ProcessRealization& realization,
                                                double eps, const DomainDescriptor& domain,
                                                double q) {
    const int n = domain.dim;
    if (realization.dim() != n)
        throw std::invalid_argument("realization dimension does not match domain");
    const Box blown_up = domain.bounding_box().scaled(1.0 / eps);
    if (!realization.config.window.covers(blown_up))
        throw std::invalid_argument("realization window does not cover eps^-1 D");
    if (!realization.marks.empty() && realization.marks.size() != realization.points.size())
        throw std::invalid_argument("realization marks incomplete");

    PerforatedDomain pd;
    pd.eps = eps;
    pd.n = n;
    pd.q = q;
    pd.alpha_eps = critical_scale(eps, n, q).alpha_eps;
    pd.domain = domain;
    for (std::size_t i = 0; i < realization.points.size(); ++i) {
        const Vec& x = realization.points[i];
        Vec scaled{};
        for (int d = 0; d < n; ++d) scaled[d] = eps * x[d];
        // membership in blown-up coordinates: x in eps^-1 D <=> eps x in D
        if (!domain.contains(scaled)) continue;
        Hole h;
        h.centre = scaled;
        h.radius = pd.alpha_eps * (realization.marks.empty() ? 1.0 : realization.marks[i]);
        h.source = static_cast<int>(i);
        pd.holes.push_back(h);
        pd.hole_centres.push_back(scaled);
    }
    double cell = 1.0;
    if (!pd.holes.empty()) {
        const double vol = domain.volume();
        cell = std::pow(vol / static_cast<double>(pd.holes.size()), 1.0 / n);
    }
    pd.index = SpatialHash(pd.hole_centres, n, cell);
    return pd;
}

// Spherical annulus used for the local boundary averages.
struct Annulus {
    Vec centre{};
    double r_inner = 0.0;
    double r_outer = 1.0;
    int level = 0;

    void validate() const {
        if (!(r_inner >= 0 && r_inner < r_outer)) throw std::invalid_argument("bad annulus radii");
    }
};

// C^l_{eps,theta,M}(centre): radii (2^{-(l+1)} theta eps / M, 2^{-l} theta eps / M)
inline Annulus matching_annulus(const Vec& centre, double eps, double theta, double M,
                                int level = 0) {
    Annulus a;
    a.centre = centre;
    a.level = level;
    const double outer = std::pow(2.0, -level) * theta * eps / M;
    a.r_inner = 0.5 * outer;
    a.r_outer = outer;
    return a;
}

struct AngularGrid {
    // midpoint nodes on S^{n-1} with equal-measure weights
    std::vector<Vec> dirs;
    std::vector<double> weights;  // sum to surface measure of S^{n-1}
};

inline AngularGrid angular_grid(int dim, int res) {
    AngularGrid g;
    if (dim == 1) {
        g.dirs = {make_vec(1), make_vec(-1)};
        g.weights = {1.0, 1.0};
    } else if (dim == 2) {
        for (int k = 0; k < res; ++k) {
            const double phi = 2.0 * M_PI * (k + 0.5) / res;
            g.dirs.push_back(make_vec(std::cos(phi), std::sin(phi)));
            g.weights.push_back(2.0 * M_PI / res);
        }
    } else {
        // product midpoint rule in (cos(theta), phi); exact sphere measure
        for (int i = 0; i < res; ++i) {
            const double c = -1.0 + 2.0 * (i + 0.5) / res;
            const double s = std::sqrt(std::fmax(0.0, 1.0 - c * c));
            for (int k = 0; k < res; ++k) {
                const double phi = 2.0 * M_PI * (k + 0.5) / res;
                g.dirs.push_back(make_vec(s * std::cos(phi), s * std::sin(phi), c));
                g.weights.push_back((2.0 / res) * (2.0 * M_PI / res));
            }
        }
    }
    return g;
}

// Volume average of a field over an annulus by product midpoint quadrature
// (radial shells x angular directions).
template <typename F>
double annulus_average(F&& u, const Annulus& annulus, int dim, int radial_res = 64,
                       int angular_res = 64) {
    annulus.validate();
    const AngularGrid ang = angular_grid(dim, angular_res);
    double sum = 0.0;
    double measure = 0.0;
    for (int i = 0; i < radial_res; ++i) {
        const double r =
            annulus.r_inner + (annulus.r_outer - annulus.r_inner) * (i + 0.5) / radial_res;
        const double dr = (annulus.r_outer - annulus.r_inner) / radial_res;
        const double radial_w = std::pow(r, dim - 1) * dr;
        for (std::size_t a = 0; a < ang.dirs.size(); ++a) {
            Vec p = annulus.centre;
            for (int d = 0; d < dim; ++d) p[d] += r * ang.dirs[a][d];
            sum += u(p) * radial_w * ang.weights[a];
            measure += radial_w * ang.weights[a];
        }
    }
    return sum / measure;
}

// Volume average over a ball, same construction.
template <typename F>
double ball_average(F&& u, const Vec& centre, double radius, int dim, int radial_res = 16,
                    int angular_res = 12) {
    const AngularGrid ang = angular_grid(dim, angular_res);
    double sum = 0.0;
    double measure = 0.0;
    for (int i = 0; i < radial_res; ++i) {
        const double r = radius * (i + 0.5) / radial_res;
        const double dr = radius / radial_res;
        const double radial_w = std::pow(r, dim - 1) * dr;
        for (std::size_t a = 0; a < ang.dirs.size(); ++a) {
            Vec p = centre;
            for (int d = 0; d < dim; ++d) p[d] += r * ang.dirs[a][d];
            sum += u(p) * radial_w * ang.weights[a];
            measure += radial_w * ang.weights[a];
        }
    }
    return sum / measure;
}

}  // namespace perfolab
