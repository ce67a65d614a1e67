#pragma once

#include <cmath>

#include "perfolab/geometry.hpp"
#include "perfolab/vec.hpp"

namespace perfolab {

// Smooth compactly supported bump
//   u(x) = A exp(1 - 1/(1 - s^2)),  s = |x - c| / w < 1,
// with u(c) = A and support B_w(c).
struct BumpField {
    Vec centre{};
    double width = 0.3;
    double amplitude = 1.0;

    double value(const Vec& x, int dim) const {
        const double s2 = dist2(x, centre, dim) / (width * width);
        if (s2 >= 1.0) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
    }

    Vec gradient(const Vec& x, int dim) const {
        Vec g{};
        const double s2 = dist2(x, centre, dim) / (width * width);
        if (s2 >= 1.0) return g;
        const double u = amplitude * std::exp(1.0 - 1.0 / (1.0 - s2));
        const double d = 1.0 - s2;
        const double factor = -2.0 * u / (d * d * width * width);
        for (int k = 0; k < dim; ++k) g[k] = factor * (x[k] - centre[k]);
        return g;
    }

    double gradient_norm(const Vec& x, int dim) const { return norm(gradient(x, dim), dim); }

    double sup_norm() const { return std::fabs(amplitude); }

    void validate_inside(const DomainDescriptor& domain) const {
        if (width <= 0) throw std::invalid_argument("bump width must be positive");
        if (domain.dist_to_boundary(centre) <= width)
            throw std::invalid_argument("bump support must lie strictly inside D");
    }
};

// Tensor-product midpoint quadrature over a box, refined until the relative
// change between dyadic grids drops below tol.
template <typename F>
double box_integrate(F&& f, const Box& box, double tol = 1e-4, int start_cells = 16,
                     int max_cells = 512) {
    double prev = HUGE_VAL;
    for (int m = start_cells; m <= max_cells; m *= 2) {
        double sum = 0.0;
        std::array<double, kMaxDim> h{};
        for (int d = 0; d < box.dim; ++d) h[d] = (box.hi[d] - box.lo[d]) / m;
        double cellvol = 1.0;
        for (int d = 0; d < box.dim; ++d) cellvol *= h[d];
        std::array<int, kMaxDim> idx{};
        while (true) {
            Vec p{};
            for (int d = 0; d < box.dim; ++d) p[d] = box.lo[d] + (idx[d] + 0.5) * h[d];
            sum += f(p);
            int d = 0;
            for (; d < box.dim; ++d) {
                if (++idx[d] < m) break;
                idx[d] = 0;
            }
            if (d == box.dim) break;
        }
        sum *= cellvol;
        if (prev != HUGE_VAL && std::fabs(sum - prev) <= tol * (std::fabs(sum) + 1e-300))
            return sum;
        prev = sum;
    }
    return prev;
}

}  // namespace perfolab
