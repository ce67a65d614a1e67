#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace perfolab {

// Raised when an iterative solver fails to reach its tolerance; the CLI
// maps it to exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// H^{n-1}(S^{n-1})
inline double sphere_surface_area(int n) {
    return 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
}

// L^n(B_1)
inline double unit_ball_volume(int n) {
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

struct GaussLegendre {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;
};

// Nodes by Newton iteration on the Legendre recurrence.
inline GaussLegendre gauss_legendre(int m) {
    GaussLegendre g;
    g.nodes.resize(m);
    g.weights.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        g.nodes[i] = -x;
        g.nodes[m - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.weights[i] = w;
        g.weights[m - 1 - i] = w;
    }
    return g;
}

template <typename F>
double gauss_legendre_integrate(F&& f, double a, double b, int m = 64) {
    const GaussLegendre g = gauss_legendre(m);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < m; ++i) s += g.weights[i] * f(mid + half * g.nodes[i]);
    return s * half;
}

}  // namespace perfolab
