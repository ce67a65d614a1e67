#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "perfolab/slln.hpp"

namespace perfolab {

// One capacity patch attached to a very good hole: the optimal annular
// profile carrying boundary value ubar at radius theta*eps down to zero on
// the hole.
struct RecoveryPatch {
    int hole_index = -1;
    Vec centre{};
    double patch_radius = 0;  // theta * eps
    double hole_radius = 0;   // alpha_eps * rho_i
    double ubar = 0;
    bool closed_form = true;  // model integrand: explicit profile
    RadialProfile profile;    // rescaled coordinates (solver integrands)
    double exponent = 0;      // (q-n)/(q-1) for the closed form
    double alpha_eps = 1;

    double profile_value(double r) const {
        if (r <= hole_radius) return 0.0;
        if (r >= patch_radius) return ubar;
        if (closed_form) {
            const double num = std::pow(hole_radius, exponent) - std::pow(r, exponent);
            const double den =
                std::pow(hole_radius, exponent) - std::pow(patch_radius, exponent);
            return ubar * num / den;
        }
        const double sign = ubar >= 0 ? 1.0 : -1.0;
        return sign * profile.value_at(r / alpha_eps);
    }
};

// Base field plus disjoint capacity patches over the very good holes.
struct RecoveryField {
    BumpField base;
    std::vector<RecoveryPatch> patches;
    int dim = 3;

    double value(const Vec& x) const {
        for (const auto& p : patches) {
            const double r = dist(x, p.centre, dim);
            if (r < p.patch_radius) return p.profile_value(r);
        }
        return base.value(x, dim);
    }
};

struct EnergyBreakdown {
    double bulk = 0;        // f(grad u) over D minus the patches
    double capacitary = 0;  // eps^n sum over VG of phi^j(bar u_i)
    double corr_bad = 0;    // capacity bound over bad and mildly good holes
    double corr_blend = 0;  // patch-boundary mismatch shells
    double f0_bulk = 0;
    double f0_cap = 0;

    double corrections() const { return corr_bad + corr_blend; }
    double total() const { return bulk + capacitary + corr_bad + corr_blend; }
    double f0() const { return f0_bulk + f0_cap; }
    double gap() const { return std::fabs(total() - f0()) / std::fabs(f0()); }
};

// Attaches the optimal annular profile to every very good hole; the field
// equals u away from the patches and vanishes on every VG hole closure.
inline RecoveryField build_recovery(const PerforatedDomain& pd,
                                    const HoleClassification& cls,
                                    const ProcessRealization& realization, const BumpField& u,
                                    double theta, double M, const CapacityModel& model) {
    RecoveryField field;
    field.base = u;
    field.dim = pd.n;
    const double eps = pd.eps;
    const double K = critical_scale(eps, pd.n, pd.q).K;
    const double patch_radius = theta * eps;

    for (int i : cls.VG) {
        RecoveryPatch p;
        p.hole_index = i;
        p.centre = pd.holes[i].centre;
        p.patch_radius = patch_radius;
        p.hole_radius = pd.holes[i].radius;
        p.alpha_eps = pd.alpha_eps;
        p.ubar = hole_boundary_value(u, p.centre, eps, theta, M, pd.n);
        p.exponent = (pd.q - pd.n) / (pd.q - 1.0);
        if (model.integrand.kind != Integrand::Kind::Model) {
            p.closed_form = false;
            const double rho = realization.marks[pd.holes[i].source];
            p.profile = phi_truncated_profile(model, theta, K, rho, std::fabs(p.ubar), 400);
        }
        field.patches.push_back(p);
    }
    // VG separation makes the patches pairwise disjoint; assert it
    if (field.patches.size() > 1) {
        std::vector<Vec> centres;
        centres.reserve(field.patches.size());
        for (const auto& p : field.patches) centres.push_back(p.centre);
        SpatialHash hash(centres, pd.n, 2.0 * patch_radius);
        for (std::size_t a = 0; a < centres.size(); ++a)
            if (hash.nearest_other(centres[a], 2.0 * patch_radius, static_cast<int>(a)) <
                2.0 * patch_radius)
                throw std::logic_error("recovery patches overlap");
    }
    return field;
}

namespace detail {

// integral of fn over the spherical shell r in (r0, r1) around c
template <typename F>
double shell_integral(F&& fn, const Vec& c, double r0, double r1, int dim, int radial_res,
                      int angular_res) {
    const AngularGrid ang = angular_grid(dim, angular_res);
    double sum = 0;
    for (int i = 0; i < radial_res; ++i) {
        const double r = r0 + (r1 - r0) * (i + 0.5) / radial_res;
        const double dr = (r1 - r0) / radial_res;
        for (std::size_t a = 0; a < ang.dirs.size(); ++a) {
            Vec p = c;
            for (int d = 0; d < dim; ++d) p[d] += r * ang.dirs[a][d];
            sum += fn(p) * std::pow(r, dim - 1) * dr * ang.weights[a];
        }
    }
    return sum;
}

}  // namespace detail

// Energy ledger of a recovery field: quadrature bulk term, closed-form
// capacitary term, and the correction bounds for everything the patches do
// not cover.
inline EnergyBreakdown evaluate_energy(const RecoveryField& recovery,
                                       const PerforatedDomain& pd,
                                       const HoleClassification& cls,
                                       const ProcessRealization& realization,
                                       const CapacityModel& model, double lambda,
                                       const MarkLaw& law, double quad_tol = 1e-4) {
    EnergyBreakdown e;
    const int n = pd.n;
    const double eps = pd.eps;
    const auto& u = recovery.base;
    auto f_of_grad = [&](const Vec& p) {
        return model.integrand.psi(u.gradient_norm(p, n));
    };

    // whole-domain bulk integral, reused for the F0 target
    const double full_bulk = box_integrate(
        [&](const Vec& p) { return pd.domain.contains(p) ? f_of_grad(p) : 0.0; },
        pd.domain.bounding_box(), quad_tol, 32);
    double patch_bulk = 0;
    for (const auto& p : recovery.patches)
        patch_bulk += detail::shell_integral(f_of_grad, p.centre, 0.0, p.patch_radius, n, 3, 6);
    e.bulk = full_bulk - patch_bulk;

    const double theta = cls.theta;
    for (const auto& p : recovery.patches)
        e.capacitary += capacitary_cell_value(model, pd, realization, p.hole_index, p.ubar,
                                              theta) *
                        std::pow(eps, n);

    // non-VG holes: capacity of the doubled ball times the sup of |u|^q
    const double supq = std::pow(u.sup_norm(), model.q);
    auto add_bad = [&](int i) {
        const double r = pd.holes[i].radius;
        e.corr_bad += cap_q_annulus(n, pd.q, r, 2.0 * r) * supq;
    };
    for (int i : cls.bad) add_bad(i);
    for (int i : cls.MG) add_bad(i);

    // mismatch between u and ubar across a shell of width theta*eps/4
    const double shell_w = theta * eps / 4.0;
    for (const auto& p : recovery.patches) {
        auto blend = [&](const Vec& x) {
            const double grad = u.gradient_norm(x, n);
            const double mism = std::fabs(u.value(x, n) - p.ubar) / shell_w;
            return model.c2 * model.integrand.psi(grad + mism);
        };
        e.corr_blend += detail::shell_integral(blend, p.centre, p.patch_radius,
                                               p.patch_radius + shell_w, n, 2, 6);
    }

    e.f0_bulk = full_bulk;
    const double phi_unit = average_capacity_density(model, law, 1.0);
    const double uq = box_integrate(
        [&](const Vec& p) {
            return pd.domain.contains(p) ? std::pow(std::fabs(u.value(p, n)), model.q) : 0.0;
        },
        pd.domain.bounding_box(), quad_tol, 32);
    e.f0_cap = lambda * phi_unit * uq;
    return e;
}

// Per-(eps, replica) recovery energies against F0; rows carry the mean total
// energy, the F0 target, and the ledger columns.
inline StudyReport gamma_gap_study(const StudyConfig& cfg) {
    cfg.validate();
    StudyReport rep;
    rep.kind = "gamma";
    rep.seed = cfg.seed;
    rep.extra_columns = {"bulk", "capacitary", "corrections", "gap"};
    const int n = cfg.domain.dim;
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        std::vector<double> totals(cfg.replicas), gaps(cfg.replicas), bulks(cfg.replicas),
            caps(cfg.replicas), corrs(cfg.replicas), f0s(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real = sample_marks(
                sample_points(cfg.process_for(eps, detail::replica_seed(cfg, "gamma", e, r))));
            const auto pd = build_perforated_domain(real, eps, cfg.domain, cfg.model.q);
            const double reps =
                critical_radius(real, eps, cfg.model.n, cfg.model.q, cfg.alpha_exponent);
            auto cls = classify_holes(pd, real, reps);
            select_GM(cls, pd, real, cfg.M);
            split_VG_MG(cls, pd, real, cfg.theta, cfg.M, reps);
            const auto recovery =
                build_recovery(pd, cls, real, cfg.bump, cfg.theta, cfg.M, cfg.model);
            const auto energy = evaluate_energy(recovery, pd, cls, real, cfg.model,
                                                cfg.lambda, cfg.mark_law);
            totals[r] = energy.total();
            gaps[r] = energy.gap();
            bulks[r] = energy.bulk;
            caps[r] = energy.capacitary;
            corrs[r] = energy.corrections();
            f0s[r] = energy.f0();
        });
        StudyRow row = detail::reduce_row(eps, totals, f0s[0]);
        row.rel_err = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
        rep.rows.push_back(row);
        rep.extra_values.push_back(
            {std::accumulate(bulks.begin(), bulks.end(), 0.0) / bulks.size(),
             std::accumulate(caps.begin(), caps.end(), 0.0) / caps.size(),
             std::accumulate(corrs.begin(), corrs.end(), 0.0) / corrs.size(),
             row.rel_err});
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Homogenized minimizer: descent on the discrete functional
//   sum_cells ( f(grad_h u) + lambda phi(u) - psi u ) cellvol
// over grid functions vanishing on the boundary of a box domain.

struct GridSpec {
    int dim = 3;
    int cells = 32;
    Vec half_widths = make_vec(0.5, 0.5, 0.5);
};

struct HomogenizedSolution {
    GridSpec grid;
    std::vector<double> values;  // (cells+1)^dim nodes, row-major
    double energy = 0;
    int iterations = 0;
};

namespace detail {

struct GridIndexer {
    int dim, m;  // m cells per axis, m+1 nodes
    std::size_t nodes() const {
        std::size_t t = 1;
        for (int d = 0; d < dim; ++d) t *= (m + 1);
        return t;
    }
    std::size_t flat(const std::array<int, kMaxDim>& c) const {
        std::size_t f = 0;
        for (int d = dim - 1; d >= 0; --d) f = f * (m + 1) + c[d];
        return f;
    }
    bool boundary(const std::array<int, kMaxDim>& c) const {
        for (int d = 0; d < dim; ++d)
            if (c[d] == 0 || c[d] == m) return true;
        return false;
    }
};

}  // namespace detail

// Energy and gradient of the discrete functional; used by the descent and,
// with q = 2, assembled directly by the linear-solve oracle in the tests.
class HomogenizedFunctional {
  public:
    HomogenizedFunctional(const GridSpec& grid, const CapacityModel& model,
                          const MarkLaw& law, double lambda,
                          std::function<double(const Vec&)> forcing)
        : grid_(grid), model_(model), lambda_(lambda), forcing_(std::move(forcing)) {
        idx_ = {grid.dim, grid.cells};
        for (int d = 0; d < grid.dim; ++d) h_[d] = 2.0 * grid.half_widths[d] / grid.cells;
        cellvol_ = 1.0;
        for (int d = 0; d < grid.dim; ++d) cellvol_ *= h_[d];
        phi_unit_ = average_capacity_density(model, law, 1.0);
        psi_.assign(idx_.nodes(), 0.0);
        for_each_node([&](const std::array<int, kMaxDim>& c, std::size_t f) {
            psi_[f] = forcing_(node_pos(c));
        });
    }

    const detail::GridIndexer& indexer() const { return idx_; }
    double cell_volume() const { return cellvol_; }
    double phi_unit() const { return phi_unit_; }
    double lambda() const { return lambda_; }
    const std::vector<double>& forcing_values() const { return psi_; }
    std::array<double, kMaxDim> spacing() const { return h_; }

    Vec node_pos(const std::array<int, kMaxDim>& c) const {
        Vec p{};
        for (int d = 0; d < grid_.dim; ++d) p[d] = -grid_.half_widths[d] + c[d] * h_[d];
        return p;
    }

    template <typename F>
    void for_each_node(F&& fn) const {
        std::array<int, kMaxDim> c{};
        while (true) {
            fn(c, idx_.flat(c));
            int d = 0;
            for (; d < grid_.dim; ++d) {
                if (++c[d] <= grid_.cells) break;
                c[d] = 0;
            }
            if (d == grid_.dim) break;
        }
    }

    double energy(const std::vector<double>& u) const {
        double E = 0;
        const double q = model_.q;
        for_each_node([&](const std::array<int, kMaxDim>& c, std::size_t f) {
            bool corner = true;
            double g2 = 0;
            for (int d = 0; d < grid_.dim; ++d) {
                if (c[d] >= grid_.cells) {
                    corner = false;
                    break;
                }
                auto cn = c;
                ++cn[d];
                const double diff = (u[idx_.flat(cn)] - u[f]) / h_[d];
                g2 += diff * diff;
            }
            if (corner) E += model_.integrand.psi(std::sqrt(g2)) * cellvol_;
            E += (lambda_ * phi_unit_ * std::pow(std::fabs(u[f]), q) - psi_[f] * u[f]) *
                 cellvol_;
        });
        return E;
    }

    void gradient(const std::vector<double>& u, std::vector<double>& g) const {
        g.assign(u.size(), 0.0);
        const double q = model_.q;
        for_each_node([&](const std::array<int, kMaxDim>& c, std::size_t f) {
            bool corner = true;
            double g2 = 0;
            std::array<double, kMaxDim> diffs{};
            std::array<std::size_t, kMaxDim> nbr{};
            for (int d = 0; d < grid_.dim; ++d) {
                if (c[d] >= grid_.cells) {
                    corner = false;
                    break;
                }
                auto cn = c;
                ++cn[d];
                nbr[d] = idx_.flat(cn);
                diffs[d] = (u[nbr[d]] - u[f]) / h_[d];
                g2 += diffs[d] * diffs[d];
            }
            if (corner) {
                const double m = std::sqrt(g2);
                const double w = m > 0 ? model_.integrand.dpsi(m) / m : 0.0;
                for (int d = 0; d < grid_.dim; ++d) {
                    const double t = w * diffs[d] * cellvol_ / h_[d];
                    g[f] -= t;
                    g[nbr[d]] += t;
                }
            }
            const double s = u[f] == 0.0 ? 0.0 : (u[f] > 0 ? 1.0 : -1.0);
            g[f] += (lambda_ * phi_unit_ * q * std::pow(std::fabs(u[f]), q - 1.0) * s -
                     psi_[f]) *
                    cellvol_;
        });
        // boundary nodes are pinned to zero
        for_each_node([&](const std::array<int, kMaxDim>& c, std::size_t f) {
            if (idx_.boundary(c)) g[f] = 0.0;
        });
    }

  private:
    GridSpec grid_;
    CapacityModel model_;
    double lambda_;
    std::function<double(const Vec&)> forcing_;
    detail::GridIndexer idx_;
    std::array<double, kMaxDim> h_{};
    double cellvol_ = 1;
    double phi_unit_ = 0;
    std::vector<double> psi_;
};

// Polak-Ribiere conjugate descent with a secant line search.  Convex
// functional, zero initial guess; boundary values stay pinned.
inline HomogenizedSolution homogenized_minimize(const GridSpec& grid,
                                                const CapacityModel& model,
                                                const MarkLaw& law, double lambda,
                                                const std::function<double(const Vec&)>& psi,
                                                double grad_tol = 1e-12, int max_iters = 20000) {
    HomogenizedFunctional F(grid, model, law, lambda, psi);
    const std::size_t N = F.indexer().nodes();
    std::vector<double> u(N, 0.0), g(N), g_prev(N), dir(N, 0.0), g_trial(N), u_trial(N);

    F.gradient(u, g);
    double g_inf = 0;
    for (double v : g) g_inf = std::fmax(g_inf, std::fabs(v));
    const double tol = grad_tol * std::fmax(1.0, g_inf);

    HomogenizedSolution sol;
    sol.grid = grid;
    if (g_inf <= tol) {  // psi == 0: zero is the minimizer
        sol.values = u;
        sol.energy = F.energy(u);
        return sol;
    }

    for (std::size_t i = 0; i < N; ++i) dir[i] = -g[i];
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        // secant step on phi(t) = E(u + t dir)
        double gd = 0;
        for (std::size_t i = 0; i < N; ++i) gd += g[i] * dir[i];
        if (gd >= 0) {  // stale direction; restart with steepest descent
            for (std::size_t i = 0; i < N; ++i) dir[i] = -g[i];
            gd = 0;
            for (std::size_t i = 0; i < N; ++i) gd += g[i] * dir[i];
        }
        double t1 = 1.0;
        for (std::size_t i = 0; i < N; ++i) u_trial[i] = u[i] + t1 * dir[i];
        F.gradient(u_trial, g_trial);
        double gd1 = 0;
        for (std::size_t i = 0; i < N; ++i) gd1 += g_trial[i] * dir[i];
        double step = gd1 != gd ? -gd * t1 / (gd1 - gd) : t1;
        if (!(step > 0) || !std::isfinite(step)) step = t1;
        // refine once more (handles q != 2 curvature drift)
        for (std::size_t i = 0; i < N; ++i) u_trial[i] = u[i] + step * dir[i];
        F.gradient(u_trial, g_trial);
        double gd2 = 0;
        for (std::size_t i = 0; i < N; ++i) gd2 += g_trial[i] * dir[i];
        if (std::fabs(gd2) > 1e-3 * std::fabs(gd) && gd2 != gd) {
            const double step2 = step - gd2 * step / (gd2 - gd);
            if (step2 > 0 && std::isfinite(step2)) {
                step = step2;
                for (std::size_t i = 0; i < N; ++i) u_trial[i] = u[i] + step * dir[i];
                F.gradient(u_trial, g_trial);
            }
        }
        u.swap(u_trial);
        g_prev.swap(g);
        g.swap(g_trial);

        g_inf = 0;
        for (double v : g) g_inf = std::fmax(g_inf, std::fabs(v));
        if (g_inf <= tol) break;

        double num = 0, den = 0;
        for (std::size_t i = 0; i < N; ++i) {
            num += g[i] * (g[i] - g_prev[i]);
            den += g_prev[i] * g_prev[i];
        }
        const double beta = std::fmax(0.0, num / den);
        for (std::size_t i = 0; i < N; ++i) dir[i] = -g[i] + beta * dir[i];
    }
    if (iter >= max_iters)
        throw NumericalError("homogenized descent did not reach the gradient tolerance");
    sol.values = std::move(u);
    sol.energy = F.energy(sol.values);
    sol.iterations = iter;
    return sol;
}

}  // namespace perfolab
