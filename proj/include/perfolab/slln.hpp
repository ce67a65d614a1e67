#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "perfolab/capacity.hpp"
#include "perfolab/classify.hpp"
#include "perfolab/field.hpp"
#include "perfolab/parallel.hpp"

namespace perfolab {

struct StudyConfig {
    double lambda = 1.0;
    MarkLaw mark_law = MarkLaw::constant(1.0);
    Correlation correlation;
    DomainDescriptor domain = DomainDescriptor::box(3, make_vec(0.5, 0.5, 0.5));
    CapacityModel model = CapacityModel::model(3, 2.0);
    std::vector<double> eps_grid = {0.1, 0.05, 0.025};
    int replicas = 10;
    double M = 8.0;
    double theta = 1.0 / 32.0;
    double alpha_exponent = 1.9;
    BumpField bump{make_vec(0, 0, 0), 0.45, 1.0};
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const {
        if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
        if (eps_grid.empty()) throw std::invalid_argument("eps grid must be non-empty");
        for (std::size_t i = 1; i < eps_grid.size(); ++i)
            if (!(eps_grid[i] < eps_grid[i - 1]))
                throw std::invalid_argument("eps grid must be strictly decreasing");
        if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
        bump.validate_inside(domain);
        if (!(alpha_exponent > 0 && alpha_exponent < model.q / (model.n - model.q)))
            throw std::invalid_argument("alpha_exponent outside (0, q/(n-q))");
        model.validate();
        if (domain.dim != model.n) throw std::invalid_argument("domain and model dimension differ");
    }

    ProcessConfig process_for(double eps, std::uint64_t replica_seed) const {
        ProcessConfig c;
        c.intensity = lambda;
        c.window = domain.bounding_box().scaled(1.0 / eps);
        c.mark_law = mark_law;
        c.correlation = correlation;
        c.seed = replica_seed;
        return c;
    }
};

struct StudyRow {
    double eps = 0;
    int replicas = 0;
    double mean = 0;
    double stddev = 0;
    double target = 0;
    double rel_err = 0;  // |mean - target| / |target| when target != 0, else |mean|
};

struct StudyReport {
    std::string kind;
    std::vector<StudyRow> rows;
    std::vector<std::string> extra_columns;        // optional per-eps extras
    std::vector<std::vector<double>> extra_values; // extra_values[row][col]
    std::uint64_t seed = 0;

    // inversions of the error-decay trend along the (decreasing) eps grid
    int error_inversions() const {
        int inv = 0;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].rel_err > rows[i - 1].rel_err) ++inv;
        return inv;
    }
};

namespace detail {

inline StudyRow reduce_row(double eps, const std::vector<double>& values, double target) {
    StudyRow row;
    row.eps = eps;
    row.replicas = static_cast<int>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    row.mean = mean;
    row.stddev = values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
    row.target = target;
    row.rel_err = target != 0.0 ? std::fabs(mean - target) / std::fabs(target)
                                : std::fabs(mean);
    return row;
}

// One substream per (eps, replica) shared by every study kind: the same
// configuration seed then sees the same realizations everywhere, which also
// makes the p = 0 mark sum agree with the counting study exactly.
inline std::uint64_t replica_seed(const StudyConfig& cfg, const std::string&,
                                  std::size_t eps_index, std::size_t replica) {
    return derive_seed(cfg.seed, "study-replica", eps_index, replica);
}

// kappa(z, y) = phi_{theta, y ^ M}(z) - phi_{theta, y ^ M}(0); for the
// supported integrand family the j-limit of the truncated capacities is the
// full-space density, so this reduces to the closed form.
inline double kernel_kappa(const CapacityModel& model, double z_magnitude, double y,
                           double M) {
    const double yM = std::fmin(y, M);
    return model.integrand.limit_coefficient() *
           CapacityModel::c_nq_value(model.n, model.q) *
           std::pow(std::fabs(z_magnitude), model.q) * std::pow(yM, model.n - model.q);
}

}  // namespace detail

// Local boundary value: average of u over the dyadic matching annulus
// C^0_{eps,theta,M} around a hole centre.  Shared by the Riemann-sum study
// and the recovery construction so the two agree exactly.
inline double hole_boundary_value(const BumpField& u, const Vec& centre, double eps,
                                  double theta, double M, int dim) {
    const Annulus ann = matching_annulus(centre, eps, theta, M, 0);
    return annulus_average([&](const Vec& p) { return u.value(p, dim); }, ann, dim, 4, 6);
}

// phi^j_{theta, rho_i}(bar u_i) for one hole, in rescaled units (multiply by
// eps^n for the physical patch energy).  Model integrand: closed form;
// otherwise the radial solver.
inline double capacitary_cell_value(const CapacityModel& model, const PerforatedDomain& pd,
                                    const ProcessRealization& realization, int hole_index,
                                    double ubar, double theta) {
    const double rho = realization.marks[pd.holes[hole_index].source];
    const double K = critical_scale(pd.eps, pd.n, pd.q).K;
    if (model.integrand.kind == Integrand::Kind::Model)
        return model_truncated_value(model.n, model.q, rho, theta * K, ubar);
    return phi_truncated(model, theta, K, rho, std::fabs(ubar), 400);
}

// eps^n N_eps(D) against lambda vol(D)
inline StudyReport counting_study(const StudyConfig& cfg) {
    cfg.validate();
    StudyReport rep;
    rep.kind = "counting";
    rep.seed = cfg.seed;
    const double target = cfg.lambda * cfg.domain.volume();
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        std::vector<double> vals(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real =
                sample_points(cfg.process_for(eps, detail::replica_seed(cfg, "counting", e, r)));
            std::size_t inside = 0;
            for (const auto& x : real.points) {
                Vec p{};
                for (int d = 0; d < cfg.domain.dim; ++d) p[d] = eps * x[d];
                if (cfg.domain.contains(p)) ++inside;
            }
            vals[r] = std::pow(eps, cfg.domain.dim) * static_cast<double>(inside);
        });
        rep.rows.push_back(detail::reduce_row(eps, vals, target));
    }
    return rep;
}

// eps^n sum of rho^p over the blown-up domain against lambda <rho^p> vol(D)
inline StudyReport mark_sum_study(const StudyConfig& cfg, double p) {
    cfg.validate();
    const double moment = cfg.mark_law.moment(p);  // throws when divergent
    StudyReport rep;
    rep.kind = "marksum";
    rep.seed = cfg.seed;
    const double target = cfg.lambda * moment * cfg.domain.volume();
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        std::vector<double> vals(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real = sample_marks(
                sample_points(cfg.process_for(eps, detail::replica_seed(cfg, "marksum", e, r))));
            double sum = 0;
            for (std::size_t i = 0; i < real.points.size(); ++i) {
                Vec pos{};
                for (int d = 0; d < cfg.domain.dim; ++d) pos[d] = eps * real.points[i][d];
                if (cfg.domain.contains(pos)) sum += std::pow(real.marks[i], p);
            }
            vals[r] = std::pow(eps, cfg.domain.dim) * sum;
        });
        rep.rows.push_back(detail::reduce_row(eps, vals, target));
    }
    return rep;
}

// eps^n sum over bad holes of rho^{n-q} (and the bad count), both tending
// to zero along the eps grid
inline StudyReport negligible_subset_study(const StudyConfig& cfg) {
    cfg.validate();
    StudyReport rep;
    rep.kind = "negligible";
    rep.seed = cfg.seed;
    rep.extra_columns = {"eps_n_bad_count"};
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        std::vector<double> vals(cfg.replicas), counts(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real = sample_marks(sample_points(
                cfg.process_for(eps, detail::replica_seed(cfg, "negligible", e, r))));
            const auto pd = build_perforated_domain(real, eps, cfg.domain, cfg.model.q);
            const double reps =
                critical_radius(real, eps, cfg.model.n, cfg.model.q, cfg.alpha_exponent);
            const auto cls = classify_holes(pd, real, reps);
            vals[r] = bad_capacity_sum(cls, pd, real);
            counts[r] = std::pow(eps, cfg.domain.dim) * static_cast<double>(cls.bad.size());
        });
        rep.rows.push_back(detail::reduce_row(eps, vals, 0.0));
        const double cmean =
            std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
        rep.extra_values.push_back({cmean});
    }
    return rep;
}

// Riemann sums of the truncated kernel over the 2/M-thinned process against
// the empirically thinned intensity times the averaged kernel integral
inline StudyReport integral_slln_study(const StudyConfig& cfg) {
    cfg.validate();
    StudyReport rep;
    rep.kind = "integral";
    rep.seed = cfg.seed;
    rep.extra_columns = {"thinned_intensity"};
    const int n = cfg.domain.dim;
    const double trunc_moment = cfg.mark_law.truncated_moment(n - cfg.model.q, cfg.M);
    const double coef = cfg.model.integrand.limit_coefficient() *
                        CapacityModel::c_nq_value(cfg.model.n, cfg.model.q);
    const double uq_integral = box_integrate(
        [&](const Vec& p) {
            return cfg.domain.contains(p)
                       ? std::pow(cfg.bump.value(p, n), cfg.model.q)
                       : 0.0;
        },
        cfg.domain.bounding_box(), 1e-4, 32);

    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        const double r_eps = cfg.theta * eps / cfg.M;
        std::vector<double> vals(cfg.replicas), lam_thin(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real = sample_marks(
                sample_points(cfg.process_for(eps, detail::replica_seed(cfg, "integral", e, r))));
            const auto thinned = thin(real, 2.0 / cfg.M);
            double sum = 0;
            std::size_t inside = 0;
            for (std::size_t i = 0; i < thinned.points.size(); ++i) {
                Vec c{};
                for (int d = 0; d < n; ++d) c[d] = eps * thinned.points[i][d];
                if (!cfg.domain.contains(c)) continue;
                ++inside;
                const double rho = thinned.marks[i];
                sum += ball_average(
                    [&](const Vec& p) {
                        return detail::kernel_kappa(cfg.model, cfg.bump.value(p, n), rho, cfg.M);
                    },
                    c, r_eps, n, 3, 4);
            }
            vals[r] = std::pow(eps, n) * sum;
            lam_thin[r] =
                std::pow(eps, n) * static_cast<double>(inside) / cfg.domain.volume();
        });
        const double lam_emp =
            std::accumulate(lam_thin.begin(), lam_thin.end(), 0.0) / lam_thin.size();
        const double target = lam_emp * coef * trunc_moment * uq_integral;
        rep.rows.push_back(detail::reduce_row(eps, vals, target));
        rep.extra_values.push_back({lam_emp});
    }
    return rep;
}

// eps^n sum over G_M of phi^j_{theta, rho_i}(bar u_i) against
// <N(Q)> int_D phi(u)
inline StudyReport capacity_sum_study(const StudyConfig& cfg) {
    cfg.validate();
    if (std::fabs(1.0 / cfg.theta - std::round(1.0 / cfg.theta)) > 1e-9)
        throw std::invalid_argument("capacity sum study requires 1/theta integer");
    StudyReport rep;
    rep.kind = "capsum";
    rep.seed = cfg.seed;
    rep.extra_columns = {"gm_intensity"};
    const int n = cfg.domain.dim;
    const double phi_unit = average_capacity_density(cfg.model, cfg.mark_law, 1.0);
    const double uq_integral = box_integrate(
        [&](const Vec& p) {
            return cfg.domain.contains(p)
                       ? std::pow(cfg.bump.value(p, n), cfg.model.q)
                       : 0.0;
        },
        cfg.domain.bounding_box(), 1e-4, 32);
    const double target = cfg.lambda * phi_unit * uq_integral;

    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
        const double eps = cfg.eps_grid[e];
        std::vector<double> vals(cfg.replicas), gm_density(cfg.replicas);
        parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
            const auto real = sample_marks(
                sample_points(cfg.process_for(eps, detail::replica_seed(cfg, "capsum", e, r))));
            const auto pd = build_perforated_domain(real, eps, cfg.domain, cfg.model.q);
            const double reps =
                critical_radius(real, eps, cfg.model.n, cfg.model.q, cfg.alpha_exponent);
            auto cls = classify_holes(pd, real, reps);
            select_GM(cls, pd, real, cfg.M);
            double sum = 0;
            for (int i : cls.GM) {
                const double ubar =
                    hole_boundary_value(cfg.bump, pd.holes[i].centre, eps, cfg.theta, cfg.M, n);
                sum += capacitary_cell_value(cfg.model, pd, real, i, ubar, cfg.theta);
            }
            vals[r] = std::pow(eps, n) * sum;
            gm_density[r] =
                std::pow(eps, n) * static_cast<double>(cls.GM.size()) / cfg.domain.volume();
        });
        rep.rows.push_back(detail::reduce_row(eps, vals, target));
        rep.extra_values.push_back(
            {std::accumulate(gm_density.begin(), gm_density.end(), 0.0) / gm_density.size()});
    }
    return rep;
}

}  // namespace perfolab
