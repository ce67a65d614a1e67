#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "perfolab/rng.hpp"

namespace perfolab {

struct DivergentMomentError : std::domain_error {
    using std::domain_error::domain_error;
};

// Radius-mark distribution: constant(rho0), pareto(rho_min, beta) with
// density (beta-1) rho_min^{beta-1} rho^{-beta} on [rho_min, inf),
// lognormal(mu, sigma), or an outer truncation of any of these at rho_max.
class MarkLaw {
  public:
    enum class Kind { Constant, Pareto, Lognormal, Truncated };

    static MarkLaw constant(double rho0) {
        if (rho0 <= 0) throw std::invalid_argument("constant mark must be positive");
        MarkLaw l;
        l.kind_ = Kind::Constant;
        l.a_ = rho0;
        return l;
    }
    static MarkLaw pareto(double rho_min, double beta) {
        if (rho_min <= 0 || beta <= 1)
            throw std::invalid_argument("pareto requires rho_min > 0 and beta > 1");
        MarkLaw l;
        l.kind_ = Kind::Pareto;
        l.a_ = rho_min;
        l.b_ = beta;
        return l;
    }
    static MarkLaw lognormal(double mu, double sigma) {
        if (sigma <= 0) throw std::invalid_argument("lognormal requires sigma > 0");
        MarkLaw l;
        l.kind_ = Kind::Lognormal;
        l.a_ = mu;
        l.b_ = sigma;
        return l;
    }
    static MarkLaw truncated(double rho_max, const MarkLaw& inner) {
        if (inner.kind_ == Kind::Truncated)
            throw std::invalid_argument("nested truncation not supported");
        if (rho_max <= inner.lower_bound())
            throw std::invalid_argument("truncation below the law's support");
        MarkLaw l;
        l.kind_ = Kind::Truncated;
        l.a_ = rho_max;
        l.inner_ = std::make_shared<MarkLaw>(inner);
        return l;
    }

    Kind kind() const { return kind_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    const MarkLaw& inner() const { return *inner_; }

    double lower_bound() const {
        switch (kind_) {
            case Kind::Constant: return a_;
            case Kind::Pareto: return a_;
            case Kind::Lognormal: return 0.0;
            case Kind::Truncated: return inner_->lower_bound();
        }
        return 0.0;
    }

    // Smallest U with P(rho > U) < tail_mass; used to clip quadrature ranges.
    double upper_bound(double tail_mass = 1e-8) const {
        switch (kind_) {
            case Kind::Constant: return a_;
            case Kind::Pareto: return a_ * std::pow(tail_mass, -1.0 / (b_ - 1.0));
            case Kind::Lognormal:
                return std::exp(a_ + b_ * normal_quantile(1.0 - tail_mass));
            case Kind::Truncated: return a_;
        }
        return 0.0;
    }

    double cdf(double rho) const {
        switch (kind_) {
            case Kind::Constant: return rho >= a_ ? 1.0 : 0.0;
            case Kind::Pareto:
                return rho <= a_ ? 0.0 : 1.0 - std::pow(a_ / rho, b_ - 1.0);
            case Kind::Lognormal:
                return rho <= 0.0 ? 0.0 : normal_cdf((std::log(rho) - a_) / b_);
            case Kind::Truncated:
                if (rho >= a_) return 1.0;
                return inner_->cdf(rho) / inner_->cdf(a_);
        }
        return 0.0;
    }

    // Inverse CDF; the single entry point for sampling (including through
    // the Gaussian copula, which feeds it correlated uniforms).
    double quantile(double u) const {
        u = std::fmin(std::fmax(u, 0.0), 1.0 - 1e-16);
        switch (kind_) {
            case Kind::Constant: return a_;
            case Kind::Pareto: return a_ * std::pow(1.0 - u, -1.0 / (b_ - 1.0));
            case Kind::Lognormal: return std::exp(a_ + b_ * normal_quantile(u));
            case Kind::Truncated: return inner_->quantile(u * inner_->cdf(a_));
        }
        return a_;
    }

    double density(double rho) const {
        switch (kind_) {
            case Kind::Constant: return 0.0;  // atomic; handled separately
            case Kind::Pareto:
                return rho < a_ ? 0.0 : (b_ - 1.0) * std::pow(a_, b_ - 1.0) * std::pow(rho, -b_);
            case Kind::Lognormal: {
                if (rho <= 0.0) return 0.0;
                const double t = (std::log(rho) - a_) / b_;
                return std::exp(-0.5 * t * t) / (rho * b_ * std::sqrt(2.0 * M_PI));
            }
            case Kind::Truncated:
                return rho > a_ ? 0.0 : inner_->density(rho) / inner_->cdf(a_);
        }
        return 0.0;
    }

    bool has_moment(double p) const {
        switch (kind_) {
            case Kind::Pareto: return p < b_ - 1.0;
            case Kind::Truncated: return true;
            default: return true;
        }
    }

    // <rho^p>; closed form where available, adaptive quadrature for
    // truncated laws.  Throws DivergentMomentError when the tail exponent
    // does not permit the moment.
    double moment(double p) const {
        switch (kind_) {
            case Kind::Constant: return std::pow(a_, p);
            case Kind::Pareto:
                if (p >= b_ - 1.0)
                    throw DivergentMomentError("pareto moment p=" + std::to_string(p) +
                                               " diverges (requires p < beta-1)");
                return (b_ - 1.0) / (b_ - 1.0 - p) * std::pow(a_, p);
            case Kind::Lognormal: return std::exp(p * a_ + 0.5 * p * p * b_ * b_);
            case Kind::Truncated: {
                if (inner_->kind_ == Kind::Constant)
                    return std::pow(std::fmin(inner_->a_, a_), p);
                const double lo = inner_->lower_bound();
                const double z = inner_->cdf(a_);
                auto f = [&](double rho) { return std::pow(rho, p) * inner_->density(rho); };
                return adaptive_simpson(f, lo + 1e-14, a_, 1e-12) / z;
            }
        }
        return 0.0;
    }

    // <min(rho, cap)^p>, needed by the truncated-mark Riemann sums.
    double truncated_moment(double p, double cap) const {
        if (kind_ == Kind::Constant) return std::pow(std::fmin(a_, cap), p);
        if (kind_ == Kind::Pareto && cap <= a_) return std::pow(cap, p);
        if (kind_ == Kind::Pareto) {
            // integral up to cap plus the atom-free tail mass at cap
            const double body =
                (p == b_ - 1.0)
                    ? (b_ - 1.0) * std::pow(a_, b_ - 1.0) * std::log(cap / a_)
                    : (b_ - 1.0) / (b_ - 1.0 - p) * std::pow(a_, p) *
                          (1.0 - std::pow(a_ / cap, b_ - 1.0 - p));
            return body + std::pow(cap, p) * std::pow(a_ / cap, b_ - 1.0);
        }
        auto f = [&](double rho) {
            return std::pow(std::fmin(rho, cap), p) * density(rho);
        };
        const double hi = upper_bound(1e-10);
        const double lo = lower_bound();
        return adaptive_simpson(f, lo + 1e-14, std::fmax(hi, cap * (1 + 1e-12)), 1e-12);
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::Constant: return "constant(" + std::to_string(a_) + ")";
            case Kind::Pareto:
                return "pareto(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
            case Kind::Lognormal:
                return "lognormal(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
            case Kind::Truncated:
                return "truncated(" + std::to_string(a_) + "," + inner_->describe() + ")";
        }
        return "?";
    }

    template <typename F>
    static double adaptive_simpson(F f, double a, double b, double tol) {
        const double c = 0.5 * (a + b);
        const double fa = f(a), fb = f(b), fc = f(c);
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
        return simpson_rec(f, a, b, fa, fb, fc, whole, tol, 40);
    }

  private:
    template <typename F>
    static double simpson_rec(F f, double a, double b, double fa, double fb, double fc,
                              double whole, double tol, int depth) {
        const double c = 0.5 * (a + b);
        const double d = 0.5 * (a + c), e = 0.5 * (c + b);
        const double fd = f(d), fe = f(e);
        const double left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
        const double right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
        if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
            return left + right + (left + right - whole) / 15.0;
        return simpson_rec(f, a, c, fa, fc, fd, left, tol / 2, depth - 1) +
               simpson_rec(f, c, b, fc, fb, fe, right, tol / 2, depth - 1);
    }

    Kind kind_ = Kind::Constant;
    double a_ = 1.0;
    double b_ = 0.0;
    std::shared_ptr<const MarkLaw> inner_;
};

struct MarkLawMoments {
    double mean_n_minus_q = 0.0;
    MarkLaw law = MarkLaw::constant(1.0);
    double mean_generic(double p) const { return law.moment(p); }
};

inline MarkLawMoments mark_moments(const MarkLaw& law, int n, double q) {
    MarkLawMoments m;
    m.law = law;
    m.mean_n_minus_q = law.moment(static_cast<double>(n) - q);
    return m;
}

}  // namespace perfolab
