#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "perfolab/geometry.hpp"

namespace perfolab {

// Partition of the perforations produced by the good/bad construction plus
// the derived centre families.  Index values refer to positions in
// PerforatedDomain::holes.
struct HoleClassification {
    double r_eps = 0.0;
    std::vector<int> bad;
    std::vector<int> good;
    std::vector<int> GM;   // deterministically spaced good centres
    std::vector<int> MG;   // mildly good
    std::vector<int> VG;   // very good: GM minus MG
    std::vector<char> is_bad;
    std::vector<double> d_eps;  // d_{eps,i} for every hole (physical units)
    double M = 0.0;
    double theta = 0.0;
    double alpha_exponent = 0.0;
};

// r_eps = max( (alpha_eps * max_i rho_i)^{1/n}, eps^{alpha/4} ),
// the separation scale of the good/bad decomposition.
inline double critical_radius(const ProcessRealization& realization, double eps, int n,
                              double q, double alpha_exponent) {
    if (!(alpha_exponent > 0.0 && alpha_exponent < q / (n - q)))
        throw std::invalid_argument("alpha_exponent must lie in (0, q/(n-q))");
    const double branch2 = std::pow(eps, alpha_exponent / 4.0);
    if (realization.points.empty()) return branch2;
    if (realization.marks.size() != realization.points.size())
        throw std::invalid_argument("realization has no marks");
    const double max_rho =
        *std::max_element(realization.marks.begin(), realization.marks.end());
    const double alpha_eps = critical_scale(eps, n, q).alpha_eps;
    const double branch1 = std::pow(alpha_eps * max_rho, 1.0 / n);
    return std::fmax(branch1, branch2);
}

namespace detail {

inline void check_classification_invariants(const PerforatedDomain& pd,
                                            const ProcessRealization& realization,
                                            const HoleClassification& cls) {
    const int n = pd.n;
    const double eps = pd.eps;
    const double r = cls.r_eps;
    std::size_t counted = cls.bad.size() + cls.good.size();
    if (counted != pd.holes.size())
        throw std::logic_error("bad/good do not partition the holes");

    // good radii and pairwise separation in blown-up coordinates
    std::vector<Vec> good_pts;
    good_pts.reserve(cls.good.size());
    for (int i : cls.good) {
        if (pd.holes[i].radius > eps * r / 2.0)
            throw std::logic_error("good hole exceeds the radius bound eps r/2");
        good_pts.push_back(realization.points[pd.holes[i].source]);
    }
    if (good_pts.size() > 1) {
        SpatialHash hash(good_pts, n, 2.0 * r);
        for (std::size_t a = 0; a < good_pts.size(); ++a) {
            const double nn = hash.nearest_other(good_pts[a], 2.0 * r, static_cast<int>(a));
            if (nn < 2.0 * r)
                throw std::logic_error("good centres closer than 2 r_eps");
        }
    }
    // separation of good holes from the safety layer (doubled bad balls)
    if (!cls.bad.empty() && !cls.good.empty()) {
        std::vector<Vec> bad_centres;
        double max_bad_rad = 0;
        bad_centres.reserve(cls.bad.size());
        for (int j : cls.bad) {
            bad_centres.push_back(pd.holes[j].centre);
            max_bad_rad = std::fmax(max_bad_rad, pd.holes[j].radius);
        }
        const double margin = eps * r / 2.0;
        SpatialHash bad_hash(bad_centres, n, margin + 2 * max_bad_rad);
        for (int i : cls.good) {
            const double reach = margin + pd.holes[i].radius + 2 * max_bad_rad;
            bool ok = true;
            bad_hash.visit(pd.holes[i].centre, reach, [&](int bj, double d) {
                const double gap = d - pd.holes[i].radius - 2 * pd.holes[cls.bad[bj]].radius;
                if (gap < margin) ok = false;
            });
            if (!ok) throw std::logic_error("good hole too close to the safety layer");
        }
    }
    // VG = GM \ MG, disjoint
    std::vector<char> in_mg(pd.holes.size(), 0), in_vg(pd.holes.size(), 0);
    for (int i : cls.MG) in_mg[i] = 1;
    for (int i : cls.VG) {
        if (in_mg[i]) throw std::logic_error("VG and MG intersect");
        in_vg[i] = 1;
    }
    for (int i : cls.GM)
        if (!in_mg[i] && !in_vg[i] && !(cls.MG.empty() && cls.VG.empty()))
            throw std::logic_error("GM centre in neither VG nor MG");
}

}  // namespace detail

// Good/bad decomposition.  Oversized holes go bad first; then passes
// simultaneously discard every surviving hole that sits within 2 r_eps
// (blown-up) of another surviving centre or within eps r_eps / 2 of the
// safety layer of doubled bad balls, until the separation properties hold.
// The bad set grows monotonically, so at most #holes passes can occur.
inline HoleClassification classify_holes(const PerforatedDomain& pd,
                                         const ProcessRealization& realization,
                                         double r_eps) {
    const int n = pd.n;
    const double eps = pd.eps;
    const std::size_t count = pd.holes.size();
    HoleClassification cls;
    cls.r_eps = r_eps;
    cls.is_bad.assign(count, 0);

    const double radius_cap = eps * r_eps / 2.0;
    for (std::size_t i = 0; i < count; ++i)
        if (pd.holes[i].radius > radius_cap) cls.is_bad[i] = 1;

    std::vector<int> newly_bad;
    for (std::size_t pass = 0; pass <= count + 1; ++pass) {
        newly_bad.clear();

        std::vector<Vec> surv_pts;
        std::vector<int> surv_idx;
        for (std::size_t i = 0; i < count; ++i)
            if (!cls.is_bad[i]) {
                surv_pts.push_back(realization.points[pd.holes[i].source]);
                surv_idx.push_back(static_cast<int>(i));
            }
        if (surv_pts.empty()) break;

        std::vector<Vec> bad_centres;
        double max_bad_rad = 0;
        for (std::size_t i = 0; i < count; ++i)
            if (cls.is_bad[i]) {
                bad_centres.push_back(pd.holes[i].centre);
                max_bad_rad = std::fmax(max_bad_rad, pd.holes[i].radius);
            }
        SpatialHash pair_hash(surv_pts, n, 2.0 * r_eps);
        SpatialHash bad_hash;
        if (!bad_centres.empty())
            bad_hash = SpatialHash(bad_centres, n, radius_cap + 2 * max_bad_rad);

        std::vector<int> bad_lookup;
        bad_lookup.reserve(bad_centres.size());
        for (std::size_t i = 0; i < count; ++i)
            if (cls.is_bad[i]) bad_lookup.push_back(static_cast<int>(i));

        for (std::size_t a = 0; a < surv_pts.size(); ++a) {
            const int i = surv_idx[a];
            const double nn = pair_hash.nearest_other(surv_pts[a], 2.0 * r_eps,
                                                      static_cast<int>(a));
            bool kill = nn < 2.0 * r_eps;
            if (!kill && !bad_centres.empty()) {
                const double reach = radius_cap + pd.holes[i].radius + 2 * max_bad_rad;
                bad_hash.visit(pd.holes[i].centre, reach, [&](int bj, double d) {
                    const double gap =
                        d - pd.holes[i].radius - 2 * pd.holes[bad_lookup[bj]].radius;
                    if (gap < radius_cap) kill = true;
                });
            }
            if (kill) newly_bad.push_back(i);
        }
        if (newly_bad.empty()) break;
        for (int i : newly_bad) cls.is_bad[i] = 1;  // simultaneous marking
    }

    for (std::size_t i = 0; i < count; ++i)
        (cls.is_bad[i] ? cls.bad : cls.good).push_back(static_cast<int>(i));
    detail::check_classification_invariants(pd, realization, cls);
    return cls;
}

// d_{eps,i} = min( dist(eps x_i, safety layer), eps/2 min_{l != i}|x_l - x_i|, eps )
inline std::vector<double> compute_center_distances(const PerforatedDomain& pd,
                                                    const ProcessRealization& realization,
                                                    const HoleClassification& cls) {
    const int n = pd.n;
    const double eps = pd.eps;
    const std::size_t count = pd.holes.size();
    std::vector<double> d(count, HUGE_VAL);

    std::vector<Vec> pts(count);
    for (std::size_t i = 0; i < count; ++i) pts[i] = realization.points[pd.holes[i].source];

    // blown-up nearest neighbour, two-stage search; beyond 2 the eps cap wins
    SpatialHash near_hash(pts, n, 0.5);
    SpatialHash far_hash(pts, n, 2.0);
    std::vector<Vec> bad_centres;
    std::vector<int> bad_lookup;
    double max_bad_rad = 0;
    for (int j : cls.bad) {
        bad_centres.push_back(pd.holes[j].centre);
        bad_lookup.push_back(j);
        max_bad_rad = std::fmax(max_bad_rad, pd.holes[j].radius);
    }
    SpatialHash bad_hash;
    if (!bad_centres.empty()) bad_hash = SpatialHash(bad_centres, n, eps + 2 * max_bad_rad);

    for (std::size_t i = 0; i < count; ++i) {
        double nn = near_hash.nearest_other(pts[i], 0.5, static_cast<int>(i));
        if (!(nn < HUGE_VAL)) nn = far_hash.nearest_other(pts[i], 2.0, static_cast<int>(i));
        double v = std::fmin(eps, 0.5 * eps * nn);
        if (!bad_centres.empty()) {
            double dist_safety = HUGE_VAL;
            bad_hash.visit(pd.holes[i].centre, eps + 2 * max_bad_rad, [&](int bj, double dd) {
                dist_safety = std::fmin(dist_safety, dd - 2 * pd.holes[bad_lookup[bj]].radius);
            });
            v = std::fmin(v, std::fmax(dist_safety, 0.0));
        }
        d[i] = v;
    }
    return d;
}

// G_{eps,M}: good centres with d_{eps,i} >= eps/M, marks bounded by M, and
// the ball B_{eps/M} around the centre contained in D (so the matching
// balls are pairwise disjoint subsets of D).
inline void select_GM(HoleClassification& cls, const PerforatedDomain& pd,
                      const ProcessRealization& realization, double M) {
    if (!(M >= 1.0)) throw std::invalid_argument("M must be >= 1");
    cls.M = M;
    cls.GM.clear();
    if (cls.d_eps.empty()) cls.d_eps = compute_center_distances(pd, realization, cls);
    const double eps = pd.eps;
    for (int i : cls.good) {
        const double rho = realization.marks[pd.holes[i].source];
        if (rho > M) continue;
        if (cls.d_eps[i] < eps / M) continue;
        if (pd.domain.dist_to_boundary(pd.holes[i].centre) < eps / M) continue;
        cls.GM.push_back(i);
    }
}

// Mildly good centres: good centres outside G_M plus those G_M centres whose
// matching sphere of radius theta*eps meets the eps*r_eps ball of another
// good centre.  Very good centres are the rest of G_M.
inline void split_VG_MG(HoleClassification& cls, const PerforatedDomain& pd,
                        const ProcessRealization& realization, double theta, double M,
                        double r_eps) {
    if (!(theta > 0.0 && theta < 3.0 / (8.0 * M)))
        throw std::invalid_argument("theta must lie in (0, 3/(8M))");
    cls.theta = theta;
    cls.MG.clear();
    cls.VG.clear();
    const int n = pd.n;
    const double eps = pd.eps;

    std::vector<char> in_gm(pd.holes.size(), 0);
    for (int i : cls.GM) in_gm[i] = 1;

    std::vector<Vec> good_centres;
    good_centres.reserve(cls.good.size());
    for (int i : cls.good) good_centres.push_back(pd.holes[i].centre);
    SpatialHash good_hash(good_centres, n, (theta + r_eps) * eps);

    for (int i : cls.good)
        if (!in_gm[i]) cls.MG.push_back(i);
    for (std::size_t a = 0; a < cls.GM.size(); ++a) {
        const int i = cls.GM[a];
        bool meets = false;
        // sphere of radius theta*eps intersects B_{eps r_eps}(c_k) iff
        // | |c_i - c_k| - theta*eps | <= eps r_eps
        good_hash.visit(pd.holes[i].centre, (theta + r_eps) * eps, [&](int gk, double d) {
            if (cls.good[gk] == i) return;
            if (std::fabs(d - theta * eps) <= eps * r_eps) meets = true;
        });
        (meets ? cls.MG : cls.VG).push_back(i);
    }
    detail::check_classification_invariants(pd, realization, cls);
}

// eps^n sum over bad holes of rho^{n-q}
inline double bad_capacity_sum(const HoleClassification& cls,
                               const PerforatedDomain& pd,
                               const ProcessRealization& realization) {
    double s = 0;
    const double p = pd.n - pd.q;
    for (int i : cls.bad) s += std::pow(realization.marks[pd.holes[i].source], p);
    return std::pow(pd.eps, pd.n) * s;
}

}  // namespace perfolab
