#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "perfolab/process.hpp"

using namespace perfolab;
using Catch::Approx;

namespace {

ProcessConfig unit_cube_config(double lambda, std::uint64_t seed) {
    ProcessConfig c;
    c.intensity = lambda;
    c.window = Box::centered(3, make_vec(0.5, 0.5, 0.5));
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("poisson count matches the intensity") {
    // Monte Carlo mean over many replicas vs lambda * vol
    const int replicas = 10000;
    double total = 0;
    for (int r = 0; r < replicas; ++r) {
        auto cfg = unit_cube_config(10.0, 77000 + r);
        total += static_cast<double>(sample_points(cfg).points.size());
    }
    const double mean = total / replicas;
    CHECK(std::fabs(mean - 10.0) / 10.0 < 0.02);

    SECTION("mean scales with window volume") {
        // lambda=5 on [0,2]^3 has mean 40; single large-window draw sanity
        ProcessConfig c;
        c.intensity = 5.0;
        c.window = Box{3, make_vec(0, 0, 0), make_vec(2, 2, 2)};
        c.seed = 1234;
        double tot = 0;
        for (int r = 0; r < 2000; ++r) {
            c.seed = 999 + r;
            tot += static_cast<double>(sample_points(c).points.size());
        }
        CHECK(std::fabs(tot / 2000 - 40.0) / 40.0 < 0.05);
    }
    SECTION("invalid configs are rejected") {
        auto c = unit_cube_config(-1.0, 0);
        CHECK_THROWS_AS(sample_points(c), std::invalid_argument);
        c = unit_cube_config(1.0, 0);
        c.window.hi = c.window.lo;  // degenerate
        CHECK_THROWS_AS(sample_points(c), std::invalid_argument);
    }
}

TEST_CASE("second moment of the count is the Poisson one") {
    // <N^2> = lambda + lambda^2 for a unit cube
    const double lambda = 6.0;
    const int replicas = 20000;
    double sum2 = 0;
    for (int r = 0; r < replicas; ++r) {
        auto cfg = unit_cube_config(lambda, 31000 + r);
        const double n = static_cast<double>(sample_points(cfg).points.size());
        sum2 += n * n;
    }
    const double expected = lambda + lambda * lambda;
    CHECK(std::fabs(sum2 / replicas - expected) / expected < 0.03);
}

TEST_CASE("stationarity: counts in translated sub-windows agree") {
    ProcessConfig c;
    c.intensity = 20.0;
    c.window = Box::centered(3, make_vec(2, 2, 2));
    Box sub_a{3, make_vec(-1.5, -1.5, -1.5), make_vec(-0.5, -0.5, -0.5)};
    Box sub_b{3, make_vec(0.5, 0.5, 0.5), make_vec(1.5, 1.5, 1.5)};
    double na = 0, nb = 0;
    const int replicas = 4000;
    for (int r = 0; r < replicas; ++r) {
        c.seed = 5150 + r;
        const auto real = sample_points(c);
        for (const auto& p : real.points) {
            if (sub_a.contains(p)) na += 1;
            if (sub_b.contains(p)) nb += 1;
        }
    }
    na /= replicas;
    nb /= replicas;
    CHECK(std::fabs(na - 20.0) / 20.0 < 0.05);
    CHECK(std::fabs(nb - 20.0) / 20.0 < 0.05);
}

TEST_CASE("determinism: identical config and seed give identical draws") {
    auto cfg = unit_cube_config(25.0, 424242);
    cfg.mark_law = MarkLaw::pareto(1.0, 4.0);
    const auto a = sample_marks(sample_points(cfg));
    const auto b = sample_marks(sample_points(cfg));
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i] == b.points[i]);  // bitwise
        CHECK(a.marks[i] == b.marks[i]);
    }
}

TEST_CASE("marks") {
    SECTION("constant law marks everything with rho0") {
        auto cfg = unit_cube_config(50.0, 1);
        cfg.mark_law = MarkLaw::constant(1.0);
        const auto r = sample_marks(sample_points(cfg));
        for (double m : r.marks) CHECK(m == 1.0);
    }
    SECTION("pareto sample mean of rho^{n-q} matches the analytic moment") {
        ProcessConfig c;
        c.intensity = 100000.0;
        c.window = Box::centered(3, make_vec(0.5, 0.5, 0.5));
        c.mark_law = MarkLaw::pareto(1.0, 4.0);
        c.seed = 99;
        const auto r = sample_marks(sample_points(c));
        REQUIRE(r.marks.size() > 50000);
        const double mean =
            std::accumulate(r.marks.begin(), r.marks.end(), 0.0) / r.marks.size();
        CHECK(std::fabs(mean - 1.5) / 1.5 < 0.03);
        c.validate_for_exponents(3, 2.0);  // beta = 4 > n - q + 1 = 2
        ProcessConfig heavy = c;
        heavy.mark_law = MarkLaw::pareto(1.0, 2.2);  // n - q + 1 = 2.5 > beta
        CHECK_THROWS_AS(heavy.validate_for_exponents(3, 1.5), std::invalid_argument);
    }
    SECTION("independent marks are uncorrelated with distance") {
        // covariance of mark pairs within distance buckets is statistically zero
        ProcessConfig c;
        c.intensity = 300.0;
        c.window = Box::centered(3, make_vec(0.5, 0.5, 0.5));
        c.mark_law = MarkLaw::pareto(1.0, 5.0);
        double sxy = 0, sx = 0, sy = 0;
        int count = 0;
        for (int rep = 0; rep < 60; ++rep) {
            c.seed = 700 + rep;
            const auto r = sample_marks(sample_points(c));
            for (std::size_t i = 0; i < r.points.size(); ++i)
                for (std::size_t j = i + 1; j < r.points.size(); ++j)
                    if (dist(r.points[i], r.points[j], 3) < 0.1) {
                        sxy += r.marks[i] * r.marks[j];
                        sx += r.marks[i];
                        sy += r.marks[j];
                        ++count;
                    }
        }
        REQUIRE(count > 1000);
        const double cov = sxy / count - (sx / count) * (sy / count);
        CHECK(std::fabs(cov) < 0.05);
    }
    SECTION("copula marks decay in correlation and reject gamma <= n") {
        ProcessConfig c;
        c.intensity = 60.0;
        c.window = Box::centered(3, make_vec(1, 1, 1));
        c.mark_law = MarkLaw::lognormal(0.0, 0.5);
        c.correlation = {Correlation::Kind::GaussianCopula, 4.0};
        double near_cov = 0, far_cov = 0;
        double near_n = 0, far_n = 0;
        double near_sx = 0, near_sy = 0, far_sx = 0, far_sy = 0;
        for (int rep = 0; rep < 40; ++rep) {
            c.seed = 880 + rep;
            const auto r = sample_marks(sample_points(c));
            for (std::size_t i = 0; i < r.points.size(); ++i)
                for (std::size_t j = i + 1; j < r.points.size(); ++j) {
                    const double d = dist(r.points[i], r.points[j], 3);
                    if (d < 0.25) {
                        near_cov += r.marks[i] * r.marks[j];
                        near_sx += r.marks[i];
                        near_sy += r.marks[j];
                        near_n += 1;
                    } else if (d > 1.2) {
                        far_cov += r.marks[i] * r.marks[j];
                        far_sx += r.marks[i];
                        far_sy += r.marks[j];
                        far_n += 1;
                    }
                }
        }
        REQUIRE(near_n > 200);
        REQUIRE(far_n > 200);
        const double cn = near_cov / near_n - (near_sx / near_n) * (near_sy / near_n);
        const double cf = far_cov / far_n - (far_sx / far_n) * (far_sy / far_n);
        CHECK(cn > 0.01);         // visible short-range correlation
        CHECK(cf < 0.5 * cn);     // decays with distance

        c.correlation.gamma_decay = 2.5;  // <= n violates the mixing condition
        CHECK_THROWS_AS(sample_marks(sample_points(c)), std::invalid_argument);
    }
}

TEST_CASE("thinning") {
    SECTION("delta = 0 is the identity") {
        auto cfg = unit_cube_config(40.0, 7);
        const auto r = sample_points(cfg);
        const auto t = thin(r, 0.0);
        CHECK(t.points.size() == r.points.size());
    }
    SECTION("a close pair is annihilated") {
        ProcessRealization r;
        r.config = unit_cube_config(1.0, 0);
        r.points = {make_vec(0, 0, 0), make_vec(0.5, 0, 0)};
        CHECK(thin(r, 1.0).points.empty());
        CHECK(thin(r, 0.5).points.size() == 2);  // >= delta keeps ties
        CHECK(thin(r, 0.4).points.size() == 2);
    }
    SECTION("monotone: larger delta keeps a subset") {
        auto cfg = unit_cube_config(80.0, 12);
        const auto r = sample_points(cfg);
        const auto t1 = thin(r, 0.05);
        const auto t2 = thin(r, 0.1);
        CHECK(t2.points.size() <= t1.points.size());
        // subset check on coordinates
        for (const auto& p : t2.points) {
            bool found = false;
            for (const auto& q : t1.points)
                if (p == q) {
                    found = true;
                    break;
                }
            CHECK(found);
        }
    }
    SECTION("thinned mean count rises to the full mean as delta drops") {
        const double lambda = 10.0;
        double means[3] = {0, 0, 0};
        const double deltas[3] = {0.2, 0.1, 0.05};
        const int replicas = 800;
        for (int rep = 0; rep < replicas; ++rep) {
            auto cfg = unit_cube_config(lambda, 60000 + rep);
            const auto r = sample_points(cfg);
            for (int k = 0; k < 3; ++k)
                means[k] += static_cast<double>(thin(r, deltas[k]).points.size());
        }
        for (auto& m : means) m /= replicas;
        CHECK(means[0] < means[1]);
        CHECK(means[1] < means[2]);
        CHECK(means[2] <= lambda + 0.35);
        // Poisson retention e^{-lambda beta delta^3} at delta = 0.2
        const double expect0 = lambda * std::exp(-lambda * (4.0 * M_PI / 3) * 0.008);
        CHECK(std::fabs(means[0] - expect0) / expect0 < 0.1);
    }
}
