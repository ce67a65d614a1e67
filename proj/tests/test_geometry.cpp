#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perfolab/geometry.hpp"

using namespace perfolab;
using Catch::Approx;

TEST_CASE("critical scaling") {
    // alpha_eps = eps^{n/(n-q)}
    const auto s = critical_scale(0.1, 3, 2.0);
    CHECK(s.alpha_eps == Approx(1e-3).epsilon(1e-12));
    CHECK(critical_scale(1.0, 3, 2.0).alpha_eps == 1.0);
    CHECK(critical_scale(1.0, 3, 2.0).K == 1.0);
    CHECK(critical_scale(0.01, 3, 2.0).K == Approx(1e4).epsilon(1e-10));
    CHECK_THROWS_AS(critical_scale(0.1, 3, 3.5), std::invalid_argument);
    CHECK_THROWS_AS(critical_scale(0.1, 3, 1.0), std::invalid_argument);
}

namespace {
ProcessRealization fixed_realization(std::vector<Vec> pts, std::vector<double> marks,
                                     double window_half) {
    ProcessRealization r;
    r.config.intensity = 1.0;
    r.config.window = Box::centered(3, make_vec(window_half, window_half, window_half));
    r.points = std::move(pts);
    r.marks = std::move(marks);
    return r;
}
}  // namespace

TEST_CASE("perforated domain construction") {
    const auto D = DomainDescriptor::box(3, make_vec(0.5, 0.5, 0.5));

    SECTION("empty realization gives no holes") {
        auto r = fixed_realization({}, {}, 100.0);
        const auto pd = build_perforated_domain(r, 0.1, D, 2.0);
        CHECK(pd.holes.empty());
    }
    SECTION("single point at the origin") {
        auto r = fixed_realization({make_vec(0, 0, 0)}, {1.0}, 100.0);
        const auto pd = build_perforated_domain(r, 0.1, D, 2.0);
        REQUIRE(pd.holes.size() == 1);
        CHECK(pd.holes[0].centre == make_vec(0, 0, 0));
        CHECK(pd.holes[0].radius == Approx(1e-3).epsilon(1e-12));
        CHECK(pd.holes[0].source == 0);
    }
    SECTION("window must cover the blown-up domain") {
        auto r = fixed_realization({make_vec(0, 0, 0)}, {1.0}, 1.0);
        CHECK_THROWS_AS(build_perforated_domain(r, 0.1, D, 2.0), std::invalid_argument);
    }
    SECTION("hole count approximates lambda eps^-n vol(D)") {
        double total = 0;
        const int seeds = 20;
        for (int s = 0; s < seeds; ++s) {
            ProcessConfig c;
            c.intensity = 10.0;
            c.window = Box::centered(3, make_vec(5, 5, 5));
            c.mark_law = MarkLaw::constant(1.0);
            c.seed = 140 + s;
            auto real = sample_marks(sample_points(c));
            total += static_cast<double>(build_perforated_domain(real, 0.1, D, 2.0).holes.size());
        }
        const double mean = total / seeds;
        CHECK(std::fabs(mean - 1e4) / 1e4 < 0.05);
    }
    SECTION("scaling consistency: radii over eps equal rho / K") {
        auto r = fixed_realization({make_vec(1, 2, 0.5), make_vec(-2, 0, 1)}, {1.5, 0.7}, 100.0);
        const double eps = 0.05;
        const auto pd = build_perforated_domain(r, eps, D, 2.0);
        const auto sc = critical_scale(eps, 3, 2.0);
        for (const auto& h : pd.holes)
            CHECK(h.radius / eps == Approx(r.marks[h.source] / sc.K).epsilon(1e-12));
    }
    SECTION("nesting: smaller eps retains the sources of larger eps") {
        ProcessConfig c;
        c.intensity = 3.0;
        c.window = Box::centered(3, make_vec(20, 20, 20));
        c.seed = 4711;
        c.mark_law = MarkLaw::pareto(1.0, 4.0);
        auto real = sample_marks(sample_points(c));
        const auto pd_small = build_perforated_domain(real, 0.05, D, 2.0);
        const auto pd_large = build_perforated_domain(real, 0.1, D, 2.0);
        std::vector<bool> in_small(real.points.size(), false);
        for (const auto& h : pd_small.holes) in_small[h.source] = true;
        for (const auto& h : pd_large.holes) CHECK(in_small[h.source]);
    }
}

TEST_CASE("neighbor queries match brute force") {
    ProcessConfig c;
    c.intensity = 220.0;
    c.window = Box::centered(3, make_vec(0.75, 0.75, 0.75));
    c.mark_law = MarkLaw::constant(1.0);
    c.seed = 31337;
    auto real = sample_marks(sample_points(c));
    const auto D = DomainDescriptor::box(3, make_vec(0.6, 0.6, 0.6));
    const auto pd = build_perforated_domain(real, 0.8, D, 2.0);
    REQUIRE(pd.holes.size() > 100);
    REQUIRE(pd.holes.size() <= 1000);

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Vec centre = make_vec(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6),
                              rng.uniform(-0.6, 0.6));
        const double radius = rng.uniform(0.0, 0.5);
        auto got = pd.query_neighbors(centre, radius);
        std::vector<int> expected;
        for (std::size_t i = 0; i < pd.holes.size(); ++i)
            if (dist(pd.holes[i].centre, centre, 3) <= radius)
                expected.push_back(static_cast<int>(i));
        std::sort(got.begin(), got.end());
        CHECK(got == expected);
    }
    SECTION("radius zero returns only exact matches") {
        const auto got = pd.query_neighbors(pd.holes[7].centre, 0.0);
        REQUIRE(!got.empty());
        for (int i : got) CHECK(dist(pd.holes[i].centre, pd.holes[7].centre, 3) == 0.0);
    }
    SECTION("a covering query returns every hole") {
        const auto got = pd.query_neighbors(make_vec(0, 0, 0), 10.0);
        CHECK(got.size() == pd.holes.size());
    }
}

TEST_CASE("annulus averages") {
    Annulus a;
    a.centre = make_vec(0.3, -0.2, 0.1);
    a.r_inner = 0.5;
    a.r_outer = 1.0;

    SECTION("constant field") {
        const double v = annulus_average([](const Vec&) { return 3.25; }, a, 3, 8, 8);
        CHECK(v == Approx(3.25).epsilon(1e-12));
    }
    SECTION("linear field averages to its centre value") {
        auto u = [](const Vec& p) { return 2.0 * p[0] - 1.0 * p[1] + 0.5 * p[2] + 4.0; };
        const double v = annulus_average(u, a, 3, 32, 32);
        CHECK(v == Approx(u(a.centre)).epsilon(1e-10));
    }
    SECTION("radial field has the closed-form average") {
        auto u = [&](const Vec& p) { return dist(p, a.centre, 3); };
        const double v = annulus_average(u, a, 3, 64, 16);
        const double exact = 0.75 * (std::pow(a.r_outer, 4) - std::pow(a.r_inner, 4)) /
                             (std::pow(a.r_outer, 3) - std::pow(a.r_inner, 3));
        CHECK(std::fabs(v - exact) / exact < 0.005);
    }
    SECTION("matching annulus radii follow the dyadic convention") {
        const auto ann = matching_annulus(make_vec(1, 0, 0), 0.1, 0.2, 4.0, 1);
        CHECK(ann.r_outer == Approx(0.5 * 0.2 * 0.1 / 4.0));
        CHECK(ann.r_inner == Approx(0.5 * ann.r_outer));
        CHECK(ann.r_inner < ann.r_outer);
    }
    SECTION("invalid annulus is rejected") {
        Annulus bad;
        bad.r_inner = 1.0;
        bad.r_outer = 0.5;
        CHECK_THROWS_AS(annulus_average([](const Vec&) { return 1.0; }, bad, 3),
                        std::invalid_argument);
    }
}

TEST_CASE("ball average of a linear field is the centre value") {
    auto u = [](const Vec& p) { return 1.0 + p[0] - 2.0 * p[1]; };
    const double v = ball_average(u, make_vec(0.2, 0.1, 0.0), 0.3, 3, 16, 12);
    CHECK(v == Approx(1.0 + 0.2 - 0.2).epsilon(1e-9));
}
