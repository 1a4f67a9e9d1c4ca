#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/montecarlo.hpp"
#include "qrlab/rng.hpp"

using namespace qrlab;
using doctest::Approx;

TEST_CASE("simplex volume matches known solids") {
    CHECK(geom::simplex_volume(2, 1.0) == Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
    CHECK(geom::simplex_volume(3, 1.0) == Approx(std::sqrt(2.0) / 12.0).epsilon(1e-12));
    CHECK_THROWS_AS(geom::simplex_volume(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(geom::simplex_volume(2, 0.0), std::domain_error);
    CHECK_THROWS_AS(geom::simplex_volume(2, -1.0), std::domain_error);
}

TEST_CASE("log-space volume at MNIST scale agrees with log-factorial summation") {
    const int n = 784;
    const double s = 14.0 / 2.0;
    const double expected = n * std::log(s) - oracle::log_factorial(n) +
                            0.5 * (std::log(n + 1.0) - n * std::log(2.0));
    CHECK(geom::log_simplex_volume(n, s) == Approx(expected).epsilon(1e-12));
    CHECK(std::isfinite(geom::log_simplex_volume(n, s)));
    CHECK(geom::simplex_volume(n, s) >= 0.0);

    // A large-n case whose exponentiated value is still representable.
    const double v100 = geom::simplex_volume(100, geom::side_length(100, 2));
    CHECK(v100 > 0.0);
    CHECK(std::isfinite(v100));
}

TEST_CASE("surface matches known solids and the face-volume identity") {
    CHECK(geom::simplex_surface(2, 1.0) == Approx(3.0).epsilon(1e-12));
    CHECK(geom::simplex_surface(3, 1.0) == Approx(std::sqrt(3.0)).epsilon(1e-12));
    // S(n, s) = (n+1) * V(n-1, s)
    CHECK(geom::simplex_surface(5, 0.5) ==
          Approx(6.0 * geom::simplex_volume(4, 0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(geom::simplex_surface(0, 1.0), std::domain_error);
}

TEST_CASE("inradius closed form") {
    CHECK(geom::inradius(2, 1.0) == Approx(1.0 / std::sqrt(12.0)).epsilon(1e-12));
    CHECK(geom::inradius(3, 1.0) == Approx(1.0 / std::sqrt(24.0)).epsilon(1e-12));
    CHECK(geom::inradius(4, 0.25) == Approx(0.25 / std::sqrt(40.0)).epsilon(1e-12));
}

TEST_CASE("inradius cross-checked against the embedded simplex") {
    // Independent route: distance from the centroid of an explicit embedding
    // to its nearest face.
    for (auto [n, s] : {std::pair<int, double>{2, 1.0}, {4, 0.25}, {7, 0.6}}) {
        const mc::SimplexEmbedding emb = mc::build_regular_simplex(n, s);
        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j < n; ++j) centroid[j] += emb.vertex(i)[j] / (n + 1.0);
        const double dist = mc::distance_to_nearest_face(centroid.data(), emb).eps;
        CHECK(dist == Approx(geom::inradius(n, s)).epsilon(1e-9));
    }
}

TEST_CASE("inradius identity n*V/S == s/sqrt(2n(n+1))") {
    for (int n = 1; n <= 50; ++n)
        for (double s : {0.1, 1.0, 10.0}) {
            const double closed = s / std::sqrt(2.0 * n * (n + 1.0));
            CHECK(geom::inradius(n, s) == Approx(closed).epsilon(1e-10));
        }
}

TEST_CASE("side_length from the shattering bound") {
    CHECK(geom::side_length(784, 1) == Approx(14.0).epsilon(1e-15));
    CHECK(geom::side_length(2, 2) == Approx(std::sqrt(2.0) / 4.0).epsilon(1e-15));
    CHECK(geom::side_length(4, 3) == Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(geom::side_length(0, 1), std::domain_error);
    CHECK_THROWS_AS(geom::side_length(1, 0), std::domain_error);
}

TEST_CASE("mean distance, exact chain") {
    CHECK(geom::mean_distance_exact(2, 2) == Approx(0.034021).epsilon(1e-4));
    CHECK(geom::mean_distance_exact(5, 1) == Approx(0.024056).epsilon(1e-4));
    CHECK(geom::mean_distance_exact(1, 1) == Approx(0.125).epsilon(1e-12));
}

TEST_CASE("mean distance validated by Monte Carlo") {
    // Oracle: average nearest-face distance of uniform samples.
    const std::vector<double> eps = mc::collect_distances(2, 2, 400000, 99, 1);
    const double mc_mean = oracle::sample_mean(eps);
    CHECK(mc_mean == Approx(geom::mean_distance_exact(2, 2)).epsilon(0.01));
}

TEST_CASE("mean distance, large-n approximation") {
    CHECK(geom::mean_distance_approx(784, 1) == Approx(1.611e-5).epsilon(1e-3));
    CHECK(geom::mean_distance_approx(2, 2) == Approx(0.0625).epsilon(1e-15));
    CHECK(geom::mean_distance_approx(10000, 4) ==
          Approx(geom::mean_distance_exact(10000, 4)).epsilon(0.01));
    for (int n = 100; n <= 1000; n += 100)
        for (int q : {1, 4, 8}) {
            const double ratio =
                geom::mean_distance_approx(n, q) / geom::mean_distance_exact(n, q);
            CHECK(std::abs(ratio - 1.0) < 0.05);
        }
}

TEST_CASE("mean distance decreases in n and q") {
    for (int n = 1; n <= 50; ++n)
        for (int q = 1; q <= 10; ++q) {
            CHECK(geom::mean_distance_exact(n + 1, q) < geom::mean_distance_exact(n, q));
            CHECK(geom::mean_distance_exact(n, q + 1) < geom::mean_distance_exact(n, q));
        }
}

TEST_CASE("distance pdf: boundary, origin, normalization") {
    const double h = geom::inradius(2, geom::side_length(2, 2));
    CHECK(h == Approx(0.102062).epsilon(1e-5));
    CHECK(geom::distance_pdf(h, 2, h) == 0.0);
    CHECK(geom::distance_pdf(h, 17, h) == 0.0);
    CHECK(geom::distance_pdf(0.0, 2, h) == Approx(2.0 / h).epsilon(1e-12));
    CHECK(geom::distance_pdf(0.0, 2, h) == Approx(19.596).epsilon(1e-4));
    CHECK(geom::distance_pdf(h * 2, 2, h) == 0.0);
    CHECK_THROWS_AS(geom::distance_pdf(0.1, 2, 0.0), std::domain_error);

    for (int n : {1, 2, 5, 13, 30}) {
        const double hn = geom::inradius(n, geom::side_length(n, 3));
        // n = 1 has a density jump at h; integrate the interior limit.
        const double cap = hn * (1.0 - 1e-13);
        const double mass = oracle::simpson(
            [&](double e) { return geom::distance_pdf(std::min(e, cap), n, hn); }, 0.0, hn,
            200000);
        CHECK(mass == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("distance pdf mean equals h/(n+1)") {
    for (int n : {1, 2, 4, 9, 21, 30})
        for (int q : {1, 4, 10}) {
            const double h = geom::inradius(n, geom::side_length(n, q));
            const double cap = h * (1.0 - 1e-13);
            const double mean = oracle::simpson(
                [&](double e) { return e * geom::distance_pdf(std::min(e, cap), n, h); }, 0.0,
                h, 200000);
            CHECK(mean == Approx(h / (n + 1.0)).epsilon(1e-9));
        }
}

TEST_CASE("distance cdf values and consistency with the pdf") {
    const double h = 0.25;
    CHECK(geom::distance_cdf(0.0, 5, h) == 0.0);
    CHECK(geom::distance_cdf(h / 2, 2, h) == Approx(0.75).epsilon(1e-12));
    CHECK(geom::distance_cdf(h, 5, h) == 1.0);
    CHECK(geom::distance_cdf(2 * h, 5, h) == 1.0);
    CHECK_THROWS_AS(geom::distance_cdf(0.1, 2, -1.0), std::domain_error);

    // Finite-difference oracle: dF/de == f on an interior grid.
    for (int n : {1, 2, 6, 17, 30}) {
        const double hn = geom::inradius(n, geom::side_length(n, 2));
        const double d = hn * 3e-5;
        for (int k = 1; k <= 9; ++k) {
            const double e = hn * k / 10.0;
            const double fd =
                (geom::distance_cdf(e + d, n, hn) - geom::distance_cdf(e - d, n, hn)) /
                (2 * d);
            const double f = geom::distance_pdf(e, n, hn);
            CHECK(std::abs(fd - f) / std::max(1.0, f) < 1e-6);
        }
    }
}

TEST_CASE("cdf is non-decreasing in eps") {
    for (int n : {1, 3, 11, 30}) {
        const double h = geom::inradius(n, geom::side_length(n, 4));
        double prev = -1.0;
        for (int k = 0; k <= 120; ++k) {
            const double c = geom::distance_cdf(1.2 * h * k / 120.0, n, h);
            CHECK(c >= prev);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
            prev = c;
        }
    }
}

TEST_CASE("relative accuracy bound: endpoints and monotonicity") {
    CHECK(geom::relative_accuracy_bound(0.0, 784, 1) == 1.0);
    const double h = geom::inradius(784, geom::side_length(784, 1));
    CHECK(geom::relative_accuracy_bound(h, 784, 1) == 0.0);
    CHECK(geom::relative_accuracy_bound(0.8, 784, 1) == 0.0);

    for (int n : {2, 784})
        for (int q = 1; q <= 10; ++q) {
            double prev = 2.0;
            for (int k = 0; k <= 100; ++k) {
                const double b = geom::relative_accuracy_bound(0.8 * k / 100.0, n, q);
                CHECK(b <= prev + 1e-15);
                prev = b;
            }
        }

    // Non-increasing in q at fixed eps > 0.
    for (double eps : {1e-4, 1e-3, 1e-2})
        for (int q = 1; q < 10; ++q)
            CHECK(geom::relative_accuracy_bound(eps, 784, q + 1) <=
                  geom::relative_accuracy_bound(eps, 784, q) + 1e-15);
}

TEST_CASE("bound curves for n=784 are ordered by q (lower q above)") {
    bool strict_somewhere = false;
    auto scan = [&](double eps) {
        double prev = 2.0;
        for (int q = 1; q <= 10; ++q) {
            const double b = geom::relative_accuracy_bound(eps, 784, q);
            CHECK(b <= prev + 1e-15);
            if (b < prev - 1e-15 && prev <= 1.0) strict_somewhere = true;
            prev = b;
        }
    };
    // Coarse grid over the full plot range (weak ordering), plus a fine grid
    // at the h/n scale where the curves are strictly separated.
    for (int k = 0; k <= 160; ++k) scan(0.8 * k / 160.0);
    for (int k = 1; k <= 40; ++k) scan(1e-6 * k);
    CHECK(strict_somewhere);
}

TEST_CASE("fgsm-to-L2 conversion") {
    CHECK(geom::fgsm_to_l2(0.01, 784) == Approx(0.28).epsilon(1e-12));
    CHECK(geom::fgsm_to_l2(0.125, 2) == Approx(0.125 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(geom::fgsm_to_l2(0.125, 2) == Approx(0.18).epsilon(0.05));
    CHECK(geom::fgsm_to_l2(0.0, 10) == 0.0);
}

TEST_CASE("SimplexGeometry and MarginModel invariants") {
    const geom::SimplexGeometry sg = geom::make_simplex_geometry(12, 0.75);
    CHECK(sg.h > 0.0);
    CHECK(sg.h < sg.s);
    CHECK(sg.h == Approx(sg.s / std::sqrt(2.0 * 12 * 13)).epsilon(1e-12));

    const geom::MarginModel mm = geom::make_margin_model(5, 1);
    CHECK(mm.mean_exact == Approx(mm.h / 6.0).epsilon(1e-15));
    CHECK(mm.mean_approx == Approx(std::exp2(-1.5) * std::pow(5.0, -1.5)).epsilon(1e-15));
}
