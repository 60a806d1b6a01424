#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "repdt/metrics.hpp"

using namespace repdt;

namespace {

// I_x(a, b) by composite Simpson on the substituted integrand
// t = u^2 (removes the t^(a-1) singularity at 0 for a < 1).
double quadrature_beta(double a, double b, double x) {
    const int n = 200000;
    const double hi = std::sqrt(x);
    const double h = hi / n;
    auto f = [&](double u) {
        if (u == 0.0) return a == 0.5 ? 2.0 : 0.0;
        return 2.0 * std::pow(u, 2 * a - 1) * std::pow(1 - u * u, b - 1);
    };
    double s = f(0) + f(hi);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
    const double integral = s * h / 3;
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return integral / std::exp(log_beta);
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t d) {
    std::vector<std::size_t> p(d);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<std::size_t>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace

TEST_CASE("rank_features") {
    const std::vector<double> fi{0.1, 0.7, 0.2};
    const auto r = rank_features(fi);
    CHECK(r.order == std::vector<std::size_t>{1, 2, 0});
    CHECK(r.position_of == std::vector<std::size_t>{3, 1, 2});

    const std::vector<double> tied{0.5, 0.5, 0.0};
    CHECK(rank_features(tied).order == std::vector<std::size_t>{0, 1, 2});

    CHECK_THROWS_AS(ranking_from_order({0, 0, 1}), ValidationError);
    CHECK_THROWS_AS(ranking_from_order({0, 3}), ValidationError);
}

TEST_CASE("rank_distance") {
    const auto a = ranking_from_order({0, 1, 2});
    const auto b = ranking_from_order({2, 1, 0});
    CHECK(rank_distance(a, b) == doctest::Approx(4.0 / 3.0));
    CHECK(rank_distance(a, a) == 0.0);
    CHECK_THROWS_AS(rank_distance(a, ranking_from_order({0, 1})), ValidationError);

    SUBCASE("pseudometric axioms, exhaustively for d <= 4") {
        for (std::size_t d = 1; d <= 4; ++d) {
            std::vector<ImportanceRanking> all;
            for (auto& p : all_permutations(d)) all.push_back(ranking_from_order(p));
            for (const auto& x : all)
                for (const auto& y : all) {
                    const double dxy = rank_distance(x, y);
                    CHECK(dxy >= 0.0);
                    CHECK(dxy == rank_distance(y, x));
                    CHECK((dxy == 0.0) == (x == y));
                    for (const auto& z : all) CHECK(rank_distance(x, z) <= dxy + rank_distance(y, z) + 1e-12);
                }
        }
    }
}

TEST_CASE("fractional ranks and pearson") {
    const std::vector<double> v{10, 20, 20, 5};
    CHECK(fractional_ranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
    const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
}

TEST_CASE("spearman") {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
    const auto r = spearman(x, y);
    CHECK(r.rho == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.10408803866182788).epsilon(1e-9));
    CHECK(r.n == 5);

    SUBCASE("self correlation is one") {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        std::vector<double> z(30);
        for (double& v : z) v = g(rng);
        CHECK(spearman(z, z).rho == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("invariant under monotone transforms") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-3, 3);
        std::vector<double> a(40), b(40), ea(40);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = u(rng);
            b[i] = a[i] + u(rng);
            ea[i] = std::exp(a[i]);
        }
        CHECK(spearman(a, b).rho == doctest::Approx(spearman(ea, b).rho).epsilon(1e-12));
    }
    SUBCASE("matches the closed form for every permutation of 5 and 6 elements") {
        for (std::size_t n : {5u, 6u}) {
            std::vector<double> id(n);
            std::iota(id.begin(), id.end(), 1.0);
            for (const auto& p : all_permutations(n)) {
                std::vector<double> perm(n);
                double d2 = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    perm[i] = static_cast<double>(p[i] + 1);
                    d2 += (perm[i] - id[i]) * (perm[i] - id[i]);
                }
                const double nn = static_cast<double>(n);
                const double expected = 1 - 6 * d2 / (nn * (nn * nn - 1));
                CHECK(spearman(id, perm).rho == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
    SUBCASE("errors") {
        const std::vector<double> c{1, 1, 1, 1};
        const std::vector<double> w{1, 2, 3, 4};
        CHECK_THROWS_AS(spearman(c, w), ValidationError);
        CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
        CHECK_THROWS_AS(spearman(w, std::vector<double>{1, 2, 3}), ValidationError);
    }
}

TEST_CASE("correlation p-values") {
    CHECK(correlation_p_value(0.51, 100) == doctest::Approx(5.96394401546294e-08).epsilon(1e-8));
    CHECK(correlation_p_value(0.673, 100) == doctest::Approx(1.7228439283279326e-14).epsilon(1e-8));
    CHECK(correlation_p_value(0.0, 50) == doctest::Approx(1.0));
    CHECK(correlation_p_value(1.0, 50) == 0.0);
    CHECK(correlation_p_value(-0.51, 100) == correlation_p_value(0.51, 100));

    double prev = 1.1;
    for (double rho = 0.0; rho <= 0.99; rho += 0.03) {
        const double p = correlation_p_value(rho, 40);
        CHECK(p < prev);
        CHECK(p >= 0.0);
        prev = p;
    }
}

TEST_CASE("incomplete beta") {
    SUBCASE("reference values") {
        CHECK(incomplete_beta(2.5, 0.5, 0.3) == doctest::Approx(0.018927124071945658).epsilon(1e-12));
        CHECK(incomplete_beta(10, 3, 0.9) == doctest::Approx(0.889130022255).epsilon(1e-10));
        CHECK(incomplete_beta(49, 0.5, 0.7) == doctest::Approx(3.6885094930268223e-09).epsilon(1e-10));
        CHECK(incomplete_beta(1.5, 0.5, 0.999) == doctest::Approx(0.9597433418849682).epsilon(1e-12));
        CHECK(incomplete_beta(0.5, 0.5, 0.2) == doctest::Approx(0.2951672353008665).epsilon(1e-12));
    }
    SUBCASE("agrees with numerical integration") {
        for (double a : {0.5, 1.0, 2.5, 7.0})
            for (double b : {0.5, 1.0, 3.0})
                for (double x : {0.05, 0.3, 0.5, 0.8})
                    CHECK(incomplete_beta(a, b, x) == doctest::Approx(quadrature_beta(a, b, x)).epsilon(1e-7));
    }
    SUBCASE("endpoints and symmetry") {
        CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
        CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
        CHECK(incomplete_beta(2, 3, 0.4) == doctest::Approx(1 - incomplete_beta(3, 2, 0.6)).epsilon(1e-13));
        CHECK_THROWS_AS(incomplete_beta(2, 3, 1.5), ValidationError);
        CHECK_THROWS_AS(incomplete_beta(0, 3, 0.5), ValidationError);
    }
    SUBCASE("student t") {
        CHECK(student_t_two_sided(0.0, 10) == doctest::Approx(1.0));
        // dof = 1 is Cauchy: P(|T| >= 1) = 0.5
        CHECK(student_t_two_sided(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
        // dof = 2 has a closed form: 1 - t / sqrt(2 + t^2)
        CHECK(student_t_two_sided(1.7, 2) == doctest::Approx(1 - 1.7 / std::sqrt(2 + 1.7 * 1.7)).epsilon(1e-12));
    }
}
