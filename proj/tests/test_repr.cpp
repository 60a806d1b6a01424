#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "repdt/repr.hpp"

using namespace repdt;

namespace {

// Independent double loop: for each x, minimum same-class Chebyshev distance.
double brute_force_epsilon(const LabeledDataset& x, const LabeledDataset& xt) {
    double eps = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < xt.size(); ++r) {
            if (xt.label(r) != x.label(i)) continue;
            double d = 0.0;
            for (std::size_t j = 0; j < x.dims(); ++j) {
                const double diff = std::fabs(x.at(i, j) - xt.at(r, j));
                if (diff > d) d = diff;
            }
            if (d < best) best = d;
        }
        if (best > eps) eps = best;
    }
    return eps;
}

LabeledDataset random_points(std::size_t n, std::size_t d, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> lab(0, c - 1);
    std::vector<double> pts(n * d);
    for (double& v : pts) v = u(rng);
    std::vector<Label> labels(n);
    for (auto& y : labels) y = lab(rng);
    return LabeledDataset(pts, d, labels, c);
}

// Random subset that keeps at least one point of each class present in ds.
LabeledDataset random_subset(const LabeledDataset& ds, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(m);
    return ds.select(idx);
}

}  // namespace

TEST_CASE("linf_distance") {
    const double a[] = {0.0, 3.0, -1.0};
    const double b[] = {1.0, 1.0, -1.5};
    CHECK(linf_distance(a, b) == 2.0);
    CHECK(linf_distance(a, a) == 0.0);
}

TEST_CASE("epsilon_of hand examples") {
    SUBCASE("identical datasets") {
        const auto x = random_points(40, 3, 2, 1);
        for (bool prune : {false, true}) {
            const auto a = epsilon_of(x, x, {1, prune});
            CHECK(a.epsilon == 0.0);
            for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.rep_of[i] == i);
            CHECK(a.gamma == std::optional<std::size_t>{1});
        }
    }
    SUBCASE("two-point example") {
        LabeledDataset x({0, 0, 1, 1}, 2, {0, 1}, 2);
        LabeledDataset xt({0.2, 0.1, 1, 1}, 2, {0, 1}, 2);
        const auto a = epsilon_of(x, xt);
        CHECK(a.epsilon == 0.2);
        CHECK(a.rep_of[0] == 0u);
        CHECK(a.rep_of[1] == 1u);
    }
    SUBCASE("uncovered class gives infinity and a diagnostic") {
        LabeledDataset x({0, 1, 2}, 1, {0, 1, 2}, 3);
        LabeledDataset xt({0, 1}, 1, {0, 1}, 3);
        const auto a = epsilon_of(x, xt);
        CHECK(std::isinf(a.epsilon));
        CHECK_FALSE(a.rep_of[2].has_value());
        CHECK(a.uncovered_classes == std::vector<Label>{2});
        REQUIRE(a.diagnostics.size() == 1);
        CHECK(a.diagnostics[0] == "class 2 uncovered");
        CHECK_FALSE(a.gamma.has_value());
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(epsilon_of(random_points(5, 2, 2, 1), random_points(5, 3, 2, 1)),
                        ValidationError);
    }
    SUBCASE("ties go to the lowest index") {
        LabeledDataset x({0.0}, 1, {0}, 2);
        LabeledDataset xt({1.0, -1.0, 1.0}, 1, {0, 0, 0}, 2);
        for (bool prune : {false, true}) CHECK(epsilon_of(x, xt, {1, prune}).rep_of[0] == 0u);
    }
}

TEST_CASE("epsilon_of matches the brute-force oracle") {
    for (std::uint64_t s = 0; s < 60; ++s) {
        std::mt19937_64 rng(s);
        const std::size_t n = 1 + rng() % 200;
        const std::size_t d = 1 + rng() % 8;
        const int c = 2 + static_cast<int>(rng() % 3);
        const auto x = random_points(n, d, c, rng());
        const auto xt = random_subset(x, 1 + rng() % std::min<std::size_t>(n, 60), rng());
        const double oracle = brute_force_epsilon(x, xt);
        const auto scan = epsilon_of(x, xt, {1, false});
        const auto pruned = epsilon_of(x, xt, {1, true});
        const auto threaded = epsilon_of(x, xt, {4, true});
        if (std::isinf(oracle)) {
            CHECK(std::isinf(scan.epsilon));
        } else {
            CHECK(std::abs(scan.epsilon - oracle) <= 1e-12);
        }
        // the pruning pass and threading must not change the assignment
        CHECK(pruned.rep_of == scan.rep_of);
        CHECK(threaded.rep_of == scan.rep_of);
        CHECK((pruned.epsilon == scan.epsilon || (std::isinf(pruned.epsilon) && std::isinf(scan.epsilon))));
    }
}

TEST_CASE("epsilon_of properties") {
    const auto x = random_points(120, 3, 2, 17);
    SUBCASE("self distance is zero") { CHECK(epsilon_of(x, x).epsilon == 0.0); }
    SUBCASE("appending points never increases epsilon") {
        auto base = random_subset(x, 20, 4);
        double prev = epsilon_of(x, base).epsilon;
        std::vector<double> pts = base.points();
        std::vector<Label> labels = base.labels();
        for (std::size_t i = 0; i < 40; ++i) {
            const auto r = x.row(i * 3);
            pts.insert(pts.end(), r.begin(), r.end());
            labels.push_back(x.label(i * 3));
            const double now = epsilon_of(x, LabeledDataset(pts, 3, labels, 2)).epsilon;
            CHECK(now <= prev);
            prev = now;
        }
    }
    SUBCASE("directed: a strict subset is covered by its superset at zero") {
        const auto sub = random_subset(x, 30, 5);
        CHECK(epsilon_of(sub, x).epsilon == 0.0);
        CHECK(epsilon_of(x, sub).epsilon >= 0.0);
        CHECK(epsilon_of(x, sub).epsilon > 0.0);
    }
}

TEST_CASE("make_assignment validates explicit maps") {
    LabeledDataset x({0, 1, 2, 3}, 1, {0, 0, 1, 1}, 2);
    LabeledDataset xt({0.5, 2.5}, 1, {0, 1}, 2);
    const auto a = make_assignment(x, xt, {0u, 0u, 1u, 1u});
    CHECK(a.epsilon == 0.5);
    CHECK(a.per_rep_counts == std::vector<std::size_t>{2, 2});
    CHECK(a.gamma == std::optional<std::size_t>{2});
    CHECK_THROWS_AS(make_assignment(x, xt, {0u, 0u, 0u, 1u}), ValidationError);  // label clash
    CHECK_THROWS_AS(make_assignment(x, xt, {0u, 0u, 1u, 5u}), ValidationError);  // out of range
}

TEST_CASE("is_gamma_balanced") {
    SUBCASE("identity assignment is 1-balanced") {
        const auto x = random_points(10, 2, 2, 3);
        const auto check = is_gamma_balanced(identity_assignment(x, x));
        CHECK(check.balanced);
        CHECK(check.gamma == std::optional<std::size_t>{1});
    }
    SUBCASE("counts [2,2]") {
        LabeledDataset x({0, 1, 2, 3}, 1, {0, 0, 1, 1}, 2);
        LabeledDataset xt({0.5, 2.5}, 1, {0, 1}, 2);
        const auto check = is_gamma_balanced(make_assignment(x, xt, {0u, 0u, 1u, 1u}));
        CHECK(check.balanced);
        CHECK(check.gamma == std::optional<std::size_t>{2});
    }
    SUBCASE("counts [3,1] names both representatives") {
        LabeledDataset x({0, 1, 2, 3}, 1, {0, 0, 0, 0}, 1);
        LabeledDataset xt({0.5, 2.5}, 1, {0, 0}, 1);
        const auto check = is_gamma_balanced(make_assignment(x, xt, {0u, 0u, 0u, 1u}));
        CHECK_FALSE(check.balanced);
        CHECK_FALSE(check.gamma.has_value());
        REQUIRE(check.diagnostics.size() == 2);
        CHECK(check.diagnostics[0].find("representative 0") != std::string::npos);
        CHECK(check.diagnostics[1].find("representative 1") != std::string::npos);
    }
    SUBCASE("unassigned points are reported") {
        LabeledDataset x({0, 1}, 1, {0, 1}, 2);
        LabeledDataset xt({0}, 1, {0}, 2);
        const auto check = is_gamma_balanced(epsilon_of(x, xt));
        CHECK_FALSE(check.balanced);
        CHECK(check.diagnostics.front().find("point 1") != std::string::npos);
    }
}

TEST_CASE("construct_balanced_subset") {
    SUBCASE("gamma 1 reproduces the dataset") {
        const auto x = random_points(25, 3, 3, 2);
        const auto b = construct_balanced_subset(x, 1, 9);
        CHECK(b.subset == x);
        CHECK(b.assignment.epsilon == 0.0);
    }
    SUBCASE("identical points collapse to one representative") {
        LabeledDataset x({1, 1, 1, 1, 1, 1}, 2, {0, 0, 0}, 1);
        const auto b = construct_balanced_subset(x, 3, 0);
        CHECK(b.subset.size() == 1);
        CHECK(b.assignment.epsilon == 0.0);
        CHECK(b.assignment.gamma == std::optional<std::size_t>{3});
    }
    SUBCASE("12 random points, gamma 3") {
        std::vector<double> pts;
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 24; ++i) pts.push_back(u(rng));
        LabeledDataset x(pts, 2, {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}, 2);
        const auto b = construct_balanced_subset(x, 3, 5);
        CHECK(b.subset.size() == 4);
        const auto check = is_gamma_balanced(b.assignment);
        CHECK(check.balanced);
        CHECK(check.gamma == std::optional<std::size_t>{3});
        CHECK(epsilon_of(x, b.subset).epsilon <= b.assignment.epsilon);
        // representatives are rows of x
        const auto cover = epsilon_of(b.subset, x);
        CHECK(cover.epsilon == 0.0);
    }
    SUBCASE("always balanced on random inputs") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const std::size_t gamma = 1 + s % 4;
            std::vector<double> pts;
            std::vector<Label> labels;
            std::mt19937_64 rng(s);
            std::normal_distribution<double> g;
            for (int k = 0; k < 2; ++k)
                for (std::size_t i = 0; i < gamma * (2 + s % 5); ++i) {
                    pts.push_back(g(rng));
                    pts.push_back(g(rng));
                    labels.push_back(k);
                }
            LabeledDataset x(pts, 2, labels, 2);
            const auto b = construct_balanced_subset(x, gamma, s);
            CHECK(is_gamma_balanced(b.assignment).balanced);
            CHECK(b.subset.size() * gamma == x.size());
        }
    }
    SUBCASE("divisibility violation names class and remainder") {
        LabeledDataset x({0, 1, 2, 3, 4}, 1, {0, 0, 0, 1, 1}, 2);
        try {
            construct_balanced_subset(x, 2, 0);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("class 0") != std::string::npos);
            CHECK(msg.find("remainder 1") != std::string::npos);
        }
    }
}

TEST_CASE("perturbed_copy") {
    const auto x = random_points(50, 4, 2, 21);
    CHECK(perturbed_copy(x, 0.0, 1) == x);
    for (double radius : {1e-6, 0.01, 0.3}) {
        const auto y = perturbed_copy(x, radius, 7);
        CHECK(y.labels() == x.labels());
        CHECK(identity_assignment(x, y).epsilon < radius);
        CHECK(epsilon_of(x, y).epsilon <= radius);
    }
    CHECK(epsilon_of(x, perturbed_copy(x, 0.01, 3)).epsilon > 0.0);
    CHECK_THROWS_AS(perturbed_copy(x, -1.0, 0), ValidationError);
}
