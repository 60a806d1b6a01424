#include "repdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace repdt {

ImportanceRanking rank_features(std::span<const double> importances) {
    for (double v : importances)
        if (!std::isfinite(v)) throw ValidationError("importance values must be finite");
    std::vector<std::size_t> order(importances.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return importances[a] > importances[b];
    });
    return ranking_from_order(std::move(order));
}

ImportanceRanking ranking_from_order(std::vector<std::size_t> order) {
    ImportanceRanking r;
    r.position_of.assign(order.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t f = order[pos];
        if (f >= order.size() || r.position_of[f] != 0)
            throw ValidationError("ranking order is not a permutation");
        r.position_of[f] = pos + 1;
    }
    r.order = std::move(order);
    return r;
}

double rank_distance(const ImportanceRanking& a, const ImportanceRanking& b) {
    if (a.position_of.size() != b.position_of.size())
        throw ValidationError("rankings cover different numbers of features");
    if (a.position_of.empty()) return 0.0;
    std::size_t total = 0;
    for (std::size_t j = 0; j < a.position_of.size(); ++j) {
        const std::size_t pa = a.position_of[j], pb = b.position_of[j];
        total += pa > pb ? pa - pb : pb - pa;
    }
    return static_cast<double>(total) / static_cast<double>(a.position_of.size());
}

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0 && b > 0)) throw ValidationError("incomplete beta needs a, b > 0");
    if (!(x >= 0 && x <= 1)) throw ValidationError("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double dof) {
    if (!(dof > 0)) throw ValidationError("degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

double correlation_p_value(double rho, std::size_t n) {
    if (n < 3) throw ValidationError("p-value needs at least 3 samples");
    const double dof = static_cast<double>(n - 2);
    const double r2 = rho * rho;
    if (r2 >= 1.0) return 0.0;
    const double t = rho * std::sqrt(dof / (1.0 - r2));
    return std::clamp(student_t_two_sided(t, dof), 0.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError("spearman inputs differ in length (" + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 3) throw ValidationError("spearman needs at least 3 samples");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
    };
    if (constant(x) || constant(y))
        throw ValidationError("undefined correlation: an input vector is constant");

    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    CorrelationResult r;
    r.n = x.size();
    r.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
    r.p_value = correlation_p_value(r.rho, r.n);
    return r;
}

}  // namespace repdt
