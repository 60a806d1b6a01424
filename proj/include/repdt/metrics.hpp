#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "repdt/common.hpp"

namespace repdt {

/// Features ordered by decreasing importance, ties to the lower index.
struct ImportanceRanking {
    std::vector<std::size_t> order;        // order[r] = feature at rank r (0-based)
    std::vector<std::size_t> position_of;  // 1-based rank position of each feature

    friend bool operator==(const ImportanceRanking&, const ImportanceRanking&) = default;
};

ImportanceRanking rank_features(std::span<const double> importances);

/// Ranking built from an explicit order; throws unless it is a permutation.
ImportanceRanking ranking_from_order(std::vector<std::size_t> order);

/// Mean absolute difference of feature positions between two rankings.
double rank_distance(const ImportanceRanking& a, const ImportanceRanking& b);

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman's rho with a two-sided Student-t p-value. Throws
/// ValidationError for length mismatch, n < 3, or a constant input.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a correlation coefficient under the t approximation
/// with n - 2 degrees of freedom.
double correlation_p_value(double rho, std::size_t n);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

}  // namespace repdt
