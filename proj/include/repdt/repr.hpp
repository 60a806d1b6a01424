#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repdt/dataset.hpp"

namespace repdt {

/// Chebyshev (L-infinity) distance.
double linf_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Assignment of every point of a dataset X to a same-class representative
/// in a second dataset X~, together with the realized covering radius.
struct ReprAssignment {
    /// rep_of[i] is an index into X~, or nullopt when X~ has no point of
    /// the class of x_i.
    std::vector<std::optional<std::size_t>> rep_of;
    /// max_i L-inf(x_i, x~_{rep_of[i]}); +inf when any point is unassigned.
    double epsilon = 0.0;
    /// Set iff every representative covers the same number of points and
    /// every point is assigned.
    std::optional<std::size_t> gamma;
    std::vector<std::size_t> per_rep_counts;
    std::vector<Label> uncovered_classes;
    std::vector<std::string> diagnostics;
};

/// Builds an assignment from an explicit rep_of map, filling epsilon,
/// per-representative counts and gamma. Throws ValidationError when a
/// representative index is out of range or labels disagree.
ReprAssignment make_assignment(const LabeledDataset& x, const LabeledDataset& xt,
                               std::vector<std::optional<std::size_t>> rep_of);

struct EpsilonOptions {
    /// Worker threads; 0 selects std::thread::hardware_concurrency().
    unsigned threads = 1;
    /// Use the sorted-column pruning pass. Produces the same assignment as
    /// the plain scan.
    bool prune = true;
};

/// Smallest epsilon for which xt is an epsilon-representative dataset of x,
/// with the nearest same-class representative of every point (ties to the
/// lowest index of xt).
ReprAssignment epsilon_of(const LabeledDataset& x, const LabeledDataset& xt,
                          const EpsilonOptions& options = {});

struct BalanceCheck {
    bool balanced = false;
    std::optional<std::size_t> gamma;
    std::vector<std::string> diagnostics;
};

BalanceCheck is_gamma_balanced(const ReprAssignment& assignment);

struct BalancedSubset {
    LabeledDataset subset;
    ReprAssignment assignment;
};

/// Greedy farthest-point grouping per class into groups of exactly `gamma`
/// points, each represented by its 1-center medoid. The subset is a subset
/// of x (kept in original row order) and the assignment is gamma-balanced.
/// Throws ValidationError when a class size is not divisible by gamma.
BalancedSubset construct_balanced_subset(const LabeledDataset& x, std::size_t gamma,
                                         std::uint64_t seed);

/// Copy of x with every coordinate displaced by uniform noise in
/// (-radius, +radius). Labels are unchanged.
LabeledDataset perturbed_copy(const LabeledDataset& x, double radius, std::uint64_t seed);

/// Identity assignment x_i -> xt_i between two equally sized datasets.
ReprAssignment identity_assignment(const LabeledDataset& x, const LabeledDataset& xt);

}  // namespace repdt
