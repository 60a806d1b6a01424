#pragma once

// Column-presorted sample index lists shared by the classification and
// regression tree builders.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "repdt/dataset.hpp"

namespace repdt::detail {

using SampleId = std::uint32_t;

/// For every feature, the samples reaching a node sorted by that feature
/// (ties by sample id).
struct SortedColumns {
    std::vector<std::vector<SampleId>> by_feature;

    std::size_t size() const noexcept { return by_feature.empty() ? 0 : by_feature[0].size(); }
};

inline SortedColumns presort(const LabeledDataset& ds) {
    SortedColumns cols;
    cols.by_feature.resize(ds.dims());
    for (std::size_t j = 0; j < ds.dims(); ++j) {
        auto& order = cols.by_feature[j];
        order.resize(ds.size());
        std::iota(order.begin(), order.end(), SampleId{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](SampleId a, SampleId b) { return ds.at(a, j) < ds.at(b, j); });
    }
    return cols;
}

/// Stable partition of every column by `goes_left[sample]`.
inline std::pair<SortedColumns, SortedColumns> partition(const SortedColumns& cols,
                                                         const std::vector<char>& goes_left,
                                                         std::size_t n_left) {
    SortedColumns left, right;
    left.by_feature.resize(cols.by_feature.size());
    right.by_feature.resize(cols.by_feature.size());
    for (std::size_t j = 0; j < cols.by_feature.size(); ++j) {
        left.by_feature[j].reserve(n_left);
        right.by_feature[j].reserve(cols.size() - n_left);
        for (SampleId s : cols.by_feature[j])
            (goes_left[s] ? left.by_feature[j] : right.by_feature[j]).push_back(s);
    }
    return {std::move(left), std::move(right)};
}

/// Midpoint of two consecutive distinct values, or nothing when they are
/// adjacent doubles and no representable value lies strictly between them.
inline bool midpoint_between(double lo, double hi, double& mid) {
    mid = std::midpoint(lo, hi);
    return lo < mid && mid < hi;
}

}  // namespace repdt::detail
