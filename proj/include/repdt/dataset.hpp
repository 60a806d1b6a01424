#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "repdt/common.hpp"

namespace repdt {

using Label = int;

/// N points in R^d with integer class labels in [0, num_classes).
/// Points are stored row-major. Immutable after construction.
class LabeledDataset {
public:
    LabeledDataset() = default;

    /// Throws ValidationError when rows and labels disagree, a label is out
    /// of range, or a value is not finite. An empty feature_names list is
    /// replaced by "f0".."f{d-1}".
    LabeledDataset(std::vector<double> points, std::size_t dims, std::vector<Label> labels,
                   int num_classes, std::vector<std::string> feature_names = {});

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dims() const noexcept { return dims_; }
    int num_classes() const noexcept { return num_classes_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {points_.data() + i * dims_, dims_};
    }
    double at(std::size_t i, std::size_t j) const noexcept { return points_[i * dims_ + j]; }
    Label label(std::size_t i) const noexcept { return labels_[i]; }

    const std::vector<double>& points() const noexcept { return points_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    std::vector<std::size_t> class_counts() const;

    /// Rows at the given indices, in the given order.
    LabeledDataset select(std::span<const std::size_t> indices) const;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
    std::vector<double> points_;
    std::size_t dims_ = 0;
    std::vector<Label> labels_;
    int num_classes_ = 0;
    std::vector<std::string> feature_names_;
};

struct CsvOptions {
    static constexpr std::size_t kLastColumn = static_cast<std::size_t>(-1);

    /// Column name (matched against the header) or zero-based index;
    /// kLastColumn selects the final column.
    std::variant<std::string, std::size_t> label_column = kLastColumn;
    bool has_header = true;
};

/// Reads an RFC-4180 style CSV. Labels are factorized to 0..c-1 in order of
/// first appearance. A file with a single distinct label is accepted with
/// num_classes = 1 and a message appended to `warnings`.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options,
                        std::vector<std::string>* warnings = nullptr);

/// Same as load_csv but parses an in-memory document.
LabeledDataset parse_csv(std::string_view text, const CsvOptions& options,
                         std::vector<std::string>* warnings = nullptr);

void write_csv(const std::filesystem::path& path, const LabeledDataset& ds,
               const std::string& label_name = "label");

struct CirclesSpec {
    std::size_t n = 200;
    double noise_sd = 0.1;
    double inner_factor = 0.5;
    std::uint64_t seed = 0;
};

/// Two concentric noisy circles: ceil(n/2) points of class 0 on the unit
/// circle followed by floor(n/2) points of class 1 at radius inner_factor.
LabeledDataset generate_circles(const CirclesSpec& spec);

struct SplitSpec {
    double train_fraction = 0.75;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct TrainTestSplit {
    LabeledDataset train;
    LabeledDataset test;
};

/// Disjoint train/test partition. round(N * fraction) rows go to train;
/// stratified splits allocate per-class quotas by largest remainder.
/// Both parts keep the original row order.
TrainTestSplit split(const LabeledDataset& ds, const SplitSpec& spec);

/// Uniform sample of round(N * fraction) rows without replacement, kept in
/// original row order.
LabeledDataset sample_subset(const LabeledDataset& ds, double fraction, std::uint64_t seed);

struct ScaleTable {
    std::vector<double> mins;
    std::vector<double> maxs;
};

ScaleTable fit_minmax(const LabeledDataset& ds);

/// (v - min) / (max - min) per feature; constant features map to 0. Values
/// outside the fitted range extrapolate linearly.
LabeledDataset apply_minmax(const LabeledDataset& ds, const ScaleTable& table);

inline std::pair<LabeledDataset, ScaleTable> minmax_scale(const LabeledDataset& ds) {
    ScaleTable table = fit_minmax(ds);
    LabeledDataset scaled = apply_minmax(ds, table);
    return {std::move(scaled), std::move(table)};
}

}  // namespace repdt
