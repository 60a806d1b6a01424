#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "repdt/boost.hpp"
#include "repdt/cart.hpp"
#include "repdt/dataset.hpp"
#include "repdt/metrics.hpp"
#include "repdt/serialize.hpp"

namespace repdt {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

// Stream tags for seed derivation: the split uses mix_seed(seed, kSplitStream),
// subset k uses mix_seed(mix_seed(seed, kSubsetStream), k).
inline constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
inline constexpr std::uint64_t kSubsetStream = 0x737562736574ULL;

enum class ModelKind { tree, boosted };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::tree;
    TrainConfig tree{Impurity::gini, 10, 2, 0.0};
    BoostConfig boost;
};

Model train_model(const LabeledDataset& train, const ModelSpec& spec);
Label predict(const Model& model, std::span<const double> x);
double accuracy(const Model& model, const LabeledDataset& ds);
std::vector<double> feature_importance(const Model& model);

// ---------------------------------------------------------------------------
// Subset-sampling experiment

struct DataSource {
    /// CSV input; when empty the synthetic circles generator is used.
    std::optional<std::filesystem::path> csv;
    CsvOptions csv_options;
    CirclesSpec circles;
};

struct ExperimentConfig {
    DataSource data;
    SplitSpec split;
    double subset_fraction = 0.1;
    std::size_t subset_count = 100;
    ModelSpec model;
    bool scale = true;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Throws ValidationError describing the first invalid field.
void validate(const ExperimentConfig& cfg);

struct SubsetRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t size = 0;
    double epsilon = 0.0;  // +inf when a class of the training set is absent
    std::vector<Label> uncovered_classes;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> importance;
    std::vector<double> importance_pct;
    ImportanceRanking ranking;
    double rank_distance = 0.0;
};

struct ReferenceRecord {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> importance;
    std::vector<double> importance_pct;
    ImportanceRanking ranking;
    double rank_distance_to_self = 0.0;
};

struct ExperimentReport {
    std::vector<std::string> feature_names;
    ReferenceRecord reference;
    std::vector<SubsetRecord> records;
    std::optional<CorrelationResult> correlation;
    std::string correlation_note;
    std::vector<std::size_t> exclusions;  // records with infinite epsilon
    std::vector<std::string> warnings;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Spearman over the finite-epsilon records; nullopt with a reason when
/// fewer than three remain or an input is constant.
std::optional<CorrelationResult> correlate(const std::vector<SubsetRecord>& records,
                                           std::string* reason = nullptr);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
nlohmann::json report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg);
std::string records_to_csv(const ExperimentReport& report);

/// Writes report.json and subsets.csv into `out_dir`, creating it if needed.
void write_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Accuracy-preservation campaign

struct MixtureSpec {
    std::size_t min_points = 20;
    std::size_t max_points = 200;
    std::size_t min_dims = 1;
    std::size_t max_dims = 5;
    int min_classes = 2;
    int max_classes = 3;
    std::size_t min_depth = 1;
    std::size_t max_depth = 6;
};

/// Gaussian mixture: one unit-variance blob per class, centres uniform in
/// [-2, 2]^d, labels drawn uniformly.
LabeledDataset generate_mixture(std::size_t n, std::size_t dims, int classes, std::uint64_t seed);

struct CampaignSummary {
    std::size_t trials = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;    // hypothesis held but routing or accuracy differed
    std::size_t skipped = 0;   // single-leaf tree, no margin
    std::size_t vacuous = 0;   // epsilon >= M
    std::size_t vacuous_mismatches = 0;  // differences seen while epsilon >= M
    std::vector<std::size_t> failed_trials;
};

/// Per trial: draw a mixture, fit a tree, perturb every point by less than
/// radius_fraction * M and check routing and exact accuracy equality.
CampaignSummary run_theorem1_campaign(std::size_t trials, const MixtureSpec& gen,
                                      double radius_fraction, std::uint64_t seed);

nlohmann::json campaign_to_json(const CampaignSummary& summary);

// ---------------------------------------------------------------------------
// Decision boundary export

struct GridBounds {
    double x1_lo = 0.0, x1_hi = 1.0;
    double x2_lo = 0.0, x2_hi = 1.0;
};

struct GridCell {
    double x1 = 0.0;
    double x2 = 0.0;
    Label label = 0;
};

/// resolution x resolution predictions on a uniform lattice including the
/// box corners, x2 outer and x1 inner.
std::vector<GridCell> boundary_grid(const Model& model, const GridBounds& bounds,
                                    std::size_t resolution);

/// Bounding box of a planar dataset widened by `pad` times its extent.
GridBounds bounds_of(const LabeledDataset& ds, double pad = 0.1);

std::string grid_to_csv(const std::vector<GridCell>& cells);

}  // namespace repdt
