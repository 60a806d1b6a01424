#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "repdt/dataset.hpp"

namespace repdt {

struct BoostConfig {
    std::size_t n_stages = 25;
    std::size_t max_depth = 10;
    double learning_rate = 0.1;
    std::size_t min_samples_split = 2;

    friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

// Regression tree node. Splits use the same left rule as DecisionTree;
// leaves carry a real-valued score.
struct RegressionNode {
    std::size_t id = 0;
    std::size_t depth = 0;
    bool is_leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double gain = 0.0;  // decrease in mean squared error of the residuals
    std::size_t count = 0;
    double value = 0.0;

    friend bool operator==(const RegressionNode&, const RegressionNode&) = default;
};

class RegressionTree {
public:
    RegressionTree() = default;
    RegressionTree(std::vector<RegressionNode> nodes, std::size_t dims);

    double predict(std::span<const double> x) const;
    const std::vector<RegressionNode>& nodes() const noexcept { return nodes_; }
    std::size_t dims() const noexcept { return dims_; }
    std::size_t depth() const noexcept;

    /// count * gain summed per split feature.
    std::vector<double> feature_importance() const;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<RegressionNode> nodes_;
    std::size_t dims_ = 0;
};

/// Binary logistic gradient boosting. Each stage fits a regression tree to
/// the residuals y - sigmoid(F) by Friedman's improvement criterion and sets
/// leaf scores with one Newton step, sum(r) / sum(p (1 - p)).
class BoostedEnsemble {
public:
    BoostedEnsemble() = default;
    BoostedEnsemble(std::vector<RegressionTree> stages, double learning_rate, double initial_score,
                    BoostConfig config, std::vector<double> train_log_loss,
                    std::vector<std::string> feature_names);

    /// Throws ValidationError unless the training set has exactly two
    /// classes, both present.
    static BoostedEnsemble fit(const LabeledDataset& train, const BoostConfig& config);

    double raw_score(std::span<const double> x) const;
    double predict_proba(std::span<const double> x) const;
    Label predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }

    const std::vector<RegressionTree>& stages() const noexcept { return stages_; }
    double learning_rate() const noexcept { return learning_rate_; }
    double initial_score() const noexcept { return initial_score_; }
    const BoostConfig& config() const noexcept { return config_; }
    /// Mean training log-loss after each stage.
    const std::vector<double>& train_log_loss() const noexcept { return train_log_loss_; }
    std::vector<std::vector<double>> stage_importances() const;
    std::size_t dims() const noexcept { return dims_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    friend bool operator==(const BoostedEnsemble&, const BoostedEnsemble&) = default;

private:
    std::vector<RegressionTree> stages_;
    double learning_rate_ = 0.1;
    double initial_score_ = 0.0;
    BoostConfig config_;
    std::vector<double> train_log_loss_;
    std::vector<std::string> feature_names_;
    std::size_t dims_ = 0;
};

double sigmoid(double z) noexcept;

/// Mean logistic loss of raw scores against 0/1 labels.
double log_loss(std::span<const double> scores, std::span<const Label> labels);

/// Sum of the per-stage raw importances.
std::vector<double> feature_importance(const BoostedEnsemble& ensemble);

double accuracy(const BoostedEnsemble& ensemble, const LabeledDataset& ds);

}  // namespace repdt
