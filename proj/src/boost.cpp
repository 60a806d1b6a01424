#include "repdt/boost.hpp"

#include <algorithm>
#include <cmath>

#include "presort.hpp"

namespace repdt {

namespace {

constexpr double kHessianFloor = 1e-12;
constexpr double kGainFloor = 1e-12;

class RegressionBuilder {
public:
    RegressionBuilder(const LabeledDataset& ds, const BoostConfig& cfg,
                      std::span<const double> residual, std::span<const double> hessian)
        : ds_(ds), cfg_(cfg), residual_(residual), hessian_(hessian) {}

    std::vector<RegressionNode> run(const detail::SortedColumns& root) {
        goes_left_.assign(ds_.size(), 0);
        build(root, 0);
        return std::move(nodes_);
    }

private:
    std::size_t build(const detail::SortedColumns& cols, std::size_t depth) {
        const std::size_t id = nodes_.size() + 1;
        nodes_.emplace_back();
        const std::size_t n = cols.size();

        RegressionNode node;
        node.id = id;
        node.depth = depth;
        node.count = n;

        double sum_r = 0.0, sum_h = 0.0;
        for (auto s : cols.by_feature[0]) {
            sum_r += residual_[s];
            sum_h += hessian_[s];
        }
        node.value = sum_h < kHessianFloor ? 0.0 : sum_r / sum_h;

        bool found = false;
        std::size_t best_feature = 0, best_left = 0;
        double best_threshold = 0.0, best_improvement = 0.0;
        if (depth < cfg_.max_depth && n >= cfg_.min_samples_split) {
            for (std::size_t j = 0; j < ds_.dims(); ++j) {
                const auto& order = cols.by_feature[j];
                double left_sum = 0.0;
                for (std::size_t p = 0; p + 1 < n; ++p) {
                    left_sum += residual_[order[p]];
                    const double lo = ds_.at(order[p], j);
                    const double hi = ds_.at(order[p + 1], j);
                    double mid = 0.0;
                    if (!(lo < hi) || !detail::midpoint_between(lo, hi, mid)) continue;
                    const auto nl = static_cast<double>(p + 1);
                    const auto nr = static_cast<double>(n - p - 1);
                    const double diff = left_sum / nl - (sum_r - left_sum) / nr;
                    // Friedman: n_l n_r / n (mean_l - mean_r)^2, the drop in SSE
                    const double improvement = nl * nr / static_cast<double>(n) * diff * diff;
                    if (!found || improvement > best_improvement) {
                        found = true;
                        best_feature = j;
                        best_threshold = mid;
                        best_improvement = improvement;
                        best_left = p + 1;
                    }
                }
            }
        }
        const double gain = found ? best_improvement / static_cast<double>(n) : 0.0;
        if (!found || gain < kGainFloor) {
            nodes_[id - 1] = node;
            return id;
        }

        node.is_leaf = false;
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.gain = gain;
        for (auto s : cols.by_feature[best_feature])
            goes_left_[s] = best_threshold - ds_.at(s, best_feature) > 0.0;
        auto [left_cols, right_cols] = detail::partition(cols, goes_left_, best_left);
        nodes_[id - 1] = node;

        const std::size_t left = build(left_cols, depth + 1);
        const std::size_t right = build(right_cols, depth + 1);
        nodes_[id - 1].left = left;
        nodes_[id - 1].right = right;
        return id;
    }

    const LabeledDataset& ds_;
    const BoostConfig& cfg_;
    std::span<const double> residual_;
    std::span<const double> hessian_;
    std::vector<RegressionNode> nodes_;
    std::vector<char> goes_left_;
};

// log(1 + e^z) without overflow
double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double log_loss(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ValidationError("log_loss needs equally sized, non-empty inputs");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        total += softplus(scores[i]) - (labels[i] == 1 ? scores[i] : 0.0);
    return total / static_cast<double>(scores.size());
}

RegressionTree::RegressionTree(std::vector<RegressionNode> nodes, std::size_t dims)
    : nodes_(std::move(nodes)), dims_(dims) {
    if (nodes_.empty()) throw ValidationError("regression tree has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& nd = nodes_[i];
        if (nd.id != i + 1) throw ValidationError("regression node ids must be 1-based preorder");
        if (nd.is_leaf) continue;
        if (nd.feature >= dims_ || nd.left <= nd.id || nd.right <= nd.id ||
            nd.left > nodes_.size() || nd.right > nodes_.size() || nd.left == nd.right)
            throw ValidationError("regression node " + std::to_string(nd.id) + " is malformed");
    }
}

double RegressionTree::predict(std::span<const double> x) const {
    if (x.size() != dims_)
        throw ValidationError("point has " + std::to_string(x.size()) + " features, model expects " +
                              std::to_string(dims_));
    const RegressionNode* nd = &nodes_.front();
    while (!nd->is_leaf) nd = &nodes_[(nd->threshold - x[nd->feature] > 0.0 ? nd->left : nd->right) - 1];
    return nd->value;
}

std::size_t RegressionTree::depth() const noexcept {
    std::size_t d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.depth);
    return d;
}

std::vector<double> RegressionTree::feature_importance() const {
    std::vector<double> fi(dims_, 0.0);
    for (const auto& nd : nodes_)
        if (!nd.is_leaf) fi[nd.feature] += static_cast<double>(nd.count) * nd.gain;
    return fi;
}

BoostedEnsemble::BoostedEnsemble(std::vector<RegressionTree> stages, double learning_rate,
                                 double initial_score, BoostConfig config,
                                 std::vector<double> train_log_loss,
                                 std::vector<std::string> feature_names)
    : stages_(std::move(stages)),
      learning_rate_(learning_rate),
      initial_score_(initial_score),
      config_(config),
      train_log_loss_(std::move(train_log_loss)),
      feature_names_(std::move(feature_names)) {
    if (stages_.empty()) throw ValidationError("ensemble needs at least one stage");
    if (!std::isfinite(initial_score_)) throw ValidationError("initial score must be finite");
    dims_ = stages_.front().dims();
    for (const auto& s : stages_)
        if (s.dims() != dims_) throw ValidationError("stages disagree on dimension");
    if (feature_names_.empty())
        for (std::size_t j = 0; j < dims_; ++j) feature_names_.push_back("f" + std::to_string(j));
}

BoostedEnsemble BoostedEnsemble::fit(const LabeledDataset& train, const BoostConfig& config) {
    if (train.num_classes() != 2)
        throw ValidationError("boosting needs exactly two classes, got " +
                              std::to_string(train.num_classes()));
    if (config.n_stages < 1) throw ValidationError("n_stages must be at least 1");
    if (config.max_depth < 1) throw ValidationError("max_depth must be at least 1");
    if (!(config.learning_rate >= 0 && config.learning_rate <= 1))
        throw ValidationError("learning_rate must lie in [0, 1]");

    const std::size_t n = train.size();
    const auto counts = train.class_counts();
    if (counts[0] == 0 || counts[1] == 0)
        throw ValidationError("boosting needs both classes present in the training set");

    const double p1 = static_cast<double>(counts[1]) / static_cast<double>(n);
    const double f0 = std::log(p1 / (1.0 - p1));

    std::vector<double> score(n, f0), residual(n), hessian(n);
    const auto root = detail::presort(train);
    std::vector<RegressionTree> stages;
    std::vector<double> losses;
    stages.reserve(config.n_stages);

    for (std::size_t m = 0; m < config.n_stages; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(score[i]);
            residual[i] = (train.label(i) == 1 ? 1.0 : 0.0) - p;
            hessian[i] = p * (1.0 - p);
        }
        RegressionBuilder builder(train, config, residual, hessian);
        RegressionTree tree(builder.run(root), train.dims());
        for (std::size_t i = 0; i < n; ++i)
            score[i] += config.learning_rate * tree.predict(train.row(i));
        stages.push_back(std::move(tree));
        losses.push_back(log_loss(score, train.labels()));
    }
    return BoostedEnsemble(std::move(stages), config.learning_rate, f0, config, std::move(losses),
                           train.feature_names());
}

double BoostedEnsemble::raw_score(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& s : stages_) sum += s.predict(x);
    return initial_score_ + learning_rate_ * sum;
}

double BoostedEnsemble::predict_proba(std::span<const double> x) const {
    // keep strictly inside (0, 1) even when the score saturates
    constexpr double lo = 1e-300;
    return std::clamp(sigmoid(raw_score(x)), lo, std::nextafter(1.0, 0.0));
}

std::vector<std::vector<double>> BoostedEnsemble::stage_importances() const {
    std::vector<std::vector<double>> out;
    out.reserve(stages_.size());
    for (const auto& s : stages_) out.push_back(s.feature_importance());
    return out;
}

std::vector<double> feature_importance(const BoostedEnsemble& ensemble) {
    std::vector<double> fi(ensemble.dims(), 0.0);
    for (const auto& stage : ensemble.stage_importances())
        for (std::size_t j = 0; j < fi.size(); ++j) fi[j] += stage[j];
    return fi;
}

double accuracy(const BoostedEnsemble& ensemble, const LabeledDataset& ds) {
    if (ds.dims() != ensemble.dims()) throw ValidationError("dataset dimension differs from the model");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ensemble.predict(ds.row(i)) == ds.label(i)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace repdt
