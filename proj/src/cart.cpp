#include "repdt/cart.hpp"

#include <algorithm>
#include <cmath>

#include "presort.hpp"

namespace repdt {

namespace {

constexpr double kGainFloor = 1e-12;

void check_proportions(std::span<const double> p) {
    if (p.empty()) throw ValidationError("empty probability vector");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("probability vector has a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("probabilities sum to " + format_double(sum) + ", expected 1");
}

double gini_unchecked(std::span<const double> p) {
    double g = 0.0;
    for (double v : p) g += v * (1.0 - v);
    return g;
}

double entropy_unchecked(std::span<const double> p) {
    double e = 0.0;
    for (double v : p)
        if (v > 0.0) e -= v * std::log2(v);
    return e;
}

double impurity_unchecked(std::span<const double> p, Impurity impurity) {
    return impurity == Impurity::gini ? gini_unchecked(p) : entropy_unchecked(p);
}

double snap_gain(double g) { return g < kGainFloor ? 0.0 : g; }

// Impurity of a class-count vector; `scratch` is reused to hold proportions.
double impurity_of_counts(const std::vector<std::size_t>& counts, std::size_t n,
                          Impurity impurity, std::vector<double>& scratch) {
    scratch.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        scratch[k] = static_cast<double>(counts[k]) / static_cast<double>(n);
    return impurity_unchecked(scratch, impurity);
}

Label majority(const std::vector<std::size_t>& counts) {
    return static_cast<Label>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double margin = 0.0;
    double gain = 0.0;
    std::size_t n_left = 0;
};

class Builder {
public:
    Builder(const LabeledDataset& ds, const TrainConfig& cfg) : ds_(ds), cfg_(cfg) {}

    std::vector<TreeNode> run() {
        goes_left_.assign(ds_.size(), 0);
        build(detail::presort(ds_), 0);
        return std::move(nodes_);
    }

private:
    NodeId build(const detail::SortedColumns& cols, std::size_t depth) {
        const NodeId id = nodes_.size() + 1;
        nodes_.emplace_back();
        const std::size_t n = cols.size();
        const auto c = static_cast<std::size_t>(ds_.num_classes());

        std::vector<std::size_t> counts(c, 0);
        for (auto s : cols.by_feature[0]) ++counts[static_cast<std::size_t>(ds_.label(s))];

        TreeNode node;
        node.id = id;
        node.depth = depth;
        node.count = n;
        node.class_counts = counts;
        node.label = majority(counts);

        const bool pure = std::count_if(counts.begin(), counts.end(),
                                        [](std::size_t v) { return v > 0; }) <= 1;
        Split best;
        if (depth < cfg_.max_depth && n >= cfg_.min_samples_split && !pure)
            best = best_split(cols, counts);

        if (!best.found || !(best.gain > cfg_.min_gain)) {
            nodes_[id - 1] = std::move(node);
            return id;
        }

        node.is_leaf = false;
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.margin = best.margin;
        node.info_gain = best.gain;

        for (auto s : cols.by_feature[best.feature])
            goes_left_[s] = best.threshold - ds_.at(s, best.feature) > 0.0;
        auto [left_cols, right_cols] = detail::partition(cols, goes_left_, best.n_left);
        nodes_[id - 1] = std::move(node);

        const NodeId left = build(left_cols, depth + 1);
        const NodeId right = build(right_cols, depth + 1);
        nodes_[id - 1].left = left;
        nodes_[id - 1].right = right;
        return id;
    }

    Split best_split(const detail::SortedColumns& cols, const std::vector<std::size_t>& counts) {
        const std::size_t n = cols.size();
        const double parent = impurity_of_counts(counts, n, cfg_.impurity, scratch_);
        Split best;
        std::vector<std::size_t> left(counts.size()), right(counts.size());

        for (std::size_t j = 0; j < ds_.dims(); ++j) {
            const auto& order = cols.by_feature[j];
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                const auto k = static_cast<std::size_t>(ds_.label(order[p]));
                ++left[k];
                --right[k];
                const double lo = ds_.at(order[p], j);
                const double hi = ds_.at(order[p + 1], j);
                double mid = 0.0;
                if (!(lo < hi) || !detail::midpoint_between(lo, hi, mid)) continue;

                const std::size_t nl = p + 1, nr = n - nl;
                const double gain = snap_gain(
                    parent -
                    static_cast<double>(nl) / static_cast<double>(n) *
                        impurity_of_counts(left, nl, cfg_.impurity, scratch_) -
                    static_cast<double>(nr) / static_cast<double>(n) *
                        impurity_of_counts(right, nr, cfg_.impurity, scratch_));
                if (!best.found || gain > best.gain) {
                    best = {true, j, mid, std::min(mid - lo, hi - mid), gain, nl};
                }
            }
        }
        return best;
    }

    const LabeledDataset& ds_;
    const TrainConfig& cfg_;
    std::vector<TreeNode> nodes_;
    std::vector<char> goes_left_;
    std::vector<double> scratch_;
};

}  // namespace

std::string to_string(Impurity impurity) {
    return impurity == Impurity::gini ? "gini" : "entropy";
}

Impurity impurity_from_string(const std::string& name) {
    if (name == "gini") return Impurity::gini;
    if (name == "entropy") return Impurity::entropy;
    throw ValidationError("unknown impurity '" + name + "' (expected gini or entropy)");
}

double gini(std::span<const double> proportions) {
    check_proportions(proportions);
    return gini_unchecked(proportions);
}

double entropy(std::span<const double> proportions) {
    check_proportions(proportions);
    return entropy_unchecked(proportions);
}

double impurity_of(std::span<const double> proportions, Impurity impurity) {
    return impurity == Impurity::gini ? gini(proportions) : entropy(proportions);
}

double info_gain(std::span<const double> parent, std::span<const double> left,
                 std::span<const double> right, std::size_t n_left, std::size_t n_right,
                 Impurity impurity) {
    if (n_left == 0 || n_right == 0) throw ValidationError("information gain with an empty child");
    if (parent.size() != left.size() || parent.size() != right.size())
        throw ValidationError("class count mismatch between parent and children");
    const double n = static_cast<double>(n_left + n_right);
    return snap_gain(impurity_of(parent, impurity) -
                     static_cast<double>(n_left) / n * impurity_of(left, impurity) -
                     static_cast<double>(n_right) / n * impurity_of(right, impurity));
}

// ---------------------------------------------------------------------------

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t dims, int num_classes,
                           std::size_t train_size, TrainConfig config,
                           std::vector<std::string> feature_names)
    : nodes_(std::move(nodes)),
      dims_(dims),
      num_classes_(num_classes),
      train_size_(train_size),
      config_(config),
      feature_names_(std::move(feature_names)) {
    if (nodes_.empty()) throw ValidationError("tree has no nodes");
    if (config_.max_depth < 1) throw ValidationError("max_depth must be at least 1");
    if (feature_names_.empty())
        for (std::size_t j = 0; j < dims_; ++j) feature_names_.push_back("f" + std::to_string(j));
    if (feature_names_.size() != dims_) throw ValidationError("feature name count mismatch");

    const auto c = static_cast<std::size_t>(num_classes_);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TreeNode& nd = nodes_[i];
        const std::string where = "node " + std::to_string(i + 1);
        if (nd.id != i + 1) throw ValidationError(where + " has id " + std::to_string(nd.id));
        if (nd.class_counts.size() != c) throw ValidationError(where + " has wrong class count");
        std::size_t sum = 0;
        for (auto v : nd.class_counts) sum += v;
        if (sum != nd.count) throw ValidationError(where + " class counts do not sum to N_i");
        if (nd.label < 0 || nd.label >= num_classes_)
            throw ValidationError(where + " has an invalid label");
        if (nd.is_leaf) continue;
        if (nd.feature >= dims_) throw ValidationError(where + " splits on an unknown feature");
        if (nd.left <= nd.id || nd.right <= nd.id || nd.left > nodes_.size() ||
            nd.right > nodes_.size() || nd.left == nd.right)
            throw ValidationError(where + " has invalid children");
        const TreeNode& l = nodes_[nd.left - 1];
        const TreeNode& r = nodes_[nd.right - 1];
        if (l.depth != nd.depth + 1 || r.depth != nd.depth + 1)
            throw ValidationError(where + " children have inconsistent depth");
        for (std::size_t k = 0; k < c; ++k)
            if (l.class_counts[k] + r.class_counts[k] != nd.class_counts[k])
                throw ValidationError(where + " children counts do not sum to the parent");
        min_margin_ = std::min(min_margin_, nd.margin);
    }
    if (nodes_.front().count != train_size_)
        throw ValidationError("root count differs from the training size");
}

DecisionTree DecisionTree::fit(const LabeledDataset& train, const TrainConfig& config) {
    if (config.max_depth < 1) throw ValidationError("max_depth must be at least 1");
    Builder builder(train, config);
    return DecisionTree(builder.run(), train.dims(), train.num_classes(), train.size(), config,
                        train.feature_names());
}

void DecisionTree::check_dims(std::span<const double> x) const {
    if (x.size() != dims_)
        throw ValidationError("point has " + std::to_string(x.size()) + " features, tree expects " +
                              std::to_string(dims_));
}

NodeId DecisionTree::leaf_of(std::span<const double> x) const {
    check_dims(x);
    const TreeNode* nd = &nodes_.front();
    while (!nd->is_leaf) nd = &nodes_[(nd->threshold - x[nd->feature] > 0.0 ? nd->left : nd->right) - 1];
    return nd->id;
}

Label DecisionTree::predict(std::span<const double> x) const { return node(leaf_of(x)).label; }

std::vector<NodeId> DecisionTree::leaf_path(std::span<const double> x) const {
    check_dims(x);
    std::vector<NodeId> path;
    const TreeNode* nd = &nodes_.front();
    path.push_back(nd->id);
    while (!nd->is_leaf) {
        nd = &nodes_[(nd->threshold - x[nd->feature] > 0.0 ? nd->left : nd->right) - 1];
        path.push_back(nd->id);
    }
    return path;
}

std::vector<NodeId> DecisionTree::internal_ids() const {
    std::vector<NodeId> ids;
    for (const auto& nd : nodes_)
        if (!nd.is_leaf) ids.push_back(nd.id);
    return ids;
}

std::vector<NodeId> DecisionTree::leaf_ids() const {
    std::vector<NodeId> ids;
    for (const auto& nd : nodes_)
        if (nd.is_leaf) ids.push_back(nd.id);
    return ids;
}

std::size_t DecisionTree::depth() const noexcept {
    std::size_t d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.depth);
    return d;
}

std::vector<double> feature_importance(const DecisionTree& tree) {
    std::vector<double> fi(tree.dims(), 0.0);
    for (const auto& nd : tree.nodes())
        if (!nd.is_leaf) fi[nd.feature] += static_cast<double>(nd.count) * nd.info_gain;
    return fi;
}

std::vector<double> normalize_importance(std::span<const double> raw) {
    double total = 0.0;
    for (double v : raw) total += v;
    std::vector<double> out(raw.size(), 0.0);
    if (total > 0.0)
        for (std::size_t j = 0; j < raw.size(); ++j) out[j] = 100.0 * raw[j] / total;
    return out;
}

LeafTally tally_leaves(const DecisionTree& tree, const LabeledDataset& ds) {
    if (ds.dims() != tree.dims()) throw ValidationError("dataset dimension differs from the tree");
    LeafTally t;
    t.counts.resize(tree.nodes().size());
    const auto c = static_cast<std::size_t>(std::max(tree.num_classes(), ds.num_classes()));
    for (const auto& nd : tree.nodes())
        if (nd.is_leaf) t.counts[nd.id - 1].assign(c, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const NodeId leaf = tree.leaf_of(ds.row(i));
        ++t.counts[leaf - 1][static_cast<std::size_t>(ds.label(i))];
        if (tree.node(leaf).label == ds.label(i)) ++t.correct;
    }
    t.total = ds.size();
    return t;
}

double accuracy_leafwise(const DecisionTree& tree, const LabeledDataset& ds) {
    const LeafTally t = tally_leaves(tree, ds);
    const double n = static_cast<double>(t.total);
    double acc = 0.0;
    for (const auto& nd : tree.nodes()) {
        if (!nd.is_leaf) continue;
        const auto& counts = t.counts[nd.id - 1];
        std::size_t reached = 0;
        for (auto v : counts) reached += v;
        if (reached == 0) continue;
        const double p_leaf = static_cast<double>(reached) / n;
        const double p_label = static_cast<double>(counts[static_cast<std::size_t>(nd.label)]) /
                               static_cast<double>(reached);
        acc += p_leaf * p_label;
    }
    return acc;
}

double accuracy_empirical(const DecisionTree& tree, const LabeledDataset& ds) {
    if (ds.dims() != tree.dims()) throw ValidationError("dataset dimension differs from the tree");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (tree.predict(ds.row(i)) == ds.label(i)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

Theorem1Verdict check_theorem1(const DecisionTree& tree, const LabeledDataset& x,
                               const LabeledDataset& xt, const ReprAssignment& assignment) {
    const BalanceCheck balance = is_gamma_balanced(assignment);
    if (!balance.balanced) {
        std::string msg = "assignment is not gamma-balanced";
        if (!balance.diagnostics.empty()) msg += ": " + balance.diagnostics.front();
        throw ValidationError(msg);
    }
    if (assignment.rep_of.size() != x.size() || assignment.per_rep_counts.size() != xt.size())
        throw ValidationError("assignment does not match the datasets");

    Theorem1Verdict v;
    v.epsilon = assignment.epsilon;
    v.min_margin = tree.min_margin();
    v.gamma = *balance.gamma;
    v.hypothesis_holds = v.epsilon < v.min_margin;

    std::vector<NodeId> rep_leaf(xt.size());
    for (std::size_t r = 0; r < xt.size(); ++r) rep_leaf[r] = tree.leaf_of(xt.row(r));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (tree.leaf_of(x.row(i)) != rep_leaf[*assignment.rep_of[i]]) ++v.route_mismatches;
    v.routes_match = v.route_mismatches == 0;

    const LeafTally tx = tally_leaves(tree, x);
    const LeafTally tr = tally_leaves(tree, xt);
    using Wide = unsigned long long;
    const Wide n = tx.total, nt = tr.total;
    v.leaf_counts_scale = true;
    for (std::size_t l = 0; l < tx.counts.size(); ++l)
        for (std::size_t k = 0; k < tx.counts[l].size(); ++k)
            if (Wide{tx.counts[l][k]} * nt != Wide{tr.counts[l][k]} * n) v.leaf_counts_scale = false;

    v.correct = tx.correct;
    v.total = tx.total;
    v.correct_rep = tr.correct;
    v.total_rep = tr.total;
    v.acc_equal = Wide{tx.correct} * nt == Wide{tr.correct} * n;
    v.accuracy = accuracy_leafwise(tree, x);
    v.accuracy_rep = accuracy_leafwise(tree, xt);
    return v;
}

}  // namespace repdt
