#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "repdt/dataset.hpp"
#include "repdt/repr.hpp"

namespace repdt {

enum class Impurity { gini, entropy };

std::string to_string(Impurity impurity);
Impurity impurity_from_string(const std::string& name);

/// Sum of p_k (1 - p_k). Throws ValidationError unless the proportions are
/// non-negative and sum to 1 within 1e-9.
double gini(std::span<const double> proportions);

/// -sum p_k log2 p_k, with 0 log 0 = 0.
double entropy(std::span<const double> proportions);

double impurity_of(std::span<const double> proportions, Impurity impurity);

/// Parent impurity minus the size-weighted child impurities. Results below
/// 1e-12 are reported as 0.
double info_gain(std::span<const double> parent, std::span<const double> left,
                 std::span<const double> right, std::size_t n_left, std::size_t n_right,
                 Impurity impurity);

struct TrainConfig {
    Impurity impurity = Impurity::gini;
    std::size_t max_depth = 4;
    std::size_t min_samples_split = 2;
    double min_gain = 0.0;
};

/// Node ids are 1-based and assigned in preorder; the root is node 1.
using NodeId = std::size_t;

struct TreeNode {
    NodeId id = 0;
    std::size_t depth = 0;
    bool is_leaf = true;

    // internal nodes
    std::size_t feature = 0;
    double threshold = 0.0;
    NodeId left = 0;
    NodeId right = 0;
    double margin = 0.0;
    double info_gain = 0.0;

    // leaves (majority class; also kept on internal nodes for inspection)
    Label label = 0;

    std::size_t count = 0;
    std::vector<std::size_t> class_counts;

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary classification tree. A point goes to the left child of an
/// internal node when threshold - x[feature] > 0 and to the right child
/// otherwise.
class DecisionTree {
public:
    DecisionTree() = default;

    /// Validates structure: preorder ids, two children per internal node,
    /// child counts summing to the parent.
    DecisionTree(std::vector<TreeNode> nodes, std::size_t dims, int num_classes,
                 std::size_t train_size, TrainConfig config,
                 std::vector<std::string> feature_names = {});

    /// Greedy CART. Every midpoint between consecutive distinct values of
    /// every feature is a candidate; ties go to the lowest feature, then
    /// the lowest threshold.
    static DecisionTree fit(const LabeledDataset& train, const TrainConfig& config);

    Label predict(std::span<const double> x) const;
    NodeId leaf_of(std::span<const double> x) const;
    std::vector<NodeId> leaf_path(std::span<const double> x) const;

    const TreeNode& node(NodeId id) const { return nodes_.at(id - 1); }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::vector<NodeId> internal_ids() const;
    std::vector<NodeId> leaf_ids() const;

    /// Minimum margin over internal nodes; +inf for a single-leaf tree.
    double min_margin() const noexcept { return min_margin_; }
    std::size_t depth() const noexcept;

    std::size_t dims() const noexcept { return dims_; }
    int num_classes() const noexcept { return num_classes_; }
    std::size_t train_size() const noexcept { return train_size_; }
    const TrainConfig& config() const noexcept { return config_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    friend bool operator==(const DecisionTree& a, const DecisionTree& b) {
        return a.nodes_ == b.nodes_ && a.dims_ == b.dims_ && a.num_classes_ == b.num_classes_ &&
               a.train_size_ == b.train_size_ && a.feature_names_ == b.feature_names_;
    }

private:
    void check_dims(std::span<const double> x) const;

    std::vector<TreeNode> nodes_;
    std::size_t dims_ = 0;
    int num_classes_ = 0;
    std::size_t train_size_ = 0;
    TrainConfig config_;
    std::vector<std::string> feature_names_;
    double min_margin_ = kInfinity;
};

/// FI(j) = sum over internal nodes splitting on j of N_i * IG(n_i).
std::vector<double> feature_importance(const DecisionTree& tree);

/// Rescales to percentages summing to 100; an all-zero vector stays zero.
std::vector<double> normalize_importance(std::span<const double> raw);

/// Per-leaf class counts of a dataset routed through the tree.
struct LeafTally {
    /// Indexed by node id - 1; empty for internal nodes.
    std::vector<std::vector<std::size_t>> counts;
    std::size_t total = 0;
    std::size_t correct = 0;
};

LeafTally tally_leaves(const DecisionTree& tree, const LabeledDataset& ds);

/// sum over leaves of p_l * p_{l, k_l}.
double accuracy_leafwise(const DecisionTree& tree, const LabeledDataset& ds);

/// Fraction of points whose prediction equals their label.
double accuracy_empirical(const DecisionTree& tree, const LabeledDataset& ds);

/// Outcome of checking accuracy preservation for a fixed tree evaluated on
/// a dataset and on a gamma-balanced representative dataset.
struct Theorem1Verdict {
    double epsilon = 0.0;
    double min_margin = 0.0;
    std::size_t gamma = 0;
    bool hypothesis_holds = false;  // epsilon < min_margin
    bool routes_match = false;      // every point reaches its representative's leaf
    std::size_t route_mismatches = 0;
    bool leaf_counts_scale = false;  // N_{l,k} * N~ == N~_{l,k} * N for all leaves
    bool acc_equal = false;          // correct * N~ == correct~ * N
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t correct_rep = 0;
    std::size_t total_rep = 0;
    double accuracy = 0.0;
    double accuracy_rep = 0.0;

    /// The implication hypothesis => (routes_match && acc_equal).
    bool consistent() const noexcept { return !hypothesis_holds || (routes_match && acc_equal); }
};

/// Throws ValidationError when the assignment is not gamma-balanced.
Theorem1Verdict check_theorem1(const DecisionTree& tree, const LabeledDataset& x,
                               const LabeledDataset& xt, const ReprAssignment& assignment);

}  // namespace repdt
