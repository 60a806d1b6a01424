#include "repdt/repr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

namespace repdt {

double linf_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

namespace {

// L-inf distance that gives up as soon as the running maximum exceeds `bound`.
// The returned value is only meaningful when it is <= bound.
double linf_bounded(std::span<const double> a, std::span<const double> b, double bound) noexcept {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        d = std::max(d, std::abs(a[j] - b[j]));
        if (d > bound) return d;
    }
    return d;
}

struct Nearest {
    std::optional<std::size_t> index;
    double distance = kInfinity;
};

// Candidate indices of xt grouped by label, each list ascending.
std::vector<std::vector<std::size_t>> group_by_label(const LabeledDataset& xt, int num_classes) {
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(num_classes));
    for (std::size_t r = 0; r < xt.size(); ++r)
        groups[static_cast<std::size_t>(xt.label(r))].push_back(r);
    return groups;
}

class ScanSearch {
public:
    ScanSearch(const LabeledDataset& xt, int num_classes)
        : xt_(xt), groups_(group_by_label(xt, num_classes)) {}

    Nearest nearest(std::span<const double> x, Label y) const {
        Nearest best;
        const auto k = static_cast<std::size_t>(y);
        if (k >= groups_.size()) return best;
        for (std::size_t r : groups_[k]) {
            const double d = linf_bounded(x, xt_.row(r), best.distance);
            if (d < best.distance) {
                best.distance = d;
                best.index = r;
            }
        }
        return best;
    }

private:
    const LabeledDataset& xt_;
    std::vector<std::vector<std::size_t>> groups_;
};

// Per class, candidates sorted along one pivot feature. A query walks outward
// from its pivot position and stops once the pivot gap alone exceeds the best
// distance found, which cannot discard a minimizer.
class SortedSearch {
public:
    SortedSearch(const LabeledDataset& xt, int num_classes)
        : xt_(xt), pivot_(choose_pivot(xt)), groups_(group_by_label(xt, num_classes)) {
        keys_.resize(groups_.size());
        for (std::size_t k = 0; k < groups_.size(); ++k) {
            auto& g = groups_[k];
            std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
                return xt_.at(a, pivot_) < xt_.at(b, pivot_);
            });
            keys_[k].reserve(g.size());
            for (std::size_t r : g) keys_[k].push_back(xt_.at(r, pivot_));
        }
    }

    Nearest nearest(std::span<const double> x, Label y) const {
        Nearest best;
        const auto k = static_cast<std::size_t>(y);
        if (k >= groups_.size() || groups_[k].empty()) return best;
        const auto& g = groups_[k];
        const auto& keys = keys_[k];
        const double q = x[pivot_];
        const auto mid = static_cast<std::ptrdiff_t>(
            std::lower_bound(keys.begin(), keys.end(), q) - keys.begin());

        auto consider = [&](std::size_t pos) {
            const std::size_t r = g[pos];
            const double d = linf_bounded(x, xt_.row(r), best.distance);
            if (d < best.distance || (d == best.distance && best.index && r < *best.index)) {
                best.distance = d;
                best.index = r;
            }
        };
        std::ptrdiff_t lo = mid - 1;
        auto hi = static_cast<std::size_t>(mid);
        bool lo_open = lo >= 0;
        bool hi_open = hi < g.size();
        while (lo_open || hi_open) {
            if (hi_open) {
                if (std::abs(keys[hi] - q) > best.distance) {
                    hi_open = false;
                } else {
                    consider(hi);
                    hi_open = ++hi < g.size();
                }
            }
            if (lo_open) {
                const auto p = static_cast<std::size_t>(lo);
                if (std::abs(keys[p] - q) > best.distance) {
                    lo_open = false;
                } else {
                    consider(p);
                    lo_open = --lo >= 0;
                }
            }
        }
        return best;
    }

private:
    static std::size_t choose_pivot(const LabeledDataset& xt) {
        std::size_t best = 0;
        double best_spread = -1.0;
        for (std::size_t j = 0; j < xt.dims(); ++j) {
            double lo = kInfinity, hi = -kInfinity;
            for (std::size_t r = 0; r < xt.size(); ++r) {
                lo = std::min(lo, xt.at(r, j));
                hi = std::max(hi, xt.at(r, j));
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best = j;
            }
        }
        return best;
    }

    const LabeledDataset& xt_;
    std::size_t pivot_;
    std::vector<std::vector<std::size_t>> groups_;
    std::vector<std::vector<double>> keys_;
};

template <class Search>
void assign_all(const LabeledDataset& x, const Search& search, unsigned threads,
                std::vector<std::optional<std::size_t>>& rep_of) {
    const std::size_t n = x.size();
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) rep_of[i] = search.nearest(x.row(i), x.label(i)).index;
    };
    if (threads <= 1 || n < 2 * threads) {
        work(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t b = std::min(n, t * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

ReprAssignment make_assignment(const LabeledDataset& x, const LabeledDataset& xt,
                               std::vector<std::optional<std::size_t>> rep_of) {
    if (rep_of.size() != x.size())
        throw ValidationError("assignment has " + std::to_string(rep_of.size()) +
                              " entries for " + std::to_string(x.size()) + " points");
    ReprAssignment a;
    a.per_rep_counts.assign(xt.size(), 0);
    double eps = 0.0;
    std::vector<char> uncovered(static_cast<std::size_t>(std::max(x.num_classes(), 1)), 0);
    bool all_assigned = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!rep_of[i]) {
            all_assigned = false;
            uncovered[static_cast<std::size_t>(x.label(i))] = 1;
            continue;
        }
        const std::size_t r = *rep_of[i];
        if (r >= xt.size())
            throw ValidationError("representative index " + std::to_string(r) + " out of range");
        if (x.label(i) != xt.label(r))
            throw ValidationError("point " + std::to_string(i) + " (class " +
                                  std::to_string(x.label(i)) + ") assigned to representative " +
                                  std::to_string(r) + " of class " + std::to_string(xt.label(r)));
        ++a.per_rep_counts[r];
        eps = std::max(eps, linf_distance(x.row(i), xt.row(r)));
    }
    for (std::size_t k = 0; k < uncovered.size(); ++k) {
        if (uncovered[k]) {
            a.uncovered_classes.push_back(static_cast<Label>(k));
            a.diagnostics.push_back("class " + std::to_string(k) + " uncovered");
        }
    }
    a.epsilon = all_assigned ? eps : kInfinity;
    if (all_assigned && !a.per_rep_counts.empty() &&
        std::all_of(a.per_rep_counts.begin(), a.per_rep_counts.end(),
                    [&](std::size_t c) { return c == a.per_rep_counts.front(); }))
        a.gamma = a.per_rep_counts.front();
    a.rep_of = std::move(rep_of);
    return a;
}

ReprAssignment epsilon_of(const LabeledDataset& x, const LabeledDataset& xt,
                          const EpsilonOptions& options) {
    if (x.dims() != xt.dims())
        throw ValidationError("dimension mismatch: " + std::to_string(x.dims()) + " vs " +
                              std::to_string(xt.dims()));
    unsigned threads = options.threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    const int classes = std::max(x.num_classes(), xt.num_classes());
    std::vector<std::optional<std::size_t>> rep_of(x.size());
    if (options.prune)
        assign_all(x, SortedSearch(xt, classes), threads, rep_of);
    else
        assign_all(x, ScanSearch(xt, classes), threads, rep_of);
    return make_assignment(x, xt, std::move(rep_of));
}

ReprAssignment identity_assignment(const LabeledDataset& x, const LabeledDataset& xt) {
    if (x.size() != xt.size())
        throw ValidationError("identity assignment needs equally sized datasets");
    std::vector<std::optional<std::size_t>> rep_of(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rep_of[i] = i;
    return make_assignment(x, xt, std::move(rep_of));
}

BalanceCheck is_gamma_balanced(const ReprAssignment& assignment) {
    BalanceCheck check;
    for (std::size_t i = 0; i < assignment.rep_of.size(); ++i)
        if (!assignment.rep_of[i])
            check.diagnostics.push_back("point " + std::to_string(i) + " has no representative");

    const auto& counts = assignment.per_rep_counts;
    if (counts.empty()) {
        check.diagnostics.push_back("no representatives");
        return check;
    }
    // The most frequent count is taken as the intended gamma; when several
    // counts are equally frequent every representative is reported.
    std::map<std::size_t, std::size_t> freq;
    for (std::size_t c : counts) ++freq[c];
    std::size_t modal = 0, modal_freq = 0;
    bool modal_tie = false;
    for (auto [c, f] : freq) {
        if (f > modal_freq) {
            modal = c;
            modal_freq = f;
            modal_tie = false;
        } else if (f == modal_freq) {
            modal_tie = true;
        }
    }
    if (freq.size() > 1) {
        for (std::size_t r = 0; r < counts.size(); ++r)
            if (modal_tie || counts[r] != modal)
                check.diagnostics.push_back("representative " + std::to_string(r) + " covers " +
                                            std::to_string(counts[r]) + " points");
    }
    check.balanced = check.diagnostics.empty() && modal > 0;
    if (check.balanced) check.gamma = modal;
    return check;
}

BalancedSubset construct_balanced_subset(const LabeledDataset& x, std::size_t gamma,
                                         std::uint64_t seed) {
    if (gamma == 0) throw ValidationError("gamma must be at least 1");
    const auto counts = x.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] % gamma != 0)
            throw ValidationError("class " + std::to_string(k) + " has " +
                                  std::to_string(counts[k]) + " points, remainder " +
                                  std::to_string(counts[k] % gamma) + " modulo gamma " +
                                  std::to_string(gamma));
    }

    Rng rng(seed);
    std::vector<std::size_t> medoid_of(x.size());
    std::vector<std::size_t> medoids;

    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (static_cast<std::size_t>(x.label(i)) == k) members.push_back(i);
        if (members.empty()) continue;

        const std::size_t m = members.size();
        std::vector<char> taken(m, 0);
        std::vector<double> seed_dist(m, kInfinity);
        std::size_t next = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);

        for (std::size_t remaining = m; remaining > 0; remaining -= gamma) {
            const std::size_t s = next;
            // gamma - 1 nearest free neighbours of the seed, ties by index
            std::vector<std::pair<double, std::size_t>> cand;
            for (std::size_t p = 0; p < m; ++p)
                if (!taken[p] && p != s)
                    cand.emplace_back(linf_distance(x.row(members[s]), x.row(members[p])), p);
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(gamma - 1),
                              cand.end());
            std::vector<std::size_t> group{s};
            for (std::size_t q = 0; q + 1 < gamma; ++q) group.push_back(cand[q].second);
            std::sort(group.begin(), group.end());

            std::size_t best = group.front();
            double best_radius = kInfinity;
            for (std::size_t g : group) {
                double radius = 0.0;
                for (std::size_t h : group)
                    radius = std::max(radius, linf_distance(x.row(members[g]), x.row(members[h])));
                if (radius < best_radius) {
                    best_radius = radius;
                    best = g;
                }
            }
            medoids.push_back(members[best]);
            for (std::size_t g : group) {
                taken[g] = 1;
                medoid_of[members[g]] = members[best];
            }

            // farthest free point from all seeds chosen so far
            double far = -1.0;
            for (std::size_t p = 0; p < m; ++p) {
                if (taken[p]) continue;
                seed_dist[p] =
                    std::min(seed_dist[p], linf_distance(x.row(members[s]), x.row(members[p])));
                if (seed_dist[p] > far) {
                    far = seed_dist[p];
                    next = p;
                }
            }
        }
    }

    std::sort(medoids.begin(), medoids.end());
    std::vector<std::size_t> position(x.size(), 0);
    for (std::size_t r = 0; r < medoids.size(); ++r) position[medoids[r]] = r;

    LabeledDataset subset = x.select(medoids);
    std::vector<std::optional<std::size_t>> rep_of(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rep_of[i] = position[medoid_of[i]];
    ReprAssignment assignment = make_assignment(x, subset, std::move(rep_of));
    return {std::move(subset), std::move(assignment)};
}

LabeledDataset perturbed_copy(const LabeledDataset& x, double radius, std::uint64_t seed) {
    if (!(radius >= 0)) throw ValidationError("perturbation radius must be non-negative");
    if (radius == 0) return x;
    Rng rng(seed);
    std::uniform_real_distribution<double> shift(-radius, radius);
    std::vector<double> pts(x.points());
    // rounding of v + s may push the realized shift onto the radius; redraw
    for (double& v : pts) {
        double moved = v + shift(rng);
        while (!(std::abs(moved - v) < radius)) moved = v + shift(rng);
        v = moved;
    }
    return LabeledDataset(std::move(pts), x.dims(), x.labels(), x.num_classes(),
                          x.feature_names());
}

}  // namespace repdt
