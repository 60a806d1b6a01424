#include "repdt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "repdt/repr.hpp"

namespace repdt {

using nlohmann::json;

namespace {

std::uint64_t subset_seed(std::uint64_t master, std::size_t k) {
    return mix_seed(mix_seed(master, kSubsetStream), k);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::tree ? "tree" : "boosted"; }

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "tree") return ModelKind::tree;
    if (name == "boosted") return ModelKind::boosted;
    throw ValidationError("unknown model '" + name + "' (expected tree or boosted)");
}

Model train_model(const LabeledDataset& train, const ModelSpec& spec) {
    if (spec.kind == ModelKind::tree) return DecisionTree::fit(train, spec.tree);
    return BoostedEnsemble::fit(train, spec.boost);
}

Label predict(const Model& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

double accuracy(const Model& model, const LabeledDataset& ds) {
    if (const auto* tree = std::get_if<DecisionTree>(&model)) return accuracy_empirical(*tree, ds);
    return accuracy(std::get<BoostedEnsemble>(model), ds);
}

std::vector<double> feature_importance(const Model& model) {
    return std::visit([](const auto& m) { return feature_importance(m); }, model);
}

// ---------------------------------------------------------------------------

void validate(const ExperimentConfig& cfg) {
    if (!(cfg.subset_fraction > 0 && cfg.subset_fraction <= 1))
        throw ValidationError("subset_fraction must lie in (0, 1]");
    if (cfg.subset_count < 1) throw ValidationError("subset_count must be at least 1");
    if (!(cfg.split.train_fraction > 0 && cfg.split.train_fraction < 1))
        throw ValidationError("train_fraction must lie in (0, 1)");
    if (cfg.model.kind == ModelKind::tree && cfg.model.tree.max_depth < 1)
        throw ValidationError("max_depth must be at least 1");
    if (cfg.model.kind == ModelKind::boosted) {
        if (cfg.model.boost.max_depth < 1) throw ValidationError("max_depth must be at least 1");
        if (cfg.model.boost.n_stages < 1) throw ValidationError("stages must be at least 1");
        if (!(cfg.model.boost.learning_rate > 0 && cfg.model.boost.learning_rate <= 1))
            throw ValidationError("learning_rate must lie in (0, 1]");
    }
}

std::optional<CorrelationResult> correlate(const std::vector<SubsetRecord>& records,
                                           std::string* reason) {
    std::vector<double> eps, dist;
    for (const auto& r : records) {
        if (!std::isfinite(r.epsilon)) continue;
        eps.push_back(r.epsilon);
        dist.push_back(r.rank_distance);
    }
    if (eps.size() < 3) {
        if (reason)
            *reason = "only " + std::to_string(eps.size()) +
                      " finite-epsilon records; at least 3 are needed";
        return std::nullopt;
    }
    try {
        return spearman(eps, dist);
    } catch (const ValidationError& e) {
        if (reason) *reason = e.what();
        return std::nullopt;
    }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    ExperimentReport report;

    LabeledDataset data = cfg.data.csv ? load_csv(*cfg.data.csv, cfg.data.csv_options, &report.warnings)
                                       : generate_circles(cfg.data.circles);
    report.feature_names = data.feature_names();

    SplitSpec split_spec = cfg.split;
    split_spec.seed = mix_seed(cfg.seed, kSplitStream);
    auto [train, test] = split(data, split_spec);
    if (cfg.scale) {
        const ScaleTable table = fit_minmax(train);
        train = apply_minmax(train, table);
        test = apply_minmax(test, table);
    }

    const Model reference = train_model(train, cfg.model);
    auto& ref = report.reference;
    ref.train_size = train.size();
    ref.test_size = test.size();
    ref.train_accuracy = accuracy(reference, train);
    ref.test_accuracy = accuracy(reference, test);
    ref.importance = feature_importance(reference);
    ref.importance_pct = normalize_importance(ref.importance);
    ref.ranking = rank_features(ref.importance);
    ref.rank_distance_to_self = rank_distance(ref.ranking, ref.ranking);

    report.records.resize(cfg.subset_count);
    auto run_one = [&](std::size_t k) {
        SubsetRecord rec;
        rec.index = k;
        rec.seed = subset_seed(cfg.seed, k);
        const LabeledDataset subset = sample_subset(train, cfg.subset_fraction, rec.seed);
        rec.size = subset.size();
        const ReprAssignment a = epsilon_of(train, subset);
        rec.epsilon = a.epsilon;
        rec.uncovered_classes = a.uncovered_classes;
        const Model model = train_model(subset, cfg.model);
        rec.train_accuracy = accuracy(model, subset);
        rec.test_accuracy = accuracy(model, test);
        rec.importance = feature_importance(model);
        rec.importance_pct = normalize_importance(rec.importance);
        rec.ranking = rank_features(rec.importance);
        rec.rank_distance = rank_distance(rec.ranking, ref.ranking);
        report.records[k] = std::move(rec);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads == 0
                                                                 ? std::thread::hardware_concurrency()
                                                                 : cfg.threads,
                                                             static_cast<unsigned>(cfg.subset_count)));
    if (workers == 1) {
        for (std::size_t k = 0; k < cfg.subset_count; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < cfg.subset_count; k = next++) {
                    try {
                        run_one(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = cfg.subset_count;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    for (const auto& r : report.records)
        if (!std::isfinite(r.epsilon)) report.exclusions.push_back(r.index);
    report.correlation = correlate(report.records, &report.correlation_note);
    return report;
}

json config_to_json(const ExperimentConfig& cfg) {
    json data;
    if (cfg.data.csv) {
        data["kind"] = "csv";
        data["path"] = cfg.data.csv->string();
        if (const auto* name = std::get_if<std::string>(&cfg.data.csv_options.label_column))
            data["label_column"] = *name;
        else
            data["label_column"] = std::get<std::size_t>(cfg.data.csv_options.label_column);
        data["has_header"] = cfg.data.csv_options.has_header;
    } else {
        data["kind"] = "circles";
        data["n"] = cfg.data.circles.n;
        data["noise_sd"] = cfg.data.circles.noise_sd;
        data["inner_factor"] = cfg.data.circles.inner_factor;
        data["seed"] = cfg.data.circles.seed;
    }
    json model = {{"kind", to_string(cfg.model.kind)}};
    if (cfg.model.kind == ModelKind::tree) {
        model["impurity"] = to_string(cfg.model.tree.impurity);
        model["max_depth"] = cfg.model.tree.max_depth;
        model["min_samples_split"] = cfg.model.tree.min_samples_split;
        model["min_gain"] = cfg.model.tree.min_gain;
    } else {
        model["n_stages"] = cfg.model.boost.n_stages;
        model["max_depth"] = cfg.model.boost.max_depth;
        model["learning_rate"] = cfg.model.boost.learning_rate;
        model["min_samples_split"] = cfg.model.boost.min_samples_split;
    }
    return {{"data", std::move(data)},
            {"split", {{"train_fraction", cfg.split.train_fraction}, {"stratified", cfg.split.stratified}}},
            {"subset_fraction", cfg.subset_fraction},
            {"subset_count", cfg.subset_count},
            {"model", std::move(model)},
            {"scale", cfg.scale},
            {"seed", cfg.seed},
            {"epsilon_reference", "training_set"}};
}

json report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg) {
    const auto& ref = report.reference;
    json reference = {{"train_size", ref.train_size},
                      {"test_size", ref.test_size},
                      {"train_accuracy", ref.train_accuracy},
                      {"test_accuracy", ref.test_accuracy},
                      {"importance", ref.importance},
                      {"importance_pct", ref.importance_pct},
                      {"ranking_order", ref.ranking.order},
                      {"ranking_positions", ref.ranking.position_of},
                      {"rank_distance_to_self", ref.rank_distance_to_self}};
    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back({{"index", r.index},
                           {"seed", r.seed},
                           {"size", r.size},
                           {"epsilon", number_or_null(r.epsilon)},
                           {"epsilon_infinite", !std::isfinite(r.epsilon)},
                           {"uncovered_classes", r.uncovered_classes},
                           {"train_accuracy", r.train_accuracy},
                           {"test_accuracy", r.test_accuracy},
                           {"importance", r.importance},
                           {"importance_pct", r.importance_pct},
                           {"ranking_order", r.ranking.order},
                           {"ranking_positions", r.ranking.position_of},
                           {"rank_distance", r.rank_distance}});
    }
    json corr = {{"available", report.correlation.has_value()},
                 {"pairs", "epsilon vs rank_distance over finite-epsilon records"}};
    if (report.correlation) {
        corr["rho"] = report.correlation->rho;
        corr["p_value"] = report.correlation->p_value;
        corr["n"] = report.correlation->n;
    } else {
        corr["reason"] = report.correlation_note;
    }
    return {{"schema_version", kReportSchemaVersion},
            {"tool", "repdt"},
            {"tool_version", kToolVersion},
            {"config", config_to_json(cfg)},
            {"feature_names", report.feature_names},
            {"reference", std::move(reference)},
            {"records", std::move(records)},
            {"exclusions", report.exclusions},
            {"correlation", std::move(corr)},
            {"warnings", report.warnings}};
}

std::string records_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "index,seed,size,epsilon,train_accuracy,test_accuracy,rank_distance";
    for (const auto& name : report.feature_names) out << ",pos_" << name;
    for (const auto& name : report.feature_names) out << ",fi_pct_" << name;
    out << '\n';
    for (const auto& r : report.records) {
        out << r.index << ',' << r.seed << ',' << r.size << ',' << format_double(r.epsilon) << ','
            << format_double(r.train_accuracy) << ',' << format_double(r.test_accuracy) << ','
            << format_double(r.rank_distance);
        for (auto p : r.ranking.position_of) out << ',' << p;
        for (double v : r.importance_pct) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

void write_report(const ExperimentReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    {
        std::ofstream out(out_dir / "report.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (out_dir / "report.json").string());
        out << report_to_json(report, cfg).dump(2) << '\n';
        if (!out) throw IoError("write failure on report.json");
    }
    std::ofstream out(out_dir / "subsets.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (out_dir / "subsets.csv").string());
    out << records_to_csv(report);
    if (!out) throw IoError("write failure on subsets.csv");
}

// ---------------------------------------------------------------------------

LabeledDataset generate_mixture(std::size_t n, std::size_t dims, int classes, std::uint64_t seed) {
    if (n < 1 || dims < 1 || classes < 1) throw ValidationError("mixture needs n, d, c >= 1");
    Rng rng(seed);
    std::uniform_real_distribution<double> centre(-2.0, 2.0);
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> centres(static_cast<std::size_t>(classes) * dims);
    for (double& c : centres) c = centre(rng);
    std::vector<double> pts;
    pts.reserve(n * dims);
    std::vector<Label> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = pick(rng);
        for (std::size_t j = 0; j < dims; ++j)
            pts.push_back(centres[static_cast<std::size_t>(y) * dims + j] + noise(rng));
        labels.push_back(y);
    }
    return LabeledDataset(std::move(pts), dims, std::move(labels), classes);
}

CampaignSummary run_theorem1_campaign(std::size_t trials, const MixtureSpec& gen,
                                      double radius_fraction, std::uint64_t seed) {
    if (!(radius_fraction >= 0) || !std::isfinite(radius_fraction))
        throw ValidationError("radius fraction must be a non-negative number");
    if (gen.min_points < 1 || gen.min_points > gen.max_points || gen.min_dims < 1 ||
        gen.min_dims > gen.max_dims || gen.min_classes < 1 || gen.min_classes > gen.max_classes ||
        gen.min_depth < 1 || gen.min_depth > gen.max_depth)
        throw ValidationError("invalid mixture generator ranges");

    CampaignSummary summary;
    summary.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(mix_seed(seed, t));
        const auto n = std::uniform_int_distribution<std::size_t>(gen.min_points, gen.max_points)(rng);
        const auto d = std::uniform_int_distribution<std::size_t>(gen.min_dims, gen.max_dims)(rng);
        const int c = std::uniform_int_distribution<int>(gen.min_classes, gen.max_classes)(rng);
        TrainConfig cfg;
        cfg.max_depth = std::uniform_int_distribution<std::size_t>(gen.min_depth, gen.max_depth)(rng);
        cfg.impurity = t % 2 == 0 ? Impurity::gini : Impurity::entropy;

        const LabeledDataset x = generate_mixture(n, d, c, rng());
        const DecisionTree tree = DecisionTree::fit(x, cfg);
        const double m = tree.min_margin();
        if (!std::isfinite(m)) {
            ++summary.skipped;
            continue;
        }
        const LabeledDataset xt = perturbed_copy(x, radius_fraction * m, rng());
        const Theorem1Verdict v = check_theorem1(tree, x, xt, identity_assignment(x, xt));
        if (!v.hypothesis_holds) {
            ++summary.vacuous;
            if (!v.routes_match || !v.acc_equal) ++summary.vacuous_mismatches;
        } else if (v.consistent()) {
            ++summary.passed;
        } else {
            ++summary.failed;
            summary.failed_trials.push_back(t);
        }
    }
    return summary;
}

json campaign_to_json(const CampaignSummary& s) {
    return {{"trials", s.trials},
            {"passed", s.passed},
            {"failed", s.failed},
            {"skipped", s.skipped},
            {"vacuous", s.vacuous},
            {"vacuous_mismatches", s.vacuous_mismatches},
            {"failed_trials", s.failed_trials}};
}

// ---------------------------------------------------------------------------

std::vector<GridCell> boundary_grid(const Model& model, const GridBounds& b, std::size_t resolution) {
    const std::size_t dims = std::visit([](const auto& m) { return m.dims(); }, model);
    if (dims != 2)
        throw ValidationError("boundary grid needs a 2-feature model, got " + std::to_string(dims));
    if (resolution < 2) throw ValidationError("resolution must be at least 2");
    if (!(b.x1_lo <= b.x1_hi) || !(b.x2_lo <= b.x2_hi))
        throw ValidationError("grid bounds must satisfy lo <= hi");

    auto coord = [&](double lo, double hi, std::size_t i) {
        if (i + 1 == resolution) return hi;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
    };
    std::vector<GridCell> cells;
    cells.reserve(resolution * resolution);
    for (std::size_t r = 0; r < resolution; ++r) {
        const double x2 = coord(b.x2_lo, b.x2_hi, r);
        for (std::size_t c = 0; c < resolution; ++c) {
            const double x1 = coord(b.x1_lo, b.x1_hi, c);
            const double p[2] = {x1, x2};
            cells.push_back({x1, x2, predict(model, p)});
        }
    }
    return cells;
}

GridBounds bounds_of(const LabeledDataset& ds, double pad) {
    if (ds.dims() != 2) throw ValidationError("bounds_of needs planar data");
    const ScaleTable t = fit_minmax(ds);
    const double p1 = pad * (t.maxs[0] - t.mins[0]);
    const double p2 = pad * (t.maxs[1] - t.mins[1]);
    return {t.mins[0] - p1, t.maxs[0] + p1, t.mins[1] - p2, t.maxs[1] + p2};
}

std::string grid_to_csv(const std::vector<GridCell>& cells) {
    std::ostringstream out;
    out << "x1,x2,class\n";
    for (const auto& c : cells) out << format_double(c.x1) << ',' << format_double(c.x2) << ',' << c.label << '\n';
    return out.str();
}

}  // namespace repdt
