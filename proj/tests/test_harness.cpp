#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "repdt/harness.hpp"
#include "repdt/repr.hpp"

using namespace repdt;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.data.circles = {200, 0.1, 0.5, 7};
    cfg.split = {0.75, 0, true};
    cfg.subset_fraction = 0.4;
    cfg.subset_count = 2;
    cfg.model.tree = {Impurity::gini, 4, 2, 0.0};
    cfg.seed = 11;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("circles experiment with two subsets") {
    const auto cfg = small_config();
    const auto rep = run_experiment(cfg);
    CHECK(rep.reference.train_size == 150);
    CHECK(rep.reference.test_size == 50);
    CHECK(rep.reference.rank_distance_to_self == 0.0);
    REQUIRE(rep.records.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& r = rep.records[k];
        CHECK(r.index == k);
        CHECK(r.size == 60);
        CHECK(r.epsilon >= 0.0);
        CHECK(r.importance.size() == 2);
        CHECK(r.rank_distance >= 0.0);
        CHECK(r.rank_distance <= 1.0);
        CHECK(r.train_accuracy >= 0.0);
        CHECK(r.test_accuracy <= 1.0);
    }
    // fewer than three records: no correlation, but a reason
    CHECK_FALSE(rep.correlation.has_value());
    CHECK_FALSE(rep.correlation_note.empty());
}

TEST_CASE("epsilon in the report matches an independent recomputation") {
    auto cfg = small_config();
    cfg.subset_count = 5;
    const auto rep = run_experiment(cfg);

    // rebuild the training set and each subset from the documented seeds
    auto ds = generate_circles(cfg.data.circles);
    auto sp = cfg.split;
    sp.seed = mix_seed(cfg.seed, kSplitStream);
    auto train = split(ds, sp).train;
    train = minmax_scale(train).first;
    for (const auto& r : rep.records) {
        CHECK(r.seed == mix_seed(mix_seed(cfg.seed, kSubsetStream), r.index));
        const auto sub = sample_subset(train, cfg.subset_fraction, r.seed);
        double worst = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            double best = kInfinity;
            for (std::size_t k = 0; k < sub.size(); ++k)
                if (sub.label(k) == train.label(i)) best = std::min(best, linf_distance(train.row(i), sub.row(k)));
            worst = std::max(worst, best);
        }
        CHECK(r.epsilon == worst);
    }
}

TEST_CASE("a full-size subset reproduces the reference") {
    auto cfg = small_config();
    cfg.subset_fraction = 1.0;
    cfg.subset_count = 3;
    const auto rep = run_experiment(cfg);
    for (const auto& r : rep.records) {
        CHECK(r.epsilon == 0.0);
        CHECK(r.rank_distance == 0.0);
        CHECK(r.importance == rep.reference.importance);
        CHECK(r.test_accuracy == rep.reference.test_accuracy);
    }
}

TEST_CASE("experiments are deterministic across thread counts") {
    auto cfg = small_config();
    cfg.subset_count = 12;
    cfg.subset_fraction = 0.2;
    const auto a = report_to_json(run_experiment(cfg), cfg).dump();
    cfg.threads = 4;
    const auto b = report_to_json(run_experiment(cfg), cfg).dump();
    CHECK(a == b);
    cfg.seed = 12;
    CHECK(report_to_json(run_experiment(cfg), cfg).dump() != a);
}

TEST_CASE("boosted experiment") {
    auto cfg = small_config();
    cfg.model.kind = ModelKind::boosted;
    cfg.model.boost = {5, 3, 0.1, 2};
    cfg.subset_count = 4;
    const auto rep = run_experiment(cfg);
    CHECK(rep.records.size() == 4);
    CHECK(rep.reference.train_accuracy > 0.5);
}

TEST_CASE("correlation over records") {
    auto cfg = small_config();
    cfg.subset_count = 30;
    cfg.subset_fraction = 0.1;
    const auto rep = run_experiment(cfg);
    std::vector<double> eps, dist;
    for (const auto& r : rep.records)
        if (std::isfinite(r.epsilon)) {
            eps.push_back(r.epsilon);
            dist.push_back(r.rank_distance);
        }
    if (rep.correlation) {
        const auto direct = spearman(eps, dist);
        CHECK(rep.correlation->rho == doctest::Approx(direct.rho).epsilon(1e-12));
        CHECK(rep.correlation->p_value == doctest::Approx(direct.p_value).epsilon(1e-12));
        CHECK(rep.correlation->n == eps.size());
    } else {
        CHECK_FALSE(rep.correlation_note.empty());
    }

    SUBCASE("infinite epsilon records are excluded") {
        std::vector<SubsetRecord> recs(5);
        for (std::size_t k = 0; k < 5; ++k) {
            recs[k].index = k;
            recs[k].epsilon = 0.1 * static_cast<double>(k + 1);
            recs[k].rank_distance = static_cast<double>((k * 3) % 5);
        }
        recs[2].epsilon = kInfinity;
        const auto c = correlate(recs);
        REQUIRE(c.has_value());
        CHECK(c->n == 4);
        recs[3].epsilon = kInfinity;
        CHECK(correlate(recs).has_value());
        recs[4].epsilon = kInfinity;
        std::string why;
        CHECK_FALSE(correlate(recs, &why).has_value());
        CHECK_FALSE(why.empty());
    }
    SUBCASE("constant distances give no correlation") {
        std::vector<SubsetRecord> recs(4);
        for (std::size_t k = 0; k < 4; ++k) recs[k].epsilon = static_cast<double>(k);
        std::string why;
        CHECK_FALSE(correlate(recs, &why).has_value());
        CHECK_FALSE(why.empty());
    }
}

TEST_CASE("report files") {
    auto cfg = small_config();
    cfg.subset_count = 3;
    const auto rep = run_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "repdt_test_report";
    std::filesystem::remove_all(dir);
    write_report(rep, cfg, dir);
    const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(doc.at("schema_version") == kReportSchemaVersion);
    CHECK(doc.at("records").size() == 3);
    CHECK(doc.at("config").at("seed") == 11);
    CHECK_FALSE(doc.at("config").contains("threads"));
    const auto csv = slurp(dir / "subsets.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    std::filesystem::remove_all(dir);

    SUBCASE("infinite epsilon is written as null") {
        ExperimentReport r = rep;
        r.records[0].epsilon = kInfinity;
        const auto j = report_to_json(r, cfg);
        CHECK(j.at("records")[0].at("epsilon").is_null());
        CHECK(j.at("records")[0].at("epsilon_infinite") == true);
    }
}

TEST_CASE("config validation") {
    auto cfg = small_config();
    CHECK_NOTHROW(validate(cfg));
    auto bad = cfg;
    bad.subset_fraction = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.subset_fraction = 1.5;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.subset_count = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.split.train_fraction = 1.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.model.tree.max_depth = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.model.kind = ModelKind::boosted;
    bad.model.boost.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    CHECK_THROWS_AS(model_kind_from_string("forest"), ValidationError);

    bad = cfg;
    bad.data.csv = "/nonexistent/data.csv";
    CHECK_THROWS_AS(run_experiment(bad), IoError);
}

TEST_CASE("accuracy-preservation campaign") {
    const MixtureSpec gen;
    SUBCASE("radius below the margin never fails") {
        const auto s = run_theorem1_campaign(60, gen, 0.9, 5);
        CHECK(s.trials == 60);
        CHECK(s.failed == 0);
        CHECK(s.vacuous == 0);
        CHECK(s.passed + s.skipped == 60);
        CHECK(s.passed > 0);
    }
    SUBCASE("zero radius is the identity") {
        const auto s = run_theorem1_campaign(20, gen, 0.0, 6);
        CHECK(s.failed == 0);
        CHECK(s.passed + s.skipped == 20);
    }
    SUBCASE("twice the margin is mostly vacuous and never a failure") {
        const auto s = run_theorem1_campaign(40, gen, 2.0, 7);
        CHECK(s.failed == 0);
        CHECK(s.vacuous > 0);
    }
    SUBCASE("deterministic") {
        const auto a = campaign_to_json(run_theorem1_campaign(15, gen, 0.9, 1));
        const auto b = campaign_to_json(run_theorem1_campaign(15, gen, 0.9, 1));
        CHECK(a == b);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(run_theorem1_campaign(1, gen, -0.5, 0), ValidationError);
        MixtureSpec inverted;
        inverted.min_points = 50;
        inverted.max_points = 10;
        CHECK_THROWS_AS(run_theorem1_campaign(1, inverted, 0.9, 0), ValidationError);
    }
}

TEST_CASE("boundary grid") {
    LabeledDataset ds({0, 0, 1, 0, 0, 1, 1, 1}, 2, {0, 1, 0, 1}, 2);
    const Model tree = DecisionTree::fit(ds, {Impurity::gini, 1, 2, 0.0});
    // the only useful split is x1 < 0.5
    REQUIRE(std::get<DecisionTree>(tree).node(1).feature == 0);

    const auto cells = boundary_grid(tree, {0, 1, 0, 1}, 5);
    REQUIRE(cells.size() == 25);
    CHECK(cells.front().x1 == 0.0);
    CHECK(cells.front().x2 == 0.0);
    CHECK(cells.back().x1 == 1.0);
    CHECK(cells.back().x2 == 1.0);
    CHECK(cells[1].x1 == 0.25);  // x1 varies fastest
    CHECK(cells[1].x2 == 0.0);
    for (const auto& c : cells) CHECK(c.label == (c.x1 < 0.5 ? 0 : 1));

    const auto csv = grid_to_csv(cells);
    CHECK(csv.rfind("x1,x2,class\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);

    SUBCASE("single leaf paints one class") {
        LabeledDataset one({0, 0, 1, 1}, 2, {1, 1}, 2);
        const Model leaf = DecisionTree::fit(one, {});
        for (const auto& c : boundary_grid(leaf, {-1, 1, -1, 1}, 4)) CHECK(c.label == 1);
    }
    SUBCASE("errors") {
        LabeledDataset three({0, 0, 0, 1, 1, 1}, 3, {0, 1}, 2);
        const Model t3 = DecisionTree::fit(three, {});
        CHECK_THROWS_AS(boundary_grid(t3, {}, 5), ValidationError);
        CHECK_THROWS_AS(boundary_grid(tree, {}, 1), ValidationError);
        CHECK_THROWS_AS(boundary_grid(tree, {1, 0, 0, 1}, 5), ValidationError);
    }
    SUBCASE("bounds_of pads the box") {
        const auto b = bounds_of(ds, 0.1);
        CHECK(b.x1_lo == doctest::Approx(-0.1));
        CHECK(b.x1_hi == doctest::Approx(1.1));
        CHECK(b.x2_lo == doctest::Approx(-0.1));
        CHECK(b.x2_hi == doctest::Approx(1.1));
    }
}
