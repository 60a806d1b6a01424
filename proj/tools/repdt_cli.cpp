// repdt: subset representativeness experiments for decision trees.
//
// Subcommands: run, theorem1, boundary, epsilon, train. Every option of a
// subcommand may also be given in a key=value file passed with --config;
// flags on the command line take precedence.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 campaign failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "repdt/harness.hpp"
#include "repdt/repr.hpp"
#include "repdt/serialize.hpp"

namespace {

using namespace repdt;

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitCampaign = 3;

struct DataOptions {
    std::string path;
    std::string label_col;
    bool no_header = false;
    std::size_t circles_n = 200;
    double noise = 0.1;
    double inner_factor = 0.5;
    std::uint64_t circles_seed = 0;
    bool circles_seed_set = false;
};

struct ModelOptions {
    std::string kind = "tree";
    std::string impurity = "gini";
    std::size_t max_depth = 10;
    std::size_t min_samples_split = 2;
    std::size_t stages = 25;
    double learning_rate = 0.1;
};

struct CommonOptions {
    std::uint64_t seed = 0;
    std::string out_dir = "repdt-out";
    unsigned threads = 1;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    // consumed by expand_config before parsing; declared so it shows in --help
    sub->add_option("--config", "key=value file; command-line flags override its entries");
    sub->add_option("--seed", o.seed, "master random seed")->capture_default_str();
    sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
}

void add_data(CLI::App* sub, DataOptions& o) {
    sub->add_option("--data", o.path, "CSV input; synthetic circles when omitted");
    sub->add_option("--label-col", o.label_col, "label column name or index (default: last)");
    sub->add_flag("--no-header", o.no_header, "CSV has no header row");
    sub->add_option("--circles", o.circles_n, "number of synthetic circle points")->capture_default_str();
    sub->add_option("--noise", o.noise, "circle noise standard deviation")->capture_default_str();
    sub->add_option("--inner-factor", o.inner_factor, "inner circle radius")->capture_default_str();
    sub->add_option("--circles-seed", o.circles_seed, "generator seed (default: --seed)")
        ->each([&o](const std::string&) { o.circles_seed_set = true; });
}

void add_model(CLI::App* sub, ModelOptions& o, std::size_t default_depth) {
    o.max_depth = default_depth;
    sub->add_option("--model", o.kind, "tree or boosted")->capture_default_str();
    sub->add_option("--impurity", o.impurity, "gini or entropy (tree)")->capture_default_str();
    sub->add_option("--max-depth", o.max_depth, "maximum tree depth")->capture_default_str();
    sub->add_option("--min-samples-split", o.min_samples_split)->capture_default_str();
    sub->add_option("--stages", o.stages, "boosting stages")->capture_default_str();
    sub->add_option("--learning-rate", o.learning_rate, "boosting learning rate")->capture_default_str();
}

CsvOptions csv_options(const DataOptions& o) {
    CsvOptions csv;
    csv.has_header = !o.no_header;
    if (!o.label_col.empty()) csv.label_column = o.label_col;
    return csv;
}

DataSource data_source(const DataOptions& o, std::uint64_t seed) {
    DataSource src;
    if (!o.path.empty()) src.csv = o.path;
    src.csv_options = csv_options(o);
    src.circles = {o.circles_n, o.noise, o.inner_factor, o.circles_seed_set ? o.circles_seed : seed};
    return src;
}

LabeledDataset load_data(const DataSource& src) {
    if (!src.csv) return generate_circles(src.circles);
    std::vector<std::string> warnings;
    LabeledDataset ds = load_csv(*src.csv, src.csv_options, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return ds;
}

ModelSpec model_spec(const ModelOptions& o) {
    ModelSpec spec;
    spec.kind = model_kind_from_string(o.kind);
    spec.tree.impurity = impurity_from_string(o.impurity);
    spec.tree.max_depth = o.max_depth;
    spec.tree.min_samples_split = o.min_samples_split;
    spec.boost.max_depth = o.max_depth;
    spec.boost.n_stages = o.stages;
    spec.boost.learning_rate = o.learning_rate;
    spec.boost.min_samples_split = o.min_samples_split;
    return spec;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failure on " + path.string());
}

std::string fmt(double v) { return format_double(v); }

// CLI11 only reads config files attached to the top-level app, so a
// subcommand's --config is expanded here: each key=value entry becomes
// --key=value unless --key already appears on the command line.
std::vector<std::string> expand_config(int argc, char** argv, const CLI::App& app) {
    std::vector<std::string> args(argv, argv + argc);
    std::size_t sub_at = 0;
    for (std::size_t i = 1; i < args.size() && !sub_at; ++i)
        if (app.get_subcommand_no_throw(args[i])) sub_at = i;
    if (!sub_at) return args;

    std::string file;
    std::size_t cfg_at = 0, cfg_len = 0;
    for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[i + 1];
            cfg_at = i;
            cfg_len = 2;
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            cfg_at = i;
            cfg_len = 1;
            break;
        }
    }
    if (!cfg_len) return args;
    if (!std::filesystem::is_regular_file(file)) throw IoError("cannot open config file " + file);

    auto given = [&](const std::string& key) {
        for (std::size_t i = sub_at + 1; i < args.size(); ++i)
            if (args[i] == key || args[i].rfind(key + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> extra;
    for (const auto& item : CLI::ConfigINI().from_file(file)) {
        if (item.name == "++" || item.name == "--") continue;
        const std::string key = "--" + item.fullname();
        if (given(key)) continue;
        for (const auto& v : item.inputs.empty() ? std::vector<std::string>{"true"} : item.inputs)
            extra.push_back(key + "=" + v);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(cfg_at),
               args.begin() + static_cast<std::ptrdiff_t>(cfg_at + cfg_len));
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_at + 1), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"repdt - dataset representativeness and decision tree explanation drift"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // run ------------------------------------------------------------------
    CommonOptions run_common;
    DataOptions run_data;
    ModelOptions run_model;
    double train_fraction = 0.75, subset_fraction = 0.1;
    std::size_t subsets = 100;
    bool no_stratify = false, no_scale = false;
    auto* run = app.add_subcommand("run", "subset-sampling experiment: epsilon vs explanation drift");
    add_common(run, run_common);
    add_data(run, run_data);
    add_model(run, run_model, 10);
    run->add_option("--train-fraction", train_fraction)->capture_default_str();
    run->add_flag("--no-stratify", no_stratify, "plain random split");
    run->add_option("--subset-fraction", subset_fraction)->capture_default_str();
    run->add_option("--subsets", subsets, "number of random subsets")->capture_default_str();
    run->add_flag("--no-scale", no_scale, "skip min-max scaling");

    // theorem1 -------------------------------------------------------------
    CommonOptions thm_common;
    MixtureSpec mixture;
    std::size_t trials = 200;
    double radius_fraction = 0.9;
    bool thm_write = false;
    auto* thm = app.add_subcommand("theorem1", "randomized accuracy-preservation campaign");
    add_common(thm, thm_common);
    thm->add_option("--trials", trials)->capture_default_str();
    thm->add_option("--radius-fraction", radius_fraction, "perturbation radius as a fraction of M")
        ->capture_default_str();
    thm->add_option("--min-n", mixture.min_points)->capture_default_str();
    thm->add_option("--max-n", mixture.max_points)->capture_default_str();
    thm->add_option("--min-dims", mixture.min_dims)->capture_default_str();
    thm->add_option("--max-dims", mixture.max_dims)->capture_default_str();
    thm->add_option("--min-classes", mixture.min_classes)->capture_default_str();
    thm->add_option("--max-classes", mixture.max_classes)->capture_default_str();
    thm->add_option("--max-depth", mixture.max_depth)->capture_default_str();
    thm->add_flag("--write", thm_write, "also write campaign.json into --out-dir");

    // boundary -------------------------------------------------------------
    CommonOptions bnd_common;
    DataOptions bnd_data;
    ModelOptions bnd_model;
    std::string model_file, bounds_text, bnd_out;
    std::size_t resolution = 100;
    auto* bnd = app.add_subcommand("boundary", "export a decision-boundary grid for planar data");
    add_common(bnd, bnd_common);
    add_data(bnd, bnd_data);
    add_model(bnd, bnd_model, 4);
    bnd->add_option("--model-file", model_file, "model JSON from `train`; otherwise fit on the data");
    bnd->add_option("--bounds", bounds_text, "x1lo,x1hi,x2lo,x2hi (default: data box + 10%)");
    bnd->add_option("--resolution", resolution, "cells per axis")->capture_default_str();
    bnd->add_option("--out", bnd_out, "output CSV (default: <out-dir>/boundary.csv)");

    // epsilon --------------------------------------------------------------
    CommonOptions eps_common;
    std::string reference_path, subset_path, eps_label;
    bool eps_no_header = false, eps_scale = false;
    auto* eps = app.add_subcommand("epsilon", "epsilon-representativeness of one CSV for another");
    add_common(eps, eps_common);
    eps->add_option("--reference", reference_path, "dataset to be represented")->required();
    eps->add_option("--subset", subset_path, "candidate representative dataset")->required();
    eps->add_option("--label-col", eps_label, "label column name or index (default: last)");
    eps->add_flag("--no-header", eps_no_header);
    eps->add_flag("--scale", eps_scale, "min-max scale both with the reference's ranges");

    // train ----------------------------------------------------------------
    CommonOptions trn_common;
    DataOptions trn_data;
    ModelOptions trn_model;
    std::string trn_out, trn_text;
    auto* trn = app.add_subcommand("train", "fit a model and serialize it");
    add_common(trn, trn_common);
    add_data(trn, trn_data);
    add_model(trn, trn_model, 4);
    trn->add_option("--out", trn_out, "model JSON (default: <out-dir>/model.json)");
    trn->add_option("--text", trn_text, "also write the tree in indented text form");

    try {
        std::vector<std::string> args;
        try {
            args = expand_config(argc, argv, app);
        } catch (const IoError& e) {
            std::cerr << "io error: " << e.what() << '\n';
            return kExitIo;
        }
        std::vector<char*> ptrs;
        for (auto& a : args) ptrs.push_back(a.data());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::FileError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run) {
            ExperimentConfig cfg;
            cfg.data = data_source(run_data, run_common.seed);
            cfg.split.train_fraction = train_fraction;
            cfg.split.stratified = !no_stratify;
            cfg.subset_fraction = subset_fraction;
            cfg.subset_count = subsets;
            cfg.model = model_spec(run_model);
            cfg.scale = !no_scale;
            cfg.seed = run_common.seed;
            cfg.threads = run_common.threads;
            const ExperimentReport report = run_experiment(cfg);
            write_report(report, cfg, run_common.out_dir);
            std::cout << "reference: test accuracy " << fmt(report.reference.test_accuracy) << '\n';
            std::cout << "subsets: " << report.records.size() << " ("
                      << report.exclusions.size() << " with infinite epsilon)\n";
            if (report.correlation)
                std::cout << "spearman(epsilon, rank distance): rho=" << fmt(report.correlation->rho)
                          << " p=" << fmt(report.correlation->p_value)
                          << " n=" << report.correlation->n << '\n';
            else
                std::cout << "correlation unavailable: " << report.correlation_note << '\n';
            std::cout << "report: " << (std::filesystem::path(run_common.out_dir) / "report.json").string()
                      << '\n';
            return 0;
        }
        if (*thm) {
            const CampaignSummary s = run_theorem1_campaign(trials, mixture, radius_fraction, thm_common.seed);
            std::cout << campaign_to_json(s).dump(2) << '\n';
            if (thm_write) {
                std::filesystem::create_directories(thm_common.out_dir);
                write_text(std::filesystem::path(thm_common.out_dir) / "campaign.json",
                           campaign_to_json(s).dump(2) + "\n");
            }
            return s.failed == 0 ? 0 : kExitCampaign;
        }
        if (*bnd) {
            std::optional<Model> model;
            std::optional<LabeledDataset> data;
            if (!model_file.empty()) {
                model = load_model(model_file);
            } else {
                data = load_data(data_source(bnd_data, bnd_common.seed));
                model = train_model(*data, model_spec(bnd_model));
            }
            GridBounds bounds;
            if (!bounds_text.empty()) {
                std::vector<double> v;
                std::stringstream ss(bounds_text);
                for (std::string tok; std::getline(ss, tok, ',');) {
                    try {
                        v.push_back(std::stod(tok));
                    } catch (const std::exception&) {
                        throw ValidationError("bad --bounds entry '" + tok + "'");
                    }
                }
                if (v.size() != 4) throw ValidationError("--bounds needs four comma-separated numbers");
                bounds = {v[0], v[1], v[2], v[3]};
            } else if (data) {
                bounds = bounds_of(*data);
            } else {
                throw ValidationError("--bounds is required with --model-file");
            }
            const auto cells = boundary_grid(*model, bounds, resolution);
            const std::filesystem::path out =
                bnd_out.empty() ? std::filesystem::path(bnd_common.out_dir) / "boundary.csv" : std::filesystem::path(bnd_out);
            write_text(out, grid_to_csv(cells));
            std::cout << "wrote " << cells.size() << " grid cells to " << out.string() << '\n';
            return 0;
        }
        if (*eps) {
            CsvOptions opts;
            opts.has_header = !eps_no_header;
            if (!eps_label.empty()) opts.label_column = eps_label;
            LabeledDataset x = load_csv(reference_path, opts);
            LabeledDataset xt = load_csv(subset_path, opts);
            if (eps_scale) {
                const ScaleTable t = fit_minmax(x);
                x = apply_minmax(x, t);
                xt = apply_minmax(xt, t);
            }
            EpsilonOptions eo;
            eo.threads = eps_common.threads;
            const ReprAssignment a = epsilon_of(x, xt, eo);
            nlohmann::json out = {{"epsilon", std::isfinite(a.epsilon) ? nlohmann::json(a.epsilon)
                                                                       : nlohmann::json(nullptr)},
                                  {"epsilon_infinite", !std::isfinite(a.epsilon)},
                                  {"uncovered_classes", a.uncovered_classes},
                                  {"diagnostics", a.diagnostics},
                                  {"reference_size", x.size()},
                                  {"subset_size", xt.size()},
                                  {"gamma", a.gamma ? nlohmann::json(*a.gamma) : nlohmann::json(nullptr)}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (*trn) {
            const LabeledDataset data = load_data(data_source(trn_data, trn_common.seed));
            const Model model = train_model(data, model_spec(trn_model));
            const std::filesystem::path out =
                trn_out.empty() ? std::filesystem::path(trn_common.out_dir) / "model.json" : std::filesystem::path(trn_out);
            if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
            save_model(out, model);
            if (!trn_text.empty()) {
                const auto* tree = std::get_if<DecisionTree>(&model);
                if (!tree) throw ValidationError("--text is only available for tree models");
                write_text(trn_text, tree_to_text(*tree));
            }
            std::cout << "training accuracy " << fmt(accuracy(model, data)) << "; model written to "
                      << out.string() << '\n';
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}
