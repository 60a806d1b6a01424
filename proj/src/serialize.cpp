#include "repdt/serialize.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace repdt {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string join_counts(const std::vector<std::size_t>& counts) {
    std::string s;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (k) s += ',';
        s += std::to_string(counts[k]);
    }
    return s;
}

template <class T>
T parse_number(std::string_view s, std::string_view what) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ValidationError("bad " + std::string(what) + " '" + std::string(s) + "'");
    return v;
}

std::vector<std::size_t> parse_counts(std::string_view s) {
    std::vector<std::size_t> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        out.push_back(parse_number<std::size_t>(s.substr(0, comma), "count"));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// "kind key=value key=value ..." with leading indentation ignored.
struct Line {
    std::string kind;
    std::map<std::string, std::string, std::less<>> fields;

    const std::string& get(std::string_view key) const {
        auto it = fields.find(key);
        if (it == fields.end()) throw ValidationError("missing field '" + std::string(key) + "'");
        return it->second;
    }
};

Line parse_line(std::string_view raw) {
    std::istringstream in{std::string(raw)};
    Line line;
    in >> line.kind;
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ValidationError("malformed token '" + tok + "'");
        line.fields.emplace(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return line;
}

json config_to_json(const TrainConfig& cfg) {
    return {{"impurity", to_string(cfg.impurity)},
            {"max_depth", cfg.max_depth},
            {"min_samples_split", cfg.min_samples_split},
            {"min_gain", cfg.min_gain}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.impurity = impurity_from_string(j.at("impurity").get<std::string>());
    cfg.max_depth = j.at("max_depth").get<std::size_t>();
    cfg.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    cfg.min_gain = j.at("min_gain").get<double>();
    return cfg;
}

json regression_tree_to_json(const RegressionTree& tree) {
    json nodes = json::array();
    for (const auto& nd : tree.nodes()) {
        json jn = {{"id", nd.id}, {"depth", nd.depth}, {"n", nd.count}, {"value", nd.value}};
        if (!nd.is_leaf) {
            jn["feature"] = nd.feature;
            jn["threshold"] = nd.threshold;
            jn["left"] = nd.left;
            jn["right"] = nd.right;
            jn["gain"] = nd.gain;
        }
        nodes.push_back(std::move(jn));
    }
    return {{"dims", tree.dims()}, {"nodes", std::move(nodes)}};
}

RegressionTree regression_tree_from_json(const json& j) {
    std::vector<RegressionNode> nodes;
    for (const auto& jn : j.at("nodes")) {
        RegressionNode nd;
        nd.id = jn.at("id").get<std::size_t>();
        nd.depth = jn.at("depth").get<std::size_t>();
        nd.count = jn.at("n").get<std::size_t>();
        nd.value = jn.at("value").get<double>();
        nd.is_leaf = !jn.contains("feature");
        if (!nd.is_leaf) {
            nd.feature = jn.at("feature").get<std::size_t>();
            nd.threshold = jn.at("threshold").get<double>();
            nd.left = jn.at("left").get<std::size_t>();
            nd.right = jn.at("right").get<std::size_t>();
            nd.gain = jn.at("gain").get<double>();
        }
        nodes.push_back(nd);
    }
    return RegressionTree(std::move(nodes), j.at("dims").get<std::size_t>());
}

}  // namespace

std::string tree_to_text(const DecisionTree& tree) {
    std::ostringstream out;
    const auto& cfg = tree.config();
    out << "tree dims=" << tree.dims() << " classes=" << tree.num_classes()
        << " train_size=" << tree.train_size() << " impurity=" << to_string(cfg.impurity)
        << " max_depth=" << cfg.max_depth << " min_samples_split=" << cfg.min_samples_split
        << " min_gain=" << format_double(cfg.min_gain) << '\n';
    out << "features";
    for (const auto& name : tree.feature_names()) out << '\t' << name;
    out << '\n';
    for (const auto& nd : tree.nodes()) {
        out << std::string(2 * nd.depth, ' ');
        if (nd.is_leaf) {
            out << "leaf id=" << nd.id << " depth=" << nd.depth << " label=" << nd.label;
        } else {
            out << "node id=" << nd.id << " depth=" << nd.depth << " feature=" << nd.feature
                << " threshold=" << format_double(nd.threshold)
                << " margin=" << format_double(nd.margin) << " gain=" << format_double(nd.info_gain)
                << " left=" << nd.left << " right=" << nd.right << " label=" << nd.label;
        }
        out << " n=" << nd.count << " counts=" << join_counts(nd.class_counts) << '\n';
    }
    return out.str();
}

DecisionTree tree_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    if (!std::getline(in, raw)) throw ValidationError("empty tree text");
    const Line header = parse_line(raw);
    if (header.kind != "tree") throw ValidationError("tree text must start with a 'tree' line");

    TrainConfig cfg;
    cfg.impurity = impurity_from_string(header.get("impurity"));
    cfg.max_depth = parse_number<std::size_t>(header.get("max_depth"), "max_depth");
    cfg.min_samples_split =
        parse_number<std::size_t>(header.get("min_samples_split"), "min_samples_split");
    cfg.min_gain = parse_number<double>(header.get("min_gain"), "min_gain");

    std::vector<std::string> names;
    if (!std::getline(in, raw) || raw.rfind("features", 0) != 0)
        throw ValidationError("tree text is missing the features line");
    for (std::size_t pos = raw.find('\t'); pos != std::string::npos;) {
        const auto next = raw.find('\t', pos + 1);
        names.push_back(raw.substr(pos + 1, next == std::string::npos ? next : next - pos - 1));
        pos = next;
    }

    std::vector<TreeNode> nodes;
    while (std::getline(in, raw)) {
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Line line = parse_line(raw);
        TreeNode nd;
        nd.id = parse_number<std::size_t>(line.get("id"), "id");
        nd.depth = parse_number<std::size_t>(line.get("depth"), "depth");
        nd.label = parse_number<Label>(line.get("label"), "label");
        nd.count = parse_number<std::size_t>(line.get("n"), "n");
        nd.class_counts = parse_counts(line.get("counts"));
        if (line.kind == "node") {
            nd.is_leaf = false;
            nd.feature = parse_number<std::size_t>(line.get("feature"), "feature");
            nd.threshold = parse_number<double>(line.get("threshold"), "threshold");
            nd.margin = parse_number<double>(line.get("margin"), "margin");
            nd.info_gain = parse_number<double>(line.get("gain"), "gain");
            nd.left = parse_number<std::size_t>(line.get("left"), "left");
            nd.right = parse_number<std::size_t>(line.get("right"), "right");
        } else if (line.kind != "leaf") {
            throw ValidationError("unknown node kind '" + line.kind + "'");
        }
        nodes.push_back(std::move(nd));
    }
    return DecisionTree(std::move(nodes), parse_number<std::size_t>(header.get("dims"), "dims"),
                        parse_number<int>(header.get("classes"), "classes"),
                        parse_number<std::size_t>(header.get("train_size"), "train_size"), cfg,
                        std::move(names));
}

json to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& nd : tree.nodes()) {
        json jn = {{"id", nd.id},
                   {"depth", nd.depth},
                   {"label", nd.label},
                   {"n", nd.count},
                   {"counts", nd.class_counts}};
        if (!nd.is_leaf) {
            jn["feature"] = nd.feature;
            jn["threshold"] = nd.threshold;
            jn["margin"] = nd.margin;
            jn["gain"] = nd.info_gain;
            jn["left"] = nd.left;
            jn["right"] = nd.right;
        }
        nodes.push_back(std::move(jn));
    }
    return {{"type", "decision_tree"},
            {"schema_version", kSchemaVersion},
            {"dims", tree.dims()},
            {"num_classes", tree.num_classes()},
            {"train_size", tree.train_size()},
            {"feature_names", tree.feature_names()},
            {"config", config_to_json(tree.config())},
            {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& doc) {
    try {
        if (doc.at("type") != "decision_tree") throw ValidationError("not a decision_tree document");
        std::vector<TreeNode> nodes;
        for (const auto& jn : doc.at("nodes")) {
            TreeNode nd;
            nd.id = jn.at("id").get<std::size_t>();
            nd.depth = jn.at("depth").get<std::size_t>();
            nd.label = jn.at("label").get<Label>();
            nd.count = jn.at("n").get<std::size_t>();
            nd.class_counts = jn.at("counts").get<std::vector<std::size_t>>();
            nd.is_leaf = !jn.contains("feature");
            if (!nd.is_leaf) {
                nd.feature = jn.at("feature").get<std::size_t>();
                nd.threshold = jn.at("threshold").get<double>();
                nd.margin = jn.at("margin").get<double>();
                nd.info_gain = jn.at("gain").get<double>();
                nd.left = jn.at("left").get<std::size_t>();
                nd.right = jn.at("right").get<std::size_t>();
            }
            nodes.push_back(std::move(nd));
        }
        return DecisionTree(std::move(nodes), doc.at("dims").get<std::size_t>(),
                            doc.at("num_classes").get<int>(), doc.at("train_size").get<std::size_t>(),
                            config_from_json(doc.at("config")),
                            doc.at("feature_names").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed tree document: ") + e.what());
    }
}

json to_json(const BoostedEnsemble& ensemble) {
    json stages = json::array();
    for (const auto& s : ensemble.stages()) stages.push_back(regression_tree_to_json(s));
    const auto& cfg = ensemble.config();
    return {{"type", "boosted_ensemble"},
            {"schema_version", kSchemaVersion},
            {"learning_rate", ensemble.learning_rate()},
            {"initial_score", ensemble.initial_score()},
            {"config",
             {{"n_stages", cfg.n_stages},
              {"max_depth", cfg.max_depth},
              {"learning_rate", cfg.learning_rate},
              {"min_samples_split", cfg.min_samples_split}}},
            {"feature_names", ensemble.feature_names()},
            {"train_log_loss", ensemble.train_log_loss()},
            {"stages", std::move(stages)}};
}

BoostedEnsemble ensemble_from_json(const json& doc) {
    try {
        if (doc.at("type") != "boosted_ensemble")
            throw ValidationError("not a boosted_ensemble document");
        std::vector<RegressionTree> stages;
        for (const auto& js : doc.at("stages")) stages.push_back(regression_tree_from_json(js));
        const auto& jc = doc.at("config");
        BoostConfig cfg;
        cfg.n_stages = jc.at("n_stages").get<std::size_t>();
        cfg.max_depth = jc.at("max_depth").get<std::size_t>();
        cfg.learning_rate = jc.at("learning_rate").get<double>();
        cfg.min_samples_split = jc.at("min_samples_split").get<std::size_t>();
        return BoostedEnsemble(std::move(stages), doc.at("learning_rate").get<double>(),
                               doc.at("initial_score").get<double>(), cfg,
                               doc.at("train_log_loss").get<std::vector<double>>(),
                               doc.at("feature_names").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed ensemble document: ") + e.what());
    }
}

json model_to_json(const Model& model) {
    return std::visit([](const auto& m) { return to_json(m); }, model);
}

Model model_from_json(const json& doc) {
    const auto type = doc.value("type", std::string{});
    if (type == "decision_tree") return tree_from_json(doc);
    if (type == "boosted_ensemble") return ensemble_from_json(doc);
    throw ValidationError("unknown model type '" + type + "'");
}

void save_model(const std::filesystem::path& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace repdt
