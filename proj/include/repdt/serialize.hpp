#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "repdt/boost.hpp"
#include "repdt/cart.hpp"

namespace repdt {

/// Indented preorder text, one node per line:
///   node id=1 depth=0 feature=0 threshold=2.5 margin=0.5 gain=0.5 n=4 counts=2,2 label=0
///     leaf id=2 depth=1 label=0 n=2 counts=2,0
std::string tree_to_text(const DecisionTree& tree);
DecisionTree tree_from_text(std::string_view text);

nlohmann::json to_json(const DecisionTree& tree);
nlohmann::json to_json(const BoostedEnsemble& ensemble);
DecisionTree tree_from_json(const nlohmann::json& doc);
BoostedEnsemble ensemble_from_json(const nlohmann::json& doc);

using Model = std::variant<DecisionTree, BoostedEnsemble>;

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace repdt
