#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "spdalp/mdp.hpp"

namespace spdalp {

// Schema: {"n", "m", "gamma", "alpha": [n], "P": [a][s][s'], "c": [a][s]}.
nlohmann::json mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const nlohmann::json& j);

Mdp read_mdp(const std::filesystem::path& path);
void write_mdp(const Mdp& mdp, const std::filesystem::path& path);

nlohmann::json policy_to_json(const RandomizedPolicy& pi);
RandomizedPolicy policy_from_json(const nlohmann::json& j);

}  // namespace spdalp
