#include "spdalp/mdp_io.hpp"

#include <fstream>

#include "spdalp/errors.hpp"

namespace spdalp {

namespace {

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DimensionError(std::string(what) + ": wrong number of rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError(std::string(what) + ": wrong row length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json mdp_to_json(const Mdp& mdp) {
  nlohmann::json j;
  j["n"] = mdp.states();
  j["m"] = mdp.actions();
  j["gamma"] = mdp.gamma();
  j["alpha"] = std::vector<double>(mdp.alpha().data(), mdp.alpha().data() + mdp.alpha().size());
  nlohmann::json p = nlohmann::json::array();
  for (const Matrix& pa : mdp.transitions()) p.push_back(matrix_rows(pa));
  j["P"] = std::move(p);
  j["c"] = matrix_rows(mdp.costs());
  return j;
}

Mdp mdp_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto m = j.at("m").get<Eigen::Index>();
    if (n < 1 || m < 1) throw DimensionError("n and m must be positive");
    const auto& p = j.at("P");
    if (!p.is_array() || static_cast<Eigen::Index>(p.size()) != m) {
      throw DimensionError("P must hold one n×n matrix per action");
    }
    std::vector<Matrix> transitions;
    for (const auto& pa : p) transitions.push_back(rows_matrix(pa, n, n, "P"));
    const auto alpha_values = j.at("alpha").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(alpha_values.size()) != n) throw DimensionError("alpha must have n entries");
    Vector alpha = Eigen::Map<const Vector>(alpha_values.data(), n);
    return Mdp(std::move(transitions), rows_matrix(j.at("c"), m, n, "c"), j.at("gamma").get<double>(),
               std::move(alpha));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed MDP json: ") + e.what());
  }
}

Mdp read_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
  return mdp_from_json(j);
}

void write_mdp(const Mdp& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << mdp_to_json(mdp).dump(2) << '\n';
}

nlohmann::json policy_to_json(const RandomizedPolicy& pi) { return matrix_rows(pi.table()); }

RandomizedPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw DimensionError("policy must be a list of rows");
  return RandomizedPolicy(
      rows_matrix(j, static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()), "policy"));
}

}  // namespace spdalp
