#include "spdalp/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "spdalp/errors.hpp"
#include "spdalp/format.hpp"

namespace spdalp {

AggregationMatrix build_q(Eigen::Index n, Eigen::Index m) {
  if (n < 1 || m < 1) throw DimensionError("build_q needs n, m >= 1");
  Matrix q = Matrix::Zero(n * m, n);
  for (Eigen::Index s = 0; s < n; ++s) q.block(s * m, s, m, 1).setOnes();
  return {std::move(q)};
}

FeatureMatrix build_features_exact(const Mdp& mdp, std::span<const RandomizedPolicy> base) {
  if (base.empty()) throw DimensionError("need at least one base policy");
  FeatureMatrix fm;
  fm.actions = mdp.actions();
  fm.psi.resize(mdp.pairs(), static_cast<Eigen::Index>(base.size()));
  for (std::size_t i = 0; i < base.size(); ++i) {
    fm.psi.col(static_cast<Eigen::Index>(i)) = occupation_measure(mdp, base[i]).xi;
  }
  fm.base.assign(base.begin(), base.end());
  return fm;
}

FeatureMatrix build_features_empirical(const TransitionSampler& env, std::span<const RandomizedPolicy> base,
                                       std::int64_t horizon, std::uint64_t seed) {
  if (base.empty()) throw DimensionError("need at least one base policy");
  if (horizon < 1) throw DomainError("horizon must be at least 1");
  const Eigen::Index n = env.states(), m = env.actions();
  Rng rng(seed);
  FeatureMatrix fm;
  fm.actions = m;
  fm.psi = Matrix::Zero(n * m, static_cast<Eigen::Index>(base.size()));
  for (std::size_t i = 0; i < base.size(); ++i) {
    const RandomizedPolicy& pi = base[i];
    if (pi.states() != n || pi.actions() != m) throw DimensionError("base policy shape does not match sampler");
    std::vector<Categorical> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) rows.push_back(Categorical::from(pi.table().row(s)));

    std::vector<std::int64_t> counts(static_cast<std::size_t>(n * m), 0);
    Eigen::Index s = env.initial_state(rng);
    for (std::int64_t k = 0; k < horizon; ++k) {
      const Eigen::Index a = rows[static_cast<std::size_t>(s)].draw(rng);
      ++counts[static_cast<std::size_t>(flat_index(s, a, m))];
      s = env.next_state(s, a, rng);
    }
    for (std::size_t r = 0; r < counts.size(); ++r) {
      fm.psi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          static_cast<double>(counts[r]) / static_cast<double>(horizon);
    }
  }
  fm.base.assign(base.begin(), base.end());
  return fm;
}

Matrix stationarity_residual(const FeatureMatrix& fm, const Mdp& mdp) {
  if (fm.pairs() != mdp.pairs()) throw DimensionError("feature rows do not match the MDP");
  const Matrix flow = mdp.gamma() * mdp.stacked_transitions() - build_q(mdp.states(), mdp.actions()).q;
  Matrix r = fm.psi.transpose() * flow;
  if (mdp.discounted()) r.rowwise() += (1.0 - mdp.gamma()) * mdp.alpha().transpose();
  return r;
}

FeatureValidation validate_features(const FeatureMatrix& fm, const Mdp& mdp, FeatureTolerance tolerance) {
  FeatureValidation v;
  v.tolerance = tolerance;
  v.normalization_residual = (fm.psi.colwise().sum().array() - 1.0).abs().maxCoeff();
  v.stationarity_residual = stationarity_residual(fm, mdp).cwiseAbs().maxCoeff();
  return v;
}

RandomizedPolicy mixture_policy(std::span<const RandomizedPolicy> base, const Vector& omega) {
  if (base.empty() || static_cast<Eigen::Index>(base.size()) != omega.size()) {
    throw DimensionError("one weight per base policy is required");
  }
  if ((omega.array() < 0.0).any() || std::abs(omega.sum() - 1.0) > 1e-10) {
    throw DomainError("mixture weights must be a probability vector");
  }
  const Vector w = omega / omega.sum();
  Matrix table = Matrix::Zero(base.front().states(), base.front().actions());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].states() != table.rows() || base[i].actions() != table.cols()) {
      throw DimensionError("base policies have different shapes");
    }
    table += w(static_cast<Eigen::Index>(i)) * base[i].table();
  }
  return RandomizedPolicy(std::move(table));
}

void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < fm.dims(); ++i) out << (i ? "," : "") << "psi_" << i + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < fm.pairs(); ++r) {
    for (Eigen::Index i = 0; i < fm.dims(); ++i) out << (i ? "," : "") << format_double(fm.psi(r, i));
    out << '\n';
  }
}

FeatureMatrix read_features_csv(const std::filesystem::path& path, Eigen::Index actions) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path.string() + ": empty feature file");
  const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(parse_double(cell));
      ++cols;
    }
    if (cols != d) throw DimensionError(path.string() + ": ragged feature row " + std::to_string(rows + 1));
    ++rows;
  }
  if (actions < 1 || rows % actions != 0) throw DimensionError("feature rows are not a multiple of m");
  FeatureMatrix fm;
  fm.actions = actions;
  fm.psi = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(),
                                                                                                     rows, d);
  return fm;
}

}  // namespace spdalp
