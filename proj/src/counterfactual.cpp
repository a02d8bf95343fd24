#include "metaboost/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"

namespace metaboost {

CounterfactualExplainer::CounterfactualExplainer(const Model& model, const Dataset& train)
    : model_(model), train_(train), scaling_(Standardizer::fit(train.x)), train_class_(model.predict(train.x)) {}

std::size_t CounterfactualExplainer::nearest_unlike_neighbor(std::span<const double> x) const {
  const int cls = model_.predict(x);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_row = train_.size();
  for (std::size_t r = 0; r < train_.size(); ++r) {
    if (train_class_[r] == cls) continue;
    const double d = scaling_.l1_distance(x, train_.x.row(r));
    if (d < best) {
      best = d;
      best_row = r;
    }
  }
  if (best_row == train_.size())
    throw SearchError("no training instance is predicted as class " + std::to_string(1 - cls));
  return best_row;
}

CfResult CounterfactualExplainer::explain(std::span<const double> x, std::int64_t id, const CfConfig& config) const {
  const std::size_t d = x.size();
  if (d != model_.n_features())
    throw SchemaError("instance has " + std::to_string(d) + " features, model expects " +
                      std::to_string(model_.n_features()));
  CfResult res;
  res.id = id;
  res.original.assign(x.begin(), x.end());
  res.original_class = model_.predict(x);
  res.neighbour_row = nearest_unlike_neighbor(x);
  const auto donor = train_.x.row(res.neighbour_row);

  std::vector<std::size_t> open;
  for (std::size_t f = 0; f < d; ++f)
    if (donor[f] != x[f]) open.push_back(f);

  std::vector<double> current = res.original;
  int current_class = res.original_class;
  std::vector<double> candidate(d);
  // At most one copy per differing feature; copying all of them reproduces
  // the donor, which the model places in the other class.
  while (current_class == res.original_class && !open.empty()) {
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t best_pos = 0;
    int best_class = current_class;
    for (std::size_t pos = 0; pos < open.size(); ++pos) {
      const std::size_t f = open[pos];
      candidate = current;
      candidate[f] = donor[f];
      const int cls = model_.predict(candidate);
      const double score =
          scaling_.l1_distance(res.original, candidate) + (cls != res.original_class ? 0.0 : config.lambda);
      if (score < best_score) {
        best_score = score;
        best_pos = pos;
        best_class = cls;
      }
    }
    current[open[best_pos]] = donor[open[best_pos]];
    current_class = best_class;
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }

  res.counterfactual = std::move(current);
  res.counterfactual_class = current_class;
  res.valid = res.counterfactual_class != res.original_class;
  res.changed.assign(d, false);
  for (std::size_t f = 0; f < d; ++f) {
    res.changed[f] = res.original[f] != res.counterfactual[f];
    res.l0 += res.changed[f] ? 1 : 0;
  }
  res.l1 = scaling_.l1_distance(res.original, res.counterfactual);
  return res;
}

std::size_t nearest_unlike_neighbor(std::span<const double> x, const Dataset& train, const Model& model) {
  return CounterfactualExplainer(model, train).nearest_unlike_neighbor(x);
}

CfResult nice_counterfactual(std::span<const double> x, const Model& model, const Dataset& train, double lambda) {
  return CounterfactualExplainer(model, train).explain(x, 0, CfConfig{lambda});
}

std::vector<CfResult> explain_all(const Model& model, const Dataset& train, const Dataset& targets,
                                  const CfConfig& config, CfPopulation population) {
  CounterfactualExplainer explainer(model, train);
  std::vector<CfResult> out;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    auto row = targets.x.row(r);
    if (population == CfPopulation::correct && model.predict(row) != targets.y[r]) continue;
    out.push_back(explainer.explain(row, targets.ids[r], config));
  }
  return out;
}

CfSummary summarize(std::span<const CfResult> results, std::size_t n_features) {
  if (results.empty()) throw SummaryError("no counterfactuals to summarize");
  if (n_features == 0) throw SummaryError("feature count must be positive");
  CfSummary s;
  s.count = results.size();
  const double n = static_cast<double>(results.size());
  const double d = static_cast<double>(n_features);
  for (const auto& r : results) {
    if (!r.valid) throw SummaryError("counterfactual for id " + std::to_string(r.id) + " is not valid");
    s.avg_norm_distance += r.l1;
    s.avg_sparsity += static_cast<double>(r.l0);
    s.pct_features_changed += static_cast<double>(r.l0) / d;
  }
  s.avg_norm_distance /= n;
  s.avg_sparsity /= n;
  s.pct_features_changed /= n;
  for (const auto& r : results) {
    const double dl1 = r.l1 - s.avg_norm_distance;
    const double dl0 = static_cast<double>(r.l0) - s.avg_sparsity;
    s.std_norm_distance += dl1 * dl1;
    s.std_sparsity += dl0 * dl0;
  }
  s.std_norm_distance = std::sqrt(s.std_norm_distance / n);
  s.std_sparsity = std::sqrt(s.std_sparsity / n);
  return s;
}

FeatureChangeRates feature_change_rates(std::span<const CfResult> results, const std::vector<std::string>& names) {
  if (results.empty()) throw SummaryError("no counterfactuals to rate");
  FeatureChangeRates rates;
  for (std::size_t f = 0; f < names.size(); ++f) {
    std::size_t changed = 0;
    for (const auto& r : results) changed += r.changed.at(f) ? 1 : 0;
    rates.emplace_back(names[f], static_cast<double>(changed) / static_cast<double>(results.size()));
  }
  std::stable_sort(rates.begin(), rates.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return rates;
}

double BoundaryGrid::u_at(std::size_t i) const {
  return u_min + (u_max - u_min) * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

double BoundaryGrid::v_at(std::size_t j) const {
  return v_min + (v_max - v_min) * static_cast<double>(j) / static_cast<double>(resolution - 1);
}

BoundaryGrid boundary_grid(const Dataset& train, std::span<const CfResult> pairs, std::size_t resolution,
                           const ForestParams& forest, std::uint64_t seed) {
  if (resolution < 2) throw DataError("grid resolution must be at least 2");
  BoundaryGrid grid;
  grid.resolution = resolution;
  grid.pca = fit_pca2(train.x);

  Dataset projected;
  projected.x = Matrix(train.size(), 2);
  projected.y = train.y;
  projected.ids = train.ids;
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto p = grid.pca.project(train.x.row(r));
    for (int k = 0; k < 2; ++k) {
      projected.x(r, k) = p[k];
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double span = hi[k] - lo[k];
    const double margin = span > 0.0 ? 0.1 * span : 1.0;
    lo[k] -= margin;
    hi[k] += margin;
  }
  grid.u_min = lo[0];
  grid.u_max = hi[0];
  grid.v_min = lo[1];
  grid.v_max = hi[1];

  Hyperparameters hp;
  hp.forest = forest;
  const Model rf = fit(ModelKind::random_forest, projected, hp, seed);
  grid.cells.resize(resolution * resolution);
  double point[2];
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      point[0] = grid.u_at(i);
      point[1] = grid.v_at(j);
      grid.cells[j * resolution + i] = rf.predict(point);
    }
  }
  for (const auto& cf : pairs) {
    const auto a = grid.pca.project(cf.original);
    const auto b = grid.pca.project(cf.counterfactual);
    grid.pairs.push_back({a[0], a[1], b[0], b[1]});
  }
  return grid;
}

void write_counterfactuals_csv(std::span<const CfResult> results, const FeatureSchema& schema,
                               const std::filesystem::path& path, const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "id";
  for (const auto& n : schema.names) out << ",orig_" << n;
  for (const auto& n : schema.names) out << ",cf_" << n;
  for (const auto& n : schema.names) out << ",changed_" << n;
  out << ",l1,l0,valid\n";
  for (const auto& r : results) {
    out << r.id;
    for (double v : r.original) out << ',' << csv::format_double(v);
    for (double v : r.counterfactual) out << ',' << csv::format_double(v);
    for (bool c : r.changed) out << ',' << (c ? 1 : 0);
    out << ',' << csv::format_double(r.l1) << ',' << r.l0 << ',' << (r.valid ? 1 : 0) << '\n';
  }
}

void write_boundary_csv(const BoundaryGrid& grid, const std::filesystem::path& cells_path,
                        const std::filesystem::path& pairs_path, const std::string& header_comment) {
  {
    std::ofstream out(cells_path, std::ios::binary);
    if (!out) throw Error("cannot write " + cells_path.string());
    if (!header_comment.empty()) out << header_comment << '\n';
    out << "u,v,class\n";
    for (std::size_t j = 0; j < grid.resolution; ++j)
      for (std::size_t i = 0; i < grid.resolution; ++i)
        out << csv::format_double(grid.u_at(i)) << ',' << csv::format_double(grid.v_at(j)) << ','
            << grid.cells[j * grid.resolution + i] << '\n';
  }
  std::ofstream out(pairs_path, std::ios::binary);
  if (!out) throw Error("cannot write " + pairs_path.string());
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "u0,v0,u1,v1\n";
  for (const auto& p : grid.pairs)
    out << csv::format_double(p[0]) << ',' << csv::format_double(p[1]) << ',' << csv::format_double(p[2]) << ','
        << csv::format_double(p[3]) << '\n';
}

}  // namespace metaboost
