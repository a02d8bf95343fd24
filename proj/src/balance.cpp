#include "metaboost/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "metaboost/copula.hpp"
#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"
#include "metaboost/neighbors.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ros: return "ROS";
    case Method::smote: return "SMOTE";
    case Method::adasyn: return "ADASYN";
    case Method::generative: return "GENERATIVE";
    case Method::hybrid: return "HYBRID";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  const auto t = csv::trim(name);
  if (csv::iequals(t, "ROS")) return Method::ros;
  if (csv::iequals(t, "SMOTE")) return Method::smote;
  if (csv::iequals(t, "ADASYN")) return Method::adasyn;
  if (csv::iequals(t, "GENERATIVE") || csv::iequals(t, "CTGAN")) return Method::generative;
  throw ConfigError("unknown balancing method \"" + std::string(t) + "\"");
}

HybridWeights::HybridWeights(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw BalanceError("hybrid weights are empty");
  double sum = 0.0;
  for (double w : values_) {
    if (!(w >= 0.0 && w <= 1.0)) throw BalanceError("hybrid weight outside [0,1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw BalanceError("hybrid weights must sum to 1");
}

ClassCounts class_counts(const Dataset& train) {
  const std::size_t pos = train.count(1);
  const std::size_t neg = train.count(0);
  if (pos == 0 || neg == 0) throw BalanceError("training set contains a single class");
  ClassCounts c;
  c.minority_label = pos <= neg ? 1 : 0;
  c.minority = std::min(pos, neg);
  c.majority = std::max(pos, neg);
  return c;
}

namespace {

std::vector<std::size_t> rows_with_label(const Dataset& ds, int label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.y[i] == label) rows.push_back(i);
  return rows;
}

// Minority rows, their standardized copies and each row's k nearest minority neighbours.
struct MinorityNeighbourhood {
  std::vector<std::size_t> rows;
  Standardizer scaling;
  std::vector<std::vector<std::size_t>> neighbours;  // positions within `rows`
};

MinorityNeighbourhood minority_neighbourhood(const Dataset& train, std::size_t k) {
  if (k < 1) throw NeighborError("k must be at least 1");
  const auto counts = class_counts(train);
  MinorityNeighbourhood nb;
  nb.rows = rows_with_label(train, counts.minority_label);
  if (nb.rows.size() <= k)
    throw NeighborError("minority class has " + std::to_string(nb.rows.size()) + " rows; k = " +
                        std::to_string(k) + " needs more than k");
  nb.scaling = Standardizer::fit(train.x);
  const Matrix scaled = nb.scaling.transform(train.x.select_rows(nb.rows));
  nb.neighbours.reserve(nb.rows.size());
  for (std::size_t i = 0; i < nb.rows.size(); ++i) nb.neighbours.push_back(k_nearest(scaled, scaled.row(i), k, i));
  return nb;
}

void interpolate(const Dataset& train, std::size_t a, std::size_t b, double delta, std::span<double> out) {
  auto xa = train.x.row(a);
  auto xb = train.x.row(b);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = xa[c] + delta * (xb[c] - xa[c]);
}

SyntheticPool adasyn_with_total(const Dataset& train, std::size_t total, std::uint64_t seed, std::size_t k) {
  const auto nb = minority_neighbourhood(train, k);
  const auto ratios = adasyn_ratios(train, k);
  const auto alloc = adasyn_allocation(ratios, total);

  SyntheticPool pool;
  pool.method = Method::adasyn;
  pool.seed = seed;
  pool.scaling = nb.scaling;
  if (alloc.uniform_fallback)
    pool.warnings.emplace_back("ADASYN: no minority row has majority neighbours; allocating uniformly");

  const std::size_t n_out = std::accumulate(alloc.counts.begin(), alloc.counts.end(), std::size_t{0});
  pool.samples = Matrix(n_out, train.n_features());
  Rng rng(seed);
  std::size_t out = 0;
  for (std::size_t i = 0; i < nb.rows.size(); ++i) {
    for (std::size_t g = 0; g < alloc.counts[i]; ++g, ++out) {
      const std::size_t nn = nb.rows[nb.neighbours[i][uniform_index(rng, k)]];
      interpolate(train, nb.rows[i], nn, uniform01(rng), pool.samples.row(out));
      pool.lineage.push_back({nb.rows[i], nn});
    }
  }
  return pool;
}

}  // namespace

Dataset random_oversample(const Dataset& train, std::uint64_t seed) {
  const auto counts = class_counts(train);
  const auto minority = rows_with_label(train, counts.minority_label);
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < counts.deficit(); ++i) rows.push_back(minority[uniform_index(rng, minority.size())]);
  return train.subset(rows);
}

SyntheticPool smote(const Dataset& train, std::size_t n_new, std::uint64_t seed, const SmoteOptions& opts) {
  const auto nb = minority_neighbourhood(train, opts.k);
  SyntheticPool pool;
  pool.method = Method::smote;
  pool.seed = seed;
  pool.scaling = nb.scaling;
  pool.samples = Matrix(n_new, train.n_features());
  pool.lineage.reserve(n_new);
  Rng rng(seed);
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t i = uniform_index(rng, nb.rows.size());
    const std::size_t nn = nb.rows[nb.neighbours[i][uniform_index(rng, opts.k)]];
    const double delta = opts.fixed_delta ? *opts.fixed_delta : uniform01(rng);
    interpolate(train, nb.rows[i], nn, delta, pool.samples.row(s));
    pool.lineage.push_back({nb.rows[i], nn});
  }
  return pool;
}

std::vector<double> adasyn_ratios(const Dataset& train, std::size_t k) {
  const auto counts = class_counts(train);
  if (k < 1) throw NeighborError("k must be at least 1");
  if (train.size() <= k) throw NeighborError("training set too small for k = " + std::to_string(k));
  const auto scaling = Standardizer::fit(train.x);
  const Matrix scaled = scaling.transform(train.x);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.y[i] != counts.minority_label) continue;
    std::size_t majority = 0;
    for (auto j : k_nearest(scaled, scaled.row(i), k, i))
      if (train.y[j] != counts.minority_label) ++majority;
    ratios.push_back(static_cast<double>(majority) / static_cast<double>(k));
  }
  return ratios;
}

AdasynAllocation adasyn_allocation(std::span<const double> ratios, std::size_t total) {
  AdasynAllocation alloc;
  alloc.counts.assign(ratios.size(), 0);
  if (ratios.empty()) return alloc;
  const double sum = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  if (sum <= 0.0) {
    alloc.uniform_fallback = true;
    const std::size_t m = ratios.size();
    for (std::size_t i = 0; i < m; ++i) alloc.counts[i] = total / m + (i < total % m ? 1 : 0);
    return alloc;
  }
  for (std::size_t i = 0; i < ratios.size(); ++i)
    alloc.counts[i] = static_cast<std::size_t>(std::llround(ratios[i] / sum * static_cast<double>(total)));
  return alloc;
}

SyntheticPool adasyn(const Dataset& train, std::uint64_t seed, std::size_t k) {
  return adasyn_with_total(train, class_counts(train).deficit(), seed, k);
}

Matrix read_external_samples(const std::filesystem::path& path, const FeatureSchema& schema) {
  auto table = csv::read(path);
  const std::size_t d = schema.size();
  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto c = csv::find_column(table.header, schema.names[j]);
    if (!c) throw SchemaError(path.string() + ": missing feature column \"" + schema.names[j] + "\"");
    cols[j] = *c;
  }
  if (table.header.size() != d)
    throw SchemaError(path.string() + ": expected exactly the " + std::to_string(d) + " feature columns, found " +
                      std::to_string(table.header.size()));
  Matrix out(table.rows.size(), d);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& cell = table.rows[r][cols[j]];
      std::optional<double> v = csv::parse_double(cell);
      if (!v && schema.names[j] == "Sex") {
        if (auto code = schema.sex.encode(cell)) v = *code;
      } else if (!v && schema.names[j] == "Race") {
        if (auto code = schema.race.encode(cell)) v = *code;
      }
      if (!v || !std::isfinite(*v))
        throw SchemaError(path.string() + ": line " + std::to_string(table.lines[r]) + ": column " +
                          schema.names[j] + " has no numeric value");
      out(r, j) = *v;
    }
  }
  return out;
}

SyntheticPool generative_sample(const Dataset& train, const GenerativeSource& source, std::size_t n_new,
                                std::uint64_t seed) {
  const auto counts = class_counts(train);
  SyntheticPool pool;
  pool.method = Method::generative;
  pool.seed = seed;
  pool.scaling = Standardizer::fit(train.x);
  if (source.is_external()) {
    Matrix rows = read_external_samples(source.external, train.schema);
    if (rows.cols() != train.n_features())
      throw SchemaError("external samples have " + std::to_string(rows.cols()) + " columns, training set has " +
                        std::to_string(train.n_features()));
    if (rows.rows() < n_new)
      throw ExhaustionError(source.external.string() + " holds " + std::to_string(rows.rows()) +
                            " rows but " + std::to_string(n_new) + " were requested");
    std::vector<std::size_t> first(n_new);
    std::iota(first.begin(), first.end(), 0);
    pool.samples = rows.select_rows(first);
    return pool;
  }
  const auto minority = rows_with_label(train, counts.minority_label);
  const auto copula = GaussianCopula::fit(train.x.select_rows(minority));
  Rng rng(seed);
  pool.samples = copula.sample(n_new, rng);
  return pool;
}

SyntheticPool hybrid_combine(const std::vector<SyntheticPool>& pools, const HybridWeights& weights,
                             std::size_t n_new, std::uint64_t seed) {
  if (pools.empty()) throw BalanceError("hybrid_combine: no pools");
  if (pools.size() != weights.size())
    throw BalanceError("hybrid_combine: " + std::to_string(pools.size()) + " pools but " +
                       std::to_string(weights.size()) + " weights");
  const std::size_t d = pools.front().samples.cols();
  for (const auto& p : pools) {
    if (p.samples.cols() != d) throw SchemaError("hybrid_combine: pools disagree on feature count");
    if (p.size() == 0) throw BalanceError("hybrid_combine: empty pool for " + std::string(method_name(p.method)));
  }

  std::vector<std::size_t> active;
  for (std::size_t m = 0; m < pools.size(); ++m)
    if (weights[m] > 0.0) active.push_back(m);

  SyntheticPool out;
  out.method = Method::hybrid;
  out.seed = seed;
  const auto& anchor_pool = pools[active.front()];
  out.scaling = anchor_pool.scaling.dims() == d ? anchor_pool.scaling : Standardizer::fit(anchor_pool.samples);
  out.samples = Matrix(n_new, d);
  out.lineage.reserve(n_new);

  if (active.size() == 1) {
    for (std::size_t s = 0; s < n_new; ++s) {
      const std::size_t r = s % anchor_pool.size();
      std::copy_n(anchor_pool.samples.row(r).begin(), d, out.samples.row(s).begin());
      out.lineage.push_back({r});
    }
    return out;
  }

  std::vector<Matrix> scaled;
  for (auto m : active) scaled.push_back(out.scaling.transform(pools[m].samples));

  Rng rng(seed);
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t a = uniform_index(rng, anchor_pool.size());
    std::vector<std::size_t> match{a};
    auto dst = out.samples.row(s);
    for (std::size_t c = 0; c < d; ++c) dst[c] = weights[active[0]] * anchor_pool.samples(a, c);
    for (std::size_t i = 1; i < active.size(); ++i) {
      const std::size_t j = nearest(scaled[i], scaled[0].row(a));
      match.push_back(j);
      const auto& src = pools[active[i]].samples;
      for (std::size_t c = 0; c < d; ++c) dst[c] += weights[active[i]] * src(j, c);
    }
    out.lineage.push_back(std::move(match));
  }
  return out;
}

SyntheticPool generate_pool(const Dataset& train, const BalancerSpec& spec, std::size_t n_new, std::uint64_t seed) {
  switch (spec.method) {
    case Method::smote:
      return smote(train, n_new, seed, SmoteOptions{spec.k, std::nullopt});
    case Method::generative:
      return generative_sample(train, spec.source, n_new, seed);
    case Method::adasyn: {
      auto pool = adasyn_with_total(train, n_new, seed, spec.k);
      if (pool.size() == n_new) return pool;
      // Rounding left the allocation off by a few rows; trim at random or draw
      // extra rows with the ADASYN density.
      Rng rng(derive_seed(seed, {0xADA5}));
      if (pool.size() > n_new) {
        std::vector<std::size_t> keep(pool.size());
        std::iota(keep.begin(), keep.end(), 0);
        shuffle(keep, rng);
        keep.resize(n_new);
        std::sort(keep.begin(), keep.end());
        SyntheticPool trimmed = pool;
        trimmed.samples = pool.samples.select_rows(keep);
        trimmed.lineage.clear();
        for (auto r : keep) trimmed.lineage.push_back(pool.lineage[r]);
        return trimmed;
      }
      const auto nb = minority_neighbourhood(train, spec.k);
      auto ratios = adasyn_ratios(train, spec.k);
      if (std::accumulate(ratios.begin(), ratios.end(), 0.0) <= 0.0) std::fill(ratios.begin(), ratios.end(), 1.0);
      std::vector<double> cumulative(ratios.size());
      std::partial_sum(ratios.begin(), ratios.end(), cumulative.begin());
      std::vector<double> row(train.n_features());
      while (pool.size() < n_new) {
        const double u = uniform01(rng) * cumulative.back();
        const std::size_t i = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        const std::size_t anchor = std::min(i, ratios.size() - 1);
        const std::size_t nn = nb.rows[nb.neighbours[anchor][uniform_index(rng, spec.k)]];
        interpolate(train, nb.rows[anchor], nn, uniform01(rng), row);
        pool.samples.append_row(row);
        pool.lineage.push_back({nb.rows[anchor], nn});
      }
      return pool;
    }
    case Method::ros:
    case Method::hybrid:
      break;
  }
  throw BalanceError(std::string(method_name(spec.method)) + " does not produce a synthetic pool");
}

Dataset top_up(const Dataset& train, const SyntheticPool& pool) {
  if (pool.size() > 0 && pool.samples.cols() != train.n_features())
    throw SchemaError("pool has " + std::to_string(pool.samples.cols()) + " columns, training set has " +
                      std::to_string(train.n_features()));
  const auto counts = class_counts(train);
  Dataset out = train;
  std::vector<double> row(train.n_features());
  for (std::size_t s = 0; s < pool.size(); ++s) {
    auto src = pool.samples.row(s);
    std::copy(src.begin(), src.end(), row.begin());
    train.schema.snap_categoricals(row);
    out.x.append_row(row);
    out.y.push_back(counts.minority_label);
    out.ids.push_back(-static_cast<std::int64_t>(s) - 1);
  }
  return out;
}

Dataset balance_to_parity(const Dataset& train, const BalancerSpec& spec, std::uint64_t seed) {
  if (spec.method == Method::ros) return random_oversample(train, seed);
  const auto counts = class_counts(train);
  if (counts.deficit() == 0) return train;
  return top_up(train, generate_pool(train, spec, counts.deficit(), seed));
}

}  // namespace metaboost
