#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "metaboost/balance.hpp"
#include "metaboost/copula.hpp"
#include "metaboost/error.hpp"
#include "metaboost/neighbors.hpp"
#include "support.hpp"

using namespace metaboost;

namespace {

// Independent standardization: population mean/std per column, zero std kept as 1.
std::vector<std::vector<double>> oracle_standardize(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < n; ++r) mean[c] += x(r, c);
    mean[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) sd[c] += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
    sd[c] = std::sqrt(sd[c] / static_cast<double>(n));
    if (sd[c] == 0.0) sd[c] = 1.0;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) z[r][c] = (x(r, c) - mean[c]) / sd[c];
  return z;
}

// Brute-force ADASYN ratios by full sort of all distances.
std::vector<double> oracle_ratios(const Dataset& ds, std::size_t k, int minority) {
  const auto z = oracle_standardize(ds.x);
  std::vector<double> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] != minority) continue;
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < z[i].size(); ++c) d2 += (z[i][c] - z[j][c]) * (z[i][c] - z[j][c]);
      all.emplace_back(d2, j);
    }
    std::sort(all.begin(), all.end());
    std::size_t maj = 0;
    for (std::size_t t = 0; t < k; ++t) maj += ds.y[all[t].second] != minority ? 1 : 0;
    out.push_back(static_cast<double>(maj) / static_cast<double>(k));
  }
  return out;
}

Dataset imbalanced(std::size_t pos, std::size_t neg, std::size_t d, std::uint64_t seed) {
  return testing::blobs(pos, neg, d, 1.5, seed);
}

}  // namespace

TEST_CASE("random oversampling reaches parity and keeps originals") {
  const auto ds = imbalanced(10, 30, 3, 1);
  const auto out = random_oversample(ds, 7);
  CHECK(out.count(1) == 30);
  CHECK(out.count(0) == 30);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    CHECK(out.ids[r] == ds.ids[r]);
    CHECK(std::equal(out.x.row(r).begin(), out.x.row(r).end(), ds.x.row(r).begin()));
  }
  for (std::size_t r = ds.size(); r < out.size(); ++r) {
    CHECK(out.y[r] == 1);
    CHECK(ds.y[static_cast<std::size_t>(out.ids[r])] == 1);
  }
  CHECK(random_oversample(ds, 7).x == out.x);

  const auto balanced = imbalanced(5, 5, 2, 2);
  CHECK(random_oversample(balanced, 1).x == balanced.x);
  CHECK_THROWS_AS(random_oversample(imbalanced(0, 8, 2, 3), 1), BalanceError);
}

TEST_CASE("SMOTE endpoint and midpoint examples") {
  const auto ds = testing::make_dataset({{0, 0}, {1, 1}, {5, 5}, {6, 5}, {5, 6}}, {1, 1, 0, 0, 0});
  const auto mid = smote(ds, 4, 3, SmoteOptions{1, 0.5});
  for (std::size_t s = 0; s < mid.size(); ++s) {
    CHECK(mid.samples(s, 0) == 0.5);
    CHECK(mid.samples(s, 1) == 0.5);
  }
  const auto zero = smote(ds, 6, 3, SmoteOptions{1, 0.0});
  for (std::size_t s = 0; s < zero.size(); ++s) {
    const auto parent = zero.lineage[s][0];
    CHECK(zero.samples(s, 0) == ds.x(parent, 0));
    CHECK(zero.samples(s, 1) == ds.x(parent, 1));
  }
}

TEST_CASE("SMOTE on collinear points stays on the line") {
  const auto ds = testing::make_dataset({{0, 1}, {1, 3}, {2, 5}, {9, 0}, {8, 0}, {9, 1}, {7, 2}}, {1, 1, 1, 0, 0, 0, 0});
  const auto pool = smote(ds, 200, 5, SmoteOptions{2, std::nullopt});
  CHECK(pool.size() == 200);
  for (std::size_t s = 0; s < pool.size(); ++s) CHECK(std::abs(pool.samples(s, 1) - (2 * pool.samples(s, 0) + 1)) < 1e-12);
}

TEST_CASE("SMOTE segment property on 1000 points") {
  const auto ds = imbalanced(60, 200, 4, 11);
  const auto pool = smote(ds, 1000, 99);
  REQUIRE(pool.size() == 1000);
  double worst = 0.0;
  for (std::size_t s = 0; s < pool.size(); ++s) {
    const auto a = pool.scaling.transform(ds.x.row(pool.lineage[s][0]));
    const auto b = pool.scaling.transform(ds.x.row(pool.lineage[s][1]));
    const auto p = pool.scaling.transform(pool.samples.row(s));
    double ab2 = 0.0, t = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      ab2 += (b[c] - a[c]) * (b[c] - a[c]);
      t += (p[c] - a[c]) * (b[c] - a[c]);
    }
    t = ab2 > 0 ? t / ab2 : 0.0;
    CHECK(t >= -1e-12);
    CHECK(t <= 1 + 1e-12);
    double r2 = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double e = p[c] - (a[c] + t * (b[c] - a[c]));
      r2 += e * e;
    }
    worst = std::max(worst, std::sqrt(r2));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("SMOTE neighbours are the k nearest minority rows") {
  const auto ds = imbalanced(25, 60, 3, 21);
  const auto z = oracle_standardize(ds.x);
  const auto pool = smote(ds, 300, 4);
  for (std::size_t s = 0; s < pool.size(); ++s) {
    const auto parent = pool.lineage[s][0], nn = pool.lineage[s][1];
    CHECK(ds.y[nn] == 1);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == parent || ds.y[j] != 1) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) d2 += (z[parent][c] - z[j][c]) * (z[parent][c] - z[j][c]);
      all.emplace_back(d2, j);
    }
    std::sort(all.begin(), all.end());
    bool found = false;
    for (std::size_t t = 0; t < 5; ++t) found = found || all[t].second == nn;
    CHECK(found);
  }
}

TEST_CASE("SMOTE needs more minority rows than k") {
  const auto ds = imbalanced(5, 20, 2, 3);
  CHECK_THROWS_AS(smote(ds, 10, 1, SmoteOptions{5, std::nullopt}), NeighborError);
  CHECK_NOTHROW(smote(ds, 10, 1, SmoteOptions{4, std::nullopt}));
}

TEST_CASE("ADASYN allocation examples") {
  const std::vector<double> r = {0.8, 0.2};
  const auto a = adasyn_allocation(r, 10);
  CHECK(a.counts == std::vector<std::size_t>{8, 2});
  CHECK(!a.uniform_fallback);

  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  const auto u = adasyn_allocation(zeros, 10);
  CHECK(u.uniform_fallback);
  CHECK(std::accumulate(u.counts.begin(), u.counts.end(), std::size_t{0}) == 10);
}

TEST_CASE("ADASYN ratios match a brute-force k-NN oracle on a 50-point 2-D instance") {
  const auto ds = imbalanced(15, 35, 2, 8);
  REQUIRE(ds.size() == 50);
  const auto ratios = adasyn_ratios(ds, 5);
  const auto expected = oracle_ratios(ds, 5, 1);
  REQUIRE(ratios.size() == expected.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) CHECK(ratios[i] == expected[i]);

  const std::size_t G = 20;
  const auto alloc = adasyn_allocation(ratios, G);
  const double sum = std::accumulate(expected.begin(), expected.end(), 0.0);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(alloc.counts[i] == static_cast<std::size_t>(std::llround(expected[i] / sum * G)));
  const auto total = std::accumulate(alloc.counts.begin(), alloc.counts.end(), std::size_t{0});
  CHECK(total + ratios.size() >= G);
  CHECK(total <= G + ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i)
    for (std::size_t j = 0; j < ratios.size(); ++j)
      if (ratios[i] > ratios[j]) CHECK(alloc.counts[i] >= alloc.counts[j]);

  const auto pool = adasyn(ds, 3);
  CHECK(pool.size() == total);
}

TEST_CASE("ADASYN falls back to uniform allocation with a warning") {
  // Minority far from majority: every minority neighbourhood is pure.
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({100.0 + i * 0.1, 100.0});
    y.push_back(1);
  }
  for (int i = 0; i < 20; ++i) {
    rows.push_back({static_cast<double>(i % 5), static_cast<double>(i / 5)});
    y.push_back(0);
  }
  const auto ds = testing::make_dataset(rows, y);
  const auto pool = adasyn(ds, 5, 3);
  CHECK(pool.size() == 12);
  CHECK(!pool.warnings.empty());
}

TEST_CASE("generate_pool returns exactly the requested count") {
  const auto ds = imbalanced(40, 130, 3, 5);
  for (auto m : {Method::smote, Method::adasyn, Method::generative}) {
    const auto pool = generate_pool(ds, BalancerSpec{m, 5, {}}, 90, 17);
    CHECK(pool.size() == 90);
    for (double v : pool.samples.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("copula sample means lie within 3 standard errors") {
  const auto ds = testing::surrogate(1200, 4);
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.y[i] == 1) minority.push_back(i);
  const Matrix m = ds.x.select_rows(minority);
  const auto pool = generative_sample(ds, {}, 10000, 77);
  REQUIRE(pool.size() == 10000);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    var /= static_cast<double>(m.rows());
    double sample = 0.0;
    for (std::size_t r = 0; r < pool.size(); ++r) sample += pool.samples(r, c);
    sample /= static_cast<double>(pool.size());
    const double se = std::sqrt(var / static_cast<double>(pool.size()));
    CHECK_MESSAGE(std::abs(sample - mean) <= 3 * se + 1e-12, "column " << c);
  }
}

TEST_CASE("copula samples only observed values") {
  const auto ds = imbalanced(30, 60, 2, 6);
  const auto pool = generative_sample(ds, {}, 200, 1);
  for (std::size_t r = 0; r < pool.size(); ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      bool seen = false;
      for (std::size_t i = 0; i < ds.size(); ++i) seen = seen || (ds.y[i] == 1 && ds.x(i, c) == pool.samples(r, c));
      CHECK(seen);
    }
}

TEST_CASE("external generative source") {
  testing::TempDir dir;
  auto ds = testing::surrogate(200, 8);
  const auto deficit = class_counts(ds).deficit();
  std::string text = "BMI,Age,Sex,Income,Race,WaistCirc,Albuminuria,UrAlbCr,UricAcid,BloodGlucose,HDL,Triglycerides\n";
  for (std::size_t i = 0; i < deficit; ++i)
    text += std::to_string(30 + i) + "," + std::to_string(40 + i) + ",Female,1000,Asian,90,0,5,5,110,40,160\n";
  testing::write_file(dir / "ext.csv", text);
  const auto pool = generative_sample(ds, GenerativeSource{dir / "ext.csv"}, deficit, 1);
  REQUIRE(pool.size() == deficit);
  const auto& s = ds.schema;
  CHECK(pool.samples(3, *s.index_of("BMI")) == 33.0);
  CHECK(pool.samples(3, *s.index_of("Age")) == 43.0);
  CHECK(pool.samples(0, *s.index_of("Sex")) == 1.0);
  CHECK(pool.samples(0, *s.index_of("Race")) == 1.0);
  CHECK_THROWS_AS(generative_sample(ds, GenerativeSource{dir / "ext.csv"}, deficit + 1, 1), ExhaustionError);

  testing::write_file(dir / "bad.csv", "BMI,Age\n1,2\n");
  CHECK_THROWS_AS(generative_sample(ds, GenerativeSource{dir / "bad.csv"}, 1, 1), SchemaError);
}

TEST_CASE("hybrid combine examples") {
  auto pool_of = [](std::vector<std::vector<double>> rows, Method m) {
    SyntheticPool p;
    p.method = m;
    p.samples = Matrix(0, rows.front().size());
    for (auto& r : rows) p.samples.append_row(r);
    p.scaling = Standardizer::fit(p.samples);
    return p;
  };
  const auto a = pool_of({{0, 0}}, Method::smote), b = pool_of({{1, 1}}, Method::adasyn);
  const auto out = hybrid_combine({a, b}, HybridWeights({0.4, 0.6}), 3, 1);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(out.samples(r, 0) == doctest::Approx(0.6));
    CHECK(out.samples(r, 1) == doctest::Approx(0.6));
  }
  const auto c = pool_of({{2, -4}}, Method::generative);
  const auto three = hybrid_combine({a, b, c}, HybridWeights({0.05, 0.55, 0.40}), 1, 1);
  CHECK(three.samples(0, 0) == doctest::Approx(0.05 * 0 + 0.55 * 1 + 0.40 * 2));
  CHECK(three.samples(0, 1) == doctest::Approx(0.05 * 0 + 0.55 * 1 + 0.40 * -4));

  const auto bad = pool_of({{1, 1, 1}}, Method::adasyn);
  CHECK_THROWS_AS(hybrid_combine({a, bad}, HybridWeights({0.5, 0.5}), 1, 1), SchemaError);
  CHECK_THROWS_AS(HybridWeights({0.5, 0.6}), BalanceError);
  CHECK_THROWS_AS(HybridWeights({1.2, -0.2}), BalanceError);
}

TEST_CASE("hybrid output lies in the box of its matched tuple") {
  const auto ds = imbalanced(40, 120, 3, 13);
  const auto deficit = class_counts(ds).deficit();
  std::vector<SyntheticPool> pools;
  for (auto m : {Method::smote, Method::generative, Method::adasyn})
    pools.push_back(generate_pool(ds, BalancerSpec{m, 5, {}}, deficit, 3 + static_cast<int>(m)));
  const auto out = hybrid_combine(pools, HybridWeights({0.05, 0.55, 0.40}), deficit, 9);
  REQUIRE(out.size() == deficit);
  for (std::size_t r = 0; r < out.size(); ++r) {
    REQUIRE(out.lineage[r].size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t p = 0; p < 3; ++p) {
        const double v = pools[p].samples(out.lineage[r][p], c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(out.samples(r, c) >= lo - 1e-12);
      CHECK(out.samples(r, c) <= hi + 1e-12);
    }
  }
}

TEST_CASE("degenerate weight reproduces the pure pool byte for byte") {
  const auto ds = imbalanced(40, 100, 3, 14);
  const auto deficit = class_counts(ds).deficit();
  const auto sm = generate_pool(ds, BalancerSpec{Method::smote, 5, {}}, deficit, 5);
  const auto ad = generate_pool(ds, BalancerSpec{Method::adasyn, 5, {}}, deficit, 6);
  const auto first = hybrid_combine({sm, ad}, HybridWeights({1.0, 0.0}), deficit, 123);
  CHECK(first.samples == sm.samples);
  const auto second = hybrid_combine({sm, ad}, HybridWeights({0.0, 1.0}), deficit, 123);
  CHECK(second.samples == ad.samples);
}

TEST_CASE("every balancer reaches exact parity") {
  auto ds = testing::surrogate(500, 10);
  for (auto m : {Method::ros, Method::smote, Method::adasyn, Method::generative}) {
    const auto out = balance_to_parity(ds, BalancerSpec{m, 5, {}}, 42);
    CHECK_MESSAGE(out.count(0) == out.count(1), std::string(method_name(m)));
    out.validate();
  }
  const auto deficit = class_counts(ds).deficit();
  std::vector<SyntheticPool> pools;
  for (auto m : {Method::smote, Method::adasyn}) pools.push_back(generate_pool(ds, BalancerSpec{m, 5, {}}, deficit, 1));
  const auto hybrid = top_up(ds, hybrid_combine(pools, HybridWeights({0.3, 0.7}), deficit, 2));
  CHECK(hybrid.count(0) == hybrid.count(1));
}

TEST_CASE("top-up snaps categorical columns to valid codes") {
  auto ds = testing::surrogate(400, 12);
  const auto out = balance_to_parity(ds, BalancerSpec{Method::smote, 5, {}}, 3);
  const auto& s = ds.schema;
  for (std::size_t r = ds.size(); r < out.size(); ++r) {
    CHECK(out.ids[r] < 0);
    for (const char* name : {"Sex", "Race", "Albuminuria"}) {
      const auto c = *s.index_of(name);
      const auto& codes = s.valid_codes[c];
      CHECK(std::find(codes.begin(), codes.end(), out.x(r, c)) != codes.end());
    }
  }
}

TEST_CASE("balancers are deterministic for a fixed seed") {
  const auto ds = imbalanced(30, 90, 3, 15);
  for (auto m : {Method::ros, Method::smote, Method::adasyn, Method::generative}) {
    const auto a = balance_to_parity(ds, BalancerSpec{m, 5, {}}, 8);
    const auto b = balance_to_parity(ds, BalancerSpec{m, 5, {}}, 8);
    CHECK(a.x == b.x);
  }
}

TEST_CASE("nearest neighbour ties go to the lowest index") {
  Matrix pts(0, 1);
  for (double v : {1.0, -1.0, 1.0, 3.0}) pts.append_row(std::vector<double>{v});
  const std::vector<double> q = {0.0};
  CHECK(nearest(pts, q) == 0);
  CHECK(k_nearest(pts, q, 2) == std::vector<std::size_t>{0, 1});
  CHECK(k_nearest(pts, q, 2, 0) == std::vector<std::size_t>{1, 2});
}
