#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metaboost/ingest.hpp"
#include "metaboost/random.hpp"
#include "metaboost/copula.hpp"
#include "metaboost/surrogate.hpp"

namespace testing {

using metaboost::Dataset;
using metaboost::Matrix;

inline Dataset make_dataset(const Matrix& x, const std::vector<int>& y) {
  Dataset ds;
  ds.x = x;
  ds.y = y;
  for (std::size_t i = 0; i < y.size(); ++i) ds.ids.push_back(static_cast<std::int64_t>(i));
  return ds;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
  Matrix x(0, rows.empty() ? 0 : rows.front().size());
  for (const auto& r : rows) x.append_row(r);
  return make_dataset(x, y);
}

/// Two Gaussian clouds; positives shifted by `shift` along every axis.
inline Dataset blobs(std::size_t n_pos, std::size_t n_neg, std::size_t d, double shift, std::uint64_t seed) {
  metaboost::Rng rng(seed);
  Matrix x(n_pos + n_neg, d);
  std::vector<int> y(n_pos + n_neg, 0);
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    y[i] = i < n_pos ? 1 : 0;
    for (std::size_t c = 0; c < d; ++c)
      x(i, c) = metaboost::standard_normal(rng) * (1.0 + 0.5 * static_cast<double>(c)) + (y[i] ? shift : 0.0);
  }
  return make_dataset(x, y);
}

/// Cleaned surrogate table with the standard schema.
inline Dataset surrogate(std::size_t rows = 2401, std::uint64_t seed = 2024) {
  metaboost::SurrogateOptions o;
  o.rows = rows;
  o.seed = seed;
  auto enc = metaboost::encode_and_clean(metaboost::parse_raw_csv(metaboost::surrogate_csv(o)));
  enc.features = metaboost::impute_mean(enc.features, enc.schema, metaboost::default_imputation_columns());
  return metaboost::to_dataset(enc);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("metaboost_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing
