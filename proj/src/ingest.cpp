#include "metaboost/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

namespace {

std::string describe_line(std::size_t line) { return "line " + std::to_string(line); }

}  // namespace

std::optional<std::size_t> RawTable::column_index(std::string_view name) const {
  return csv::find_column(columns, name);
}

const std::optional<std::string>& RawTable::at(std::size_t r, std::string_view name) const {
  auto c = column_index(name);
  if (!c) throw SchemaError("missing required column \"" + std::string(name) + "\"");
  return rows[r][*c];
}

CategoryMap::CategoryMap(std::vector<std::pair<std::string, int>> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      if (csv::iequals(entries_[i].first, entries_[j].first) || entries_[i].second == entries_[j].second)
        throw SchemaError("category map is not bijective at \"" + entries_[j].first + "\"");
}

std::optional<int> CategoryMap::encode(std::string_view label) const {
  const auto t = csv::trim(label);
  for (const auto& [name, code] : entries_)
    if (csv::iequals(name, t)) return code;
  return std::nullopt;
}

std::optional<std::string> CategoryMap::decode(int code) const {
  for (const auto& [name, c] : entries_)
    if (c == code) return name;
  return std::nullopt;
}

FeatureSchema FeatureSchema::standard() {
  FeatureSchema s;
  s.sex = CategoryMap({{"Male", 0}, {"Female", 1}});
  s.race = CategoryMap({{"White", 0}, {"Asian", 1}, {"Black", 2}, {"MexAmerican", 3}, {"Hispanic", 4}, {"Other", 5}});
  using K = FeatureKind;
  const std::vector<std::pair<std::string, K>> layout = {
      {"Age", K::numeric},        {"Sex", K::categorical},        {"Income", K::numeric},
      {"Race", K::categorical},   {"WaistCirc", K::numeric},      {"BMI", K::numeric},
      {"Albuminuria", K::categorical}, {"UrAlbCr", K::numeric},   {"UricAcid", K::numeric},
      {"BloodGlucose", K::numeric},    {"HDL", K::numeric},       {"Triglycerides", K::numeric},
  };
  for (const auto& [name, kind] : layout) {
    s.names.push_back(name);
    s.kinds.push_back(kind);
    if (name == "Sex")
      s.valid_codes.push_back({0, 1});
    else if (name == "Race")
      s.valid_codes.push_back({0, 1, 2, 3, 4, 5});
    else if (name == "Albuminuria")
      s.valid_codes.push_back({0, 1, 2});
    else
      s.valid_codes.emplace_back();
  }
  return s;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  return csv::find_column(names, name);
}

std::size_t FeatureSchema::require(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw SchemaError("feature \"" + std::string(name) + "\" is not in the schema");
  return *i;
}

void FeatureSchema::snap_categoricals(std::span<double> row) const {
  for (std::size_t c = 0; c < row.size() && c < kinds.size(); ++c) {
    if (kinds[c] != FeatureKind::categorical || valid_codes[c].empty()) continue;
    double best = valid_codes[c].front();
    for (double code : valid_codes[c])
      if (std::abs(row[c] - code) < std::abs(row[c] - best)) best = code;
    row[c] = best;
  }
}

bool FeatureSchema::operator==(const FeatureSchema& o) const {
  return names == o.names && kinds == o.kinds && valid_codes == o.valid_codes &&
         sex.entries() == o.sex.entries() && race.entries() == o.race.entries();
}

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.schema = schema;
  out.y.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (auto r : rows) {
    out.y.push_back(y[r]);
    out.ids.push_back(ids[r]);
  }
  return out;
}

void Dataset::validate() const {
  if (x.rows() != y.size() || ids.size() != y.size())
    throw DataError("dataset shape mismatch: " + std::to_string(x.rows()) + " rows, " +
                    std::to_string(y.size()) + " labels, " + std::to_string(ids.size()) + " ids");
  if (!schema.names.empty() && schema.size() != x.cols())
    throw DataError("dataset has " + std::to_string(x.cols()) + " columns but schema names " +
                    std::to_string(schema.size()));
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("non-finite feature value in dataset");
  for (int label : y)
    if (label != 0 && label != 1) throw DataError("label outside {0,1}");
}

std::size_t MaskedMatrix::missing_in_column(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows; ++r)
    if (!(*this)(r, c)) ++n;
  return n;
}

namespace {

RawTable to_raw(csv::Table table, const std::string& origin) {
  RawTable raw;
  raw.columns = std::move(table.header);
  std::vector<std::string_view> required = {kIdColumn, kLabelColumn};
  auto schema = FeatureSchema::standard();
  for (const auto& n : schema.names) required.push_back(n);
  for (auto name : required) {
    if (!csv::find_column(raw.columns, name))
      throw SchemaError(origin + "missing required column \"" + std::string(name) + "\"");
  }
  raw.rows.reserve(table.rows.size());
  for (auto& row : table.rows) {
    std::vector<std::optional<std::string>> cells;
    cells.reserve(row.size());
    for (auto& cell : row) {
      if (csv::trim(cell).empty())
        cells.emplace_back(std::nullopt);
      else
        cells.emplace_back(std::string(csv::trim(cell)));
    }
    raw.rows.push_back(std::move(cells));
  }
  raw.source_lines = std::move(table.lines);
  return raw;
}

}  // namespace

RawTable load_csv(const std::filesystem::path& path) {
  return to_raw(csv::read(path), path.string() + ": ");
}

RawTable parse_raw_csv(std::string_view text) { return to_raw(csv::parse(text), ""); }

EncodedTable encode_and_clean(const RawTable& raw) {
  EncodedTable out;
  out.schema = FeatureSchema::standard();
  const auto& schema = out.schema;
  const std::size_t d = schema.size();

  std::vector<std::size_t> feature_cols(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto c = raw.column_index(schema.names[j]);
    if (!c) throw SchemaError("missing required column \"" + schema.names[j] + "\"");
    feature_cols[j] = *c;
  }
  const auto id_col = raw.column_index(kIdColumn);
  const auto label_col = raw.column_index(kLabelColumn);
  if (!id_col) throw SchemaError("missing required column \"" + std::string(kIdColumn) + "\"");
  if (!label_col) throw SchemaError("missing required column \"" + std::string(kLabelColumn) + "\"");

  auto line_of = [&](std::size_t r) { return r < raw.source_lines.size() ? raw.source_lines[r] : r + 2; };

  std::vector<std::vector<std::optional<double>>> kept;
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const auto& row = raw.rows[r];
    const auto& label_cell = row[*label_col];
    if (!label_cell) {
      out.rejected_lines.push_back(line_of(r));
      continue;
    }
    auto label = csv::parse_double(*label_cell);
    if (!label || (*label != 0.0 && *label != 1.0))
      throw ParseError(describe_line(line_of(r)) + ": label \"" + *label_cell + "\" is not 0 or 1");

    const auto& id_cell = row[*id_col];
    auto id = id_cell ? csv::parse_double(*id_cell) : std::nullopt;
    if (!id || *id != std::floor(*id))
      throw ParseError(describe_line(line_of(r)) + ": invalid " + std::string(kIdColumn) + " value");

    std::vector<std::optional<double>> values(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& cell = row[feature_cols[j]];
      if (!cell) continue;
      const auto& name = schema.names[j];
      if (name == "Sex" || name == "Race") {
        const auto& map = name == "Sex" ? schema.sex : schema.race;
        auto code = map.encode(*cell);
        if (!code)
          throw EncodingError(describe_line(line_of(r)) + ": unknown category \"" + *cell +
                              "\" in column " + name);
        values[j] = *code;
      } else {
        auto v = csv::parse_double(*cell);
        if (!v || !std::isfinite(*v))
          throw ParseError(describe_line(line_of(r)) + ": column " + name + " value \"" + *cell +
                           "\" is not numeric");
        values[j] = *v;
      }
    }
    kept.push_back(std::move(values));
    out.labels.push_back(static_cast<int>(*label));
    out.ids.push_back(static_cast<std::int64_t>(*id));
  }

  out.features = MaskedMatrix(kept.size(), d);
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) out.features(r, j) = kept[r][j];
  return out;
}

std::vector<std::string> default_imputation_columns() { return {"Income", "WaistCirc", "BMI"}; }

MaskedMatrix impute_mean(const MaskedMatrix& m, const FeatureSchema& schema,
                         const std::vector<std::string>& columns) {
  MaskedMatrix out = m;
  for (const auto& name : columns) {
    const std::size_t c = schema.require(name);
    if (schema.kinds[c] != FeatureKind::numeric)
      throw ImputationError("column " + name + " is not numeric");
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (const auto& v = m(r, c)) {
        sum += *v;
        ++present;
      }
    }
    if (present == 0 && m.rows > 0) throw ImputationError("column " + name + " is entirely missing");
    const double mean = present ? sum / static_cast<double>(present) : 0.0;
    for (std::size_t r = 0; r < m.rows; ++r)
      if (!out(r, c)) out(r, c) = mean;
  }
  return out;
}

Dataset to_dataset(const EncodedTable& table) {
  Dataset ds;
  ds.schema = table.schema;
  ds.y = table.labels;
  ds.ids = table.ids;
  const auto& f = table.features;
  ds.x = Matrix(f.rows, f.cols);
  for (std::size_t c = 0; c < f.cols; ++c) {
    if (auto miss = f.missing_in_column(c))
      throw ImputationError("column " + table.schema.names[c] + " still has " + std::to_string(miss) +
                            " missing values");
  }
  for (std::size_t r = 0; r < f.rows; ++r)
    for (std::size_t c = 0; c < f.cols; ++c) ds.x(r, c) = *f(r, c);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const std::vector<std::string>& impute_columns) {
  auto encoded = encode_and_clean(load_csv(path));
  encoded.features = impute_mean(encoded.features, encoded.schema, impute_columns);
  return to_dataset(encoded);
}

std::size_t test_rows_per_class(std::size_t n, double test_fraction) {
  return static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) / 2.0 + 1e-9));
}

TrainTestSplit split_balanced(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw SplitError("test fraction must lie in (0,1)");
  const std::size_t per_class = test_rows_per_class(ds.size(), test_fraction);
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.y[i]].push_back(i);
  for (int label = 0; label < 2; ++label) {
    if (by_class[label].size() < per_class)
      throw SplitError("class " + std::to_string(label) + " has " + std::to_string(by_class[label].size()) +
                       " rows but the balanced test set requires " + std::to_string(per_class) + " per class");
  }
  Rng rng(seed);
  std::vector<char> in_test(ds.size(), 0);
  for (auto& rows : by_class) {
    shuffle(rows, rng);
    for (std::size_t i = 0; i < per_class; ++i) in_test[rows[i]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < ds.size(); ++i) (in_test[i] ? test_rows : train_rows).push_back(i);
  TrainTestSplit split;
  split.train = ds.subset(train_rows);
  split.test = ds.subset(test_rows);
  split.seed = seed;
  split.test_fraction = test_fraction;
  return split;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (!header_comment.empty()) out << header_comment << '\n';
  out << kIdColumn;
  for (const auto& n : ds.schema.names) out << ',' << n;
  out << ',' << kLabelColumn << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.ids[r];
    for (double v : ds.x.row(r)) out << ',' << csv::format_double(v);
    out << ',' << ds.y[r] << '\n';
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  auto table = csv::read(path);
  Dataset ds;
  ds.schema = FeatureSchema::standard();
  const std::size_t d = ds.schema.size();
  if (table.header.size() != d + 2)
    throw SchemaError(path.string() + ": expected " + std::to_string(d + 2) + " columns");
  for (std::size_t j = 0; j < d; ++j)
    if (!csv::iequals(csv::trim(table.header[j + 1]), ds.schema.names[j]))
      throw SchemaError(path.string() + ": column " + std::to_string(j + 1) + " should be " + ds.schema.names[j]);
  ds.x = Matrix(table.rows.size(), d);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto id = csv::parse_double(row[0]);
    auto label = csv::parse_double(row[d + 1]);
    if (!id || !label) throw ParseError(path.string() + ": " + describe_line(table.lines[r]) + ": bad id or label");
    ds.ids.push_back(static_cast<std::int64_t>(*id));
    ds.y.push_back(static_cast<int>(*label));
    for (std::size_t j = 0; j < d; ++j) {
      auto v = csv::parse_double(row[j + 1]);
      if (!v) throw ParseError(path.string() + ": " + describe_line(table.lines[r]) + ": missing value");
      ds.x(r, j) = *v;
    }
  }
  ds.validate();
  return ds;
}

}  // namespace metaboost
