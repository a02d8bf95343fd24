#include "metaboost/risk.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"

namespace metaboost {

double RiskFactor::cutoff_for(int sex_code) const {
  if (sex_code == 0 && male_cutoff) return *male_cutoff;
  if (sex_code == 1 && female_cutoff) return *female_cutoff;
  return cutoff;
}

bool RiskFactor::flagged(double value, int sex_code) const {
  const double c = cutoff_for(sex_code);
  return comparator == Comparator::at_least ? value >= c : value < c;
}

ThresholdSpec ThresholdSpec::standard() {
  auto simple = [](std::string name, std::string feature, double cutoff) {
    RiskFactor f;
    f.name = std::move(name);
    f.feature = std::move(feature);
    f.cutoff = cutoff;
    return f;
  };
  auto by_sex = [](std::string name, std::string feature, Comparator cmp, double male, double female) {
    RiskFactor f;
    f.name = std::move(name);
    f.feature = std::move(feature);
    f.comparator = cmp;
    f.cutoff = male;
    f.male_cutoff = male;
    f.female_cutoff = female;
    f.tabulated = false;
    return f;
  };
  ThresholdSpec s;
  s.factors = {
      simple("glucose_risk", "BloodGlucose", 100.0),
      simple("bmi_risk", "BMI", 30.0),
      simple("triglycerides_risk", "Triglycerides", 150.0),
      simple("uralbcr_risk", "UrAlbCr", 30.0),
      simple("albuminuria_risk", "Albuminuria", 1.0),
      by_sex("waist_risk", "WaistCirc", Comparator::at_least, 94.0, 80.0),
      by_sex("hdl_risk", "HDL", Comparator::below, 40.0, 50.0),
      by_sex("age_risk", "Age", Comparator::at_least, 40.0, 51.0),
  };
  return s;
}

ThresholdSpec ThresholdSpec::from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("threshold spec: ") + e.what());
  }
  if (!doc.contains("factors") || !doc["factors"].is_array()) throw ConfigError("threshold spec: missing \"factors\" array");
  ThresholdSpec spec;
  try {
    for (const auto& item : doc["factors"]) {
      RiskFactor f;
      f.name = item.at("name").get<std::string>();
      f.feature = item.at("feature").get<std::string>();
      const auto cmp = item.value("comparator", std::string(">="));
      if (cmp == ">=")
        f.comparator = Comparator::at_least;
      else if (cmp == "<")
        f.comparator = Comparator::below;
      else
        throw ConfigError("threshold spec: factor " + f.name + " has unsupported comparator \"" + cmp + "\"");
      if (item.contains("male")) f.male_cutoff = item["male"].get<double>();
      if (item.contains("female")) f.female_cutoff = item["female"].get<double>();
      if (item.contains("cutoff"))
        f.cutoff = item["cutoff"].get<double>();
      else if (f.male_cutoff)
        f.cutoff = *f.male_cutoff;
      else
        throw ConfigError("threshold spec: factor " + f.name + " has no cutoff");
      f.tabulated = item.value("tabulated", !f.sex_specific());
      spec.factors.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("threshold spec: ") + e.what());
  }
  return spec;
}

ThresholdSpec ThresholdSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open threshold spec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ThresholdSpec::to_json() const {
  nlohmann::ordered_json doc;
  doc["factors"] = nlohmann::ordered_json::array();
  for (const auto& f : factors) {
    nlohmann::ordered_json item;
    item["name"] = f.name;
    item["feature"] = f.feature;
    item["comparator"] = f.comparator == Comparator::at_least ? ">=" : "<";
    item["cutoff"] = f.cutoff;
    if (f.male_cutoff) item["male"] = *f.male_cutoff;
    if (f.female_cutoff) item["female"] = *f.female_cutoff;
    item["tabulated"] = f.tabulated;
    doc["factors"].push_back(std::move(item));
  }
  return doc.dump(2);
}

const RiskFactor& ThresholdSpec::factor(std::string_view name) const {
  for (const auto& f : factors)
    if (f.name == name) return f;
  throw SchemaError("unknown risk factor \"" + std::string(name) + "\"");
}

void ThresholdSpec::validate(const FeatureSchema& schema) const {
  for (const auto& f : factors) {
    if (!schema.index_of(f.feature))
      throw SchemaError("risk factor " + f.name + " references missing feature \"" + f.feature + "\"");
    if (f.sex_specific() && !schema.index_of("Sex"))
      throw SchemaError("risk factor " + f.name + " has sex-specific cutoffs but the schema has no Sex feature");
  }
}

const std::vector<bool>& RiskFlags::of(std::string_view factor) const {
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (factors[i] == factor) return flags[i];
  throw SchemaError("no flags for risk factor \"" + std::string(factor) + "\"");
}

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw RiskError("zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const auto g = std::gcd(n < 0 ? -n : n, d);
  num = g ? n / g : 0;
  den = g ? d / g : 1;
}

Rational Rational::operator*(const Rational& o) const {
  // Cross-reduce first to keep the products small.
  const auto g1 = std::gcd(num, o.den);
  const auto g2 = std::gcd(o.num, den);
  const auto a = g1 ? num / g1 : num, d2 = g1 ? o.den / g1 : o.den;
  const auto b = g2 ? o.num / g2 : o.num, d1 = g2 ? den / g2 : den;
  return Rational(a * b, d1 * d2);
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num == 0) throw RiskError("division by zero fraction");
  return *this * Rational(o.den, o.num);
}

const FactorReport& ProbReport::factor(std::string_view name) const {
  for (const auto& f : factors)
    if (f.name == name) return f;
  throw SchemaError("unknown risk factor \"" + std::string(name) + "\"");
}

double compute_prior(const Dataset& ds) {
  if (ds.size() == 0) throw RiskError("prior of an empty dataset is undefined");
  return Rational(static_cast<std::int64_t>(ds.count(1)), static_cast<std::int64_t>(ds.size())).value();
}

RiskFlags flag_rows(const Dataset& ds, const ThresholdSpec& spec) {
  spec.validate(ds.schema);
  const auto sex_col = ds.schema.index_of("Sex");
  RiskFlags out;
  for (const auto& f : spec.factors) {
    const std::size_t col = ds.schema.require(f.feature);
    std::vector<bool> flags(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
      const int sex = sex_col ? static_cast<int>(ds.x(r, *sex_col)) : -1;
      flags[r] = f.flagged(ds.x(r, col), sex);
    }
    out.factors.push_back(f.name);
    out.flags.push_back(std::move(flags));
  }
  return out;
}

namespace {

FactorReport count_factor(const Dataset& ds, const std::vector<bool>& flags) {
  FactorReport rep;
  rep.total = ds.size();
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const bool pos = ds.y[r] == 1;
    rep.positives += pos;
    rep.flagged += flags[r];
    rep.flagged_positive += pos && flags[r];
  }
  return rep;
}

Rational frac(std::size_t a, std::size_t b) { return Rational(static_cast<std::int64_t>(a), static_cast<std::int64_t>(b)); }

void fill_ratios(FactorReport& rep, const std::string& name) {
  if (rep.total == 0) throw RiskError("risk factor " + name + ": empty dataset");
  if (rep.positives == 0) throw RiskError("risk factor " + name + ": no positive rows, likelihood undefined");
  if (rep.flagged == 0) throw RiskError("risk factor " + name + ": flagged on no rows, posterior undefined");
  const Rational prior = frac(rep.positives, rep.total);
  rep.likelihood = frac(rep.flagged_positive, rep.positives);
  rep.evidence = frac(rep.flagged, rep.total);
  rep.posterior = rep.likelihood * prior / rep.evidence;
  if (!(rep.posterior == frac(rep.flagged_positive, rep.flagged)))
    throw std::logic_error("Bayes identity failed for " + name);
}

}  // namespace

double compute_likelihood(const Dataset& ds, const RiskFlags& flags, std::string_view factor) {
  auto rep = count_factor(ds, flags.of(factor));
  if (rep.positives == 0) throw RiskError("risk factor " + std::string(factor) + ": no positive rows");
  return frac(rep.flagged_positive, rep.positives).value();
}

double compute_posterior(const Dataset& ds, const RiskFlags& flags, std::string_view factor) {
  auto rep = count_factor(ds, flags.of(factor));
  fill_ratios(rep, std::string(factor));
  return rep.posterior.value();
}

ProbReport risk_report(const Dataset& ds, const ThresholdSpec& spec) {
  if (ds.size() == 0) throw RiskError("risk report on an empty dataset");
  const auto flags = flag_rows(ds, spec);
  ProbReport rep;
  rep.total = ds.size();
  rep.positives = ds.count(1);
  rep.prior = frac(rep.positives, rep.total);
  rep.spec = spec;
  for (std::size_t i = 0; i < spec.factors.size(); ++i) {
    auto f = count_factor(ds, flags.flags[i]);
    f.name = spec.factors[i].name;
    f.feature = spec.factors[i].feature;
    f.tabulated = spec.factors[i].tabulated;
    fill_ratios(f, f.name);
    rep.factors.push_back(std::move(f));
  }
  return rep;
}

void write_risk_csv(const ProbReport& report, const std::filesystem::path& path, const std::string& header_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "factor,feature,tabulated,likelihood,evidence,posterior,prior,total,positives,flagged,flagged_positive\n";
  for (const auto& f : report.factors) {
    out << f.name << ',' << f.feature << ',' << (f.tabulated ? 1 : 0) << ',' << csv::format_double(f.likelihood.value())
        << ',' << csv::format_double(f.evidence.value()) << ',' << csv::format_double(f.posterior.value()) << ','
        << csv::format_double(report.prior.value()) << ',' << f.total << ',' << f.positives << ',' << f.flagged << ','
        << f.flagged_positive << '\n';
  }
}

std::string format_risk_text(const ProbReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "Prior probability: " << std::setprecision(3) << report.prior.value() << " (" << report.positives << " of "
     << report.total << " rows)\n\n";
  auto section = [&](bool tabulated, const char* title) {
    os << title << '\n';
    os << "  " << std::left << std::setw(22) << "factor" << std::right << std::setw(12) << "likelihood"
       << std::setw(11) << "evidence" << std::setw(11) << "posterior" << std::setw(10) << "flagged" << '\n';
    os << std::setprecision(1);
    for (const auto& f : report.factors) {
      if (f.tabulated != tabulated) continue;
      os << "  " << std::left << std::setw(22) << f.name << std::right << std::setw(11)
         << 100.0 * f.likelihood.value() << '%' << std::setw(10) << 100.0 * f.evidence.value() << '%'
         << std::setw(10) << 100.0 * f.posterior.value() << '%' << std::setw(10) << f.flagged << '\n';
    }
    os << '\n';
  };
  section(true, "Risk factors");
  section(false, "Additional factors");
  os << "Cutoffs:\n";
  for (const auto& f : report.spec.factors) {
    os << "  " << f.name << ": " << f.feature << (f.comparator == Comparator::at_least ? " >= " : " < ");
    if (f.sex_specific())
      os << csv::format_double(f.cutoff_for(0)) << " (male) / " << csv::format_double(f.cutoff_for(1)) << " (female)";
    else
      os << csv::format_double(f.cutoff);
    os << '\n';
  }
  return os.str();
}

}  // namespace metaboost
