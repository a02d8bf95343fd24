#include "metaboost/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "metaboost/copula.hpp"
#include "metaboost/csv.hpp"
#include "metaboost/error.hpp"
#include "metaboost/random.hpp"

namespace metaboost {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

std::size_t pick(Rng& rng, std::initializer_list<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  std::size_t i = 0;
  for (double w : weights) {
    if (u < w) return i;
    u -= w;
    ++i;
  }
  return weights.size() - 1;
}

}  // namespace

std::string surrogate_csv(const SurrogateOptions& o) {
  if (!(o.prevalence > 0.0 && o.prevalence < 1.0)) throw DataError("surrogate prevalence must lie in (0, 1)");
  Rng rng(o.seed);
  const std::size_t n_pos = static_cast<std::size_t>(std::llround(o.prevalence * static_cast<double>(o.rows)));
  std::vector<int> labels(o.rows, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(n_pos, o.rows)), 1);
  shuffle(labels, rng);

  static const char* kRace[] = {"White", "Asian", "Black", "MexAmerican", "Hispanic", "Other"};
  static const char* kMarital[] = {"Married", "Single", "Divorced", "Widowed", "Separated"};
  auto fmt = [](double v) { return csv::format_double(v); };

  std::ostringstream out;
  out << "seqn,Age,Sex,Marital,Income,Race,WaistCirc,BMI,Albuminuria,UrAlbCr,UricAcid,BloodGlucose,HDL,"
         "Triglycerides,MetabolicSyndrome\n";
  for (std::size_t i = 0; i < o.rows; ++i) {
    const int y = labels[i];
    const bool female = uniform01(rng) < 0.51;
    // Shared adiposity factor drives waist, BMI, triglycerides and HDL together.
    const double fat = standard_normal(rng) + (y ? 1.0 : -0.35);
    const double age = clamp(std::round(47.0 + 16.0 * standard_normal(rng) + (y ? 8.0 : 0.0)), 20.0, 80.0);
    const double income = round_to(clamp(std::exp(8.0 + 0.7 * standard_normal(rng)), 300.0, 9000.0), 0) ;
    const std::size_t race = pick(rng, {0.36, 0.13, 0.22, 0.14, 0.10, 0.05});
    const std::size_t marital = pick(rng, {0.52, 0.24, 0.12, 0.07, 0.05});
    const double waist =
        round_to(clamp(98.0 + 11.0 * fat + (female ? -6.0 : 0.0) + 5.0 * standard_normal(rng), 60.0, 170.0), 1);
    const double bmi = round_to(clamp(28.5 + 4.5 * fat + 2.5 * standard_normal(rng), 15.0, 65.0), 2);
    const std::size_t alb = y ? pick(rng, {0.84, 0.13, 0.03}) : pick(rng, {0.93, 0.06, 0.01});
    const double uacr = round_to(alb == 0 ? std::exp(2.0 + 0.7 * standard_normal(rng)) * (y ? 1.1 : 0.9)
                                          : 30.0 + std::exp(3.6 + 1.0 * standard_normal(rng)),
                                 2);
    const double uric = round_to(clamp(5.4 + (y ? 0.7 : 0.0) + (female ? -0.8 : 0.0) + 1.3 * standard_normal(rng),
                                       1.5, 12.0),
                                 1);
    const double glucose =
        std::round(clamp(y ? 119.0 + 20.0 * standard_normal(rng) : 96.0 + 9.0 * standard_normal(rng), 60.0, 380.0));
    const double hdl = std::round(
        clamp(55.0 - 5.0 * fat + (female ? 8.0 : 0.0) + (y ? -7.0 : 2.0) + 11.0 * standard_normal(rng), 15.0, 150.0));
    const double trig = std::round(
        clamp(std::exp(4.6 + 0.28 * fat + (y ? 0.3 : 0.0) + 0.4 * standard_normal(rng)), 25.0, 1500.0));

    out << 62161 + 2 * i << ',' << fmt(age) << ',' << (female ? "Female" : "Male") << ',';
    if (uniform01(rng) >= 0.09) out << kMarital[marital];
    out << ',';
    if (uniform01(rng) >= o.missing_income) out << fmt(income);
    out << ',' << kRace[race] << ',';
    if (uniform01(rng) >= o.missing_waist) out << fmt(waist);
    out << ',';
    if (uniform01(rng) >= o.missing_bmi) out << fmt(bmi);
    out << ',' << alb << ',' << fmt(uacr) << ',' << fmt(uric) << ',' << fmt(glucose) << ',' << fmt(hdl) << ','
        << fmt(trig) << ',' << y << '\n';
  }
  return out.str();
}

void write_surrogate_csv(const std::filesystem::path& path, const SurrogateOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << surrogate_csv(options);
}

}  // namespace metaboost
