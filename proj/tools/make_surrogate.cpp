// Writes an NHANES-shaped synthetic metabolic syndrome table.

#include <iostream>

#include "CLI11.hpp"
#include "metaboost/error.hpp"
#include "metaboost/surrogate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"make_surrogate: synthetic stand-in for the NHANES MetS table"};
  metaboost::SurrogateOptions opts;
  std::string out;
  app.add_option("--rows", opts.rows, "Number of rows")->capture_default_str();
  app.add_option("--seed", opts.seed, "Random seed")->capture_default_str();
  app.add_option("--prevalence", opts.prevalence, "Share of positive labels")->capture_default_str();
  app.add_option("--out", out, "Output CSV (stdout if omitted)");
  CLI11_PARSE(app, argc, argv);
  try {
    if (out.empty())
      std::cout << metaboost::surrogate_csv(opts);
    else
      metaboost::write_surrogate_csv(out, opts);
  } catch (const metaboost::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
