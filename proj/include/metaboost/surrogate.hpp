/**
 * @file surrogate.hpp
 * @brief Synthetic stand-in for the NHANES metabolic syndrome table.
 *
 * Produces a raw CSV with the same columns, category spellings and missing
 * cells as the public file, with features that depend on the label. Used by
 * tests, demos and timing checks when the real file is not available.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace metaboost {

struct SurrogateOptions {
  std::size_t rows = 2401;
  std::uint64_t seed = 2024;
  double prevalence = 0.342;
  /// Fraction of missing cells in Income, WaistCirc and BMI respectively.
  double missing_income = 0.05;
  double missing_waist = 0.035;
  double missing_bmi = 0.011;
};

std::string surrogate_csv(const SurrogateOptions& options = {});
void write_surrogate_csv(const std::filesystem::path& path, const SurrogateOptions& options = {});

}  // namespace metaboost
