#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskweave/narrate.hpp"
#include "riskweave/tabular.hpp"

namespace riskweave::cycles {

using tabular::Instance;
using tabular::Schema;

/// One attempted treatment cycle (person-period format).
struct CycleRecord {
  Instance features;
  std::size_t cycle = 1;  // 1-based
  bool outcome = false;   // success in this cycle
};

/// Patient-level history: cycles attempted, and whether the last one succeeded.
/// success == false means censored after `cycles` failed attempts.
struct PatientHistory {
  Instance features;
  std::size_t cycles = 1;
  bool success = false;
};

/// One record per attempted cycle: failures for 1..cycles-1, then the final outcome.
std::vector<CycleRecord> expand_person_period(std::span<const PatientHistory> patients);

/// Design-matrix encoding: categorical features one-hot with the first level
/// dropped, numeric features standardized with training mean and stddev.
class Encoding {
 public:
  struct Column {
    std::size_t feature = 0;
    std::optional<std::size_t> level;  // indicator column for this level; empty for numeric
    double mean = 0.0;
    double sd = 1.0;
  };

  Encoding() = default;
  static Encoding fit(const Schema& schema, std::span<const Instance> instances);
  /// Rebuilds a stored encoding; throws InvalidModel if the columns do not
  /// match the layout fit() would produce for this schema.
  static Encoding restore(const Schema& schema, std::vector<Column> columns);

  std::vector<double> encode(const Instance& instance) const;
  Instance decode(std::span<const double> encoded) const;

  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::size_t width() const noexcept { return columns_.size(); }
  const Schema& schema() const noexcept { return schema_; }
  std::string column_name(std::size_t c) const;

 private:
  Schema schema_;
  std::vector<Column> columns_;
};

struct FitOptions {
  std::size_t max_cycles = 6;
  double lambda = 1e-4;
  double tol = 1e-6;
  std::size_t max_iter = 10000;
};

struct FitReport {
  std::size_t iterations = 0;
  double log_likelihood = 0.0;  // penalized objective at the solution
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step
};

struct CycleModel {
  Schema schema;
  Encoding encoding;
  std::vector<double> weights;     // one per encoded column
  std::vector<double> intercepts;  // alpha_1 .. alpha_T
  FitOptions options;
  FitReport report;

  std::size_t max_cycles() const noexcept { return intercepts.size(); }

  /// Coefficients on the unstandardized scale: numeric columns per raw unit,
  /// intercepts absorbing the centering.
  struct Raw {
    std::vector<double> weights;
    std::vector<double> intercepts;
  };
  Raw raw_coefficients() const;
};

double logistic(double z);
/// alpha_t + w . encode(features). Throws CycleOutOfRange unless 1 <= t <= T.
double linear_predictor(const CycleModel& model, const Instance& features, std::size_t t);

/// Penalized Bernoulli log-likelihood over encoded records,
///   sum [y log p + (1 - y) log(1 - p)] - lambda * |w|^2,
/// with parameters laid out as [alpha_1 .. alpha_T, w_1 .. w_d].
class Objective {
 public:
  Objective(std::vector<std::vector<double>> design, std::vector<std::size_t> cycles, std::vector<bool> outcomes,
            std::size_t max_cycles, double lambda);

  std::size_t dimension() const noexcept { return max_cycles_ + width_; }
  double value(std::span<const double> params) const;
  double value_and_gradient(std::span<const double> params, std::vector<double>& gradient) const;
  /// value(to) - value(from), summed record by record so that changes far
  /// below the rounding error of value() itself are still resolved.
  double increase(std::span<const double> from, std::span<const double> to) const;

 private:
  double evaluate(std::span<const double> params, std::vector<double>* gradient) const;

  std::vector<std::vector<double>> design_;
  std::vector<std::size_t> cycles_;
  std::vector<bool> outcomes_;
  std::size_t max_cycles_;
  std::size_t width_;
  double lambda_;
};

/// Gradient ascent with backtracking (Armijo) line search from zero.
/// Throws NoData, CycleOutOfRange, or NotConverged.
CycleModel fit(const Schema& schema, std::span<const CycleRecord> records, const FitOptions& options = {});

struct CumulativeCurve {
  std::vector<double> conditional;  // p_t
  std::vector<double> cumulative;   // C_t = 1 - prod_{s<=t} (1 - p_s)
};

CumulativeCurve curve_from_conditional(std::span<const double> conditional);
CumulativeCurve predict_curve(const CycleModel& model, const Instance& features, std::size_t n_cycles);

/// Harrell's C over comparable pairs, scored by first-cycle success
/// probability; tied scores count one half. Throws NoComparablePairs.
double concordance_index(const CycleModel& model, std::span<const PatientHistory> held_out);

/// Percentage and natural-frequency sentence for C_t; "combined" phrasing when t > 1.
std::string narrate_curve(const CumulativeCurve& curve, std::size_t t, const narrate::Templates& templates);

/// cycle,conditional_p,cumulative_p
std::string curve_to_csv(const CumulativeCurve& curve);
nlohmann::json curve_to_json(const CumulativeCurve& curve);

inline constexpr int kCycleModelVersion = 1;
nlohmann::json model_to_json(const CycleModel& model);
CycleModel model_from_json(const nlohmann::json& j);

/// Patient CSV: schema feature columns, a "cycles" column, and the target
/// column (positive class = success in the last attempted cycle).
std::vector<PatientHistory> parse_patients_csv(std::string_view text, const Schema& schema);
std::string patients_to_csv(const Schema& schema, std::span<const PatientHistory> patients);

// ---------------------------------------------------------------------------
// Synthetic IVF cohort from a known model.

struct IvfTruth {
  std::vector<double> raw_weights;  // per column of the reference encoding, raw units
  std::vector<double> intercepts;   // raw-scale alpha_t
  double dropout = 0.1;             // chance of stopping after a failed cycle
};

/// Weights follow the column layout of ivf_schema() under Encoding.
IvfTruth default_ivf_truth();
std::vector<PatientHistory> synthesize_ivf(std::uint64_t seed, std::size_t n_patients,
                                           const IvfTruth& truth = default_ivf_truth());

}  // namespace riskweave::cycles
