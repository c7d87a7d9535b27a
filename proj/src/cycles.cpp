#include "riskweave/cycles.hpp"

#include <algorithm>
#include <cmath>

#include "riskweave/error.hpp"
#include "riskweave/rng.hpp"
#include "riskweave/verbal.hpp"

namespace riskweave::cycles {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// softplus(z + delta) - softplus(z) without cancellation.
double softplus_step(double z, double delta) {
  if (z >= 0.0) return delta + std::log1p(logistic(-z) * std::expm1(-delta));
  return std::log1p(logistic(z) * std::expm1(delta));
}

void check_cycle(std::size_t t, std::size_t max_cycles) {
  if (t < 1 || t > max_cycles)
    throw Error("CycleOutOfRange", "cycle " + std::to_string(t) + " outside 1.." + std::to_string(max_cycles),
                {{"cycle", t}, {"max_cycles", max_cycles}});
}

}  // namespace

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<CycleRecord> expand_person_period(std::span<const PatientHistory> patients) {
  std::vector<CycleRecord> out;
  for (const auto& p : patients) {
    if (p.cycles < 1) throw Error("InvalidArgument", "a patient history needs at least one cycle");
    for (std::size_t t = 1; t <= p.cycles; ++t) out.push_back({p.features, t, t == p.cycles && p.success});
  }
  return out;
}

// --- encoding -----------------------------------------------------------------

Encoding Encoding::fit(const Schema& schema, std::span<const Instance> instances) {
  Encoding e;
  e.schema_ = schema;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema.feature(f);
    if (spec.is_categorical()) {
      for (std::size_t l = 1; l < spec.levels.size(); ++l) e.columns_.push_back({f, l, 0.0, 1.0});
      continue;
    }
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (const auto& x : instances) {  // Welford
      ++n;
      const double d = x.at(f) - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (x.at(f) - mean);
    }
    double sd = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 0.0)) sd = 1.0;
    e.columns_.push_back({f, std::nullopt, mean, sd});
  }
  return e;
}

Encoding Encoding::restore(const Schema& schema, std::vector<Column> columns) {
  std::vector<Instance> none;
  Encoding e = fit(schema, none);
  if (columns.size() != e.columns_.size()) throw Error("InvalidModel", "encoding does not cover the schema");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const Column& want = e.columns_[c];
    const Column& got = columns[c];
    if (got.feature != want.feature || got.level != want.level)
      throw Error("InvalidModel", "encoding column " + std::to_string(c) + " does not match the schema layout");
    if (!got.level && !(got.sd > 0.0 && std::isfinite(got.sd) && std::isfinite(got.mean)))
      throw Error("InvalidModel", "invalid standardization constants");
  }
  e.columns_ = std::move(columns);
  return e;
}

std::vector<double> Encoding::encode(const Instance& instance) const {
  tabular::check_instance(schema_, instance);
  std::vector<double> out(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    const double v = instance[col.feature];
    out[c] = col.level ? (v == static_cast<double>(*col.level) ? 1.0 : 0.0) : (v - col.mean) / col.sd;
  }
  return out;
}

Instance Encoding::decode(std::span<const double> encoded) const {
  if (encoded.size() != columns_.size()) throw Error("SchemaMismatch", "encoded vector has the wrong width");
  Instance out(schema_.size(), 0.0);  // categorical default: the dropped first level
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    if (col.level) {
      if (encoded[c] == 1.0) out[col.feature] = static_cast<double>(*col.level);
    } else {
      out[col.feature] = encoded[c] * col.sd + col.mean;
    }
  }
  return out;
}

std::string Encoding::column_name(std::size_t c) const {
  const Column& col = columns_.at(c);
  const auto& f = schema_.feature(col.feature);
  return col.level ? f.name + "=" + f.levels.at(*col.level) : f.name;
}

CycleModel::Raw CycleModel::raw_coefficients() const {
  Raw raw{weights, intercepts};
  double shift = 0.0;
  for (std::size_t c = 0; c < encoding.width(); ++c) {
    const auto& col = encoding.columns()[c];
    if (col.level) continue;
    raw.weights[c] = weights[c] / col.sd;
    shift += weights[c] * col.mean / col.sd;
  }
  for (auto& a : raw.intercepts) a -= shift;
  return raw;
}

double linear_predictor(const CycleModel& model, const Instance& features, std::size_t t) {
  check_cycle(t, model.max_cycles());
  const auto x = model.encoding.encode(features);
  double z = model.intercepts[t - 1];
  for (std::size_t c = 0; c < x.size(); ++c) z += model.weights[c] * x[c];
  return z;
}

// --- objective ------------------------------------------------------------------

Objective::Objective(std::vector<std::vector<double>> design, std::vector<std::size_t> cycles,
                     std::vector<bool> outcomes, std::size_t max_cycles, double lambda)
    : design_(std::move(design)),
      cycles_(std::move(cycles)),
      outcomes_(std::move(outcomes)),
      max_cycles_(max_cycles),
      width_(design_.empty() ? 0 : design_.front().size()),
      lambda_(lambda) {
  if (design_.size() != cycles_.size() || design_.size() != outcomes_.size())
    throw Error("InvalidArgument", "design, cycles and outcomes differ in length");
  for (std::size_t i = 0; i < design_.size(); ++i) {
    if (design_[i].size() != width_) throw Error("InvalidArgument", "ragged design matrix");
    check_cycle(cycles_[i], max_cycles_);
  }
}

double Objective::value(std::span<const double> params) const { return evaluate(params, nullptr); }

double Objective::value_and_gradient(std::span<const double> params, std::vector<double>& gradient) const {
  return evaluate(params, &gradient);
}

double Objective::evaluate(std::span<const double> params, std::vector<double>* gradient) const {
  if (params.size() != dimension()) throw Error("InvalidArgument", "parameter vector has the wrong size");
  if (gradient) gradient->assign(dimension(), 0.0);
  const auto w = params.subspan(max_cycles_);
  double ll = 0.0;
  for (std::size_t i = 0; i < design_.size(); ++i) {
    const auto& x = design_[i];
    double z = params[cycles_[i] - 1];
    for (std::size_t c = 0; c < width_; ++c) z += w[c] * x[c];
    const double y = outcomes_[i] ? 1.0 : 0.0;
    ll += y * z - softplus(z);
    if (gradient) {
      const double r = y - logistic(z);
      (*gradient)[cycles_[i] - 1] += r;
      for (std::size_t c = 0; c < width_; ++c) (*gradient)[max_cycles_ + c] += r * x[c];
    }
  }
  double penalty = 0.0;
  for (std::size_t c = 0; c < width_; ++c) {
    penalty += w[c] * w[c];
    if (gradient) (*gradient)[max_cycles_ + c] -= 2.0 * lambda_ * w[c];
  }
  return ll - lambda_ * penalty;
}

double Objective::increase(std::span<const double> from, std::span<const double> to) const {
  if (from.size() != dimension() || to.size() != dimension())
    throw Error("InvalidArgument", "parameter vector has the wrong size");
  double inc = 0.0;
  for (std::size_t i = 0; i < design_.size(); ++i) {
    const auto& x = design_[i];
    double z = from[cycles_[i] - 1];
    double dz = to[cycles_[i] - 1] - from[cycles_[i] - 1];
    for (std::size_t c = 0; c < width_; ++c) {
      z += from[max_cycles_ + c] * x[c];
      dz += (to[max_cycles_ + c] - from[max_cycles_ + c]) * x[c];
    }
    inc += (outcomes_[i] ? dz : 0.0) - softplus_step(z, dz);
  }
  for (std::size_t c = 0; c < width_; ++c) {
    const double a = from[max_cycles_ + c], b = to[max_cycles_ + c];
    inc -= lambda_ * (b - a) * (b + a);
  }
  return inc;
}

CycleModel fit(const Schema& schema, std::span<const CycleRecord> records, const FitOptions& options) {
  if (records.empty()) throw Error("NoData", "no cycle records");
  if (options.max_cycles < 1) throw Error("InvalidArgument", "max_cycles must be >= 1");
  if (!(options.lambda >= 0.0)) throw Error("InvalidArgument", "lambda must be >= 0");

  std::vector<std::size_t> per_cycle(options.max_cycles, 0);
  std::vector<Instance> instances;
  instances.reserve(records.size());
  for (const auto& r : records) {
    check_cycle(r.cycle, options.max_cycles);
    ++per_cycle[r.cycle - 1];
    instances.push_back(r.features);
  }
  for (std::size_t t = 0; t < options.max_cycles; ++t)
    if (per_cycle[t] == 0)
      throw Error("NoData", "no records for cycle " + std::to_string(t + 1), {{"cycle", t + 1}});

  CycleModel model;
  model.schema = schema;
  model.options = options;
  model.encoding = Encoding::fit(schema, instances);

  std::vector<std::vector<double>> design;
  std::vector<std::size_t> cycles;
  std::vector<bool> outcomes;
  design.reserve(records.size());
  for (const auto& r : records) {
    design.push_back(model.encoding.encode(r.features));
    cycles.push_back(r.cycle);
    outcomes.push_back(r.outcome);
  }
  const std::size_t T = options.max_cycles;
  const std::size_t d = model.encoding.width();

  // Diagonal of the Fisher information at p = 1/2, used to scale the ascent
  // direction per coordinate.
  std::vector<double> scale(T + d, 0.0);
  for (std::size_t t = 0; t < T; ++t) scale[t] = 0.25 * static_cast<double>(per_cycle[t]);
  for (const auto& x : design)
    for (std::size_t c = 0; c < d; ++c) scale[T + c] += 0.25 * x[c] * x[c];
  for (std::size_t c = 0; c < d; ++c) scale[T + c] += 2.0 * options.lambda;
  for (auto& s : scale) s = 1.0 / std::max(s, 1e-12);

  const Objective objective(std::move(design), std::move(cycles), std::move(outcomes), T, options.lambda);
  std::vector<double> theta(T + d, 0.0), grad, candidate(T + d), direction(T + d);
  double f = objective.value_and_gradient(theta, grad);
  FitReport& report = model.report;

  constexpr double kArmijo = 1e-4;
  std::size_t iter = 0;
  for (;; ++iter) {
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::fabs(g));
    if (gmax <= options.tol) {
      report.converged = true;
      break;
    }
    if (iter >= options.max_iter) break;

    double slope = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      direction[k] = scale[k] * grad[k];
      slope += grad[k] * direction[k];
    }
    double step = 1.0;
    double gain = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (std::size_t k = 0; k < theta.size(); ++k) candidate[k] = theta[k] + step * direction[k];
      gain = objective.increase(theta, candidate);
      if (gain >= kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no representable ascent step left
    theta.swap(candidate);
    objective.value_and_gradient(theta, grad);
    f += gain;
    report.history.push_back(f);
  }
  report.iterations = iter;
  report.log_likelihood = f;
  model.intercepts.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(T));
  model.weights.assign(theta.begin() + static_cast<std::ptrdiff_t>(T), theta.end());
  if (!report.converged)
    throw Error("NotConverged", "gradient ascent stopped after " + std::to_string(iter) + " iterations",
                {{"iterations", iter}});
  return model;
}

// --- curves -----------------------------------------------------------------------

CumulativeCurve curve_from_conditional(std::span<const double> conditional) {
  CumulativeCurve c;
  c.conditional.assign(conditional.begin(), conditional.end());
  double survive = 1.0;
  for (double p : conditional) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("InvalidArgument", "per-cycle probability outside [0, 1]");
    survive *= 1.0 - p;
    c.cumulative.push_back(1.0 - survive);
  }
  return c;
}

CumulativeCurve predict_curve(const CycleModel& model, const Instance& features, std::size_t n_cycles) {
  check_cycle(n_cycles, model.max_cycles());
  std::vector<double> p;
  for (std::size_t t = 1; t <= n_cycles; ++t) p.push_back(logistic(linear_predictor(model, features, t)));
  return curve_from_conditional(p);
}

double concordance_index(const CycleModel& model, std::span<const PatientHistory> held_out) {
  std::vector<double> score;
  score.reserve(held_out.size());
  for (const auto& h : held_out) score.push_back(logistic(linear_predictor(model, h.features, 1)));

  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    if (!held_out[i].success) continue;
    for (std::size_t j = 0; j < held_out.size(); ++j) {
      if (i == j) continue;
      // j is known to have gone without success past i's success cycle
      const bool later = held_out[j].cycles > held_out[i].cycles ||
                         (held_out[j].cycles == held_out[i].cycles && !held_out[j].success);
      if (!later) continue;
      ++comparable;
      if (score[i] > score[j]) concordant += 1.0;
      else if (score[i] == score[j]) concordant += 0.5;
    }
  }
  if (comparable == 0) throw Error("NoComparablePairs", "no comparable pairs in held-out data");
  return concordant / static_cast<double>(comparable);
}

std::string narrate_curve(const CumulativeCurve& curve, std::size_t t, const narrate::Templates& templates) {
  check_cycle(t, curve.cumulative.size());
  const double c = curve.cumulative[t - 1];
  std::map<std::string, std::string> slots = {
      {"percentage", verbal::format_probability(c, verbal::Percentage{})},
      {"frequency", verbal::format_probability(c, verbal::NaturalFrequency{100})},
  };
  if (t == 1) return templates.render("curve_single", slots);
  slots["cycles"] = std::to_string(t);
  return templates.render("curve_cumulative", slots);
}

std::string curve_to_csv(const CumulativeCurve& curve) {
  std::string out = "cycle,conditional_p,cumulative_p\n";
  for (std::size_t t = 0; t < curve.cumulative.size(); ++t)
    out += std::to_string(t + 1) + "," + tabular::format_number(curve.conditional[t]) + "," +
           tabular::format_number(curve.cumulative[t]) + "\n";
  return out;
}

nlohmann::json curve_to_json(const CumulativeCurve& curve) {
  return {{"conditional", curve.conditional}, {"cumulative", curve.cumulative}};
}

// --- serialization ------------------------------------------------------------------

nlohmann::json model_to_json(const CycleModel& model) {
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& col : model.encoding.columns()) {
    const auto& f = model.schema.feature(col.feature);
    if (col.level) columns.push_back({{"feature", f.name}, {"kind", "indicator"}, {"level", f.levels.at(*col.level)}});
    else columns.push_back({{"feature", f.name}, {"kind", "numeric"}, {"mean", col.mean}, {"sd", col.sd}});
  }
  return {{"format", "riskweave.cycle_model"},
          {"version", kCycleModelVersion},
          {"schema", tabular::schema_to_json(model.schema)},
          {"max_cycles", model.max_cycles()},
          {"intercepts", model.intercepts},
          {"weights", model.weights},
          {"encoding", {{"columns", std::move(columns)}}},
          {"fit",
           {{"lambda", model.options.lambda},
            {"tol", model.options.tol},
            {"max_iter", model.options.max_iter},
            {"iterations", model.report.iterations},
            {"log_likelihood", model.report.log_likelihood},
            {"converged", model.report.converged}}}};
}

CycleModel model_from_json(const nlohmann::json& j) {
  const auto bad = [](const std::string& detail) { return Error("InvalidModel", detail); };
  try {
    if (j.value("format", "") != "riskweave.cycle_model") throw bad("not a riskweave.cycle_model document");
    if (j.at("version").get<int>() != kCycleModelVersion)
      throw Error("UnsupportedVersion", "cycle model version " + j.at("version").dump());
    CycleModel m;
    m.schema = tabular::schema_from_json(j.at("schema"));
    m.intercepts = j.at("intercepts").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    if (m.intercepts.empty() || m.intercepts.size() != j.at("max_cycles").get<std::size_t>())
      throw bad("intercept count differs from max_cycles");

    std::vector<Encoding::Column> cols;
    for (const auto& jc : j.at("encoding").at("columns")) {
      const auto idx = m.schema.feature_index(jc.at("feature").get<std::string>());
      if (!idx) throw bad("encoding column on unknown feature");
      Encoding::Column col{*idx, std::nullopt, 0.0, 1.0};
      if (jc.at("kind").get<std::string>() == "indicator") {
        const auto level = m.schema.feature(*idx).level_index(jc.at("level").get<std::string>());
        if (!level) throw bad("indicator for an undeclared level");
        col.level = *level;
      } else {
        col.mean = jc.at("mean").get<double>();
        col.sd = jc.at("sd").get<double>();
      }
      cols.push_back(col);
    }
    m.encoding = Encoding::restore(m.schema, std::move(cols));
    if (m.weights.size() != m.encoding.width()) throw bad("weight count differs from the encoding width");
    for (double w : m.weights)
      if (!std::isfinite(w)) throw bad("non-finite weight");

    const auto& jf = j.at("fit");
    m.options.max_cycles = m.intercepts.size();
    m.options.lambda = jf.at("lambda").get<double>();
    m.options.tol = jf.at("tol").get<double>();
    m.options.max_iter = jf.at("max_iter").get<std::size_t>();
    m.report.iterations = jf.at("iterations").get<std::size_t>();
    m.report.log_likelihood = jf.at("log_likelihood").get<double>();
    m.report.converged = jf.at("converged").get<bool>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed cycle model JSON: ") + e.what());
  }
}

// --- patient CSV ------------------------------------------------------------------------

std::vector<PatientHistory> parse_patients_csv(std::string_view text, const Schema& schema) {
  auto table = tabular::read_csv_table(text);
  const auto it = std::find(table.header.begin(), table.header.end(), "cycles");
  if (it == table.header.end()) throw Error("MissingColumn", "column 'cycles' is missing", {{"column", "cycles"}});
  const auto cycles_col = static_cast<std::size_t>(it - table.header.begin());

  std::vector<std::size_t> cycle_counts;
  std::string rest = [&] {
    std::string out;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == cycles_col) continue;
      out += (out.empty() ? "" : ",") + table.header[c];
    }
    return out + "\n";
  }();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto n = tabular::parse_number(row[cycles_col]);
    if (!n || *n < 1.0 || std::floor(*n) != *n)
      throw Error("ValueOutOfDomain", "cycles must be a positive integer",
                  {{"row", r + 1}, {"column", "cycles"}, {"value", row[cycles_col]}});
    cycle_counts.push_back(static_cast<std::size_t>(*n));
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == cycles_col) continue;
      line += (line.empty() ? "" : ",") + row[c];
    }
    rest += line + "\n";
  }
  const auto ds = tabular::parse_csv(rest, schema);
  std::vector<PatientHistory> out;
  out.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r)
    out.push_back({ds.rows[r].values, cycle_counts[r], ds.rows[r].label == schema.positive_class()});
  return out;
}

std::string patients_to_csv(const Schema& schema, std::span<const PatientHistory> patients) {
  std::string out;
  for (const auto& f : schema.features()) out += f.name + ",";
  out += "cycles," + schema.target().name + "\n";
  const std::size_t pos = schema.positive_class();
  for (const auto& p : patients) {
    for (std::size_t f = 0; f < schema.size(); ++f) out += schema.format_value(f, p.features.at(f)) + ",";
    out += std::to_string(p.cycles) + "," + schema.class_name(p.success ? pos : 1 - pos) + "\n";
  }
  return out;
}

// --- synthetic cohort ------------------------------------------------------------------

IvfTruth default_ivf_truth() {
  // Columns: Age, Years of infertility, Eggs, Blastocysts, No embryos,
  // Previous pregnancy=Yes, Tubal infertility=Yes, ICSI, Embryos frozen=Yes.
  return {{-0.12, -0.06, 0.06, 0.4, -1.2, 0.5, -0.25, 0.1, 0.45}, {2.5, 2.35, 2.2, 2.05, 1.9, 1.75}, 0.1};
}

std::vector<PatientHistory> synthesize_ivf(std::uint64_t seed, std::size_t n_patients, const IvfTruth& truth) {
  const Schema schema = tabular::ivf_schema();
  std::vector<Instance> none;
  const Encoding reference = Encoding::fit(schema, none);  // mean 0, sd 1: raw numeric columns
  if (truth.raw_weights.size() != reference.width())
    throw Error("InvalidArgument", "truth has " + std::to_string(truth.raw_weights.size()) + " weights, encoding needs " +
                                       std::to_string(reference.width()));
  if (truth.intercepts.empty()) throw Error("InvalidArgument", "truth needs at least one intercept");

  SplitMix64 rng(seed);
  std::vector<PatientHistory> out;
  out.reserve(n_patients);
  for (std::size_t i = 0; i < n_patients; ++i) {
    Instance x(schema.size(), 0.0);
    x[0] = std::round(std::clamp(rng.normal(34.0, 4.5), 20.0, 46.0));
    x[1] = static_cast<double>(rng.below(8));
    x[2] = std::round(std::clamp(rng.normal(10.0, 5.0), 1.0, 30.0));
    x[3] = static_cast<double>(rng.categorical({0.5, 0.35, 0.15}));
    x[4] = rng.bernoulli(0.35) ? 1.0 : 0.0;
    x[5] = rng.bernoulli(0.2) ? 1.0 : 0.0;
    x[6] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    x[7] = rng.bernoulli(0.4) ? 1.0 : 0.0;

    const auto enc = reference.encode(x);
    double base = 0.0;
    for (std::size_t c = 0; c < enc.size(); ++c) base += truth.raw_weights[c] * enc[c];

    PatientHistory h{x, 0, false};
    for (std::size_t t = 1; t <= truth.intercepts.size(); ++t) {
      h.cycles = t;
      if (rng.bernoulli(logistic(truth.intercepts[t - 1] + base))) {
        h.success = true;
        break;
      }
      if (rng.bernoulli(truth.dropout)) break;
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace riskweave::cycles
