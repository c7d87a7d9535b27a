// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oracles/oracles.hpp"
#include "riskweave/api.hpp"
#include "riskweave/cycles.hpp"
#include "riskweave/metrics.hpp"
#include "riskweave/narrate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskweave;

namespace {

// --- tolerances ---------------------------------------------------------------------

constexpr double kChiSquareAbsTol = 1e-8;
constexpr double kChiSquareSeconds = 1.0;
constexpr int kSplitDatasets = 200;
constexpr double kSplitSeconds = 30.0;
constexpr double kChdMinAccuracy = 0.90;
constexpr double kChdSeconds = 10.0;
constexpr double kReliabilityGap = 0.05;
constexpr double kGradientRelTol = 1e-4;
constexpr double kWeightRecoveryTol = 0.1;
constexpr double kMinCIndex = 0.65;
constexpr double kCurveAbsTol = 1e-12;
constexpr double kCurveExampleTol = 4 * std::numeric_limits<double>::epsilon();
constexpr int kCurveParameterizations = 1000;
constexpr int kWhatIfTrees = 100;
constexpr int kWhatIfInstances = 200;
constexpr int kNarrativePredictions = 1000;
constexpr int kServicePredicts = 50;
constexpr int kServiceFeedback = 100;

struct GridPoint {
  double stat;
  int df;
  double q;
};
constexpr GridPoint kGrid[] = {
#include "oracles/chi_square_grid.inc"
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++g_failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

// --- criteria ---------------------------------------------------------------------------

Outcome chi_square() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& g : kGrid) worst = std::max(worst, std::fabs(cart::chi_square_sf(g.stat, g.df) - g.q));
  const double table_005 = cart::chi_square_sf(3.841, 1);
  const double table_001 = cart::chi_square_sf(6.635, 1);
  const double elapsed = seconds_since(t0);
  const bool table_ok = std::round(table_005 * 1000) / 1000 == 0.05 && std::round(table_001 * 1000) / 1000 == 0.01;
  return {worst <= kChiSquareAbsTol && table_ok && elapsed < kChiSquareSeconds,
          std::to_string(std::size(kGrid)) + " grid points, max abs error " + fmt(worst) + "; Q(3.841, 1) = " +
              fmt(table_005) + ", Q(6.635, 1) = " + fmt(table_001) + "; " + fmt(elapsed) + " s"};
}

Outcome best_split() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(20240601);
  int agree = 0, with_split = 0;
  for (int i = 0; i < kSplitDatasets; ++i) {
    const auto schema = oracle::random_schema(rng, 1 + rng.below(5));
    const auto ds = oracle::random_dataset(rng, schema, 2 + rng.below(199));
    cart::TrainParams params;
    params.min_samples_leaf = 1 + rng.below(6);
    params.min_impurity_decrease = rng.bernoulli(0.5) ? 0.0 : 0.005;
    const auto got = cart::best_split(ds.rows, schema, params);
    const auto want = oracle::brute_best_split(ds.rows, schema, params);
    bool same = got.has_value() == want.has_value();
    if (same && got) {
      ++with_split;
      same = got->predicate == want->predicate &&
             std::fabs(got->impurity_decrease - static_cast<double>(want->decrease)) <= 1e-12;
    }
    agree += same;
  }
  const double elapsed = seconds_since(t0);
  return {agree == kSplitDatasets && elapsed < kSplitSeconds,
          std::to_string(agree) + "/" + std::to_string(kSplitDatasets) + " datasets identical (" +
              std::to_string(with_split) + " with a split); " + fmt(elapsed) + " s"};
}

Outcome chd_tree() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = tabular::synthesize_chd_like(1, 2279, 0.05);
  const auto [train, test] = tabular::split(s.data, 0.2, 7);
  const auto tree = cart::train(train);
  const double acc = metrics::accuracy(metrics::evaluate(tree, test));
  const double elapsed = seconds_since(t0);
  std::vector<std::string> used;
  for (auto f : tree.used_features()) used.push_back(tree.schema.feature(f).name);
  std::vector<std::string> missing;
  for (const auto& p : s.planted_features)
    if (std::find(used.begin(), used.end(), p) == used.end()) missing.push_back(p);
  return {test.size() == 456 && acc >= kChdMinAccuracy && missing.empty() && elapsed < kChdSeconds,
          "held out " + std::to_string(test.size()) + ", accuracy " + fmt(acc) + ", internal nodes use {" +
              narrate::join_list(used) + "}, planted features missing: " + std::to_string(missing.size()) + "; " +
              fmt(elapsed) + " s"};
}

Outcome leaf_confidence() {
  using C = std::array<std::size_t, 2>;
  const double a = cart::leaf_confidence(C{14, 5});
  const double b = cart::leaf_confidence(C{140, 50});
  const double c = cart::leaf_confidence(C{1400, 500});
  const double even = cart::leaf_confidence(C{10, 10});
  return {a > b && b > c && even == 1.0,
          "p(14,5) = " + fmt(a) + " > p(140,50) = " + fmt(b) + " > p(1400,500) = " + fmt(c) + ", p(10,10) = " +
              fmt(even)};
}

Outcome reliability() {
  SplitMix64 rng(77);
  std::vector<metrics::ScoredPrediction> scored;
  for (int i = 0; i < 10000; ++i) {
    const double conf = rng.uniform(0.5, 1.0);
    scored.push_back({conf, rng.bernoulli(conf)});
  }
  double worst = 0.0;
  std::size_t non_empty = 0;
  for (const auto& b : metrics::reliability(scored, 10).bins) {
    if (b.count == 0) continue;
    ++non_empty;
    worst = std::max(worst, std::fabs(b.observed_accuracy - b.mean_confidence));
  }
  return {worst <= kReliabilityGap,
          std::to_string(non_empty) + " non-empty bins, max |accuracy - confidence| " + fmt(worst)};
}

cycles::Objective ivf_objective(std::uint64_t seed, std::size_t n) {
  const auto records = cycles::expand_person_period(cycles::synthesize_ivf(seed, n));
  std::vector<tabular::Instance> xs;
  for (const auto& r : records) xs.push_back(r.features);
  const auto enc = cycles::Encoding::fit(tabular::ivf_schema(), xs);
  std::vector<std::vector<double>> design;
  std::vector<std::size_t> cyc;
  std::vector<bool> out;
  for (const auto& r : records) {
    design.push_back(enc.encode(r.features));
    cyc.push_back(r.cycle);
    out.push_back(r.outcome);
  }
  return cycles::Objective(design, cyc, out, 6, 1e-4);
}

Outcome cycles_fit() {
  // Gradient against central differences at 20 random points.
  const auto obj = ivf_objective(11, 2000);
  SplitMix64 rng(12);
  double worst_rel = 0.0;
  for (int point = 0; point < 20; ++point) {
    std::vector<double> theta;
    for (std::size_t k = 0; k < obj.dimension(); ++k) theta.push_back(0.5 * rng.normal());
    std::vector<double> grad;
    obj.value_and_gradient(theta, grad);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-5 * std::max(1.0, std::fabs(theta[k]));
      auto up = theta, down = theta;
      up[k] += h;
      down[k] -= h;
      const double fd = (obj.value(up) - obj.value(down)) / (up[k] - down[k]);
      num += (grad[k] - fd) * (grad[k] - fd);
      den += fd * fd;
    }
    worst_rel = std::max(worst_rel, std::sqrt(num / den));
  }

  // Weight recovery on 20,000 simulated patient records.
  const auto t0 = std::chrono::steady_clock::now();
  const auto patients = cycles::synthesize_ivf(1, 20000);
  const auto records = cycles::expand_person_period(patients);
  const auto model = cycles::fit(tabular::ivf_schema(), records);
  const auto raw = model.raw_coefficients();
  const auto truth = cycles::default_ivf_truth();
  double worst_w = 0.0;
  for (std::size_t c = 0; c < truth.raw_weights.size(); ++c)
    worst_w = std::max(worst_w, std::fabs(raw.weights[c] - truth.raw_weights[c]));
  const double fit_seconds = seconds_since(t0);

  // C index on data generated from the model, 5,000 patients with a held-out fifth.
  api::CyclesTrainRequest req;
  req.csv = cycles::patients_to_csv(tabular::ivf_schema(), cycles::synthesize_ivf(3, 5000));
  const auto trained = api::train_cycles(req);
  const double c = trained.c_index.value_or(0.0);

  return {worst_rel <= kGradientRelTol && worst_w <= kWeightRecoveryTol && c > kMinCIndex,
          "gradient max relative error " + fmt(worst_rel) + " over 20 points; max |w - w*| " + fmt(worst_w) +
              " on 20000 patients (" + std::to_string(records.size()) + " cycle records, " +
              std::to_string(model.report.iterations) + " iterations, " + fmt(fit_seconds) + " s); C index " +
              fmt(c)};
}

Outcome cumulative_curve() {
  SplitMix64 rng(41);
  const auto schema = tabular::ivf_schema();
  std::vector<tabular::Instance> sample;
  for (const auto& p : cycles::synthesize_ivf(2, 200)) sample.push_back(p.features);
  double worst = 0.0;
  bool monotone = true;
  for (int i = 0; i < kCurveParameterizations; ++i) {
    cycles::CycleModel m;
    m.schema = schema;
    m.encoding = cycles::Encoding::fit(schema, sample);
    const std::size_t T = 1 + rng.below(8);
    for (std::size_t t = 0; t < T; ++t) m.intercepts.push_back(rng.normal(0.0, 2.0));
    for (std::size_t c = 0; c < m.encoding.width(); ++c) m.weights.push_back(rng.normal(0.0, 1.0));
    const auto& x = sample[rng.below(sample.size())];
    const auto curve = cycles::predict_curve(m, x, T);
    double survive = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
      survive *= 1.0 - cycles::logistic(cycles::linear_predictor(m, x, t));
      worst = std::max(worst, std::fabs(curve.cumulative[t - 1] - (1.0 - survive)));
      if (t > 1 && curve.cumulative[t - 1] < curve.cumulative[t - 2]) monotone = false;
    }
  }
  const auto ex = cycles::curve_from_conditional(std::vector<double>{0.3, 0.3});
  const bool example = std::fabs(ex.cumulative[0] - 0.3) <= kCurveExampleTol &&
                       std::fabs(ex.cumulative[1] - 0.51) <= kCurveExampleTol;
  return {worst <= kCurveAbsTol && monotone && example,
          std::to_string(kCurveParameterizations) + " parameterizations, max |C_t - (1 - prod(1 - p_s))| " +
              fmt(worst) + ", nondecreasing: " + (monotone ? "yes" : "no") + "; [0.3, 0.3] -> [" +
              tabular::format_number(ex.cumulative[0]) + ", " + tabular::format_number(ex.cumulative[1]) + "]"};
}

Outcome what_if() {
  SplitMix64 rng(606);
  int cases = 0, agree = 0, found = 0;
  for (int t = 0; t < kWhatIfTrees; ++t) {
    const auto schema = oracle::random_schema(rng, 1 + rng.below(4));
    const auto tree = oracle::random_tree(rng, schema, 6);
    std::vector<std::size_t> immutable;
    if (t % 3 == 0) immutable.push_back(rng.below(schema.size()));
    for (int i = 0; i < kWhatIfInstances; ++i) {
      const auto x = oracle::random_instance(rng, schema);
      const std::size_t target = rng.below(2);
      const auto got = narrate::what_if(tree, x, target, narrate::WhatIfOptions{immutable});
      const auto want = oracle::brute_what_if(tree, x, target, immutable);
      ++cases;
      bool same = got.has_value() == want.has_value();
      if (same && got) {
        ++found;
        same = got->leaf == want->leaf && got->changes.size() == want->changes.size();
        for (std::size_t k = 0; same && k < got->changes.size(); ++k)
          same = got->changes[k].feature == want->changes[k].first && got->changes[k].to == want->changes[k].second;
        const auto p = cart::predict(tree, narrate::apply(x, *got));
        same = same && p.leaf == got->leaf && p.label == target;
      }
      agree += same;
    }
  }
  return {agree == cases, std::to_string(agree) + "/" + std::to_string(cases) + " queries match the oracle (" +
                              std::to_string(found) + " with a counterfactual)"};
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

Outcome narrative() {
  SplitMix64 rng(909);
  const auto map = verbal::default_map();
  const auto templates = narrate::Templates::defaults();
  const auto chd = tabular::synthesize_chd_like(5, 2279);
  const auto chd_tree = cart::train(chd.data);
  int ok = 0;
  for (int i = 0; i < kNarrativePredictions; ++i) {
    cart::DecisionTree random;
    const cart::DecisionTree* tree = &chd_tree;
    tabular::Instance x;
    if (i % 2 == 0) {
      x = chd.data.rows[rng.below(chd.data.size())].values;
    } else {
      random = oracle::random_tree(rng, oracle::random_schema(rng, 1 + rng.below(5)), 10);
      tree = &random;
      x = oracle::random_instance(rng, random.schema);
    }
    const auto p = cart::predict(*tree, x);
    const double acc = rng.uniform();
    const auto e = narrate::narrate_prediction(tree->schema, p, acc, map, templates);

    bool good = occurrences(e.text, verbal::verbalize(map, acc, p.confidence_p)) >= 1;
    for (const auto& c : e.condition_text) good = good && occurrences(e.text, c) == 1;
    // Replay the recorded path from the root.
    std::size_t node = 0;
    for (const auto& step : p.path) {
      const auto& n = tree->nodes[node];
      good = good && n.predicate && *n.predicate == step.predicate && step.predicate.holds(x) == step.taken;
      node = step.taken ? n.if_true : n.if_false;
    }
    good = good && node == p.leaf && tree->nodes[node].is_leaf();
    // The narrated conditions single out the predicted leaf.
    for (const auto& c : e.conditions) good = good && c.satisfied_by(x);
    ok += good;
  }
  return {ok == kNarrativePredictions,
          std::to_string(ok) + "/" + std::to_string(kNarrativePredictions) +
              " predictions: each condition once, phrase verbatim, path replays to the leaf"};
}

// --- subprocess helpers ----------------------------------------------------------------

int run_to_file(const std::vector<std::string>& argv, const fs::path& out) {
  const pid_t pid = fork();
  if (pid == 0) {
    const int fd = ::open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) _exit(127);
    dup2(fd, STDOUT_FILENO);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execv(args[0], args.data());
    _exit(127);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string keep_lines(const std::string& text, const std::vector<std::string>& prefixes) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    for (const auto& p : prefixes)
      if (line.starts_with(p)) out += line + "\n";
  return out;
}

struct Server {
  pid_t pid = -1;
  int port = 0;
};

Server start_server(const fs::path& storage) {
  int pipefd[2];
  if (pipe(pipefd) != 0) throw std::runtime_error("pipe failed");
  const pid_t pid = fork();
  if (pid == 0) {
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    const std::string cli = RISKWEAVE_CLI;
    const std::string root = storage.string();
    execl(cli.c_str(), cli.c_str(), "serve", "--port", "0", "--storage-root", root.c_str(), nullptr);
    _exit(127);
  }
  close(pipefd[1]);
  std::string line;
  char ch;
  while (read(pipefd[0], &ch, 1) == 1 && ch != '\n') line += ch;
  close(pipefd[0]);
  const auto colon = line.rfind(':');
  if (colon == std::string::npos) throw std::runtime_error("server did not report a port: '" + line + "'");
  return {pid, std::stoi(line.substr(colon + 1))};
}

void stop_server(const Server& s) {
  kill(s.pid, SIGTERM);
  int status = 0;
  waitpid(s.pid, &status, 0);
}

Outcome service_durability() {
  const fs::path root = fs::temp_directory_path() / ("riskweave-acceptance-" + std::to_string(getpid()));
  fs::remove_all(root);
  const auto chd = tabular::synthesize_chd_like(1, 2279);
  std::vector<std::string> inputs;
  const auto probe = tabular::synthesize_chd_like(99, 100);
  for (int i = 0; i < kServicePredicts; ++i)
    inputs.push_back(json{{"features", tabular::instance_to_json(probe.data.schema, probe.data.rows[i].values)}}.dump());

  const auto predict_all = [&](httplib::Client& cli, const std::string& id) {
    std::vector<std::string> bodies;
    for (const auto& in : inputs) {
      const auto r = cli.Post("/models/" + id + "/predict", in, "application/json");
      bodies.push_back(r && r->status == 200 ? r->body : std::string("<request failed>"));
    }
    return bodies;
  };

  Server s = start_server(root);
  std::string id;
  std::vector<std::string> before;
  {
    httplib::Client cli("127.0.0.1", s.port);
    const json body = {{"csv", tabular::to_csv(chd.data)}, {"schema", tabular::schema_to_json(chd.data.schema)}};
    const auto r = cli.Post("/models", body.dump(), "application/json");
    if (!r || r->status != 201) {
      stop_server(s);
      return {false, "training request failed"};
    }
    id = json::parse(r->body).at("model_id");
    before = predict_all(cli, id);
  }
  stop_server(s);

  s = start_server(root);
  httplib::Client cli("127.0.0.1", s.port);
  const auto after = predict_all(cli, id);
  int equal = 0;
  for (int i = 0; i < kServicePredicts; ++i) equal += before[i] == after[i] && before[i] != "<request failed>";

  std::atomic<int> created{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < kServiceFeedback; ++i)
    threads.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", s.port);
      const json fb = {{"model_id", id},
                       {"comment", "feedback " + std::to_string(i) + " " + std::string(300, 'x')},
                       {"answers", {{"understandability", 1 + i % 5}, {"comprehension", {{"q", i}}}}}};
      const auto r = c.Post("/feedback", fb.dump(), "application/json");
      if (r && r->status == 201) ++created;
      else if (r) std::cerr << "feedback " << i << ": HTTP " << r->status << " " << r->body << "\n";
      else std::cerr << "feedback " << i << ": " << httplib::to_string(r.error()) << "\n";
    });
  for (auto& t : threads) t.join();
  stop_server(s);

  std::ifstream in(root / "feedback.jsonl");
  std::string line;
  std::vector<bool> seen(kServiceFeedback, false);
  int lines = 0, intact = 0;
  while (std::getline(in, line)) {
    ++lines;
    if (!json::accept(line)) continue;
    const auto j = json::parse(line);
    const int q = j.at("answers").at("comprehension").at("q");
    if (j.at("comment") == "feedback " + std::to_string(q) + " " + std::string(300, 'x') && q >= 0 &&
        q < kServiceFeedback && !seen[q]) {
      seen[q] = true;
      ++intact;
    }
  }
  fs::remove_all(root);
  return {equal == kServicePredicts && created == kServiceFeedback && lines == kServiceFeedback &&
              intact == kServiceFeedback,
          std::to_string(equal) + "/" + std::to_string(kServicePredicts) +
              " predict responses byte-equal across a restart; " + std::to_string(created.load()) +
              " feedback posts accepted, " + std::to_string(intact) + "/" + std::to_string(lines) +
              " log lines intact and distinct"};
}

Outcome cli_golden() {
  const std::string cli = RISKWEAVE_CLI;
  const fs::path data = RISKWEAVE_DATA_DIR;
  const fs::path golden = RISKWEAVE_GOLDEN_DIR;
  const fs::path work = fs::temp_directory_path() / ("riskweave-golden-" + std::to_string(getpid()));
  const std::vector<std::string> names = {"train.txt",          "predict.txt",     "predict.json",   "explain.txt",
                                          "explain_global.txt", "reliability.csv", "cycles_fit.txt", "cycles_predict.txt"};
  std::vector<std::map<std::string, std::string>> passes;
  for (const std::string pass : {"a", "b"}) {
    const fs::path dir = work / pass;
    fs::create_directories(dir);
    const auto csv = (dir / "chd.csv").string();
    const auto model = (dir / "model.json").string();
    const auto ivf = (dir / "ivf.csv").string();
    const auto cycles_model = (dir / "cycles.json").string();
    const auto patient = (data / "examples" / "chd_patient.json").string();
    int rc = run_to_file({cli, "synth", "--kind", "chd", "--seed", "1", "--n", "2279", "--noise", "0.05"}, csv);
    rc |= run_to_file({cli, "train", "--data", csv, "--schema", (data / "chd_schema.txt").string(), "--out", model,
                       "--seed", "7"},
                      dir / "train.txt");
    rc |= run_to_file({cli, "predict", "--model", model, "--input", patient}, dir / "predict.txt");
    rc |= run_to_file({cli, "--json", "predict", "--model", model, "--input", patient}, dir / "predict.json");
    rc |= run_to_file({cli, "explain", "--model", model, "--input", patient}, dir / "explain.txt");
    rc |= run_to_file({cli, "explain", "--model", model, "--global"}, dir / "explain_global.txt");
    rc |= run_to_file({cli, "reliability", "--model", model, "--data", csv, "--bins", "10"}, dir / "reliability.csv");
    rc |= run_to_file({cli, "synth", "--kind", "ivf", "--seed", "1", "--n", "3000"}, ivf);
    rc |= run_to_file({cli, "cycles-fit", "--data", ivf, "--out", cycles_model}, dir / "cycles_fit.txt");
    rc |= run_to_file({cli, "cycles-predict", "--model", cycles_model, "--input",
                       (data / "examples" / "ivf_patient.json").string(), "--cycles", "3"},
                      dir / "cycles_predict.txt");
    if (rc != 0) return {false, "a CLI command failed"};
    std::map<std::string, std::string> out;
    for (const auto& n : names) out[n] = slurp(dir / n);
    // The model path is part of both fit summaries.
    out["train.txt"] = keep_lines(out["train.txt"], {"accuracy:", "leaves:"});
    out["cycles_fit.txt"] = keep_lines(out["cycles_fit.txt"], {"c_index:", "iterations:"});
    passes.push_back(out);
  }
  fs::remove_all(work);
  int stable = 0, matching = 0;
  for (const auto& n : names) {
    stable += passes[0][n] == passes[1][n];
    matching += passes[0][n] == slurp(golden / n);
  }
  const int total = static_cast<int>(names.size());
  return {stable == total && matching == total,
          std::to_string(stable) + "/" + std::to_string(total) + " outputs identical across two runs, " +
              std::to_string(matching) + "/" + std::to_string(total) + " identical to the golden files"};
}

}  // namespace

int main() {
  report("chi-square tail vs high-precision reference", chi_square);
  report("best_split vs exhaustive search", best_split);
  report("synthetic CHD tree accuracy and planted features", chd_tree);
  report("leaf confidence antitone in sample count", leaf_confidence);
  report("reliability of a calibrated scorer", reliability);
  report("cycle model gradient, weight recovery and C index", cycles_fit);
  report("cumulative success curve", cumulative_curve);
  report("what-if vs brute-force minimal change", what_if);
  report("narrative round trip", narrative);
  report("service durability", service_durability);
  report("CLI golden outputs", cli_golden);
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
