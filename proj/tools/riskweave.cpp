// riskweave: train, explain and serve interpretable risk models.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskweave/api.hpp"
#include "riskweave/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskweave;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open " + path, {{"path", path}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error("InvalidJson", path + ": " + e.what(), {{"path", path}});
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Error("StorageError", "cannot write " + path, {{"path", path}});
}

tabular::Schema read_schema(const std::string& path) {
  const std::string text = read_text(path);
  if (fs::path(path).extension() == ".json") {
    try {
      return tabular::schema_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error("InvalidJson", path + ": " + e.what(), {{"path", path}});
    }
  }
  return tabular::parse_schema_text(text);
}

cart::DecisionTree read_tree(const std::string& path) {
  auto model = api::model_from_json(read_json(path));
  if (auto* t = std::get_if<cart::DecisionTree>(&model)) return std::move(*t);
  throw Error("WrongModelKind", path + " holds a cycle model, not a tree", {{"path", path}});
}

cycles::CycleModel read_cycle_model(const std::string& path) {
  auto model = api::model_from_json(read_json(path));
  if (auto* m = std::get_if<cycles::CycleModel>(&model)) return std::move(*m);
  throw Error("WrongModelKind", path + " holds a tree, not a cycle model", {{"path", path}});
}

std::string fmt(double v) { return tabular::format_display(v); }

std::string metric_line(const char* name, double (*fn)(const metrics::ConfusionMatrix&),
                        const metrics::ConfusionMatrix& m) {
  try {
    return std::string(name) + ": " + fmt(fn(m)) + "\n";
  } catch (const Error&) {
    return std::string(name) + ": undefined\n";
  }
}

/// Defaults read from the JSON file named by RISKWEAVE_CONFIG.
struct Defaults {
  std::string verbal_map, templates, lexicon;
  service::Config serve;
};

Defaults load_defaults() {
  Defaults d;
  d.serve = service::apply_env(d.serve);
  const char* path = std::getenv("RISKWEAVE_CONFIG");
  if (!path || !*path) return d;
  const json j = read_json(path);
  if (!j.is_object()) throw Error("InvalidConfig", std::string(path) + " must hold a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "verbal_map") d.verbal_map = v.get<std::string>();
      else if (k == "templates") d.templates = v.get<std::string>();
      else if (k == "lexicon") d.lexicon = v.get<std::string>();
      else if (k == "host") d.serve.host = v.get<std::string>();
      else if (k == "port") d.serve.port = v.get<int>();
      else if (k == "storage_root") d.serve.storage_root = v.get<std::string>();
      else if (k == "threads") d.serve.threads = v.get<std::size_t>();
      else throw Error("InvalidConfig", "unknown key '" + k + "' in " + path, {{"key", k}});
    }
  } catch (const json::exception& e) {
    throw Error("InvalidConfig", std::string(path) + ": " + e.what());
  }
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  Defaults defaults;
  try {
    defaults = load_defaults();
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.detail() << "\n";
    return 1;
  }

  CLI::App app{"riskweave: interpretable risk models with calibrated verbal explanations"};
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false;
  std::string map_path = defaults.verbal_map, templates_path = defaults.templates, lexicon_path = defaults.lexicon;
  app.add_flag("--json", as_json, "Print JSON instead of text");
  app.add_option("--verbal-map", map_path, "Verbal map JSON (default: built-in)");
  app.add_option("--templates", templates_path, "Sentence templates JSON (default: built-in)");
  app.add_option("--lexicon", lexicon_path, "Attribute alias lexicon JSON");

  // synth
  std::string synth_kind = "chd", synth_out;
  std::uint64_t synth_seed = 1;
  std::size_t synth_n = 0;
  double synth_noise = 0.05;
  auto* synth = app.add_subcommand("synth", "Write a synthetic cohort as CSV");
  synth->add_option("--kind", synth_kind, "chd (risk tree data) or ivf (patient cycle histories)")
      ->check(CLI::IsMember({"chd", "ivf"}));
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--n", synth_n, "Rows (default 2279 for chd, 5000 for ivf)");
  synth->add_option("--noise", synth_noise, "Label flip probability (chd)");
  synth->add_option("--out", synth_out, "Output CSV (default stdout)");

  // train
  std::string train_data, train_schema, train_out, train_params;
  api::TrainRequest train_req;
  auto* train = app.add_subcommand("train", "Train a decision tree on an 80/20 split and save it");
  train->add_option("--data", train_data, "Training CSV; the last column is the target")->required();
  train->add_option("--schema", train_schema, "Schema file (.json or text); inferred when absent");
  train->add_option("--out", train_out, "Model JSON to write")->required();
  train->add_option("--params", train_params, "Training parameters JSON");
  train->add_option("--max-depth", train_req.params.max_depth, "Maximum tree depth");
  train->add_option("--min-samples-leaf", train_req.params.min_samples_leaf, "Minimum rows per leaf");
  train->add_option("--min-impurity-decrease", train_req.params.min_impurity_decrease, "Minimum Gini decrease");
  train->add_option("--seed", train_req.seed, "Split seed");
  train->add_option("--test-fraction", train_req.test_fraction, "Held-out fraction");

  // evaluate
  std::string eval_model, eval_data;
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and error rates on a labelled CSV");
  evaluate->add_option("--model", eval_model, "Model JSON")->required();
  evaluate->add_option("--data", eval_data, "Labelled CSV")->required();

  // predict / explain / whatif / coverage
  std::string model_path, input_path, target_label;
  std::vector<std::string> asserted;
  bool global = false;
  auto* predict = app.add_subcommand("predict", "Predict one record");
  predict->add_option("--model", model_path, "Model JSON")->required();
  predict->add_option("--input", input_path, "Feature record JSON")->required();
  auto* explain = app.add_subcommand("explain", "Narrate the prediction for one record, or the whole model");
  explain->add_option("--model", model_path, "Model JSON")->required();
  auto* explain_input = explain->add_option("--input", input_path, "Feature record JSON");
  explain->add_flag("--global", global, "Describe every rule of the model")->excludes(explain_input);
  auto* whatif = app.add_subcommand("whatif", "Smallest feature change that reaches a target label");
  whatif->add_option("--model", model_path, "Model JSON")->required();
  whatif->add_option("--input", input_path, "Feature record JSON")->required();
  whatif->add_option("--target", target_label, "Target class label")->required();
  auto* coverage = app.add_subcommand("coverage", "Which asserted attributes the model takes into account");
  coverage->add_option("--model", model_path, "Model JSON (tree or cycle model)")->required();
  coverage->add_option("--asserted", asserted, "Attribute names, repeatable")->required();

  // cycles
  std::string cycles_data, cycles_schema, cycles_out;
  api::CyclesTrainRequest cycles_req;
  auto* cycles_fit = app.add_subcommand("cycles-fit", "Fit the per-cycle outcome model on patient histories");
  cycles_fit->add_option("--data", cycles_data, "Patient CSV with a 'cycles' column")->required();
  cycles_fit->add_option("--schema", cycles_schema, "Schema file (default: IVF schema)");
  cycles_fit->add_option("--out", cycles_out, "Model JSON to write")->required();
  cycles_fit->add_option("--max-cycles", cycles_req.options.max_cycles, "Number of cycle intercepts");
  cycles_fit->add_option("--lambda", cycles_req.options.lambda, "L2 penalty on feature weights");
  cycles_fit->add_option("--seed", cycles_req.seed, "Split seed");
  cycles_fit->add_option("--test-fraction", cycles_req.test_fraction, "Held-out fraction for the C index");
  std::size_t n_cycles = 0;
  bool curve_csv = false;
  auto* cycles_predict = app.add_subcommand("cycles-predict", "Cumulative success curve for one record");
  cycles_predict->add_option("--model", model_path, "Cycle model JSON")->required();
  cycles_predict->add_option("--input", input_path, "Feature record JSON")->required();
  cycles_predict->add_option("--cycles", n_cycles, "Cycles to cover (default: all)");
  cycles_predict->add_flag("--csv", curve_csv, "Print the curve as CSV");

  // reliability
  std::string rel_out;
  std::size_t bins = 10;
  auto* reliability = app.add_subcommand("reliability", "Reliability diagram data as CSV");
  reliability->add_option("--model", eval_model, "Model JSON")->required();
  reliability->add_option("--data", eval_data, "Labelled CSV")->required();
  reliability->add_option("--bins", bins, "Number of bins over [0.5, 1]");
  reliability->add_option("--out", rel_out, "Output CSV (default stdout)");

  // serve
  service::Config serve_cfg = defaults.serve;
  std::string storage_root = serve_cfg.storage_root.string();
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service (no authentication; binds loopback)");
  serve->add_option("--host", serve_cfg.host, "Bind address");
  serve->add_option("--port", serve_cfg.port, "Port; 0 picks a free one");
  serve->add_option("--storage-root", storage_root, "Directory for models and the feedback log");
  serve->add_option("--threads", serve_cfg.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto resources = [&] { return api::Resources::load(map_path, templates_path, lexicon_path); };

    if (synth->parsed()) {
      if (synth_kind == "chd") {
        const auto s = tabular::synthesize_chd_like(synth_seed, synth_n ? synth_n : 2279, synth_noise);
        write_text(synth_out, tabular::to_csv(s.data));
      } else {
        const auto patients = cycles::synthesize_ivf(synth_seed, synth_n ? synth_n : 5000);
        write_text(synth_out, cycles::patients_to_csv(tabular::ivf_schema(), patients));
      }
      return 0;
    }

    if (train->parsed()) {
      train_req.csv = read_text(train_data);
      if (!train_schema.empty()) train_req.schema = read_schema(train_schema);
      if (!train_params.empty()) {
        // Explicit flags win over the params file.
        json p = cart::params_to_json(cart::params_from_json(read_json(train_params)));
        for (const auto& [flag, key] : {std::pair{"--max-depth", "max_depth"},
                                        std::pair{"--min-samples-leaf", "min_samples_leaf"},
                                        std::pair{"--min-impurity-decrease", "min_impurity_decrease"}}) {
          if (train->count(flag) == 0) continue;
          const auto now = cart::params_to_json(train_req.params);
          p[key] = now.at(key);
        }
        train_req.params = cart::params_from_json(p);
      }
      const auto result = api::train(train_req);
      write_text(train_out, cart::tree_to_json(result.tree).dump(2) + "\n");
      if (as_json) std::cout << api::train_summary(result).dump(2) << "\n";
      else
        std::cout << "accuracy: " << fmt(*result.tree.test_accuracy) << "\n"
                  << "leaves: " << result.tree.leaves().size() << "\n"
                  << "model: " << train_out << "\n";
      return 0;
    }

    if (evaluate->parsed()) {
      const auto tree = read_tree(eval_model);
      const auto data = tabular::parse_csv(read_text(eval_data), tree.schema, eval_data);
      const auto cm = metrics::evaluate(tree, data);
      if (as_json) {
        std::cout << metrics::to_json(cm).dump(2) << "\n";
      } else {
        std::cout << "tp: " << cm.tp << "\nfp: " << cm.fp << "\ntn: " << cm.tn << "\nfn: " << cm.fn << "\n"
                  << metric_line("accuracy", metrics::accuracy, cm) << metric_line("recall", metrics::recall, cm)
                  << metric_line("false_negative_rate", metrics::false_negative_rate, cm)
                  << metric_line("false_omission_rate", metrics::false_omission_rate, cm);
      }
      return 0;
    }

    if (predict->parsed()) {
      const auto tree = read_tree(model_path);
      const auto out = api::predict(tree, api::features_field(tree.schema, read_json(input_path)), resources());
      if (as_json) std::cout << out.dump(2) << "\n";
      else
        std::cout << out.at("label").get<std::string>() << " (" << out.at("certainty_phrase").get<std::string>()
                  << ")\nconfidence p: " << fmt(out.at("confidence_p").get<double>())
                  << "\nbased on: " << out.at("samples").get<std::size_t>() << " people\n";
      return 0;
    }

    if (explain->parsed()) {
      const auto tree = read_tree(model_path);
      if (!global && input_path.empty()) throw CLI::RequiredError("--input or --global");
      const auto out = global ? api::summary(tree, resources())
                              : api::explain(tree, api::features_field(tree.schema, read_json(input_path)), resources());
      if (as_json) std::cout << out.dump(2) << "\n";
      else std::cout << out.at("text").get<std::string>() << "\n";
      return 0;
    }

    if (whatif->parsed()) {
      const auto tree = read_tree(model_path);
      const auto out = api::what_if(tree, api::features_field(tree.schema, read_json(input_path)), target_label);
      if (as_json) {
        std::cout << out.dump(2) << "\n";
      } else if (!out.at("found").get<bool>()) {
        std::cout << "no reachable change leads to " << target_label << "\n";
      } else if (out.at("changes").empty()) {
        std::cout << "no change needed: the model already predicts " << target_label << "\n";
      } else {
        for (const auto& c : out.at("changes"))
          std::cout << c.at("feature").get<std::string>() << ": "
                    << (c.at("from").is_string() ? c.at("from").get<std::string>() : fmt(c.at("from").get<double>()))
                    << " -> "
                    << (c.at("to").is_string() ? c.at("to").get<std::string>() : fmt(c.at("to").get<double>()))
                    << "\n";
        std::cout << "new prediction: " << out.at("new_label").get<std::string>() << " (based on "
                  << out.at("new_samples").get<std::size_t>() << " people)\n";
      }
      return 0;
    }

    if (coverage->parsed()) {
      const auto model = api::model_from_json(read_json(model_path));
      const auto out = api::coverage(api::schema_of(model), asserted, resources());
      if (as_json) std::cout << out.dump(2) << "\n";
      else {
        for (const auto& m : out.at("modeled")) std::cout << "modeled: " << m.get<std::string>() << "\n";
        for (const auto& u : out.at("unmodeled")) std::cout << "unmodeled: " << u.get<std::string>() << "\n";
        if (!out.at("caveat_text").get<std::string>().empty())
          std::cout << out.at("caveat_text").get<std::string>() << "\n";
      }
      return 0;
    }

    if (cycles_fit->parsed()) {
      cycles_req.csv = read_text(cycles_data);
      if (!cycles_schema.empty()) cycles_req.schema = read_schema(cycles_schema);
      const auto result = api::train_cycles(cycles_req);
      write_text(cycles_out, cycles::model_to_json(result.model).dump(2) + "\n");
      if (as_json) std::cout << api::train_summary(result).dump(2) << "\n";
      else
        std::cout << "c_index: " << (result.c_index ? fmt(*result.c_index) : std::string("undefined")) << "\n"
                  << "iterations: " << result.model.report.iterations << "\n"
                  << "model: " << cycles_out << "\n";
      return 0;
    }

    if (cycles_predict->parsed()) {
      const auto model = read_cycle_model(model_path);
      const std::size_t t = n_cycles ? n_cycles : model.max_cycles();
      const auto x = api::features_field(model.schema, read_json(input_path));
      if (curve_csv) {
        std::cout << cycles::curve_to_csv(cycles::predict_curve(model, x, t));
        return 0;
      }
      const auto out = api::cycles_predict(model, x, t, resources());
      if (as_json) std::cout << out.dump(2) << "\n";
      else std::cout << out.at("text").get<std::string>() << "\n";
      return 0;
    }

    if (reliability->parsed()) {
      const auto tree = read_tree(eval_model);
      const auto data = tabular::parse_csv(read_text(eval_data), tree.schema, eval_data);
      const auto scored = metrics::score(tree, data);
      write_text(rel_out, metrics::to_csv(metrics::reliability(scored, bins)));
      return 0;
    }

    if (serve->parsed()) {
      serve_cfg.storage_root = storage_root;
      serve_cfg.verbal_map_path = map_path;
      serve_cfg.templates_path = templates_path;
      serve_cfg.lexicon_path = lexicon_path;
      // SIGINT/SIGTERM are taken by a sigwait thread so that stop() never runs in a handler.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      sigaddset(&stop_signals, SIGUSR1);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      service::Service svc(serve_cfg);
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        svc.stop();
      });
      try {
        svc.serve([&](int port) {
          std::cout << "listening on http://" << serve_cfg.host << ":" << port << std::endl;
        });
      } catch (...) {
        pthread_kill(waiter.native_handle(), SIGUSR1);
        waiter.join();
        throw;
      }
      pthread_kill(waiter.native_handle(), SIGUSR1);
      waiter.join();
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.detail() << "\n";
    return 1;
  }
  return 2;
}
