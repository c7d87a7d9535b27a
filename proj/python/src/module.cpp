// Python bindings. Structured values cross the boundary as Python dicts/lists,
// converted through the json module so that documents match the service.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "riskweave/api.hpp"
#include "riskweave/cart.hpp"
#include "riskweave/cycles.hpp"
#include "riskweave/error.hpp"
#include "riskweave/tabular.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace riskweave;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

class PyModel {
 public:
  explicit PyModel(api::Model model, api::Resources resources = {})
      : model_(std::move(model)), resources_(std::move(resources)) {}

  std::string kind() const { return api::kind_of(model_); }
  py::object schema() const { return to_py(tabular::schema_to_json(api::schema_of(model_))); }
  py::object to_dict() const { return to_py(api::model_to_json(model_)); }
  std::string to_json() const { return api::model_to_json(model_).dump(); }

  py::object predict(const py::dict& features) const {
    const auto& t = tree();
    return to_py(api::predict(t, api::features_field(t.schema, from_py(features)), resources_));
  }
  py::object explain(const py::dict& features) const {
    const auto& t = tree();
    return to_py(api::explain(t, api::features_field(t.schema, from_py(features)), resources_));
  }
  py::object what_if(const py::dict& features, const std::string& target_label) const {
    const auto& t = tree();
    return to_py(api::what_if(t, api::features_field(t.schema, from_py(features)), target_label));
  }
  py::object summary() const { return to_py(api::summary(tree(), resources_)); }
  py::object coverage(const std::vector<std::string>& asserted) const {
    return to_py(api::coverage(api::schema_of(model_), asserted, resources_));
  }
  py::object predict_cycles(const py::dict& features, std::optional<std::size_t> n_cycles) const {
    const auto* m = std::get_if<cycles::CycleModel>(&model_);
    if (!m) throw Error("WrongModelKind", "model is a tree", {{"kind", kind()}});
    const auto x = api::features_field(m->schema, from_py(features));
    return to_py(api::cycles_predict(*m, x, n_cycles.value_or(m->max_cycles()), resources_));
  }

 private:
  const cart::DecisionTree& tree() const {
    if (const auto* t = std::get_if<cart::DecisionTree>(&model_)) return *t;
    throw Error("WrongModelKind", "model is a cycle model", {{"kind", kind()}});
  }

  api::Model model_;
  api::Resources resources_;
};

json request_body(const std::string& csv, const py::object& schema, const py::kwargs& extra) {
  json body = from_py(extra);
  body["csv"] = csv;
  if (py::isinstance<py::str>(schema)) body["schema"] = schema.cast<std::string>();
  else if (!schema.is_none()) body["schema"] = from_py(schema);
  return body;
}

}  // namespace

PYBIND11_MODULE(_riskweave, m) {
  m.doc() = "Decision trees and cycle models with verbal explanations";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::exception<Error>(m, "RiskweaveError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object err = type(e.what());
      err.attr("code") = e.code();
      err.attr("detail") = e.detail();
      err.attr("context") = to_py(e.context());
      py::set_error(type, err);
    }
  });

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("kind", &PyModel::kind)
      .def_property_readonly("schema", &PyModel::schema)
      .def("to_dict", &PyModel::to_dict)
      .def("to_json", &PyModel::to_json)
      .def("predict", &PyModel::predict, py::arg("features"))
      .def("explain", &PyModel::explain, py::arg("features"))
      .def("what_if", &PyModel::what_if, py::arg("features"), py::arg("target_label"))
      .def("summary", &PyModel::summary)
      .def("coverage", &PyModel::coverage, py::arg("asserted"))
      .def("predict_cycles", &PyModel::predict_cycles, py::arg("features"), py::arg("n_cycles") = py::none());

  m.def(
      "train",
      [](const std::string& csv, const py::object& schema, const py::kwargs& extra) {
        const auto result = api::train(api::train_request_from_json(request_body(csv, schema, extra)));
        return std::make_pair(PyModel(result.tree), to_py(api::train_summary(result)));
      },
      py::arg("csv"), py::arg("schema") = py::none(),
      "Trains a tree on a held-out split; keyword arguments: params, seed, test_fraction.");

  m.def(
      "train_cycles",
      [](const std::string& csv, const py::object& schema, const py::kwargs& extra) {
        const auto result = api::train_cycles(api::cycles_request_from_json(request_body(csv, schema, extra)));
        return std::make_pair(PyModel(result.model), to_py(api::train_summary(result)));
      },
      py::arg("csv"), py::arg("schema") = py::none(),
      "Fits a cycle model; keyword arguments: options, seed, test_fraction.");

  m.def(
      "load_model",
      [](const std::string& text, const std::string& map, const std::string& templates, const std::string& lexicon) {
        return PyModel(api::model_from_json(json::parse(text)), api::Resources::load(map, templates, lexicon));
      },
      py::arg("text"), py::arg("verbal_map") = "", py::arg("templates") = "", py::arg("lexicon") = "");

  m.def("chi_square_sf", &cart::chi_square_sf, py::arg("stat"), py::arg("df"));
  m.def(
      "leaf_confidence",
      [](std::size_t negative, std::size_t positive) {
        return cart::leaf_confidence(cart::ClassCounts{negative, positive});
      },
      py::arg("negative"), py::arg("positive"));
  m.def(
      "synthesize_chd",
      [](std::uint64_t seed, std::size_t n, double noise) {
        return tabular::to_csv(tabular::synthesize_chd_like(seed, n, noise).data);
      },
      py::arg("seed"), py::arg("n"), py::arg("noise") = 0.05);
  m.def(
      "synthesize_ivf",
      [](std::uint64_t seed, std::size_t n) {
        return cycles::patients_to_csv(tabular::ivf_schema(), cycles::synthesize_ivf(seed, n));
      },
      py::arg("seed"), py::arg("n"));
  m.def("chd_schema_text", [] { return tabular::schema_to_text(tabular::chd_schema()); });
  m.def("ivf_schema_text", [] { return tabular::schema_to_text(tabular::ivf_schema()); });
}
