#include "optrec/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "optrec/errors.hpp"

namespace optrec::io {

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw SpecError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

const Json& require(const Json& obj, const std::string& key, const std::string& where = "") {
  if (!obj.contains(key)) throw SpecError(where.empty() ? key : where + "." + key, "missing");
  return obj.at(key);
}

int to_int(const Json& value, const std::string& field) {
  if (!value.is_number_integer()) throw SpecError(field, "expected an integer");
  return value.get<int>();
}

}  // namespace

double to_double(const Json& value, const std::string& field) {
  if (value.is_string() && value.get<std::string>() == "inf") return kInfinity;
  if (!value.is_number()) throw SpecError(field, "expected a number");
  return value.get<double>();
}

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

Json number_or_inf(double value) {
  if (value == kInfinity) return "inf";
  return number(value);
}

SpecFile parse_spec(const Json& doc) {
  if (!doc.is_object()) throw SpecError("spec", "expected a JSON object");
  reject_unknown(doc, {"model", "n", "epsilon", "kappa", "points", "quantity", "noise", "truncation",
                       "grid_size", "tolerance"},
                 "");
  SpecFile out;
  ProblemSpec& spec = out.spec;

  const auto& model = require(doc, "model");
  if (model == "type1") {
    spec.model = ModelType::type1;
  } else if (model == "type2") {
    spec.model = ModelType::type2;
  } else {
    throw SpecError("model", "expected \"type1\" or \"type2\"");
  }
  spec.n = to_int(require(doc, "n"), "n");
  spec.epsilon = to_double(require(doc, "epsilon"), "epsilon");
  spec.kappa = to_double(require(doc, "kappa"), "kappa");

  const auto& points = require(doc, "points");
  if (!points.is_array()) throw SpecError("points", "expected an array");
  for (std::size_t i = 0; i < points.size(); ++i) {
    spec.points.push_back(to_double(points[i], "points[" + std::to_string(i) + "]"));
  }

  const auto& quantity = require(doc, "quantity");
  if (!quantity.is_object()) throw SpecError("quantity", "expected an object");
  const auto& kind = require(quantity, "kind", "quantity");
  if (kind == "point") {
    reject_unknown(quantity, {"kind", "x0"}, "quantity");
    const double x0 = to_double(require(quantity, "x0", "quantity"), "quantity.x0");
    try {
      spec.quantity = cheb::FunctionalSpec::point(x0);
    } catch (const std::exception& ex) {
      throw SpecError("quantity.x0", ex.what());
    }
  } else if (kind == "integral") {
    reject_unknown(quantity, {"kind"}, "quantity");
    spec.quantity = cheb::FunctionalSpec::integral();
  } else {
    throw SpecError("quantity.kind", "expected \"point\" or \"integral\"");
  }

  if (doc.contains("noise") && !doc.at("noise").is_null()) {
    const auto& noise = doc.at("noise");
    if (!noise.is_object()) throw SpecError("noise", "expected an object");
    reject_unknown(noise, {"p", "eta"}, "noise");
    NoiseModel nm;
    nm.p = to_double(require(noise, "p", "noise"), "noise.p");
    nm.eta = to_double(require(noise, "eta", "noise"), "noise.eta");
    spec.noise = nm;
  }
  if (doc.contains("truncation")) {
    out.truncation = to_int(doc.at("truncation"), "truncation");
    if (*out.truncation < 1) throw SpecError("truncation", "must be positive");
  }
  if (doc.contains("grid_size")) {
    out.grid_size = to_int(doc.at("grid_size"), "grid_size");
    if (*out.grid_size < 0) throw SpecError("grid_size", "must be nonnegative");
  }
  if (doc.contains("tolerance")) {
    out.tolerance = to_double(doc.at("tolerance"), "tolerance");
    if (!(*out.tolerance >= 1e-12 && *out.tolerance <= 1e-2)) {
      throw SpecError("tolerance", "must lie in [1e-12, 1e-2]");
    }
  }
  spec.validate();
  return out;
}

Json to_json(const SpecFile& file) {
  const ProblemSpec& spec = file.spec;
  Json doc;
  doc["model"] = to_string(spec.model);
  doc["n"] = spec.n;
  doc["epsilon"] = spec.epsilon;
  doc["kappa"] = number_or_inf(spec.kappa);
  doc["points"] = spec.points;
  if (spec.quantity.is_point()) {
    doc["quantity"] = {{"kind", "point"}, {"x0", spec.quantity.point_location()}};
  } else {
    doc["quantity"] = {{"kind", "integral"}};
  }
  if (spec.noise) doc["noise"] = {{"p", number_or_inf(spec.noise->p)}, {"eta", spec.noise->eta}};
  if (file.truncation) doc["truncation"] = *file.truncation;
  if (file.grid_size) doc["grid_size"] = *file.grid_size;
  if (file.tolerance) doc["tolerance"] = *file.tolerance;
  return doc;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("path", "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw SpecError("json", "syntax error at byte " + std::to_string(ex.byte) + " of " + path);
  }
}

void write_json(const Json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace optrec::io
