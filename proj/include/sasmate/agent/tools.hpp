#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sasmate/agent/messages.hpp"
#include "sasmate/agent/session.hpp"
#include "sasmate/docstore.hpp"
#include "sasmate/fit.hpp"
#include "sasmate/models.hpp"
#include "sasmate/plot.hpp"
#include "sasmate/sld.hpp"

namespace sasmate::agent {

inline constexpr const char* kToolSld = "tool_sld";
inline constexpr const char* kToolListModels = "tool_list_models";
inline constexpr const char* kToolModelDoc = "tool_model_doc";
inline constexpr const char* kToolSearchDocs = "tool_search_docs";
inline constexpr const char* kToolGenerate = "tool_generate";
inline constexpr const char* kToolFit = "tool_fit";

/// Read-only services the tools draw on.
struct ToolContext {
  const ModelRegistry* models = &ModelRegistry::builtin();
  const DocStore* docs = nullptr;
};

inline const std::map<std::string, ToolSpec>& tool_catalog() {
  static const std::map<std::string, ToolSpec> catalog = [] {
    std::map<std::string, ToolSpec> c;
    c[kToolSld] = {kToolSld,
                   "Scattering length density calculator. Returns real and imaginary neutron SLD, "
                   "X-ray SLD (1e-6/Ang^2), molar mass and molecular volume for a chemical formula "
                   "and mass density.",
                   {{"formula", FieldType::String, true, "Chemical formula, e.g. C4H8O, D2O, Ca(OH)2, H[2]2O", {}},
                    {"density", FieldType::Number, true, "Mass density in g/cm^3", {}}}};
    c[kToolListModels] = {kToolListModels, "List the available scattering models with one-line descriptions.", {}};
    c[kToolModelDoc] = {kToolModelDoc,
                        "Full documentation of one model: description, parameter table with units, "
                        "defaults and bounds, and the equation.",
                        {{"name", FieldType::String, true, "Model name", {}}}};
    c[kToolSearchDocs] = {kToolSearchDocs,
                          "Keyword search over the model documentation. Returns the best matching "
                          "documents with snippets.",
                          {{"query", FieldType::String, true, "Search words", {}},
                           {"k", FieldType::Integer, false, "Number of hits", json(3)}}};
    c[kToolGenerate] = {kToolGenerate,
                        "Compute I(q) for a model on a log-spaced q grid, optionally with multiplicative "
                        "Gaussian noise, and register a plot. Unspecified parameters use model defaults.",
                        {{"model", FieldType::String, true, "Model name", {}},
                         {"params", FieldType::NumberMap, false, "Parameter name -> value", json::object()},
                         {"qmin", FieldType::Number, false, "Lowest q in 1/Ang", json(kDefaultQmin)},
                         {"qmax", FieldType::Number, false, "Highest q in 1/Ang", json(kDefaultQmax)},
                         {"n", FieldType::Integer, false, "Number of q points", json(kDefaultQPoints)},
                         {"noise_fraction", FieldType::Number, false, "Relative 1-sigma noise", json(0.0)},
                         {"seed", FieldType::Integer, false, "Noise seed", json(0)}}};
    c[kToolFit] = {kToolFit,
                   "Levenberg-Marquardt fit of a model to an uploaded dataset. Parameters in `fixed` "
                   "are held; all others are fitted starting from `initial` (or model defaults) "
                   "within `bounds` (or model bounds). Returns fitted values with 1-sigma "
                   "uncertainties, reduced chi2 and a plot with normalized residuals.",
                   {{"file_id", FieldType::String, true, "Uploaded file id", {}},
                    {"model", FieldType::String, true, "Model name", {}},
                    {"fixed", FieldType::NumberMap, false, "Parameters held at these values", json::object()},
                    {"initial", FieldType::NumberMap, false, "Initial guesses", json::object()},
                    {"bounds", FieldType::RangeMap, false, "Parameter -> [lower, upper]", json::object()}}};
    return c;
  }();
  return catalog;
}

inline std::vector<ToolSpec> tool_specs(const std::vector<std::string>& names) {
  std::vector<ToolSpec> out;
  for (const auto& n : names) out.push_back(tool_catalog().at(n));
  return out;
}

namespace tooldetail {

inline json point(double q, double i) { return {{"q", q}, {"I", i}}; }

inline std::map<std::string, double> number_map(const json& j) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
  return out;
}

inline json run_sld(const json& args) {
  const auto r = sld_report(args.at("formula").get<std::string>(), args.at("density").get<double>());
  return {{"formula", args.at("formula")},
          {"density", args.at("density")},
          {"sld_real", r.sld_real},
          {"sld_imag", r.sld_imag},
          {"sld_xray", r.sld_xray},
          {"molar_mass", r.molar_mass},
          {"number_density", r.number_density},
          {"molecular_volume", r.molecular_volume},
          {"units", {{"sld", "1e-6/Ang^2"}, {"molar_mass", "g/mol"}, {"number_density", "1/cm^3"},
                     {"molecular_volume", "Ang^3"}}}};
}

inline json run_list_models(const ToolContext& ctx) {
  json models = json::array();
  for (const auto& info : ctx.models->list_models()) {
    json params = json::array();
    for (const auto& p : info.parameters) params.push_back(p.name);
    models.push_back({{"name", info.name}, {"description", info.summary}, {"parameters", params}});
  }
  return {{"models", models}};
}

inline const DocStore& docs_of(const ToolContext& ctx) {
  if (!ctx.docs) throw Error(ErrorCode::UnknownDoc, "no documentation index configured");
  return *ctx.docs;
}

inline json run_model_doc(const json& args, const ToolContext& ctx) {
  const auto doc = docs_of(ctx).get_doc(args.at("name").get<std::string>());
  return {{"doc_id", doc.doc_id}, {"title", doc.title}, {"body", doc.body}};
}

inline json run_search_docs(const json& args, const ToolContext& ctx) {
  const auto k = args.at("k").get<long>();
  if (k < 1) throw Error(ErrorCode::ToolArgumentInvalid, "k must be >= 1");
  json hits = json::array();
  for (const auto& h : docs_of(ctx).search(args.at("query").get<std::string>(), static_cast<std::size_t>(k)))
    hits.push_back({{"doc_id", h.doc_id}, {"score", h.score}, {"snippet", h.snippet}});
  return {{"hits", hits}};
}

inline PlotArtifact generation_plot(const std::string& model, const Dataset& d) {
  PlotArtifact plot;
  plot.title = model + " model";
  PlotSeries s;
  s.label = model;
  s.kind = d.has_errors() ? SeriesKind::Points : SeriesKind::Curve;
  s.x = d.q;
  s.y = d.intensity;
  s.yerr = d.d_intensity;
  plot.series.push_back(std::move(s));
  plot.validate();
  return plot;
}

inline json run_generate(const json& args, SessionState& session, const ToolContext& ctx) {
  const auto model = args.at("model").get<std::string>();
  const auto params = number_map(args.at("params"));
  const auto seed = args.at("seed").get<long long>();
  if (seed < 0) throw Error(ErrorCode::ToolArgumentInvalid, "seed must be >= 0");
  const auto grid = default_qgrid(args.at("qmin").get<double>(), args.at("qmax").get<double>(),
                                  args.at("n").get<int>());
  const Dataset d = generate_dataset(model, params, grid, args.at("noise_fraction").get<double>(),
                                     static_cast<std::uint64_t>(seed), *ctx.models);

  const std::string plot_id = session.add_plot(generation_plot(model, d));

  const auto peak = std::max_element(d.intensity.begin(), d.intensity.end()) - d.intensity.begin();
  return {{"plot_id", plot_id},
          {"model", model},
          {"params", d.source.params},
          {"points", d.size()},
          {"q_range", {d.q.front(), d.q.back()}},
          {"first", point(d.q.front(), d.intensity.front())},
          {"last", point(d.q.back(), d.intensity.back())},
          {"peak", point(d.q[peak], d.intensity[peak])},
          {"noise_fraction", d.source.noise_fraction},
          {"seed", d.source.seed}};
}

inline json report_json(const FitReport& rep) {
  json free = json::array();
  for (const auto& e : rep.free)
    free.push_back({{"name", e.name}, {"value", e.value}, {"uncertainty", e.uncertainty}, {"units", e.units}});
  json fixed = json::array();
  for (const auto& e : rep.fixed) fixed.push_back({{"name", e.name}, {"value", e.value}, {"units", e.units}});
  return {{"model", rep.model},         {"free", free},
          {"fixed", fixed},             {"chi2_reduced", rep.chi2_reduced},
          {"points", rep.points},       {"iterations", rep.iterations},
          {"converged", rep.converged}, {"termination", rep.termination}};
}

inline PlotArtifact fit_plot(const FitProblem& problem, const FitResult& result) {
  const Dataset& d = problem.data();
  PlotArtifact plot;
  plot.title = problem.model() + " fit";
  plot.series.push_back({"data", SeriesKind::Points, d.q, d.intensity, d.d_intensity});
  plot.series.push_back({problem.model() + " fit", SeriesKind::Curve, d.q, result.model_curve, std::nullopt});
  plot.series.push_back({"normalized residuals", SeriesKind::Residuals, d.q, result.residuals, std::nullopt});
  plot.validate();
  return plot;
}

inline json run_fit(const json& args, SessionState& session, const ToolContext& ctx) {
  const auto file_id = args.at("file_id").get<std::string>();
  const auto file = session.file(file_id);
  if (!file) throw Error(ErrorCode::ToolArgumentInvalid, "no uploaded file with id '" + file_id + "'");
  std::map<std::string, std::pair<double, double>> bounds;
  for (const auto& [k, v] : args.at("bounds").items()) bounds[k] = {v[0].get<double>(), v[1].get<double>()};
  const FitProblem problem =
      FitProblem::from_settings(args.at("model").get<std::string>(), file->dataset, number_map(args.at("fixed")),
                                number_map(args.at("initial")), bounds, *ctx.models);
  const FitResult result = fit_lm(problem);
  const FitReport rep = fit_report(problem, result);
  const std::string plot_id = session.add_plot(fit_plot(problem, result));
  return {{"plot_id", plot_id},
          {"file_id", file_id},
          {"report", report_json(rep)},
          {"report_text", rep.to_text()},
          {"values", result.values},
          {"uncertainties", result.uncertainties},
          {"fixed", result.fixed},
          {"chi2_reduced", result.chi2_reduced},
          {"converged", result.converged}};
}

}  // namespace tooldetail

/// Validates and runs one tool call. Failures of any kind come back as
/// ok=false results; nothing propagates to the agent loop.
inline ToolResult execute_tool(const ToolCall& call, SessionState& session, const ToolContext& ctx,
                               const std::vector<std::string>& allowed = {}) {
  using namespace tooldetail;
  try {
    const auto& catalog = tool_catalog();
    const bool permitted = allowed.empty() || std::find(allowed.begin(), allowed.end(), call.name) != allowed.end();
    auto it = catalog.find(call.name);
    if (it == catalog.end() || !permitted)
      throw Error(ErrorCode::UnknownTool, "'" + call.name + "' is not an available tool");
    const json args = it->second.validate(call.arguments);
    json payload;
    if (call.name == kToolSld) payload = run_sld(args);
    else if (call.name == kToolListModels) payload = run_list_models(ctx);
    else if (call.name == kToolModelDoc) payload = run_model_doc(args, ctx);
    else if (call.name == kToolSearchDocs) payload = run_search_docs(args, ctx);
    else if (call.name == kToolGenerate) payload = run_generate(args, session, ctx);
    else if (call.name == kToolFit) payload = run_fit(args, session, ctx);
    return ToolResult::success(call.id, std::move(payload));
  } catch (const Error& e) {
    return ToolResult::failure(call.id, e.what());
  } catch (const std::exception& e) {
    return ToolResult::failure(call.id, std::string("tool failure: ") + e.what());
  }
}

}  // namespace sasmate::agent
