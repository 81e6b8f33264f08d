#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sasmate/dataset.hpp"
#include "sasmate/error.hpp"
#include "sasmate/numerics.hpp"

namespace sasmate {

struct ParameterSpec {
  std::string name;
  std::string units;
  double default_value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string description;
};

/// Parameter values in the order of ModelInfo::parameters.
using ParameterVector = std::vector<double>;

/// Unscaled, background-free intensity in 1/cm at one q.
using KernelFn = std::function<double(double q, const ParameterVector& params)>;

struct ModelInfo {
  std::string name;
  std::string category;
  std::string summary;      // one line
  std::string description;  // paragraph
  std::string equation;     // plain-text math
  std::string validity;
  std::vector<ParameterSpec> parameters;

  std::size_t index_of(std::string_view param) const {
    for (std::size_t i = 0; i < parameters.size(); ++i)
      if (parameters[i].name == param) return i;
    throw Error(ErrorCode::UnknownParameter, std::string(param) + " (model " + name + ")");
  }

  bool has_parameter(std::string_view param) const {
    return std::any_of(parameters.begin(), parameters.end(),
                       [&](const ParameterSpec& p) { return p.name == param; });
  }

  const ParameterSpec& parameter(std::string_view param) const { return parameters[index_of(param)]; }

  /// Structured documentation consumed by the doc index.
  std::string doc_text() const {
    std::ostringstream out;
    out << "Title: " << name << " model (" << category << ")\n\n";
    out << "Description\n" << description << "\n\n";
    out << "Parameters\n";
    out << "name | units | default | lower | upper | description\n";
    for (const auto& p : parameters) {
      out << p.name << " | " << (p.units.empty() ? "none" : p.units) << " | " << p.default_value
          << " | " << p.lower << " | " << p.upper << " | " << p.description << "\n";
    }
    out << "\nEquation\n" << equation << "\n\n";
    out << "Validity\n" << validity << "\n";
    return out.str();
  }
};

struct ModelDefinition {
  ModelInfo info;
  KernelFn kernel;
};

/// Strictly ascending positive q values (1/Å).
class QGrid {
 public:
  QGrid() = default;
  explicit QGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::InvalidRange, "q grid is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!(points_[i] > 0.0) || !std::isfinite(points_[i]))
        throw Error(ErrorCode::InvalidRange, "q values must be positive and finite");
      if (i > 0 && !(points_[i] > points_[i - 1]))
        throw Error(ErrorCode::InvalidRange, "q values must be strictly ascending");
    }
  }

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

 private:
  std::vector<double> points_;
};

inline constexpr double kDefaultQmin = 1e-3;
inline constexpr double kDefaultQmax = 1.0;
inline constexpr int kDefaultQPoints = 200;

/// n log-spaced points with exact endpoints.
inline QGrid default_qgrid(double qmin = kDefaultQmin, double qmax = kDefaultQmax,
                           int n = kDefaultQPoints) {
  if (!(qmin > 0.0) || !(qmax > qmin) || !std::isfinite(qmax))
    throw Error(ErrorCode::InvalidRange, "require 0 < qmin < qmax");
  if (n < 2) throw Error(ErrorCode::InvalidRange, "require at least 2 q points");
  std::vector<double> q(static_cast<std::size_t>(n));
  const double lo = std::log(qmin);
  const double step = (std::log(qmax) - lo) / (n - 1);
  for (int i = 0; i < n; ++i) q[i] = std::exp(lo + step * i);
  q.front() = qmin;
  q.back() = qmax;
  return QGrid(std::move(q));
}

namespace models {

inline constexpr double kIntensityUnits = 1e-4;  // (1e-6 Å^-2)^2 Å^3 -> 1/cm

inline ParameterSpec scale_param() {
  return {"scale", "", 1.0, 0.0, 1e3, "Volume fraction or overall scale factor"};
}
inline ParameterSpec background_param() {
  return {"background", "1/cm", 0.001, 0.0, 1e3, "Flat incoherent background"};
}
inline ParameterSpec sld_param(std::string name, double def, std::string what) {
  return {std::move(name), "1e-6/Ang^2", def, -500.0, 500.0, std::move(what)};
}
inline ParameterSpec length_param(std::string name, double def, double upper, std::string what) {
  return {std::move(name), "Ang", def, 0.0, upper, std::move(what)};
}

// Parameter layout shared by every built-in model: scale, background, sld,
// sld_solvent, then the shape parameters.
enum Common : std::size_t { kScale = 0, kBackground = 1, kSld = 2, kSldSolvent = 3, kShape0 = 4 };

inline double contrast(const ParameterVector& p) { return p[kSld] - p[kSldSolvent]; }

inline ModelDefinition sphere() {
  ModelInfo info;
  info.name = "sphere";
  info.category = "shape:sphere";
  info.summary = "Homogeneous sphere with uniform scattering length density";
  info.description =
      "Form factor of a homogeneous sphere of uniform scattering length density dispersed in a "
      "solvent. Use the sphere model for dilute spherical particles such as colloids, latex beads, "
      "micelle cores and nanoparticles. The sphere radius sets the position of the Guinier knee "
      "and of the sphere form factor minima near q*radius = 4.49, 7.73, 10.90.";
  info.equation =
      "I(q) = 1e-4 * scale * V * (sld - sld_solvent)^2 * K(q*radius)^2 + background\n"
      "K(x) = 3 * (sin(x) - x*cos(x)) / x^3\n"
      "V = (4*pi/3) * radius^3";
  info.validity =
      "Monodisperse particles without interparticle interference (dilute limit). "
      "I(q -> 0) = 1e-4 * scale * V * (sld - sld_solvent)^2 + background.";
  info.parameters = {scale_param(), background_param(),
                     sld_param("sld", 1.0, "Sphere scattering length density"),
                     sld_param("sld_solvent", 6.0, "Solvent scattering length density"),
                     length_param("radius", 50.0, 1e5, "Sphere radius")};
  auto kernel = [](double q, const ParameterVector& p) {
    const double r = p[kShape0];
    const double volume = 4.0 / 3.0 * std::numbers::pi * r * r * r;
    const double drho = contrast(p);
    const double k = numerics::sphere_kernel(q * r);
    return kIntensityUnits * volume * drho * drho * k * k;
  };
  return {std::move(info), kernel};
}

inline ModelDefinition cylinder() {
  ModelInfo info;
  info.name = "cylinder";
  info.category = "shape:cylinder";
  info.summary = "Right circular cylinder, orientationally averaged";
  info.description =
      "Form factor of a right circular cylinder with uniform scattering length density, averaged "
      "over all orientations. Use the cylinder model for rod-like particles, fibrils, stiff "
      "polymers and wormlike micelles whose length exceeds the cross-section. Parameters are the "
      "cylinder radius and the cylinder length.";
  info.equation =
      "I(q) = 1e-4 * scale * V * (sld - sld_solvent)^2 * integral_0^1 A(q,u)^2 du + background\n"
      "A(q,u) = sinc(q*length*u/2) * 2*J1(q*radius*sqrt(1-u^2)) / (q*radius*sqrt(1-u^2))\n"
      "V = pi * radius^2 * length; u = cos(alpha), 76-point Gauss-Legendre average";
  info.validity = "Dilute, randomly oriented, monodisperse cylinders. J1 is the Bessel function of order one.";
  info.parameters = {scale_param(), background_param(),
                     sld_param("sld", 4.0, "Cylinder scattering length density"),
                     sld_param("sld_solvent", 1.0, "Solvent scattering length density"),
                     length_param("radius", 20.0, 1e5, "Cylinder cross-section radius"),
                     length_param("length", 400.0, 1e6, "Cylinder length along the axis")};
  auto kernel = [](double q, const ParameterVector& p) {
    const double radius = p[kShape0];
    const double length = p[kShape0 + 1];
    const double volume = std::numbers::pi * radius * radius * length;
    const double drho = contrast(p);
    const auto& rule = numerics::GaussLegendre<numerics::kOrientationPoints>::instance();
    const double avg = rule.integrate([&](double u) {
      const double a = numerics::sinc(0.5 * q * length * u) *
                       numerics::bessel_j1_ratio(q * radius * std::sqrt(1.0 - u * u));
      return a * a;
    });
    return kIntensityUnits * volume * drho * drho * avg;
  };
  return {std::move(info), kernel};
}

inline ModelDefinition ellipsoid() {
  ModelInfo info;
  info.name = "ellipsoid";
  info.category = "shape:ellipsoid";
  info.summary = "Ellipsoid of revolution (spheroid), orientationally averaged";
  info.description =
      "Form factor of an ellipsoid of revolution with uniform scattering length density, averaged "
      "over all orientations. radius_polar is the semi-axis along the symmetry axis and "
      "radius_equatorial the two perpendicular semi-axes: radius_polar > radius_equatorial gives a "
      "prolate ellipsoid, radius_polar < radius_equatorial an oblate ellipsoid. Equal radii reduce "
      "to the sphere model.";
  info.equation =
      "I(q) = 1e-4 * scale * V * (sld - sld_solvent)^2 * integral_0^1 K(q*r(u))^2 du + background\n"
      "r(u) = sqrt(radius_equatorial^2 * (1-u^2) + radius_polar^2 * u^2)\n"
      "K(x) = 3 * (sin(x) - x*cos(x)) / x^3; V = (4*pi/3) * radius_polar * radius_equatorial^2";
  info.validity = "Dilute, randomly oriented, monodisperse ellipsoids; 76-point Gauss-Legendre average over u = cos(alpha).";
  info.parameters = {scale_param(), background_param(),
                     sld_param("sld", 4.0, "Ellipsoid scattering length density"),
                     sld_param("sld_solvent", 1.0, "Solvent scattering length density"),
                     length_param("radius_polar", 20.0, 1e5, "Polar semi-axis (symmetry axis)"),
                     length_param("radius_equatorial", 400.0, 1e5, "Equatorial semi-axis")};
  auto kernel = [](double q, const ParameterVector& p) {
    const double rp = p[kShape0];
    const double re = p[kShape0 + 1];
    const double volume = 4.0 / 3.0 * std::numbers::pi * rp * re * re;
    const double drho = contrast(p);
    const auto& rule = numerics::GaussLegendre<numerics::kOrientationPoints>::instance();
    const double avg = rule.integrate([&](double u) {
      const double r = std::sqrt(re * re * (1.0 - u * u) + rp * rp * u * u);
      const double k = numerics::sphere_kernel(q * r);
      return k * k;
    });
    return kIntensityUnits * volume * drho * drho * avg;
  };
  return {std::move(info), kernel};
}

inline ModelDefinition lamellar() {
  ModelInfo info;
  info.name = "lamellar";
  info.category = "shape:lamellae";
  info.summary = "Randomly oriented lamellar sheets of uniform thickness";
  info.description =
      "Scattering from randomly oriented, uncorrelated lamellar sheets such as bilayers, "
      "membranes, vesicle walls and lamellar phases without stacking order. The lamellar "
      "thickness is the full sheet thickness. Use a lamellar stack model instead when Bragg "
      "peaks from sheet ordering are visible.";
  info.equation =
      "I(q) = 1e-4 * scale * 8*pi * (sld - sld_solvent)^2 / (thickness * q^4) * sin^2(q*thickness/2) + background";
  info.validity = "Infinitely wide sheets, no interlayer correlation; scale is the volume fraction of lamellar material.";
  info.parameters = {scale_param(), background_param(),
                     sld_param("sld", 1.0, "Lamellar sheet scattering length density"),
                     sld_param("sld_solvent", 6.0, "Solvent scattering length density"),
                     length_param("thickness", 50.0, 1e5, "Total sheet thickness")};
  auto kernel = [](double q, const ParameterVector& p) {
    const double thickness = p[kShape0];
    const double drho = contrast(p);
    const double s = std::sin(0.5 * q * thickness);
    return kIntensityUnits * 8.0 * std::numbers::pi * drho * drho * s * s /
           (thickness * q * q * q * q);
  };
  return {std::move(info), kernel};
}

}  // namespace models

/// Name -> model definition. Immutable once shared; extension models are added
/// with add() before use.
class ModelRegistry {
 public:
  ModelRegistry() = default;

  static ModelRegistry with_builtins() {
    ModelRegistry reg;
    reg.add(models::sphere());
    reg.add(models::cylinder());
    reg.add(models::ellipsoid());
    reg.add(models::lamellar());
    return reg;
  }

  static const ModelRegistry& builtin() {
    static const ModelRegistry reg = with_builtins();
    return reg;
  }

  /// Registers a model. Every model must carry scale and background, and
  /// every ParameterSpec must satisfy lower <= default <= upper.
  void add(ModelDefinition def) {
    const auto& info = def.info;
    if (info.name.empty() || !def.kernel)
      throw std::invalid_argument("model needs a name and a kernel");
    if (!info.has_parameter("scale") || !info.has_parameter("background"))
      throw std::invalid_argument("model " + info.name + " lacks scale/background");
    for (std::size_t i = 0; i < info.parameters.size(); ++i) {
      const auto& p = info.parameters[i];
      if (!(p.lower <= p.default_value && p.default_value <= p.upper))
        throw std::invalid_argument("parameter " + p.name + " default outside bounds");
      for (std::size_t j = 0; j < i; ++j)
        if (info.parameters[j].name == p.name)
          throw std::invalid_argument("duplicate parameter " + p.name);
    }
    models_[info.name] = std::move(def);
  }

  const ModelDefinition& get(std::string_view name) const {
    auto it = models_.find(std::string(name));
    if (it == models_.end()) throw Error(ErrorCode::UnknownModel, std::string(name));
    return it->second;
  }

  bool contains(std::string_view name) const { return models_.count(std::string(name)) > 0; }

  /// Alphabetical by name.
  std::vector<ModelInfo> list_models() const {
    std::vector<ModelInfo> out;
    out.reserve(models_.size());
    for (const auto& [name, def] : models_) out.push_back(def.info);
    return out;
  }

  std::size_t size() const { return models_.size(); }

 private:
  std::map<std::string, ModelDefinition> models_;
};

inline std::vector<ModelInfo> list_models(const ModelRegistry& reg = ModelRegistry::builtin()) {
  return reg.list_models();
}

/// Fills defaults for unspecified parameters. Rejects unknown names (including
/// polydispersity "_pd" parameters) and values outside the model bounds.
inline ParameterVector resolve_parameters(const ModelInfo& info,
                                          const std::map<std::string, double>& params) {
  ParameterVector values;
  values.reserve(info.parameters.size());
  for (const auto& p : info.parameters) values.push_back(p.default_value);
  for (const auto& [name, value] : params) {
    if (!info.has_parameter(name)) {
      const bool pd = name.find("_pd") != std::string::npos;
      throw Error(ErrorCode::UnknownParameter,
                  name + (pd ? " (polydispersity is not supported)" : "") + " (model " + info.name + ")");
    }
    const auto& spec = info.parameter(name);
    if (!std::isfinite(value) || value < spec.lower || value > spec.upper) {
      std::ostringstream msg;
      msg << name << "=" << value << " outside [" << spec.lower << ", " << spec.upper << "]";
      throw Error(ErrorCode::ParameterOutOfBounds, msg.str());
    }
    values[info.index_of(name)] = value;
  }
  return values;
}

/// I(q) in 1/cm for a fully resolved parameter vector.
inline std::vector<double> evaluate_resolved(const ModelDefinition& def, const ParameterVector& values,
                                             std::span<const double> q) {
  const std::size_t scale = def.info.index_of("scale");
  const std::size_t background = def.info.index_of("background");
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double v = values[scale] * def.kernel(q[i], values) + values[background];
    if (!std::isfinite(v))
      throw Error(ErrorCode::EvaluationFailure,
                  def.info.name + " produced a non-finite intensity at q=" + std::to_string(q[i]));
    out[i] = v;
  }
  return out;
}

inline std::vector<double> evaluate(std::string_view model, const std::map<std::string, double>& params,
                                    const QGrid& q, const ModelRegistry& reg = ModelRegistry::builtin()) {
  const auto& def = reg.get(model);
  return evaluate_resolved(def, resolve_parameters(def.info, params), q.points());
}

/// Model curve with multiplicative Gaussian noise: I_i * (1 + f * g_i), dI_i = f * I_i.
inline Dataset generate_dataset(std::string_view model, const std::map<std::string, double>& params,
                                const QGrid& grid, double noise_fraction, std::uint64_t seed,
                                const ModelRegistry& reg = ModelRegistry::builtin()) {
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
    throw Error(ErrorCode::InvalidRange, "noise_fraction must be in [0, 1)");
  const auto& def = reg.get(model);
  const ParameterVector values = resolve_parameters(def.info, params);
  Dataset d;
  d.q = grid.points();
  d.intensity = evaluate_resolved(def, values, d.q);
  if (noise_fraction > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> sigma(d.q.size());
    for (std::size_t i = 0; i < d.q.size(); ++i) {
      const double clean = d.intensity[i];
      sigma[i] = noise_fraction * std::abs(clean);
      if (!(sigma[i] > 0.0)) sigma[i] = std::numeric_limits<double>::min();
      d.intensity[i] = clean * (1.0 + noise_fraction * gauss(rng));
    }
    d.d_intensity = std::move(sigma);
  }
  d.source.kind = "synthetic";
  d.source.model = std::string(model);
  for (std::size_t i = 0; i < values.size(); ++i) d.source.params[def.info.parameters[i].name] = values[i];
  d.source.noise_fraction = noise_fraction;
  d.source.seed = seed;
  return d;
}

}  // namespace sasmate
