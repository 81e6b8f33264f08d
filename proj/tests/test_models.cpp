#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sasmate/models.hpp"
#include "sasmate/numerics.hpp"

using namespace sasmate;

// Reference intensities from tests/oracles/compute_oracles.py (scipy adaptive
// quadrature with scipy Bessel functions, relative tolerance 1e-13).
namespace oracle {
constexpr double kSphereForward = 1470.7889606556216;  // r=50, contrast 5.3, q=1e-6
constexpr double kSphereAtPi = 135.89184033428594;     // same, q=pi/50
struct Point {
  double q, intensity;
};
constexpr Point kCylinder[] = {{0.001, 450.355065643089}, {0.01, 301.823886572275},
                               {0.05, 53.6661652662691},  {0.1, 11.8935373800887}};
constexpr Point kEllipsoid[] = {{0.001, 11808.8428968632}, {0.01, 1920.91636992433}, {0.05, 54.8515847024981}};
constexpr Point kLamellar[] = {{0.01, 7691.71448472977}, {0.1, 4.50088323127459}, {1.0, 2.20124935030502e-05}};
}  // namespace oracle

namespace {

double at(std::string_view model, std::map<std::string, double> params, double q) {
  return evaluate(model, params, QGrid({q}))[0];
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidDataset;
}

const std::map<std::string, std::map<std::string, double>>& sample_params() {
  static const std::map<std::string, std::map<std::string, double>> p = {
      {"sphere", {{"radius", 60.0}, {"sld", 2.0}, {"sld_solvent", 5.0}}},
      {"cylinder", {{"radius", 15.0}, {"length", 120.0}, {"sld", 2.0}, {"sld_solvent", 5.0}}},
      {"ellipsoid", {{"radius_polar", 30.0}, {"radius_equatorial", 70.0}, {"sld", 2.0}, {"sld_solvent", 5.0}}},
      {"lamellar", {{"thickness", 40.0}, {"sld", 2.0}, {"sld_solvent", 5.0}}}};
  return p;
}

template <int N>
double cylinder_reference(double q, double radius, double length, double drho) {
  // independent: std::cyl_bessel_j and an N-point rule
  const numerics::GaussLegendre<N> rule;
  const double avg = rule.integrate([&](double u) {
    const double a = q * length * u / 2.0;
    const double b = q * radius * std::sqrt(1.0 - u * u);
    const double s = a == 0.0 ? 1.0 : std::sin(a) / a;
    const double j = b == 0.0 ? 1.0 : 2.0 * std::cyl_bessel_j(1.0, b) / b;
    return s * s * j * j;
  });
  return 1e-4 * std::numbers::pi * radius * radius * length * drho * drho * avg;
}

template <int N>
double ellipsoid_reference(double q, double rp, double re, double drho) {
  const numerics::GaussLegendre<N> rule;
  const double avg = rule.integrate([&](double u) {
    const double x = q * std::sqrt(re * re * (1 - u * u) + rp * rp * u * u);
    const double k = 3.0 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
    return k * k;
  });
  return 1e-4 * 4.0 / 3.0 * std::numbers::pi * rp * re * re * drho * drho * avg;
}

}  // namespace

TEST(Registry, ListsFourModelsAlphabetically) {
  const auto infos = list_models();
  ASSERT_EQ(infos.size(), 4u);
  EXPECT_EQ(infos[0].name, "cylinder");
  EXPECT_EQ(infos[1].name, "ellipsoid");
  EXPECT_EQ(infos[2].name, "lamellar");
  EXPECT_EQ(infos[3].name, "sphere");
  for (const auto& info : infos) {
    EXPECT_TRUE(info.has_parameter("scale")) << info.name;
    EXPECT_TRUE(info.has_parameter("background")) << info.name;
    EXPECT_FALSE(info.summary.empty());
    for (const auto& p : info.parameters) {
      EXPECT_LE(p.lower, p.default_value);
      EXPECT_GE(p.upper, p.default_value);
      EXPECT_TRUE(std::isfinite(p.lower) && std::isfinite(p.upper));
    }
  }
}

TEST(Registry, AcceptsExtensionModels) {
  auto reg = ModelRegistry::with_builtins();
  ModelDefinition flat;
  flat.info.name = "flat";
  flat.info.parameters = {{"scale", "", 1.0, 0.0, 10.0, ""}, {"background", "1/cm", 0.0, 0.0, 10.0, ""},
                          {"level", "1/cm", 2.0, 0.0, 100.0, ""}};
  flat.kernel = [](double, const ParameterVector& p) { return p[2]; };
  reg.add(flat);
  EXPECT_EQ(reg.list_models().size(), 5u);
  const auto i = evaluate("flat", {{"level", 3.0}, {"scale", 2.0}, {"background", 0.5}}, QGrid({0.1, 0.2}), reg);
  EXPECT_DOUBLE_EQ(i[0], 6.5);
}

TEST(Registry, RejectsModelsWithoutScaleOrBackground) {
  auto reg = ModelRegistry::with_builtins();
  ModelDefinition bad;
  bad.info.name = "bad";
  bad.info.parameters = {{"level", "", 1.0, 0.0, 2.0, ""}};
  bad.kernel = [](double, const ParameterVector&) { return 1.0; };
  EXPECT_THROW(reg.add(bad), std::invalid_argument);
  EXPECT_EQ(reg.size(), 4u);
}

TEST(Evaluate, SphereForwardLimitMatchesOracle) {
  const std::map<std::string, double> p = {
      {"radius", 50.0}, {"sld", 1.0}, {"sld_solvent", 6.3}, {"scale", 1.0}, {"background", 0.0}};
  EXPECT_NEAR(at("sphere", p, 1e-6), oracle::kSphereForward, 1e-9 * oracle::kSphereForward);
  EXPECT_NEAR(at("sphere", p, 1e-6), 1470.8, 0.1);
  EXPECT_NEAR(at("sphere", p, std::numbers::pi / 50.0), oracle::kSphereAtPi, 1e-9 * oracle::kSphereAtPi);
}

TEST(Evaluate, CylinderMatchesOracle) {
  for (const auto& [q, ref] : oracle::kCylinder) {
    const double got = at("cylinder", {{"radius", 20}, {"length", 400}, {"sld", 4}, {"sld_solvent", 1}, {"background", 0}}, q);
    EXPECT_NEAR(got, ref, 1e-6 * ref) << "q=" << q;
  }
}

TEST(Evaluate, EllipsoidMatchesOracle) {
  for (const auto& [q, ref] : oracle::kEllipsoid) {
    const double got = at("ellipsoid",
                          {{"radius_polar", 20}, {"radius_equatorial", 400}, {"sld", 4}, {"sld_solvent", 1}, {"background", 0}}, q);
    EXPECT_NEAR(got, ref, 1e-6 * ref) << "q=" << q;
  }
}

TEST(Evaluate, LamellarMatchesOracle) {
  for (const auto& [q, ref] : oracle::kLamellar) {
    const double got = at("lamellar", {{"thickness", 50}, {"sld", 1}, {"sld_solvent", 6}, {"background", 0}}, q);
    EXPECT_NEAR(got, ref, 1e-12 * ref) << "q=" << q;
  }
}

TEST(Evaluate, DegenerateEllipsoidIsSphere) {
  const auto grid = default_qgrid(1e-3, 1.0, 200);
  for (double r : {10.0, 50.0, 200.0}) {
    const auto s = evaluate("sphere", {{"radius", r}}, grid);
    const auto e = evaluate("ellipsoid", {{"radius_polar", r}, {"radius_equatorial", r}, {"sld", 1}, {"sld_solvent", 6}}, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(e[i], s[i], 1e-6 * s[i]) << "r=" << r << " q=" << grid.points()[i];
  }
}

TEST(Evaluate, ZeroContrastGivesBackground) {
  const auto grid = default_qgrid();
  for (const auto& [model, params] : sample_params()) {
    auto p = params;
    p["sld_solvent"] = p["sld"];
    p["background"] = 0.37;
    for (double v : evaluate(model, p, grid)) EXPECT_DOUBLE_EQ(v, 0.37) << model;
  }
}

TEST(Evaluate, ScaleIsLinear) {
  const auto grid = default_qgrid();
  for (const auto& [model, params] : sample_params()) {
    auto p = params;
    p["background"] = 0.0;
    p["scale"] = 1.0;
    const auto one = evaluate(model, p, grid);
    p["scale"] = 2.0;
    const auto two = evaluate(model, p, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(two[i], 2.0 * one[i], 1e-12 * two[i]) << model;
  }
}

TEST(Evaluate, BackgroundIsAdditive) {
  const auto grid = default_qgrid();
  for (const auto& [model, params] : sample_params()) {
    auto p = params;
    p["background"] = 0.0;
    const auto base = evaluate(model, p, grid);
    p["background"] = 0.125;
    const auto shifted = evaluate(model, p, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(shifted[i] - base[i], 0.125, 1e-12 * std::max(1.0, base[i])) << model;
  }
}

TEST(Evaluate, ContrastQuadraticLaw) {
  const auto grid = default_qgrid();
  for (const auto& [model, params] : sample_params()) {
    auto p = params;
    p["background"] = 0.0;
    p["sld"] = 2.0;
    p["sld_solvent"] = 1.0;
    const auto one = evaluate(model, p, grid);
    p["sld"] = 4.0;  // contrast x3
    const auto three = evaluate(model, p, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(three[i], 9.0 * one[i], 1e-12 * three[i]) << model;
  }
}

// |3(sin x - x cos x)/x^3| <= 3(1 + x)/x^3
TEST(Evaluate, SphereHighQEnvelope) {
  const double r = 50.0, drho = 5.3, scale = 0.7, bg = 0.01;
  const double volume = 4.0 / 3.0 * std::numbers::pi * r * r * r;
  const auto grid = default_qgrid(10.0 / r * 1.0001, 5.0, 500);
  const auto i = evaluate("sphere", {{"radius", r}, {"sld", 1}, {"sld_solvent", 1 + drho}, {"scale", scale}, {"background", bg}}, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double qr = grid.points()[k] * r;
    const double envelope = 1e-4 * scale * volume * drho * drho * std::pow(3.0 * (1.0 + qr) / (qr * qr * qr), 2) + bg;
    EXPECT_LE(i[k], envelope * (1 + 1e-12)) << "qr=" << qr;
  }
}

TEST(Evaluate, SeriesSwitchIsContinuousInModels) {
  const double r = 50.0;
  for (double x : {numerics::kSphereSeriesThreshold}) {
    const double lo = at("sphere", {{"radius", r}, {"background", 0}}, (x - 1e-9) / r);
    const double hi = at("sphere", {{"radius", r}, {"background", 0}}, (x + 1e-9) / r);
    EXPECT_LT(std::abs(lo - hi) / hi, 1e-9);
  }
  const double L = 400.0;
  const double lo = at("cylinder", {{"length", L}, {"background", 0}}, 2 * (numerics::kSincSeriesThreshold - 1e-9) / L);
  const double hi = at("cylinder", {{"length", L}, {"background", 0}}, 2 * (numerics::kSincSeriesThreshold + 1e-9) / L);
  EXPECT_LT(std::abs(lo - hi) / hi, 1e-9);
}

TEST(Evaluate, QuadratureConvergedAgainst256Points) {
  // qR <= 20 with R the largest particle dimension
  struct Case {
    double a, b;
  };
  for (const auto& c : {Case{20, 400}, Case{15, 120}, Case{50, 50}, Case{100, 30}}) {
    const double rmax = std::max(c.a, c.b);
    for (double qr = 0.05; qr <= 20.0; qr *= 1.3) {
      const double q = qr / rmax;
      const double cyl = at("cylinder", {{"radius", c.a}, {"length", c.b}, {"background", 0}}, q);
      const double cyl_ref = cylinder_reference<256>(q, c.a, c.b, 3.0);
      EXPECT_LT(std::abs(cyl - cyl_ref) / cyl_ref, 1e-6) << "cylinder R=" << c.a << " L=" << c.b << " q=" << q;
      const double ell = at("ellipsoid", {{"radius_polar", c.a}, {"radius_equatorial", c.b}, {"background", 0}}, q);
      const double ell_ref = ellipsoid_reference<256>(q, c.a, c.b, 3.0);
      EXPECT_LT(std::abs(ell - ell_ref) / ell_ref, 1e-6) << "ellipsoid Rp=" << c.a << " Re=" << c.b << " q=" << q;
    }
  }
}

TEST(Evaluate, Errors) {
  const QGrid g({0.1});
  EXPECT_EQ(code_of([&] { evaluate("torus", {}, g); }), ErrorCode::UnknownModel);
  EXPECT_EQ(code_of([&] { evaluate("sphere", {{"rdius", 5}}, g); }), ErrorCode::UnknownParameter);
  EXPECT_EQ(code_of([&] { evaluate("sphere", {{"radius_pd", 0.1}}, g); }), ErrorCode::UnknownParameter);
  EXPECT_EQ(code_of([&] { evaluate("sphere", {{"radius", -5}}, g); }), ErrorCode::ParameterOutOfBounds);
  EXPECT_EQ(code_of([&] { evaluate("sphere", {{"scale", std::nan("")}}, g); }), ErrorCode::ParameterOutOfBounds);
  EXPECT_EQ(code_of([&] { QGrid({0.2, 0.1}); }), ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([&] { QGrid({-0.1, 0.1}); }), ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([&] { QGrid(std::vector<double>{}); }), ErrorCode::InvalidRange);
}

TEST(Evaluate, IntensitiesFiniteAndNonNegative) {
  const auto grid = default_qgrid(1e-4, 2.0, 300);
  for (const auto& [model, params] : sample_params())
    for (double v : evaluate(model, params, grid)) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
}

TEST(QGrid, DefaultGrid) {
  const auto g = default_qgrid(0.01, 1.0, 3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g.points()[0], 0.01);
  EXPECT_NEAR(g.points()[1], 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(g.points()[2], 1.0);

  const auto h = default_qgrid(0.001, 0.5, 100);
  ASSERT_EQ(h.size(), 100u);
  const double ratio = h.points()[1] / h.points()[0];
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_NEAR(h.points()[i] / h.points()[i - 1], ratio, 1e-12);
  EXPECT_DOUBLE_EQ(h.front(), 0.001);
  EXPECT_DOUBLE_EQ(h.back(), 0.5);

  const auto d = default_qgrid();
  EXPECT_EQ(d.size(), 200u);
  EXPECT_DOUBLE_EQ(d.front(), 1e-3);
  EXPECT_DOUBLE_EQ(d.back(), 1.0);

  EXPECT_EQ(code_of([] { default_qgrid(1.0, 0.01, 50); }), ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([] { default_qgrid(0.01, 1.0, 1); }), ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([] { default_qgrid(0.0, 1.0, 10); }), ErrorCode::InvalidRange);
}

TEST(GenerateDataset, NoiseFreeEqualsEvaluate) {
  const auto grid = default_qgrid(0.01, 1.0, 50);
  const std::map<std::string, double> p = {{"thickness", 50.0}};
  const auto d = generate_dataset("lamellar", p, grid, 0.0, 3);
  EXPECT_EQ(d.intensity, evaluate("lamellar", p, grid));
  EXPECT_FALSE(d.has_errors());
  EXPECT_EQ(d.source.model, "lamellar");
  EXPECT_DOUBLE_EQ(d.source.params.at("thickness"), 50.0);
  EXPECT_DOUBLE_EQ(d.source.params.at("scale"), 1.0);
}

TEST(GenerateDataset, SeededNoiseIsDeterministic) {
  const auto grid = default_qgrid(0.005, 0.3, 100);
  const auto a = generate_dataset("sphere", {{"radius", 80}}, grid, 0.01, 7);
  const auto b = generate_dataset("sphere", {{"radius", 80}}, grid, 0.01, 7);
  const auto c = generate_dataset("sphere", {{"radius", 80}}, grid, 0.01, 8);
  EXPECT_EQ(a.intensity, b.intensity);
  EXPECT_NE(a.intensity, c.intensity);
  ASSERT_TRUE(a.has_errors());
  const auto clean = evaluate("sphere", {{"radius", 80}}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR((*a.d_intensity)[i], 0.01 * clean[i], 1e-12 * clean[i]);
    EXPECT_LT(std::abs(a.intensity[i] - clean[i]), 6 * (*a.d_intensity)[i]);
  }
  EXPECT_EQ(a.source.seed, 7u);
  EXPECT_DOUBLE_EQ(a.source.noise_fraction, 0.01);
}

TEST(GenerateDataset, RejectsBadNoise) {
  const auto grid = default_qgrid();
  EXPECT_EQ(code_of([&] { generate_dataset("sphere", {}, grid, 1.0, 0); }), ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([&] { generate_dataset("sphere", {}, grid, -0.1, 0); }), ErrorCode::InvalidRange);
}

TEST(ModelInfo, DocTextHasSections) {
  for (const auto& info : list_models()) {
    const auto text = info.doc_text();
    for (const char* section : {"Description", "Parameters", "Equation", "Validity"})
      EXPECT_NE(text.find(section), std::string::npos) << info.name << " lacks " << section;
    for (const auto& p : info.parameters) EXPECT_NE(text.find(p.name), std::string::npos);
  }
}
