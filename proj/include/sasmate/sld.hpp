#pragma once

#include <string_view>

#include "sasmate/elements.hpp"
#include "sasmate/error.hpp"
#include "sasmate/formula.hpp"

namespace sasmate {

namespace constants {
inline constexpr double kAvogadro = 6.02214076e23;      // 1/mol
inline constexpr double kClassicalElectronRadius = 2.8179403;  // fm
inline constexpr double kWavelength2200 = 1.798;        // Å, thermal neutrons at 2200 m/s
inline constexpr double kFmToCm = 1e-13;
inline constexpr double kBarnToCm2 = 1e-24;
inline constexpr double kAngstromToCm = 1e-8;
// cm^-2 -> 1e-6 Å^-2
inline constexpr double kInvCm2ToSldUnits = 1e-16 / 1e-6;
}  // namespace constants

struct NeutronSld {
  double real = 0.0;  // 1e-6 Å^-2
  double imag = 0.0;  // 1e-6 Å^-2
};

struct SldResult {
  double sld_real = 0.0;
  double sld_imag = 0.0;
  double sld_xray = 0.0;
  double molar_mass = 0.0;        // g/mol
  double number_density = 0.0;    // formula units / cm^3
  double molecular_volume = 0.0;  // Å^3
};

inline double molar_mass(const Composition& c, const ElementTable& table = ElementTable::builtin()) {
  double total = 0.0;
  for (const auto& [sym, n] : c.entries()) total += n * table.at(sym).atomic_mass;
  return total;
}

namespace detail {
inline double number_density(const Composition& c, double density, const ElementTable& table) {
  if (!(density > 0.0)) throw Error(ErrorCode::NonPositiveDensity, "density must be > 0 g/cm^3");
  if (c.empty()) throw Error(ErrorCode::EmptyFormula, "composition is empty");
  return density * constants::kAvogadro / molar_mass(c, table);
}
}  // namespace detail

/// Neutron SLD. The imaginary part uses the 1/v absorption approximation at
/// 1.798 Å, so it does not depend on wavelength.
inline NeutronSld neutron_sld(const Composition& c, double density,
                              const ElementTable& table = ElementTable::builtin()) {
  using namespace constants;
  const double n = detail::number_density(c, density, table);
  double b_sum = 0.0;
  double sigma_sum = 0.0;
  for (const auto& [sym, count] : c.entries()) {
    const auto& rec = table.at(sym);
    b_sum += count * rec.b_coh;
    sigma_sum += count * rec.sigma_abs_2200;
  }
  NeutronSld out;
  out.real = n * b_sum * kFmToCm * kInvCm2ToSldUnits;
  out.imag = n * sigma_sum * kBarnToCm2 / (2.0 * kWavelength2200 * kAngstromToCm) * kInvCm2ToSldUnits;
  return out;
}

/// X-ray SLD from electron count; anomalous dispersion is ignored.
inline double xray_sld(const Composition& c, double density,
                       const ElementTable& table = ElementTable::builtin()) {
  using namespace constants;
  const double n = detail::number_density(c, density, table);
  double electrons = 0.0;
  for (const auto& [sym, count] : c.entries()) electrons += count * table.at(sym).atomic_number;
  return n * kClassicalElectronRadius * kFmToCm * electrons * kInvCm2ToSldUnits;
}

inline SldResult sld_report(std::string_view formula, double density,
                            const ElementTable& table = ElementTable::builtin()) {
  const Composition c = parse_formula(formula, table);
  const NeutronSld neutron = neutron_sld(c, density, table);
  SldResult r;
  r.sld_real = neutron.real;
  r.sld_imag = neutron.imag;
  r.sld_xray = xray_sld(c, density, table);
  r.molar_mass = molar_mass(c, table);
  r.number_density = detail::number_density(c, density, table);
  r.molecular_volume = r.molar_mass / (density * constants::kAvogadro) * 1e24;
  return r;
}

}  // namespace sasmate
