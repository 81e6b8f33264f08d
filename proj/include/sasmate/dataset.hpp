#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sasmate/error.hpp"

namespace sasmate {

/// Where a dataset came from: a model evaluation or a loaded file.
struct DatasetSource {
  std::string kind;  // "synthetic" | "file"
  std::string model;
  std::map<std::string, double> params;
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
  std::string filename;
};

/// Columnar scattering data: q (1/Å), I (1/cm), optional dI (1/cm).
struct Dataset {
  std::vector<double> q;
  std::vector<double> intensity;
  std::optional<std::vector<double>> d_intensity;
  DatasetSource source;

  std::size_t size() const { return q.size(); }
  bool has_errors() const { return d_intensity.has_value(); }

  /// Throws InvalidDataset unless lengths match, q is strictly ascending and
  /// positive, and every dI is positive.
  void validate() const {
    if (q.empty()) throw Error(ErrorCode::InvalidDataset, "dataset is empty");
    if (intensity.size() != q.size())
      throw Error(ErrorCode::InvalidDataset, "q and I lengths differ");
    if (d_intensity && d_intensity->size() != q.size())
      throw Error(ErrorCode::InvalidDataset, "q and dI lengths differ");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (!(q[i] > 0.0) || !std::isfinite(q[i]))
        throw Error(ErrorCode::InvalidDataset, "q must be positive and finite");
      if (i > 0 && !(q[i] > q[i - 1]))
        throw Error(ErrorCode::InvalidDataset, "q must be strictly ascending");
      if (!std::isfinite(intensity[i]))
        throw Error(ErrorCode::InvalidDataset, "intensity must be finite");
      if (d_intensity && !((*d_intensity)[i] > 0.0))
        throw Error(ErrorCode::InvalidDataset, "dI entries must be positive");
    }
  }
};

}  // namespace sasmate
