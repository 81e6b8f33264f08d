#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sasmate/dataset.hpp"
#include "sasmate/error.hpp"
#include "sasmate/models.hpp"

namespace sasmate {

struct FitParameter {
  std::string name;
  double value = 0.0;  // initial guess, or the held value when fixed
  double lower = 0.0;
  double upper = 0.0;
  bool fixed = false;
};

struct FitOptions {
  int max_iter = 200;
  double ftol = 1e-10;
  double xtol = 1e-10;
  // Weights when the dataset has no dI: sigma_i = max(sigma_floor, sigma_rel * |I_i|).
  double sigma_floor = 1e-6;
  double sigma_rel = 0.01;
  // Also fit the lowest 25%, 50%, 75% of the q range in turn, seeding each
  // stage with the previous one, and keep whichever of this path and the
  // direct fit ends with the lower chi^2. Oscillating form factors weighted by
  // relative errors have narrow basins; the low-q prefix is smooth.
  bool q_continuation = true;
  // Extra starts from jittered initial values; the lowest chi^2 wins.
  int restarts = 0;
  std::uint64_t restart_seed = 12345;
};

/// A model, a dataset and one FitParameter per model parameter, in model order.
class FitProblem {
 public:
  FitProblem(std::string model, Dataset data, std::vector<FitParameter> params,
             const ModelRegistry& registry = ModelRegistry::builtin())
      : model_(std::move(model)), data_(std::move(data)), params_(std::move(params)), registry_(&registry) {
    const auto& info = registry_->get(model_).info;
    data_.validate();
    if (params_.size() != info.parameters.size())
      throw Error(ErrorCode::InvalidFitProblem, "parameter list must cover every model parameter");
    std::vector<FitParameter> ordered;
    for (const auto& spec : info.parameters) {
      auto it = std::find_if(params_.begin(), params_.end(),
                             [&](const FitParameter& p) { return p.name == spec.name; });
      if (it == params_.end())
        throw Error(ErrorCode::InvalidFitProblem, "missing parameter " + spec.name);
      ordered.push_back(*it);
    }
    params_ = std::move(ordered);
    int n_free = 0;
    for (const auto& p : params_) {
      if (!p.fixed) {
        ++n_free;
        if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper))
          throw Error(ErrorCode::InvalidFitProblem, "free parameter " + p.name + " needs finite lower < upper");
        if (p.value < p.lower || p.value > p.upper)
          throw Error(ErrorCode::ParameterOutOfBounds, p.name + " initial value outside its bounds");
      }
    }
    if (n_free == 0) throw Error(ErrorCode::InvalidFitProblem, "no free parameter");
  }

  /// Every parameter not named in `fixed` is free. Initial values default to
  /// the model defaults and bounds to the model bounds.
  static FitProblem from_settings(const std::string& model, Dataset data,
                                  const std::map<std::string, double>& fixed,
                                  const std::map<std::string, double>& initial = {},
                                  const std::map<std::string, std::pair<double, double>>& bounds = {},
                                  const ModelRegistry& registry = ModelRegistry::builtin()) {
    const auto& info = registry.get(model).info;
    auto check = [&](const std::string& name) {
      if (!info.has_parameter(name))
        throw Error(ErrorCode::UnknownParameter, name + " (model " + model + ")");
    };
    for (const auto& [name, v] : fixed) check(name);
    for (const auto& [name, v] : initial) check(name);
    for (const auto& [name, v] : bounds) check(name);
    std::vector<FitParameter> params;
    for (const auto& spec : info.parameters) {
      FitParameter p{spec.name, spec.default_value, spec.lower, spec.upper, false};
      if (auto it = bounds.find(spec.name); it != bounds.end()) {
        p.lower = it->second.first;
        p.upper = it->second.second;
      }
      if (auto it = initial.find(spec.name); it != initial.end()) p.value = it->second;
      if (auto it = fixed.find(spec.name); it != fixed.end()) {
        p.value = it->second;
        p.fixed = true;
      } else if (initial.count(spec.name) == 0) {
        p.value = std::clamp(p.value, p.lower, p.upper);
      }
      params.push_back(p);
    }
    return FitProblem(model, std::move(data), std::move(params), registry);
  }

  const std::string& model() const { return model_; }
  const Dataset& data() const { return data_; }
  const std::vector<FitParameter>& parameters() const { return params_; }
  const ModelDefinition& definition() const { return registry_->get(model_); }
  const ModelRegistry& registry() const { return *registry_; }

  std::vector<std::size_t> free_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (!params_[i].fixed) out.push_back(i);
    return out;
  }

  ParameterVector initial_values() const {
    ParameterVector v;
    for (const auto& p : params_) v.push_back(p.value);
    return v;
  }

  std::vector<double> sigmas(const FitOptions& opts = {}) const {
    if (data_.d_intensity) return *data_.d_intensity;
    std::vector<double> s(data_.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = std::max(opts.sigma_floor, opts.sigma_rel * std::abs(data_.intensity[i]));
    return s;
  }

 private:
  std::string model_;
  Dataset data_;
  std::vector<FitParameter> params_;
  const ModelRegistry* registry_;
};

struct FitResult {
  std::map<std::string, double> values;
  std::map<std::string, double> uncertainties;  // free parameters only
  std::map<std::string, double> fixed;
  double chi2_reduced = 0.0;
  double chi2_initial = 0.0;  // sum of squares at the starting point
  double chi2_final = 0.0;    // sum of squares at the returned point
  std::vector<double> residuals;
  std::vector<double> model_curve;
  int iterations = 0;
  bool converged = false;
  std::string termination;
};

/// r_i = (I_model(q_i) - I_i) / sigma_i at full parameter values in model order.
inline std::vector<double> residuals_at(const FitProblem& p, const ParameterVector& values,
                                        const FitOptions& opts = {}) {
  const auto model = evaluate_resolved(p.definition(), values, p.data().q);
  const auto sigma = p.sigmas(opts);
  std::vector<double> r(model.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (model[i] - p.data().intensity[i]) / sigma[i];
  return r;
}

/// Residuals for a trial name->value map; unnamed parameters keep their
/// problem values.
inline std::vector<double> residuals(const FitProblem& p, const std::map<std::string, double>& trial,
                                     const FitOptions& opts = {}) {
  const auto& info = p.definition().info;
  ParameterVector values = p.initial_values();
  for (const auto& [name, v] : trial) {
    const std::size_t idx = info.index_of(name);
    const auto& fp = p.parameters()[idx];
    if (v < fp.lower || v > fp.upper)
      throw Error(ErrorCode::ParameterOutOfBounds, name + " trial value outside its bounds");
    values[idx] = v;
  }
  return residuals_at(p, values, opts);
}

inline double chi2_reduced(const std::vector<double>& r, int n_free) {
  const long dof = static_cast<long>(r.size()) - n_free;
  if (dof <= 0)
    throw Error(ErrorCode::DegreesOfFreedomExhausted,
                std::to_string(r.size()) + " points for " + std::to_string(n_free) + " free parameters");
  double s = 0.0;
  for (double v : r) s += v * v;
  return s / static_cast<double>(dof);
}

namespace fitdetail {

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Internal coordinate t in R -> bounded value in (lo, hi).
inline double to_bounded(double t, double lo, double hi) {
  double x = lo + (hi - lo) * sigmoid(t);
  const double inner_lo = std::nextafter(lo, hi);
  const double inner_hi = std::nextafter(hi, lo);
  return std::clamp(x, inner_lo, inner_hi);
}

inline double to_internal(double x, double lo, double hi) {
  const double span = hi - lo;
  double frac = (x - lo) / span;
  frac = std::clamp(frac, 1e-12, 1.0 - 1e-12);
  return std::log(frac / (1.0 - frac));
}

inline double bounded_derivative(double t, double lo, double hi) {
  const double s = sigmoid(t);
  return (hi - lo) * s * (1.0 - s);
}

inline double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

/// Cholesky solve of the symmetric system a x = b; false when a is not
/// positive definite.
inline bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                           std::vector<double>& x) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  x = std::move(b);
  return true;
}

/// Inverse of a symmetric positive definite matrix, column by column.
inline std::optional<std::vector<double>> spd_inverse(const std::vector<double>& a, std::size_t n) {
  std::vector<double> inv(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> e(n, 0.0), col;
    e[c] = 1.0;
    if (!cholesky_solve(a, e, n, col)) return std::nullopt;
    for (std::size_t r = 0; r < n; ++r) inv[r * n + c] = col[r];
  }
  return inv;
}

/// Maps internal coordinates of the free parameters onto a full parameter vector.
class Transform {
 public:
  explicit Transform(const FitProblem& p) : problem_(&p), free_(p.free_indices()) {}

  std::size_t n_free() const { return free_.size(); }
  const std::vector<std::size_t>& free_indices() const { return free_; }

  std::vector<double> internal(const ParameterVector& values) const {
    std::vector<double> t;
    for (std::size_t idx : free_) {
      const auto& fp = problem_->parameters()[idx];
      t.push_back(to_internal(values[idx], fp.lower, fp.upper));
    }
    return t;
  }

  ParameterVector external(const std::vector<double>& t) const {
    ParameterVector values = problem_->initial_values();
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto& fp = problem_->parameters()[free_[k]];
      values[free_[k]] = to_bounded(t[k], fp.lower, fp.upper);
    }
    return values;
  }

  double derivative(std::size_t k, double t) const {
    const auto& fp = problem_->parameters()[free_[k]];
    return bounded_derivative(t, fp.lower, fp.upper);
  }

 private:
  const FitProblem* problem_;
  std::vector<std::size_t> free_;
};

}  // namespace fitdetail

/// Jacobian dr_i/dt_k (row-major, N x P) in internal coordinates, by forward
/// differences with step sqrt(eps) * max(|t|, 1), or central differences with
/// step cbrt(eps) * max(|t|, 1) for checks.
inline std::vector<double> fit_jacobian(const FitProblem& p, const std::vector<double>& t,
                                        const FitOptions& opts = {}, bool central = false) {
  fitdetail::Transform tf(p);
  const std::size_t n = p.data().size();
  const std::size_t m = t.size();
  std::vector<double> jac(n * m);
  const auto r0 = central ? std::vector<double>{} : residuals_at(p, tf.external(t), opts);
  for (std::size_t k = 0; k < m; ++k) {
    const double h = (central ? 6.055454e-6 : 1.490116e-8) * std::max(std::abs(t[k]), 1.0);
    std::vector<double> tp = t;
    tp[k] += h;
    const auto rp = residuals_at(p, tf.external(tp), opts);
    if (central) {
      std::vector<double> tm = t;
      tm[k] -= h;
      const auto rm = residuals_at(p, tf.external(tm), opts);
      for (std::size_t i = 0; i < n; ++i) jac[i * m + k] = (rp[i] - rm[i]) / (2.0 * h);
    } else {
      for (std::size_t i = 0; i < n; ++i) jac[i * m + k] = (rp[i] - r0[i]) / h;
    }
  }
  return jac;
}

namespace fitdetail {

// Beyond |t| = 18 the sigmoid derivative underflows the finite-difference
// step and a parameter pinned at a bound could never move back.
inline constexpr double kInternalLimit = 18.0;

struct LmRun {
  std::vector<double> t;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination;
};

/// `strict`: an all-zero Jacobian column at the starting point is an error
/// (the parameter has no effect) rather than a saturated bound.
inline LmRun levenberg_marquardt(const FitProblem& p, std::vector<double> t, const FitOptions& opts,
                                 bool strict = true) {
  Transform tf(p);
  const std::size_t n = p.data().size();
  const std::size_t m = t.size();
  LmRun run;
  std::vector<double> r = residuals_at(p, tf.external(t), opts);
  double chi2 = sum_squares(r);
  double lambda = 1e-3;

  auto finish = [&](bool converged, std::string why) {
    run.t = t;
    run.chi2 = chi2;
    run.converged = converged;
    run.termination = std::move(why);
    return run;
  };

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    run.iterations = iter;
    if (chi2 == 0.0) return finish(true, "exact fit");

    const auto jac = fit_jacobian(p, t, opts);
    std::vector<double> a(m * m, 0.0), g(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double jij = jac[i * m + j];
        g[j] += jij * r[i];
        for (std::size_t k = 0; k <= j; ++k) a[j * m + k] += jij * jac[i * m + k];
      }
    }
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < j; ++k) a[k * m + j] = a[j * m + k];
    for (std::size_t j = 0; j < m; ++j) {
      if (a[j * m + j] != 0.0) continue;
      if (iter == 1 && strict) {
        const auto& name = p.parameters()[tf.free_indices()[j]].name;
        throw Error(ErrorCode::SingularJacobian, "parameter " + name + " has no effect on the model");
      }
      // saturated against a bound: the zero column and gradient hold it still this step
      a[j * m + j] = 1.0;
    }

    bool accepted = false;
    while (!accepted) {
      std::vector<double> damped = a;
      for (std::size_t j = 0; j < m; ++j) damped[j * m + j] += lambda * a[j * m + j];
      std::vector<double> rhs(m), step;
      for (std::size_t j = 0; j < m; ++j) rhs[j] = -g[j];
      if (!cholesky_solve(damped, rhs, m, step)) {
        lambda *= 10.0;
        if (lambda > 1e20) return finish(false, "damping overflow");
        continue;
      }
      double step_norm = 0.0, t_norm = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        step_norm += step[j] * step[j];
        t_norm += t[j] * t[j];
      }
      step_norm = std::sqrt(step_norm);
      t_norm = std::sqrt(t_norm);
      if (step_norm <= opts.xtol * (t_norm + opts.xtol)) return finish(true, "step size below xtol");

      std::vector<double> trial = t;
      for (std::size_t j = 0; j < m; ++j)
        trial[j] = std::clamp(t[j] + step[j], -kInternalLimit, kInternalLimit);
      std::vector<double> r_trial;
      double chi2_trial = std::numeric_limits<double>::infinity();
      try {
        r_trial = residuals_at(p, tf.external(trial), opts);
        chi2_trial = sum_squares(r_trial);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EvaluationFailure) throw;
      }
      if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
        const double relative = (chi2 - chi2_trial) / chi2;
        t = std::move(trial);
        r = std::move(r_trial);
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (relative < opts.ftol) return finish(true, "relative chi2 change below ftol");
      } else {
        lambda *= 10.0;
        if (lambda > 1e20) return finish(false, "damping overflow");
      }
    }
  }
  return finish(false, "iteration limit reached");
}

/// Low-q prefix stages followed by a full-data run.
inline std::optional<LmRun> continuation_run(const FitProblem& p, std::vector<double> t,
                                             const FitOptions& opts) {
  const std::size_t n = p.data().size();
  const std::size_t m = t.size();
  const Transform full(p);
  int stage_iterations = 0;
  bool any_stage = false;
  for (double fraction : {0.25, 0.5, 0.75}) {
    const auto count = static_cast<std::size_t>(fraction * static_cast<double>(n));
    if (count < m + 2 || count >= n) continue;
    Dataset prefix;
    prefix.q.assign(p.data().q.begin(), p.data().q.begin() + count);
    prefix.intensity.assign(p.data().intensity.begin(), p.data().intensity.begin() + count);
    const auto sigma = p.sigmas(opts);
    prefix.d_intensity = std::vector<double>(sigma.begin(), sigma.begin() + count);
    prefix.source = p.data().source;
    // The flat background is set by the high-q tail; at low q it only trades
    // off against scale, so it is held during the prefix stages.
    std::vector<FitParameter> params = p.parameters();
    const ParameterVector current = full.external(t);
    std::vector<std::size_t> stage_free;
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].value = current[i];
      if (params[i].name == "background") params[i].fixed = true;
      if (!params[i].fixed) stage_free.push_back(i);
    }
    if (stage_free.empty()) return std::nullopt;
    const FitProblem sub(p.model(), std::move(prefix), std::move(params), p.registry());
    const Transform stage_tf(sub);
    auto run = levenberg_marquardt(sub, stage_tf.internal(current), opts, false);
    t = full.internal(stage_tf.external(run.t));
    stage_iterations += run.iterations;
    any_stage = true;
  }
  if (!any_stage) return std::nullopt;
  auto run = levenberg_marquardt(p, t, opts, false);
  run.iterations += stage_iterations;
  return run;
}

}  // namespace fitdetail

/// Bounded Levenberg-Marquardt. Free parameters are fitted in sigmoid
/// coordinates so every returned value lies strictly inside its bounds.
inline FitResult fit_lm(const FitProblem& p, const FitOptions& opts = {}) {
  fitdetail::Transform tf(p);
  const ParameterVector start = p.initial_values();
  const std::size_t m = tf.n_free();

  const auto r_start = residuals_at(p, start, opts);
  const double chi2_start = fitdetail::sum_squares(r_start);
  if (!std::isfinite(chi2_start))
    throw Error(ErrorCode::EvaluationFailure, "non-finite chi2 at the initial parameters");
  // reject degenerate problems before any iteration
  chi2_reduced(r_start, static_cast<int>(m));

  fitdetail::LmRun best = fitdetail::levenberg_marquardt(p, tf.internal(start), opts);
  if (opts.q_continuation) {
    auto run = fitdetail::continuation_run(p, tf.internal(start), opts);
    if (run && run->chi2 < best.chi2) best = std::move(*run);
  }
  if (opts.restarts > 0) {
    std::mt19937_64 rng(opts.restart_seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (int k = 0; k < opts.restarts; ++k) {
      auto t0 = tf.internal(start);
      for (double& v : t0) v += jitter(rng);
      auto run = fitdetail::levenberg_marquardt(p, t0, opts, false);
      if (run.chi2 < best.chi2) best = std::move(run);
    }
  }

  const ParameterVector values = tf.external(best.t);
  FitResult out;
  const auto& info = p.definition().info;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.values[info.parameters[i].name] = values[i];
    if (p.parameters()[i].fixed) out.fixed[info.parameters[i].name] = values[i];
  }
  out.residuals = residuals_at(p, values, opts);
  out.model_curve = evaluate_resolved(p.definition(), values, p.data().q);
  out.chi2_initial = chi2_start;
  out.chi2_final = fitdetail::sum_squares(out.residuals);
  out.chi2_reduced = chi2_reduced(out.residuals, static_cast<int>(m));
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.termination = best.termination;

  // sigma_t = sqrt(diag((J^T J)^-1) * chi2_reduced), mapped through dx/dt
  const auto jac = fit_jacobian(p, best.t, opts);
  const std::size_t n = p.data().size();
  std::vector<double> a(m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) a[j * m + k] += jac[i * m + j] * jac[i * m + k];
  const auto cov = fitdetail::spd_inverse(a, m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& name = info.parameters[tf.free_indices()[k]].name;
    double sigma = std::numeric_limits<double>::infinity();
    if (cov && (*cov)[k * m + k] >= 0.0)
      sigma = std::sqrt((*cov)[k * m + k] * out.chi2_reduced) * tf.derivative(k, best.t[k]);
    out.uncertainties[name] = sigma;
  }
  return out;
}

struct FitReportEntry {
  std::string name;
  std::string units;
  double value = 0.0;
  double uncertainty = 0.0;  // free parameters only
};

struct FitReport {
  std::string model;
  std::vector<FitReportEntry> free;
  std::vector<FitReportEntry> fixed;
  double chi2_reduced = 0.0;
  std::size_t points = 0;
  int iterations = 0;
  bool converged = false;
  std::string termination;

  std::string to_text() const {
    auto num = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      return std::string(buf);
    };
    std::string out = "Model: " + model + "\n";
    out += "Fitted parameters:\n";
    for (const auto& e : free)
      out += "  " + e.name + " = " + num(e.value) + " +/- " + num(e.uncertainty) +
             (e.units.empty() ? "" : " " + e.units) + "\n";
    out += "Fixed parameters:\n";
    if (fixed.empty()) out += "  (none)\n";
    for (const auto& e : fixed)
      out += "  " + e.name + " = " + num(e.value) + (e.units.empty() ? "" : " " + e.units) + "\n";
    out += "Reduced chi2: " + num(chi2_reduced) + " (" + std::to_string(points) + " points)\n";
    out += "Status: " + std::string(converged ? "converged" : "NOT CONVERGED") + " after " +
           std::to_string(iterations) + " iterations (" + termination + ")\n";
    return out;
  }
};

inline FitReport fit_report(const FitProblem& p, const FitResult& result) {
  FitReport rep;
  rep.model = p.model();
  const auto& info = p.definition().info;
  for (std::size_t i = 0; i < info.parameters.size(); ++i) {
    const auto& spec = info.parameters[i];
    FitReportEntry e{spec.name, spec.units, result.values.at(spec.name), 0.0};
    if (p.parameters()[i].fixed) {
      rep.fixed.push_back(e);
    } else {
      e.uncertainty = result.uncertainties.at(spec.name);
      rep.free.push_back(e);
    }
  }
  rep.chi2_reduced = result.chi2_reduced;
  rep.points = p.data().size();
  rep.iterations = result.iterations;
  rep.converged = result.converged;
  rep.termination = result.termination;
  return rep;
}

}  // namespace sasmate
