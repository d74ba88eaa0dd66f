#pragma once

// Trace fitting: damped Rabi oscillations, cosine fringes and straight lines.

#include "ramanlab/raman_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ramanlab
{

using Series = std::vector<std::pair<double, double>>;

struct FitResult
{
  std::map<std::string, double> params;
  double residual_norm = 0.0;
  double initial_residual_norm = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::string message;

  double at(std::string const &name) const
  {
    auto const it = params.find(name);
    if (it == params.end())
      throw std::out_of_range("FitResult has no parameter '" + name + "'");
    return it->second;
  }
};

inline constexpr int fit_schema_version = 1;

inline nlohmann::json to_json(FitResult const &fit, std::string const &model)
{
  nlohmann::json params = nlohmann::json::object();
  for (auto const &[k, v] : fit.params)
    params[k] = v;
  return {{"schema_version", fit_schema_version},
          {"model", model},
          {"params", params},
          {"residual_norm", fit.residual_norm},
          {"initial_residual_norm", fit.initial_residual_norm},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"message", fit.message}};
}

struct LmOptions
{
  std::size_t max_iterations = 200;
  double step_tolerance = 1e-10;
};

template <std::size_t N>
struct LmOutcome
{
  std::array<double, N> params{};
  double cost = 0.0;
  double initial_cost = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail
{

// Solves A x = b for small dense systems, partial pivoting. False if singular.
template <std::size_t N>
bool solve_dense(std::array<std::array<double, N>, N> a, std::array<double, N> b, std::array<double, N> &x)
{
  for (std::size_t col = 0; col < N; ++col)
  {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col]))
        piv = r;
    if (!(std::abs(a[piv][col]) > 0.0) || !std::isfinite(a[piv][col]))
      return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < N; ++r)
    {
      double const f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c)
        a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = N; i-- > 0;)
  {
    double s = b[i];
    for (std::size_t c = i + 1; c < N; ++c)
      s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

}  // namespace detail

/// Levenberg-Marquardt with Marquardt diagonal scaling. `model(x, p, grad)`
/// returns the model value and fills the analytic gradient in p. `project`
/// maps a trial point back into the feasible set. Only steps that lower the
/// cost are accepted, so the returned cost never exceeds the initial one.
template <std::size_t N, class Model, class Project>
LmOutcome<N> levenberg_marquardt(Series const &data, std::array<double, N> p, Model &&model, Project &&project,
                                 LmOptions const &opt = {})
{
  using Vec = std::array<double, N>;
  auto const cost_of = [&](Vec const &q) {
    double c = 0.0;
    Vec g{};
    for (auto const &[x, y] : data)
    {
      double const r = y - model(x, q, g);
      c += r * r;
    }
    return c;
  };

  double scale = 0.0;
  for (auto const &d : data)
    scale += d.second * d.second;

  LmOutcome<N> out;
  p = project(p);
  double cost = cost_of(p);
  out.initial_cost = cost;
  double lambda = 1e-3;

  std::size_t it = 0;
  for (; it < opt.max_iterations; ++it)
  {
    if (cost <= 1e-30 * std::max(scale, 1e-300))
    {
      out.converged = true;
      break;
    }
    std::array<std::array<double, N>, N> h{};
    Vec g{};
    for (auto const &[x, y] : data)
    {
      Vec grad{};
      double const r = y - model(x, p, grad);
      for (std::size_t i = 0; i < N; ++i)
      {
        g[i] += grad[i] * r;
        for (std::size_t j = 0; j <= i; ++j)
          h[i][j] += grad[i] * grad[j];
      }
    }
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        h[i][j] = h[j][i];

    bool accepted = false;
    bool tiny_step = false;
    while (lambda < 1e16)
    {
      auto a = h;
      for (std::size_t i = 0; i < N; ++i)
        a[i][i] += lambda * std::max(h[i][i], 1e-300);
      Vec delta{};
      if (!detail::solve_dense<N>(a, g, delta))
      {
        lambda *= 10.0;
        continue;
      }
      Vec trial{};
      for (std::size_t i = 0; i < N; ++i)
        trial[i] = p[i] + delta[i];
      trial = project(trial);

      double step = 0.0, size = 0.0;
      for (std::size_t i = 0; i < N; ++i)
      {
        step += (trial[i] - p[i]) * (trial[i] - p[i]);
        size += p[i] * p[i];
      }
      tiny_step = std::sqrt(step) <= opt.step_tolerance * (std::sqrt(size) + opt.step_tolerance);

      double const trial_cost = cost_of(trial);
      if (std::isfinite(trial_cost) && trial_cost < cost)
      {
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      if (tiny_step)
        break;
      lambda *= 10.0;
    }
    if (!accepted || tiny_step)
    {
      // No descent left within step tolerance: at a minimum.
      out.converged = true;
      ++it;
      break;
    }
  }
  out.params = p;
  out.cost = cost;
  out.iterations = it;
  return out;
}

// ---------------------------------------------------------------------------
// Damped Rabi oscillation

/// offset + I0 exp(-gamma t) sin^2(omega t / 2 + phase)
inline double damped_rabi_model(double t, double i0, double omega, double gamma, double offset, double phase)
{
  double const s = std::sin(0.5 * omega * t + phase);
  return offset + i0 * std::exp(-gamma * t) * s * s;
}

/// Strongest oscillation frequency of a trace, from a zero-mean periodogram
/// searched between half a cycle and the Nyquist rate of the mean spacing.
/// Returns 0 when no peak lies above the lowest searched frequency.
inline double dominant_frequency(Series const &trace)
{
  if (trace.size() < 3)
    return 0.0;
  double t_min = trace.front().first, t_max = trace.front().first;
  double mean = 0.0;
  for (auto const &[t, y] : trace)
  {
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
    mean += y;
  }
  mean /= static_cast<double>(trace.size());
  double const span = t_max - t_min;
  if (!(span > 0.0))
    return 0.0;

  double const lo = std::numbers::pi / span;
  double const hi = std::numbers::pi * static_cast<double>(trace.size() - 1) / span;
  double const step = 2.0 * std::numbers::pi / (16.0 * span);
  auto const power = [&](double w) {
    std::complex<double> acc{};
    for (auto const &[t, y] : trace)
      acc += (y - mean) * std::polar(1.0, -w * (t - t_min));
    return std::norm(acc);
  };

  std::size_t const bins = static_cast<std::size_t>((hi - lo) / step) + 1;
  std::vector<double> spectrum(bins);
  for (std::size_t k = 0; k < bins; ++k)
    spectrum[k] = power(lo + step * static_cast<double>(k));
  auto const peak = static_cast<std::size_t>(std::max_element(spectrum.begin(), spectrum.end()) - spectrum.begin());
  if (peak == 0 || !(spectrum[peak] > 0.0))
    return 0.0;
  double w = lo + step * static_cast<double>(peak);
  if (peak + 1 < bins)
  {
    double const a = spectrum[peak - 1], b = spectrum[peak], c = spectrum[peak + 1];
    double const denom = a - 2.0 * b + c;
    if (denom < 0.0)
      w += 0.5 * step * (a - c) / denom;
  }
  return w;
}

/// Fits offset + I0 exp(-gamma t) sin^2(omega t/2 + phase) with phase either 0
/// (spin-wave input) or pi/2 (write input), whichever fits better.
/// Result parameters: I0, omega, gamma, offset, phase.
inline FitResult fit_damped_rabi(Series const &trace, LmOptions const &opt = {})
{
  FitResult result;
  if (trace.size() < 8)
  {
    result.message = "need at least 8 points";
    return result;
  }
  double y_min = trace.front().second, y_max = trace.front().second;
  for (auto const &d : trace)
  {
    y_min = std::min(y_min, d.second);
    y_max = std::max(y_max, d.second);
  }
  if (!(y_max - y_min > 1e-12 * std::max(std::abs(y_max), 1e-300)))
  {
    result.message = "trace has no oscillation";
    return result;
  }
  double const omega0 = dominant_frequency(trace);
  if (!(omega0 > 0.0))
  {
    result.message = "no spectral peak above DC";
    return result;
  }

  double const t0 = std::min_element(trace.begin(), trace.end())->first;
  Series shifted = trace;
  for (auto &d : shifted)
    d.first -= t0;

  bool have = false;
  LmOutcome<4> best;
  double best_phase = 0.0;
  for (double phase : {0.0, std::numbers::pi / 2.0})
  {
    auto model = [phase](double t, std::array<double, 4> const &p, std::array<double, 4> &g) {
      double const arg = 0.5 * p[1] * t + phase;
      double const s = std::sin(arg), c = std::cos(arg);
      double const e = std::exp(-p[2] * t);
      g[0] = e * s * s;
      g[1] = p[0] * e * s * c * t;
      g[2] = -t * p[0] * e * s * s;
      g[3] = 1.0;
      return p[3] + p[0] * e * s * s;
    };
    auto project = [](std::array<double, 4> p) {
      p[0] = std::max(p[0], 0.0);
      p[1] = std::abs(p[1]);
      return p;
    };
    auto const out =
        levenberg_marquardt<4>(shifted, {y_max - y_min, omega0, 0.0, y_min}, model, project, opt);
    if (!have || out.cost < best.cost)
    {
      best = out;
      best_phase = phase;
      have = true;
    }
  }

  auto const &p = best.params;
  result.params = {{"I0", p[0]}, {"omega", p[1]}, {"gamma", p[2]}, {"offset", p[3]}, {"phase", best_phase}};
  result.residual_norm = std::sqrt(best.cost);
  result.initial_residual_norm = std::sqrt(best.initial_cost);
  result.iterations = best.iterations;
  result.converged = best.converged && std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
  if (!result.converged)
    result.message = "did not converge";
  return result;
}

// ---------------------------------------------------------------------------
// Cosine fringe

/// A + B cos(phi + phase0) with B = V A
inline double fringe_model(double phi, double mean, double visibility, double phase0)
{
  return mean * (1.0 + visibility * std::cos(phi + phase0));
}

/// Fits A + B cos(phi + phase0), B = V A with V held in [0, 1].
/// Result parameters: mean, contrast, phase0 in (-pi, pi], visibility.
inline FitResult fit_cosine_fringe(Series const &points, LmOptions const &opt = {})
{
  FitResult result;
  std::size_t const n = points.size();
  if (n < 5)
  {
    result.message = "need at least 5 points";
    return result;
  }
  double lo = points.front().first, hi = points.front().first;
  double mean = 0.0, y_min = points.front().second, y_max = points.front().second;
  for (auto const &[phi, y] : points)
  {
    lo = std::min(lo, phi);
    hi = std::max(hi, phi);
    mean += y;
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  mean /= static_cast<double>(n);
  // Evenly sampled data covering one period spans 2 pi (n-1)/n.
  double const span = hi - lo;
  if (!(span * static_cast<double>(n) / static_cast<double>(n - 1) >= 2.0 * std::numbers::pi * (1.0 - 1e-9)))
  {
    result.message = "phase span shorter than one fringe period";
    return result;
  }
  if (!(mean > 0.0))
  {
    result.message = "fringe mean must be positive";
    return result;
  }

  double cs = 0.0, sn = 0.0;
  for (auto const &[phi, y] : points)
  {
    cs += (y - mean) * std::cos(phi);
    sn += (y - mean) * std::sin(phi);
  }
  double const phase_seed = std::atan2(-sn, cs);
  double const v_seed = std::clamp(0.5 * (y_max - y_min) / mean, 0.0, 1.0);

  auto model = [](double phi, std::array<double, 3> const &p, std::array<double, 3> &g) {
    double const c = std::cos(phi + p[2]);
    double const s = std::sin(phi + p[2]);
    g[0] = 1.0 + p[1] * c;
    g[1] = p[0] * c;
    g[2] = -p[0] * p[1] * s;
    return p[0] * (1.0 + p[1] * c);
  };
  auto project = [](std::array<double, 3> p) {
    p[1] = std::clamp(p[1], 0.0, 1.0);
    return p;
  };
  auto const out = levenberg_marquardt<3>(points, {mean, v_seed, phase_seed}, model, project, opt);

  auto const &p = out.params;
  result.params = {{"mean", p[0]}, {"contrast", p[0] * p[1]}, {"phase0", wrap_phase(p[2])}, {"visibility", p[1]}};
  result.residual_norm = std::sqrt(out.cost);
  result.initial_residual_norm = std::sqrt(out.initial_cost);
  result.iterations = out.iterations;
  result.converged = out.converged && p[0] > 0.0 && std::isfinite(p[2]);
  if (!result.converged)
    result.message = p[0] > 0.0 ? "did not converge" : "fitted mean is not positive";
  return result;
}

/// (I_max - I_min) / (I_max + I_min) of a fitted fringe model.
inline double model_visibility(FitResult const &fringe)
{
  double const a = fringe.at("mean"), b = fringe.at("contrast");
  double const i_max = a + b, i_min = a - b;
  return (i_max - i_min) / (i_max + i_min);
}

// ---------------------------------------------------------------------------
// Straight line

/// Ordinary least squares. Parameters: slope, intercept, r_squared.
/// Throws std::invalid_argument when the x values are not distinct.
inline FitResult fit_linear(Series const &points)
{
  std::size_t const n = points.size();
  if (n < 2)
    throw std::invalid_argument("fit_linear: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (auto const &[x, y] : points)
  {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto const &[x, y] : points)
  {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("fit_linear: x values are all identical");

  double const slope = sxy / sxx;
  double const intercept = my - slope * mx;
  double ss_res = 0.0;
  for (auto const &[x, y] : points)
  {
    double const r = y - (slope * x + intercept);
    ss_res += r * r;
  }
  FitResult result;
  result.params = {{"slope", slope}, {"intercept", intercept}, {"r_squared", syy > 0.0 ? 1.0 - ss_res / syy : 1.0}};
  result.residual_norm = std::sqrt(ss_res);
  result.initial_residual_norm = result.residual_norm;
  result.converged = true;
  result.iterations = 1;
  return result;
}

}  // namespace ramanlab
