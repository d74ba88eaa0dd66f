#pragma once

// Mean-field Raman three-wave dynamics: write field a_w, strong Stokes drive
// a_s and collective spin wave s_a.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ramanlab
{

using ComplexAmp = std::complex<double>;

inline double intensity(ComplexAmp a) { return std::norm(a); }

inline bool is_finite(ComplexAmp a) { return std::isfinite(a.real()) && std::isfinite(a.imag()); }

struct TriWaveState
{
  ComplexAmp a_w{};  // write field
  ComplexAmp a_s{};  // Stokes field
  ComplexAmp s_a{};  // spin wave

  double write_intensity() const { return intensity(a_w); }
  double stokes_intensity() const { return intensity(a_s); }
  double spinwave_intensity() const { return intensity(s_a); }

  // Manley-Rowe invariants of the lossless three-wave equations.
  double signal_sum() const { return write_intensity() + spinwave_intensity(); }
  double drive_excess() const { return stokes_intensity() - spinwave_intensity(); }

  bool finite() const { return is_finite(a_w) && is_finite(a_s) && is_finite(s_a); }

  friend bool operator==(TriWaveState const &, TriWaveState const &) = default;
};

/// Couplings of the two optical transitions (rad/s per field unit) and the
/// common one-photon detuning (rad/s).
struct RamanCoupling
{
  double g_eg = 0.0;
  double g_em = 0.0;
  double delta = 0.0;

  bool valid() const { return delta != 0.0 && std::isfinite(g_eg) && std::isfinite(g_em) && std::isfinite(delta); }

  double eta() const
  {
    if (!valid())
      throw std::domain_error("RamanCoupling: detuning must be finite and nonzero");
    return g_eg * g_em / delta;
  }

  friend bool operator==(RamanCoupling const &, RamanCoupling const &) = default;
};

struct DrivePulse
{
  ComplexAmp amplitude{};  // c-number Stokes amplitude A_S
  double duration = 0.0;   // s
};

struct DecoherenceModel
{
  double gamma = 0.0;         // spin-wave amplitude decay rate, 1/s
  double optical_loss = 1.0;  // amplitude transmission of one optical path segment

  bool valid() const { return gamma >= 0.0 && optical_loss >= 0.0 && optical_loss <= 1.0; }

  friend bool operator==(DecoherenceModel const &, DecoherenceModel const &) = default;
};

/// Complex Rabi-like frequency 2*eta*conj(A_S).
inline ComplexAmp rabi_frequency_complex(RamanCoupling const &coupling, DrivePulse const &drive)
{
  return 2.0 * coupling.eta() * std::conj(drive.amplitude);
}

inline double rabi_frequency(RamanCoupling const &coupling, DrivePulse const &drive)
{
  return 2.0 * std::abs(coupling.eta()) * std::abs(drive.amplitude);
}

inline double pulse_area(RamanCoupling const &coupling, DrivePulse const &drive)
{
  return rabi_frequency(coupling, drive) * drive.duration;
}

inline double wrap_phase(double phi)
{
  double w = std::remainder(phi, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi)
    w += 2.0 * std::numbers::pi;
  return w;
}

/// Phase of the beam-splitter coupling produced by a drive. The undepleted
/// equations give a_w' = a_w cos(theta/2) + e^{i phase} s_a sin(theta/2) with
/// phase = arg(eta A_S) + pi, so phase 0 is the plain real rotation.
inline double splitter_phase(RamanCoupling const &coupling, DrivePulse const &drive)
{
  return wrap_phase(std::arg(coupling.eta() * drive.amplitude) + std::numbers::pi);
}

/// Drive of magnitude |A_S| whose splitter phase equals `phase`.
inline DrivePulse drive_with_splitter_phase(RamanCoupling const &coupling, double magnitude, double phase,
                                            double duration)
{
  double const sign = coupling.eta() < 0.0 ? 1.0 : -1.0;
  return {sign * std::polar(magnitude, phase), duration};
}

/// Lossless atom-light beam splitter of area theta. With phase = 0:
///   a_w' = a_w cos(theta/2) + s_a sin(theta/2)
///   s_a' = s_a cos(theta/2) - a_w sin(theta/2)
/// The drive a_s is left untouched.
inline TriWaveState beam_splitter_transform(TriWaveState const &state, double theta, double phase = 0.0)
{
  double const c = std::cos(0.5 * theta);
  double const s = std::sin(0.5 * theta);
  ComplexAmp const rot = std::polar(1.0, phase);
  TriWaveState out = state;
  out.a_w = c * state.a_w + s * rot * state.s_a;
  out.s_a = c * state.s_a - s * std::conj(rot) * state.a_w;
  return out;
}

/// Beam splitter of area theta during which the spin wave decays as
/// exp(-gamma_t) in amplitude (gamma_t = gamma * pulse duration). Exact
/// propagator of the undepleted two-mode equations; reduces to
/// beam_splitter_transform when gamma_t == 0.
inline TriWaveState damped_beam_splitter(TriWaveState const &state, double theta, double phase, double gamma_t)
{
  if (gamma_t == 0.0)
    return beam_splitter_transform(state, theta, phase);

  // M t = [[0, w],[-w, -2mu]] = -mu I + N, N^2 = (mu^2 - w^2) I
  double const w = 0.5 * theta;
  double const mu = 0.5 * gamma_t;
  std::complex<double> const nu = std::sqrt(std::complex<double>(w * w - mu * mu));
  std::complex<double> const cnu = std::cos(nu);
  // sin(nu)/nu, with the removable singularity at nu = 0
  std::complex<double> const sinc = std::abs(nu) < 1e-6 ? 1.0 - nu * nu / 6.0 : std::sin(nu) / nu;
  double const damp = std::exp(-mu);

  std::complex<double> const m00 = damp * (cnu + sinc * mu);
  std::complex<double> const m01 = damp * sinc * w;
  std::complex<double> const m10 = -m01;
  std::complex<double> const m11 = damp * (cnu - sinc * mu);

  ComplexAmp const rot = std::polar(1.0, phase);
  ComplexAmp const s_rot = rot * state.s_a;
  TriWaveState out = state;
  out.a_w = m00 * state.a_w + m01 * s_rot;
  out.s_a = std::conj(rot) * (m10 * state.a_w + m11 * s_rot);
  return out;
}

inline TriWaveState apply_phase(TriWaveState const &state, double phi_optical, double phi_atomic)
{
  TriWaveState out = state;
  out.a_w *= std::polar(1.0, phi_optical);
  out.s_a *= std::polar(1.0, phi_atomic);
  return out;
}

/// Free evolution over dt seconds: spin-wave amplitude decays as exp(-gamma dt)
/// and the write field passes one lossy optical segment.
inline TriWaveState apply_decoherence(TriWaveState const &state, DecoherenceModel const &model, double dt)
{
  if (dt < 0.0)
    throw std::invalid_argument("apply_decoherence: dt must be non-negative");
  TriWaveState out = state;
  out.s_a *= std::exp(-model.gamma * dt);
  out.a_w *= model.optical_loss;
  return out;
}

struct Trajectory
{
  std::vector<double> times;  // s
  std::vector<TriWaveState> states;
};

namespace detail
{
struct Derivative
{
  ComplexAmp d_w, d_s, d_a;
};

inline Derivative three_wave_rhs(TriWaveState const &x, double eta, double gamma)
{
  return {-eta * x.a_s * x.s_a, eta * x.a_w * std::conj(x.s_a), eta * x.a_w * std::conj(x.a_s) - gamma * x.s_a};
}

inline TriWaveState axpy(TriWaveState const &x, double h, Derivative const &k)
{
  return {x.a_w + h * k.d_w, x.a_s + h * k.d_s, x.s_a + h * k.d_a};
}
}  // namespace detail

/// Classical RK4 integration of
///   da_w/dt = -eta a_s s_a
///   da_s/dt =  eta a_w conj(s_a)
///   ds_a/dt =  eta a_w conj(a_s) - gamma s_a
/// The step is shrunk so an integer number of steps lands exactly on
/// `duration`. Every step is recorded.
inline Trajectory integrate_three_wave(TriWaveState const &initial, RamanCoupling const &coupling,
                                       DecoherenceModel const &decoherence, double duration, double dt)
{
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("integrate_three_wave: dt must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("integrate_three_wave: duration must be non-negative");

  double const eta = coupling.eta();
  double const gamma = decoherence.gamma;
  auto const steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  double const h = steps > 0 ? duration / static_cast<double>(steps) : 0.0;

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(initial);

  TriWaveState x = initial;
  for (std::size_t n = 0; n < steps; ++n)
  {
    auto const k1 = detail::three_wave_rhs(x, eta, gamma);
    auto const k2 = detail::three_wave_rhs(detail::axpy(x, 0.5 * h, k1), eta, gamma);
    auto const k3 = detail::three_wave_rhs(detail::axpy(x, 0.5 * h, k2), eta, gamma);
    auto const k4 = detail::three_wave_rhs(detail::axpy(x, h, k3), eta, gamma);
    x.a_w += h / 6.0 * (k1.d_w + 2.0 * k2.d_w + 2.0 * k3.d_w + k4.d_w);
    x.a_s += h / 6.0 * (k1.d_s + 2.0 * k2.d_s + 2.0 * k3.d_s + k4.d_s);
    x.s_a += h / 6.0 * (k1.d_a + 2.0 * k2.d_a + 2.0 * k3.d_a + k4.d_a);
    traj.times.push_back(static_cast<double>(n + 1) * h);
    traj.states.push_back(x);
  }
  return traj;
}

/// Step that keeps |Omega| dt at `max_area_per_step` for the given drive.
inline double default_step(RamanCoupling const &coupling, ComplexAmp drive, double max_area_per_step = 0.01)
{
  double const omega = 2.0 * std::abs(coupling.eta()) * std::abs(drive);
  return omega > 0.0 ? max_area_per_step / omega : 1e-9;
}

}  // namespace ramanlab
