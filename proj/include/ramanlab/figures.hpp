#pragma once

// Figure datasets: Rabi traces and frequency-vs-drive lines, interferometer
// fringes, Stark phase shifts and the two-stage kappa calibration.

#include "ramanlab/analysis.hpp"
#include "ramanlab/interferometer.hpp"
#include "ramanlab/sequence.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramanlab
{

struct FiguresConfig
{
  std::size_t amplitude_points = 8;
  double amplitude_min = 2.0;
  double amplitude_max = 9.0;

  std::size_t phase_points = 100;  // fringe scans over [0, 4 pi)
  std::size_t shift_phase_points = 36;  // per-fringe points for the phase-shift sweeps over [0, 2 pi)

  std::size_t power_points = 6;
  double power_min_mw = 0.0;
  double power_max_mw = 50.0;
  std::size_t detuning_points = 5;
  double detuning_min_ghz = 2.0;
  double detuning_max_ghz = 3.0;

  double target_visibility_write = 0.966;
  double target_visibility_spin = 0.948;

  double probe_power_mw = 45.0;
  double probe_detuning_ghz = 2.5;
  double probe_duration_ns = 80.0;
  double kappa = 0.06;

  unsigned jobs = 1;
};

class FiguresError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Evenly spaced grid including both ends.
inline std::vector<double> inclusive_grid(double lo, double hi, std::size_t n)
{
  if (n == 1)
    return {lo};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

namespace detail
{

template <class T>
std::size_t nth_event(PulseSchedule const &s, std::size_t nth)
{
  for (std::size_t i = 0; i < s.events.size(); ++i)
    if (std::holds_alternative<T>(s.events[i].kind) && nth-- == 0)
      return i;
  throw std::invalid_argument(std::string("schedule lacks the required ") + std::string(event_keyword(T{})) + " event");
}

inline void write_file(std::filesystem::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FiguresError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out)
    throw FiguresError("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Write and spin-wave visibilities of an interferometer schedule, read off the
/// detector at optical phase 0 and pi.
inline std::pair<double, double> interferometer_visibilities(PulseSchedule const &schedule)
{
  std::size_t const phase_index = detail::nth_event<OpticalPhase>(schedule, 0);
  auto const at = [&](double phi) {
    PulseSchedule s = schedule;
    set_event_field(s, phase_index, "rad", phi);
    auto const rec = run_schedule(s);
    double w = 0.0, a = 0.0;
    for (auto const &r : rec)
      (r.channel == Channel::write ? w : a) = r.intensity;
    return std::pair{w, a};
  };
  auto const [w0, a0] = at(0.0);
  auto const [w1, a1] = at(std::numbers::pi);
  return {std::abs(w0 - w1) / (w0 + w1), std::abs(a0 - a1) / (a0 + a1)};
}

/// Sets the spin-wave decay rate and the area of the mixing pulse so the
/// simulated fringes reach the target visibilities. Seeds from the closed
/// form, then Newton iterations on the simulated visibilities absorb the
/// decay during the finite-length pulses.
inline PulseSchedule calibrate_interferometer(PulseSchedule schedule, double v_write, double v_spin)
{
  std::size_t const delay_index = detail::nth_event<Delay>(schedule, 0);
  std::size_t const mixer_index = detail::nth_event<StokesPulse>(schedule, 1);
  auto const &mixer = std::get<StokesPulse>(schedule.events[mixer_index].kind);
  if (!mixer.area)
    throw std::invalid_argument("calibrate_interferometer: mixing pulse must be specified by area");

  auto const seed = calibrate_visibility_targets(v_write, v_spin);
  double const tau = event_duration_ns(schedule.events[delay_index].kind) * 1e-9;
  double gamma = -std::log(seed.arm_ratio) / tau;
  double area = seed.second_area;

  auto const residual = [&](double g, double th) {
    PulseSchedule s = schedule;
    s.decoherence.gamma = std::max(g, 0.0);
    set_event_field(s, mixer_index, "area", th);
    auto const [vw, vs] = interferometer_visibilities(s);
    return std::pair{vw - v_write, vs - v_spin};
  };
  for (int it = 0; it < 20; ++it)
  {
    auto const [f1, f2] = residual(gamma, area);
    if (std::abs(f1) < 1e-13 && std::abs(f2) < 1e-13)
      break;
    double const hg = 1e-6 * gamma + 1e-3, ht = 1e-7;
    auto const [g1, g2] = residual(gamma + hg, area);
    auto const [t1, t2] = residual(gamma, area + ht);
    double const j11 = (g1 - f1) / hg, j21 = (g2 - f2) / hg;
    double const j12 = (t1 - f1) / ht, j22 = (t2 - f2) / ht;
    double const det = j11 * j22 - j12 * j21;
    if (det == 0.0)
      break;
    gamma -= (j22 * f1 - j12 * f2) / det;
    area -= (-j21 * f1 + j11 * f2) / det;
  }
  schedule.decoherence.gamma = std::max(gamma, 0.0);
  set_event_field(schedule, mixer_index, "area", area);
  return schedule;
}

/// Fringe phase of the write channel over one period.
inline double write_fringe_phase(PulseSchedule const &schedule, std::size_t points, unsigned jobs = 1)
{
  ScanSpec spec = parse_scan_spec("phase=0:" + format_double(2.0 * std::numbers::pi) + ":" + std::to_string(points),
                                  schedule);
  auto const fit = fit_cosine_fringe(channel_series(scan(schedule, spec, {jobs, {}}), Channel::write));
  if (!fit.converged)
    throw FiguresError("fringe fit did not converge: " + fit.message);
  return fit.at("phase0");
}

namespace detail
{

struct RabiLine
{
  std::string csv;
  FitResult line;
};

inline RabiLine rabi_frequency_line(PulseSchedule const &base, std::vector<double> const &amps, double two_eta_per_ns)
{
  std::size_t const stokes = nth_event<StokesPulse>(base, 0);
  std::string csv = "amplitude,omega_rad_per_ns,omega_expected_rad_per_ns\n";
  Series pts;
  for (double a : amps)
  {
    PulseSchedule s = base;
    set_event_field(s, stokes, "amp", a);
    auto const fit = fit_damped_rabi(channel_trace(run_schedule(s), Channel::write));
    if (!fit.converged)
      throw FiguresError("Rabi fit did not converge at amplitude " + format_double(a) + ": " + fit.message);
    double const w = fit.at("omega");
    pts.emplace_back(a, w);
    csv += format_double(a) + "," + format_double(w) + "," + format_double(two_eta_per_ns * a) + "\n";
  }
  return {csv, fit_linear(pts)};
}

}  // namespace detail

/// Writes fig2a..fig6b CSV files and summary.json into `dir`, returns the summary.
inline nlohmann::json generate_figures(std::filesystem::path const &dir, FiguresConfig const &cfg = {})
{
  if (cfg.amplitude_points < 2 || cfg.phase_points < 5 || cfg.shift_phase_points < 5 || cfg.power_points < 2 ||
      cfg.detuning_points < 2)
    throw std::invalid_argument("figure grids need at least 2 amplitude, power and detuning points and 5 phase points");

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw FiguresError("cannot create output directory '" + dir.string() + "'");

  auto const presets = builtin_sequences();
  nlohmann::json summary;
  summary["schema_version"] = 1;

  // fig2a-d: Rabi-like oscillation traces and frequency vs drive amplitude.
  auto const amps = inclusive_grid(cfg.amplitude_min, cfg.amplitude_max, cfg.amplitude_points);
  for (auto const &[name, trace_file, line_file] :
       {std::tuple{"rabi_from_spinwave", "fig2a.csv", "fig2b.csv"}, std::tuple{"rabi_from_write", "fig2c.csv", "fig2d.csv"}})
  {
    auto const &sched = presets.at(name);
    double const two_eta = 2.0 * std::abs(sched.coupling.eta()) * 1e-9;
    detail::write_file(dir / trace_file, to_csv(single_run(sched)));
    auto const line = detail::rabi_frequency_line(sched, amps, two_eta);
    detail::write_file(dir / line_file, line.csv);
    summary[std::string(line_file).substr(0, 5)] = {{"slope_rad_per_ns", line.line.at("slope")},
                                                    {"intercept_rad_per_ns", line.line.at("intercept")},
                                                    {"r_squared", line.line.at("r_squared")},
                                                    {"expected_slope_rad_per_ns", two_eta}};
  }

  // fig4: complementary fringes at the calibrated visibilities.
  PulseSchedule interf =
      calibrate_interferometer(presets.at("hybrid_interferometer"), cfg.target_visibility_write, cfg.target_visibility_spin);
  interf.kappa = cfg.kappa;
  std::size_t const probe_index = detail::nth_event<ProbePulse>(interf, 0);
  set_event_field(interf, probe_index, "detune", cfg.probe_detuning_ghz);
  set_event_field(interf, probe_index, "dur", cfg.probe_duration_ns);
  set_event_field(interf, probe_index, "power", 0.0);

  auto const fringe_spec = parse_scan_spec(
      "phase=0:" + format_double(4.0 * std::numbers::pi) + ":" + std::to_string(cfg.phase_points), interf);
  auto const fringes = scan(interf, fringe_spec, {cfg.jobs, {}});
  detail::write_file(dir / "fig4.csv", to_csv(fringes));
  auto const fit_w = fit_cosine_fringe(channel_series(fringes, Channel::write));
  auto const fit_s = fit_cosine_fringe(channel_series(fringes, Channel::spinwave));
  if (!fit_w.converged || !fit_s.converged)
    throw FiguresError("fig4 fringe fit did not converge");
  summary["fig4"] = {{"visibility_write", fit_w.at("visibility")},
                     {"visibility_spinwave", fit_s.at("visibility")},
                     {"target_write", cfg.target_visibility_write},
                     {"target_spinwave", cfg.target_visibility_spin},
                     {"phase_offset_rad", wrap_phase(fit_s.at("phase0") - fit_w.at("phase0"))},
                     {"gamma_per_s", interf.decoherence.gamma},
                     {"mixing_area_rad", *std::get<StokesPulse>(interf.events[detail::nth_event<StokesPulse>(interf, 1)].kind).area}};

  // fig5: fringes with and without the Stark probe.
  {
    PulseSchedule on = interf;
    set_event_field(on, probe_index, "power", cfg.probe_power_mw);
    auto const off_scan = fringes;
    auto const on_scan = scan(on, fringe_spec, {cfg.jobs, {}});
    std::string csv = "series,scan_value,channel,time_ns,intensity\n";
    for (auto const &[label, res] : {std::pair{"probe_off", &off_scan}, std::pair{"probe_on", &on_scan}})
      for (auto const &p : res->points)
        for (auto const &r : p.records)
          csv += std::string(label) + "," + format_double(p.value) + "," + std::string(channel_name(r.channel)) + "," +
                 format_double(r.time_ns) + "," + format_double(r.intensity) + "\n";
    detail::write_file(dir / "fig5.csv", csv);
    auto const fit_on = fit_cosine_fringe(channel_series(on_scan, Channel::write));
    if (!fit_on.converged)
      throw FiguresError("fig5 fringe fit did not converge");
    StarkProbe const probe{cfg.probe_power_mw, cfg.probe_detuning_ghz, cfg.probe_duration_ns, cfg.kappa, {}};
    summary["fig5"] = {{"phase_shift_rad", -wrap_phase(fit_on.at("phase0") - fit_w.at("phase0"))},
                       {"predicted_rad", ac_stark_phase(probe)},
                       {"probe_power_mw", cfg.probe_power_mw},
                       {"detuning_ghz", cfg.probe_detuning_ghz},
                       {"duration_ns", cfg.probe_duration_ns}};
  }

  // fig6a/b: phase shift vs probe power at several detunings, then the inverse
  // slopes vs detuning.
  {
    auto const powers = inclusive_grid(cfg.power_min_mw, cfg.power_max_mw, cfg.power_points);
    auto const detunings = inclusive_grid(cfg.detuning_min_ghz, cfg.detuning_max_ghz, cfg.detuning_points);
    double const reference = write_fringe_phase(interf, cfg.shift_phase_points, cfg.jobs);
    std::string csv_a = "detuning_ghz,power_mw,phase_shift_deg\n";
    std::string csv_b = "detuning_ghz,inverse_slope_mw_per_deg,slope_deg_per_mw\n";
    Series inverse;
    nlohmann::json slopes = nlohmann::json::array();
    for (double d : detunings)
    {
      Series shifts;
      for (double pw : powers)
      {
        PulseSchedule s = interf;
        set_event_field(s, probe_index, "detune", d);
        set_event_field(s, probe_index, "power", pw);
        double const shift_deg =
            -wrap_phase(write_fringe_phase(s, cfg.shift_phase_points, cfg.jobs) - reference) / degrees_to_radians;
        shifts.emplace_back(pw, shift_deg);
        csv_a += format_double(d) + "," + format_double(pw) + "," + format_double(shift_deg) + "\n";
      }
      double const slope = fit_linear(shifts).at("slope");
      inverse.emplace_back(d, 1.0 / slope);
      slopes.push_back({{"detuning_ghz", d}, {"slope_deg_per_mw", slope}});
      csv_b += format_double(d) + "," + format_double(1.0 / slope) + "," + format_double(slope) + "\n";
    }
    detail::write_file(dir / "fig6a.csv", csv_a);
    detail::write_file(dir / "fig6b.csv", csv_b);
    auto const second = fit_linear(inverse);
    summary["fig6"] = {{"slopes", slopes},
                       {"inverse_slope_per_ghz", second.at("slope")},
                       {"inverse_slope_intercept", second.at("intercept")},
                       {"kappa_fit", 1.0 / (second.at("slope") * cfg.probe_duration_ns)},
                       {"kappa_configured", cfg.kappa},
                       {"duration_ns", cfg.probe_duration_ns}};
  }

  detail::write_file(dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace ramanlab
