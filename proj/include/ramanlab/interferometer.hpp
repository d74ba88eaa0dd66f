#pragma once

// Executes pulse schedules against the Raman beam-splitter dynamics and runs
// parameter scans over them.

#include "ramanlab/format.hpp"
#include "ramanlab/raman_core.hpp"
#include "ramanlab/sequence.hpp"

#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ramanlab
{

/// Stark probe with the calibration that maps it to a spin-wave phase.
struct StarkProbe
{
  double power_mw = 0.0;
  double detuning_ghz = 1.0;
  double duration_ns = 0.0;
  double kappa = 0.06;  // deg GHz / (ns mW)
  std::optional<double> field_amplitude;
};

constexpr double degrees_to_radians = std::numbers::pi / 180.0;

/// Calibrated phase kappa * P * dT / Delta, returned in radians.
inline double ac_stark_phase(StarkProbe const &probe)
{
  if (probe.detuning_ghz == 0.0 || !std::isfinite(probe.detuning_ghz))
    throw std::domain_error("ac_stark_phase: probe detuning must be nonzero");
  return probe.kappa * probe.power_mw * probe.duration_ns / probe.detuning_ghz * degrees_to_radians;
}

/// Light shift g_eg g_em |E|^2 / Delta in rad/s, Delta in rad/s.
inline double ac_stark_shift(RamanCoupling const &coupling, double field_amplitude, double detuning)
{
  if (detuning == 0.0 || !std::isfinite(detuning))
    throw std::domain_error("ac_stark_shift: detuning must be nonzero");
  return coupling.g_eg * coupling.g_em * field_amplitude * field_amplitude / detuning;
}

/// Phase from the microscopic form when the probe carries a field amplitude,
/// otherwise the calibrated form. The probe detuning is taken as 2 pi GHz.
inline double ac_stark_phase(StarkProbe const &probe, RamanCoupling const &coupling)
{
  if (!probe.field_amplitude)
    return ac_stark_phase(probe);
  double const detuning = 2.0 * std::numbers::pi * 1e9 * probe.detuning_ghz;
  return ac_stark_shift(coupling, *probe.field_amplitude, detuning) * probe.duration_ns * 1e-9;
}

struct DetectorRecord
{
  Channel channel = Channel::write;
  double time_ns = 0.0;
  double intensity = 0.0;
  friend bool operator==(DetectorRecord const &, DetectorRecord const &) = default;
};

/// Additive Gaussian intensity noise; off when sigma == 0.
struct NoiseConfig
{
  double sigma = 0.0;
  std::uint64_t seed = 0;
  bool enabled() const { return sigma > 0.0; }
};

inline std::vector<DetectorRecord> run_schedule(PulseSchedule const &schedule, NoiseConfig const &noise = {},
                                                std::uint64_t stream = 0)
{
  try
  {
    validate_schedule(schedule);
  }
  catch (SequenceError const &e)
  {
    throw std::invalid_argument(std::string("run_schedule: invalid schedule: ") + e.what());
  }
  if (!schedule.decoherence.valid())
    throw std::invalid_argument("run_schedule: invalid decoherence model");

  RamanCoupling const &coupling = schedule.coupling;
  double const gamma = schedule.decoherence.gamma;

  struct PulseMemo
  {
    TriWaveState before;
    double theta;
    double phase;
    double gamma_t;
    double start_ns;
    double duration_ns;
  };
  std::optional<PulseMemo> last_pulse;

  TriWaveState x;
  double readout_efficiency = 1.0;
  std::vector<DetectorRecord> records;

  auto const measure = [&](TriWaveState const &s, Channel ch) {
    return ch == Channel::write ? s.write_intensity() : readout_efficiency * s.spinwave_intensity();
  };

  for (auto const &ev : schedule.events)
  {
    std::visit(
        [&](auto const &e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, PrepareSpinWave>)
            x.s_a = std::polar(e.amplitude, e.phase);
          else if constexpr (std::is_same_v<T, InjectWrite>)
            x.a_w = std::polar(e.amplitude, e.phase);
          else if constexpr (std::is_same_v<T, StokesPulse>)
          {
            double const seconds = e.duration_ns * 1e-9;
            double theta = 0.0;
            if (e.amplitude)
            {
              DrivePulse const drive = drive_with_splitter_phase(coupling, *e.amplitude, e.phase, seconds);
              theta = pulse_area(coupling, drive);
              x.a_s = drive.amplitude;
            }
            else
            {
              theta = *e.area;
              if (seconds > 0.0)
                x.a_s = drive_with_splitter_phase(coupling, std::abs(theta) / (2.0 * std::abs(coupling.eta()) * seconds),
                                                  e.phase, seconds)
                            .amplitude;
            }
            last_pulse = PulseMemo{x, theta, e.phase, gamma * seconds, ev.start_ns, e.duration_ns};
            x = damped_beam_splitter(x, theta, e.phase, gamma * seconds);
          }
          else if constexpr (std::is_same_v<T, Delay>)
            x = apply_decoherence(x, schedule.decoherence, e.duration_ns * 1e-9);
          else if constexpr (std::is_same_v<T, OpticalPhase>)
            x = apply_phase(x, e.radians, 0.0);
          else if constexpr (std::is_same_v<T, ProbePulse>)
          {
            StarkProbe const probe{e.power_mw, e.detuning_ghz, e.duration_ns, schedule.kappa, e.field_amplitude};
            x = apply_phase(x, 0.0, ac_stark_phase(probe, coupling));
          }
          else if constexpr (std::is_same_v<T, ReadPulse>)
            readout_efficiency = e.efficiency;
          else if constexpr (std::is_same_v<T, Detect>)
          {
            if (e.samples == 1)
              records.push_back({e.channel, ev.start_ns, measure(x, e.channel)});
            else
            {
              auto const &p = *last_pulse;
              for (std::size_t k = 0; k < e.samples; ++k)
              {
                double const f = static_cast<double>(k) / static_cast<double>(e.samples - 1);
                auto const s = damped_beam_splitter(p.before, p.theta * f, p.phase, p.gamma_t * f);
                records.push_back({e.channel, p.start_ns + f * p.duration_ns, measure(s, e.channel)});
              }
            }
          }
        },
        ev.kind);
  }

  if (noise.enabled())
  {
    std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (auto &r : records)
      r.intensity = std::max(0.0, r.intensity + gauss(rng));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Scans

struct ScanSpec
{
  std::string name = "none";
  std::string unit;
  std::size_t event_index = 0;
  std::string field;
  std::vector<double> values;
};

struct ScanPoint
{
  double value = 0.0;
  std::vector<DetectorRecord> records;
  friend bool operator==(ScanPoint const &, ScanPoint const &) = default;
};

struct ScanResult
{
  std::string variable = "none";
  std::string unit;
  std::vector<ScanPoint> points;
  friend bool operator==(ScanResult const &, ScanResult const &) = default;
};

class ScanSpecError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail
{

inline std::optional<std::string_view> field_unit(EventKind const &kind, std::string_view field)
{
  return std::visit(
      [&](auto const &e) -> std::optional<std::string_view> {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PrepareSpinWave> || std::is_same_v<T, InjectWrite>)
        {
          if (field == "amp")
            return "field";
          if (field == "phase")
            return "rad";
        }
        else if constexpr (std::is_same_v<T, StokesPulse>)
        {
          if (field == "amp" && e.amplitude)
            return "field";
          if (field == "area" && e.area)
            return "rad";
          if (field == "dur")
            return "ns";
          if (field == "phase")
            return "rad";
        }
        else if constexpr (std::is_same_v<T, Delay>)
        {
          if (field == "dur")
            return "ns";
        }
        else if constexpr (std::is_same_v<T, OpticalPhase>)
        {
          if (field == "rad")
            return "rad";
        }
        else if constexpr (std::is_same_v<T, ProbePulse>)
        {
          if (field == "power")
            return "mW";
          if (field == "detune")
            return "GHz";
          if (field == "dur")
            return "ns";
          if (field == "field")
            return "field";
        }
        else if constexpr (std::is_same_v<T, ReadPulse>)
        {
          if (field == "dur")
            return "ns";
          if (field == "eff")
            return "1";
        }
        return std::nullopt;
      },
      kind);
}

}  // namespace detail

/// Sets one field of one event. Changing a duration moves every later event
/// by the change in the timeline end reached through this event, so an event
/// running alongside a longer one leaves the rest of the schedule in place.
inline void set_event_field(PulseSchedule &schedule, std::size_t index, std::string_view field, double value)
{
  if (index >= schedule.events.size())
    throw ScanSpecError("event index " + std::to_string(index) + " out of range");
  auto &ev = schedule.events[index];
  if (!detail::field_unit(ev.kind, field))
    throw ScanSpecError("event " + std::to_string(index) + " (" + std::string(event_keyword(ev.kind)) +
                        ") has no scannable field '" + std::string(field) + "'");
  if (!std::isfinite(value))
    throw ScanSpecError("scan value must be finite");

  auto const cursor = [&] {
    double end = 0.0;
    for (std::size_t i = 0; i <= index; ++i)
      end = std::max(end, schedule.events[i].start_ns + event_duration_ns(schedule.events[i].kind));
    return end;
  };
  double const old_cursor = cursor();
  std::visit(
      [&](auto &e) {
        using T = std::decay_t<decltype(e)>;
        auto const non_negative = [&](char const *what) {
          if (value < 0.0)
            throw ScanSpecError(std::string(what) + " must be non-negative");
        };
        if constexpr (std::is_same_v<T, PrepareSpinWave> || std::is_same_v<T, InjectWrite>)
          (field == "amp" ? e.amplitude : e.phase) = value;
        else if constexpr (std::is_same_v<T, StokesPulse>)
        {
          if (field == "amp")
          {
            non_negative("amp");
            e.amplitude = value;
          }
          else if (field == "area")
            e.area = value;
          else if (field == "dur")
          {
            non_negative("dur");
            e.duration_ns = value;
          }
          else
            e.phase = value;
        }
        else if constexpr (std::is_same_v<T, Delay>)
        {
          non_negative("dur");
          e.duration_ns = value;
          e.fiber_m.reset();
        }
        else if constexpr (std::is_same_v<T, OpticalPhase>)
          e.radians = value;
        else if constexpr (std::is_same_v<T, ProbePulse>)
        {
          if (field == "power")
          {
            non_negative("power");
            e.power_mw = value;
          }
          else if (field == "detune")
          {
            if (value == 0.0)
              throw ScanSpecError("detune must be nonzero");
            e.detuning_ghz = value;
          }
          else if (field == "dur")
          {
            non_negative("dur");
            e.duration_ns = value;
          }
          else
            e.field_amplitude = value;
        }
        else if constexpr (std::is_same_v<T, ReadPulse>)
        {
          if (field == "dur")
          {
            non_negative("dur");
            e.duration_ns = value;
          }
          else
          {
            if (value < 0.0 || value > 1.0)
              throw ScanSpecError("eff must lie in [0, 1]");
            e.efficiency = value;
          }
        }
      },
      ev.kind);

  double const shift = cursor() - old_cursor;
  if (shift != 0.0)
    for (std::size_t i = index + 1; i < schedule.events.size(); ++i)
      schedule.events[i].start_ns += shift;
}

/// Resolves `name` to (event index, field). Accepts `<index>.<field>` or a
/// short alias naming the first matching event: phase, amp, area, power,
/// detune, delay, eff.
inline std::pair<std::size_t, std::string> resolve_scan_target(PulseSchedule const &schedule, std::string_view name)
{
  if (auto const dot = name.find('.'); dot != std::string_view::npos)
  {
    auto const idx = parse_integer(name.substr(0, dot));
    if (!idx || *idx < 0)
      throw ScanSpecError("bad event index in scan target '" + std::string(name) + "'");
    std::string field(name.substr(dot + 1));
    auto const index = static_cast<std::size_t>(*idx);
    if (index >= schedule.events.size())
      throw ScanSpecError("event index " + std::to_string(index) + " out of range");
    if (!detail::field_unit(schedule.events[index].kind, field))
      throw ScanSpecError("event " + std::to_string(index) + " has no scannable field '" + field + "'");
    return {index, field};
  }

  auto const first = [&](auto tag, std::string field) -> std::pair<std::size_t, std::string> {
    using T = decltype(tag);
    for (std::size_t i = 0; i < schedule.events.size(); ++i)
      if (std::holds_alternative<T>(schedule.events[i].kind) && detail::field_unit(schedule.events[i].kind, field))
        return {i, field};
    throw ScanSpecError("schedule has no event for scan target '" + std::string(name) + "'");
  };
  if (name == "phase")
    return first(OpticalPhase{}, "rad");
  if (name == "amp")
    return first(StokesPulse{}, "amp");
  if (name == "area")
    return first(StokesPulse{}, "area");
  if (name == "power")
    return first(ProbePulse{}, "power");
  if (name == "detune")
    return first(ProbePulse{}, "detune");
  if (name == "delay")
    return first(Delay{}, "dur");
  if (name == "eff")
    return first(ReadPulse{}, "eff");
  throw ScanSpecError("unknown scan target '" + std::string(name) + "'");
}

/// `count` values from start towards stop, stop excluded.
inline std::vector<double> scan_grid(double start, double stop, std::size_t count)
{
  std::vector<double> v(count);
  double const step = count > 0 ? (stop - start) / static_cast<double>(count) : 0.0;
  for (std::size_t i = 0; i < count; ++i)
    v[i] = start + step * static_cast<double>(i);
  return v;
}

/// Parses `name=start:stop:count` against a schedule.
inline ScanSpec parse_scan_spec(std::string_view text, PulseSchedule const &schedule)
{
  auto const eq = text.find('=');
  if (eq == std::string_view::npos)
    throw ScanSpecError("scan spec must look like name=start:stop:count");
  auto const name = text.substr(0, eq);
  auto const range = text.substr(eq + 1);
  auto const c1 = range.find(':');
  auto const c2 = c1 == std::string_view::npos ? c1 : range.find(':', c1 + 1);
  if (c2 == std::string_view::npos || range.find(':', c2 + 1) != std::string_view::npos)
    throw ScanSpecError("scan range must be start:stop:count");
  auto const start = parse_double(range.substr(0, c1));
  auto const stop = parse_double(range.substr(c1 + 1, c2 - c1 - 1));
  auto const count = parse_integer(range.substr(c2 + 1));
  if (!start || !stop)
    throw ScanSpecError("scan start and stop must be finite numbers");
  if (!count || *count < 0 || *count > 10000000)
    throw ScanSpecError("scan count must be a non-negative integer");

  auto [index, field] = resolve_scan_target(schedule, name);
  ScanSpec spec;
  spec.name = std::string(name);
  spec.unit = std::string(*detail::field_unit(schedule.events[index].kind, field));
  spec.event_index = index;
  spec.field = field;
  spec.values = scan_grid(*start, *stop, static_cast<std::size_t>(*count));
  return spec;
}

struct ScanOptions
{
  unsigned jobs = 1;
  NoiseConfig noise{};
};

/// One run per scan value, in scan order. Parallel evaluation gives the same
/// result as sequential: point i always draws noise from stream i.
inline ScanResult scan(PulseSchedule const &schedule, ScanSpec const &spec, ScanOptions const &options = {})
{
  ScanResult result;
  result.variable = spec.name;
  result.unit = spec.unit;
  result.points.resize(spec.values.size());

  // Fail on a bad target before spawning work.
  if (!spec.values.empty())
  {
    PulseSchedule probe = schedule;
    set_event_field(probe, spec.event_index, spec.field, spec.values.front());
  }

  auto const run_point = [&](std::size_t i) {
    PulseSchedule s = schedule;
    set_event_field(s, spec.event_index, spec.field, spec.values[i]);
    result.points[i] = {spec.values[i], run_schedule(s, options.noise, i)};
  };

  std::size_t const n = spec.values.size();
  unsigned const jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      run_point(i);
    return result;
  }

  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.emplace_back([&, w] {
      try
      {
        for (std::size_t i = w; i < n; i += jobs)
          run_point(i);
      }
      catch (...)
      {
        errors[w] = std::current_exception();
      }
    });
  for (auto &t : workers)
    t.join();
  for (auto const &e : errors)
    if (e)
      std::rethrow_exception(e);
  return result;
}

/// Single run packaged as a scan with no variable.
inline ScanResult single_run(PulseSchedule const &schedule, NoiseConfig const &noise = {})
{
  ScanResult r;
  r.points.push_back({0.0, run_schedule(schedule, noise, 0)});
  return r;
}

// ---------------------------------------------------------------------------
// Visibility closed forms

/// Fringe visibility after a balanced split when the spin arm decays by
/// exp(-gamma_tau) in amplitude and the optical arm is lossless.
inline double decohered_visibility(double gamma_tau)
{
  double const x = std::exp(-gamma_tau);
  return 2.0 * x / (1.0 + x * x);
}

inline double gamma_tau_for_visibility(double visibility)
{
  if (!(visibility > 0.0 && visibility <= 1.0))
    throw std::domain_error("visibility must lie in (0, 1]");
  double const x = (1.0 - std::sqrt(1.0 - visibility * visibility)) / visibility;
  return -std::log(x);
}

/// Arm imbalance and second-splitter area that give the requested write and
/// spin-wave fringe visibilities. With spin/optical amplitude ratio r at the
/// mixer and t = tan(area/2):
///   V_write = 2tr / (1 + t^2 r^2),  V_spin = 2tr / (r^2 + t^2).
struct VisibilityCalibration
{
  double arm_ratio = 1.0;
  double second_area = std::numbers::pi / 2.0;
};

inline VisibilityCalibration calibrate_visibility_targets(double v_write, double v_spin)
{
  for (double v : {v_write, v_spin})
    if (!(v > 0.0 && v <= 1.0))
      throw std::domain_error("visibility targets must lie in (0, 1]");
  double const p = (1.0 - std::sqrt(1.0 - v_write * v_write)) / v_write;  // t r
  double const u = p * (1.0 - std::sqrt(1.0 - v_spin * v_spin)) / v_spin;  // r^2, smaller root
  double const r = std::sqrt(u);
  return {r, 2.0 * std::atan(p / r)};
}

// ---------------------------------------------------------------------------
// Export

inline constexpr int scan_schema_version = 1;
inline constexpr std::string_view scan_csv_header = "scan_value,channel,time_ns,intensity";

inline std::string to_csv(ScanResult const &result)
{
  std::string out = "# ramanlab scan v" + std::to_string(scan_schema_version) + " variable=" + result.variable +
                    " unit=" + (result.unit.empty() ? "-" : result.unit) + "\n";
  out += scan_csv_header;
  out += '\n';
  for (auto const &p : result.points)
    for (auto const &r : p.records)
    {
      out += format_double(p.value);
      out += ',';
      out += channel_name(r.channel);
      out += ',';
      out += format_double(r.time_ns);
      out += ',';
      out += format_double(r.intensity);
      out += '\n';
    }
  return out;
}

inline nlohmann::json to_json(ScanResult const &result)
{
  nlohmann::json points = nlohmann::json::array();
  for (auto const &p : result.points)
  {
    nlohmann::json records = nlohmann::json::array();
    for (auto const &r : p.records)
      records.push_back({{"channel", channel_name(r.channel)}, {"time_ns", r.time_ns}, {"intensity", r.intensity}});
    points.push_back({{"value", p.value}, {"records", std::move(records)}});
  }
  return {{"schema_version", scan_schema_version},
          {"variable", {{"name", result.variable}, {"unit", result.unit}}},
          {"points", std::move(points)}};
}

class CsvSchemaError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Reads the CSV written by to_csv. Rows with equal consecutive scan values
/// are grouped into one point.
inline ScanResult read_scan_csv(std::string_view text)
{
  ScanResult result;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size())
  {
    auto const nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty())
      continue;
    if (line.front() == '#')
    {
      std::istringstream words{std::string(line.substr(1))};
      for (std::string w; words >> w;)
      {
        if (w.starts_with("variable="))
          result.variable = w.substr(9);
        else if (w.starts_with("unit="))
          result.unit = w.substr(5) == "-" ? "" : w.substr(5);
      }
      continue;
    }
    if (!header_seen)
    {
      if (line != scan_csv_header)
        throw CsvSchemaError("line " + std::to_string(line_no) + ": expected header '" +
                             std::string(scan_csv_header) + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cells;
    for (std::size_t start = 0;;)
    {
      auto const comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (cells.size() != 4)
      throw CsvSchemaError("line " + std::to_string(line_no) + ": expected 4 columns");
    auto const value = parse_double(cells[0]);
    auto const channel = channel_from_name(cells[1]);
    auto const time = parse_double(cells[2]);
    auto const inten = parse_double(cells[3]);
    if (!value || !channel || !time || !inten)
      throw CsvSchemaError("line " + std::to_string(line_no) + ": malformed row");
    if (result.points.empty() || result.points.back().value != *value)
      result.points.push_back({*value, {}});
    result.points.back().records.push_back({*channel, *time, *inten});
  }
  if (!header_seen)
    throw CsvSchemaError("missing header '" + std::string(scan_csv_header) + "'");
  return result;
}

/// (scan value, intensity) pairs of one channel, first record per point.
inline std::vector<std::pair<double, double>> channel_series(ScanResult const &result, Channel channel)
{
  std::vector<std::pair<double, double>> out;
  for (auto const &p : result.points)
    for (auto const &r : p.records)
      if (r.channel == channel)
      {
        out.emplace_back(p.value, r.intensity);
        break;
      }
  return out;
}

/// (time, intensity) pairs of one channel across all points.
inline std::vector<std::pair<double, double>> channel_trace(ScanResult const &result, Channel channel)
{
  std::vector<std::pair<double, double>> out;
  for (auto const &p : result.points)
    for (auto const &r : p.records)
      if (r.channel == channel)
        out.emplace_back(r.time_ns, r.intensity);
  return out;
}

inline std::vector<std::pair<double, double>> channel_trace(std::vector<DetectorRecord> const &records, Channel channel)
{
  std::vector<std::pair<double, double>> out;
  for (auto const &r : records)
    if (r.channel == channel)
      out.emplace_back(r.time_ns, r.intensity);
  return out;
}

}  // namespace ramanlab
