#pragma once

// Line-oriented pulse-sequence language.
//
//   # comment
//   [params]
//   g_eg=1e8
//   ...
//   [events]
//   prepare at=0ns amp=1
//   stokes at=100ns amp=5 dur=200ns
//   detect channel=write samples=201
//
// Every event line is `<keyword> <key>=<value>...`. Durations and times carry
// a unit suffix (ns, us, ms). `at=` is optional and defaults to the end of the
// previous event. Lines before any section header are events.

#include "ramanlab/format.hpp"
#include "ramanlab/raman_core.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ramanlab
{

constexpr double speed_of_light = 299792458.0;  // m/s

struct PrepareSpinWave
{
  double amplitude = 0.0;
  double phase = 0.0;
  friend bool operator==(PrepareSpinWave const &, PrepareSpinWave const &) = default;
};

struct InjectWrite
{
  double amplitude = 0.0;
  double phase = 0.0;
  friend bool operator==(InjectWrite const &, InjectWrite const &) = default;
};

/// Strong Stokes drive. Exactly one of `amplitude` (|A_S|, area follows from
/// the coupling) or `area` (pulse area in rad) is set. `phase` is the splitter
/// phase; 0 gives the real rotation of beam_splitter_transform.
struct StokesPulse
{
  std::optional<double> amplitude;
  std::optional<double> area;
  double duration_ns = 0.0;
  double phase = 0.0;
  friend bool operator==(StokesPulse const &, StokesPulse const &) = default;
};

/// Free evolution. When `fiber_m` is set the duration is the fiber transit
/// time at the schedule's group index.
struct Delay
{
  double duration_ns = 0.0;
  std::optional<double> fiber_m;
  friend bool operator==(Delay const &, Delay const &) = default;
};

struct OpticalPhase
{
  double radians = 0.0;
  friend bool operator==(OpticalPhase const &, OpticalPhase const &) = default;
};

/// Off-resonant probe gated onto the spin wave between the two splitters.
/// The calibration constant lives in the schedule parameters.
struct ProbePulse
{
  double power_mw = 0.0;
  double detuning_ghz = 1.0;
  double duration_ns = 0.0;
  std::optional<double> field_amplitude;  // |E| for the microscopic form
  friend bool operator==(ProbePulse const &, ProbePulse const &) = default;
};

struct ReadPulse
{
  double duration_ns = 0.0;
  double efficiency = 1.0;
  friend bool operator==(ReadPulse const &, ReadPulse const &) = default;
};

enum class Channel
{
  write,
  spinwave
};

inline std::string_view channel_name(Channel c) { return c == Channel::write ? "write" : "spinwave"; }

inline std::optional<Channel> channel_from_name(std::string_view name)
{
  if (name == "write")
    return Channel::write;
  if (name == "spinwave")
    return Channel::spinwave;
  return std::nullopt;
}

/// Detector snapshot. With samples > 1 the channel is sampled evenly across
/// the most recent Stokes pulse, both ends included.
struct Detect
{
  Channel channel = Channel::write;
  std::size_t samples = 1;
  friend bool operator==(Detect const &, Detect const &) = default;
};

using EventKind = std::variant<PrepareSpinWave, InjectWrite, StokesPulse, Delay, OpticalPhase, ProbePulse, ReadPulse,
                               Detect>;

struct SequenceEvent
{
  double start_ns = 0.0;
  EventKind kind;
  friend bool operator==(SequenceEvent const &, SequenceEvent const &) = default;
};

inline double event_duration_ns(EventKind const &kind)
{
  return std::visit(
      [](auto const &e) -> double {
        if constexpr (requires { e.duration_ns; })
          return e.duration_ns;
        else
          return 0.0;
      },
      kind);
}

inline std::string_view event_keyword(EventKind const &kind)
{
  static constexpr std::array<std::string_view, std::variant_size_v<EventKind>> names{
      "prepare", "inject", "stokes", "delay", "phase", "probe", "read", "detect"};
  return names[kind.index()];
}

// Drive pulses and free-evolution windows may not overlap each other.
inline bool is_exclusive(EventKind const &kind)
{
  return std::holds_alternative<StokesPulse>(kind) || std::holds_alternative<ReadPulse>(kind) ||
         std::holds_alternative<Delay>(kind);
}

struct PulseSchedule
{
  RamanCoupling coupling{1e8, 1e8, 1e9};
  DecoherenceModel decoherence{};
  double kappa = 0.06;        // deg GHz / (ns mW)
  double fiber_index = 1.47;  // group index of the delay fiber
  std::vector<SequenceEvent> events;

  friend bool operator==(PulseSchedule const &, PulseSchedule const &) = default;
};

inline double fiber_delay_ns(double length_m, double group_index)
{
  return length_m * group_index / speed_of_light * 1e9;
}

enum class SequenceErrorKind
{
  invalid_utf8,
  malformed_line,
  unknown_section,
  unknown_keyword,
  unknown_key,
  duplicate_key,
  missing_key,
  conflicting_keys,
  bad_value,
  bad_unit,
  negative_duration,
  out_of_range,
  bad_param,
  unsorted_events,
  overlapping_events,
  missing_detect,
};

inline std::string_view error_kind_name(SequenceErrorKind kind)
{
  switch (kind)
  {
  case SequenceErrorKind::invalid_utf8: return "invalid UTF-8";
  case SequenceErrorKind::malformed_line: return "malformed line";
  case SequenceErrorKind::unknown_section: return "unknown section";
  case SequenceErrorKind::unknown_keyword: return "unknown keyword";
  case SequenceErrorKind::unknown_key: return "unknown key";
  case SequenceErrorKind::duplicate_key: return "duplicate key";
  case SequenceErrorKind::missing_key: return "missing key";
  case SequenceErrorKind::conflicting_keys: return "conflicting keys";
  case SequenceErrorKind::bad_value: return "bad value";
  case SequenceErrorKind::bad_unit: return "bad unit";
  case SequenceErrorKind::negative_duration: return "negative duration";
  case SequenceErrorKind::out_of_range: return "value out of range";
  case SequenceErrorKind::bad_param: return "bad parameter";
  case SequenceErrorKind::unsorted_events: return "events out of order";
  case SequenceErrorKind::overlapping_events: return "overlapping events";
  case SequenceErrorKind::missing_detect: return "missing detect event";
  }
  return "error";
}

class SequenceError : public std::runtime_error
{
public:
  SequenceError(SequenceErrorKind kind, std::size_t line, std::size_t column, std::string const &message)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                           std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind), line_(line), column_(column)
  {
  }

  SequenceErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  SequenceErrorKind kind_;
  std::size_t line_;
  std::size_t column_;
};

namespace detail
{

inline bool valid_utf8(std::string_view s, std::size_t &bad_offset)
{
  std::size_t i = 0;
  while (i < s.size())
  {
    auto const c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (c < 0x80)
      len = 1;
    else if ((c >> 5) == 0x6 && c >= 0xC2)
      len = 2;
    else if ((c >> 4) == 0xE)
      len = 3;
    else if ((c >> 3) == 0x1E && c <= 0xF4)
      len = 4;
    else
    {
      bad_offset = i;
      return false;
    }
    if (i + len > s.size())
    {
      bad_offset = i;
      return false;
    }
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
      {
        bad_offset = i;
        return false;
      }
    i += len;
  }
  return true;
}

struct Token
{
  std::string_view key;
  std::string_view value;
  std::size_t column;
};

struct Scale
{
  std::string_view suffix;
  double factor;
};

constexpr std::array<Scale, 3> time_units{{{"ns", 1.0}, {"us", 1e3}, {"ms", 1e6}}};
constexpr std::array<Scale, 1> power_units{{{"mW", 1.0}}};
constexpr std::array<Scale, 2> detuning_units{{{"GHz", 1.0}, {"MHz", 1e-3}}};
constexpr std::array<Scale, 2> length_units{{{"km", 1e3}, {"m", 1.0}}};

class EventLine
{
public:
  EventLine(std::size_t line, std::size_t keyword_column, std::vector<Token> tokens)
      : line_(line), keyword_column_(keyword_column), tokens_(std::move(tokens))
  {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (tokens_[i].key == tokens_[j].key)
          fail(SequenceErrorKind::duplicate_key, tokens_[i].column,
               "key '" + std::string(tokens_[i].key) + "' given twice");
  }

  [[noreturn]] void fail(SequenceErrorKind kind, std::size_t column, std::string const &msg) const
  {
    throw SequenceError(kind, line_, column, msg);
  }

  std::size_t line() const { return line_; }
  std::size_t keyword_column() const { return keyword_column_; }

  Token const *find(std::string_view key)
  {
    for (auto &t : tokens_)
      if (t.key == key)
      {
        used_.push_back(key);
        return &t;
      }
    return nullptr;
  }

  bool has(std::string_view key) const
  {
    return std::any_of(tokens_.begin(), tokens_.end(), [&](Token const &t) { return t.key == key; });
  }

  Token const &require(std::string_view key, std::string_view keyword)
  {
    if (auto const *t = find(key))
      return *t;
    fail(SequenceErrorKind::missing_key, keyword_column_,
         "'" + std::string(keyword) + "' requires key '" + std::string(key) + "'");
  }

  double number(Token const &t) const
  {
    auto const v = parse_double(t.value);
    if (!v)
      fail(SequenceErrorKind::bad_value, t.column,
           "'" + std::string(t.value) + "' is not a finite number for key '" + std::string(t.key) + "'");
    return *v;
  }

  template <std::size_t N>
  double quantity(Token const &t, std::array<Scale, N> const &units) const
  {
    for (auto const &u : units)
    {
      if (t.value.size() > u.suffix.size() && t.value.ends_with(u.suffix))
      {
        auto const body = t.value.substr(0, t.value.size() - u.suffix.size());
        auto const v = parse_double(body);
        if (!v)
          fail(SequenceErrorKind::bad_value, t.column, "'" + std::string(t.value) + "' is not a number with unit");
        return *v * u.factor;
      }
    }
    std::string expected;
    for (auto const &u : units)
      expected += (expected.empty() ? "" : ", ") + std::string(u.suffix);
    fail(SequenceErrorKind::bad_unit, t.column,
         "key '" + std::string(t.key) + "' needs a unit suffix (" + expected + "), got '" + std::string(t.value) +
             "'");
  }

  double duration(Token const &t) const
  {
    double const v = quantity(t, time_units);
    if (v < 0.0)
      fail(SequenceErrorKind::negative_duration, t.column, "duration '" + std::string(t.value) + "' is negative");
    return v;
  }

  void reject_unused() const
  {
    for (auto const &t : tokens_)
      if (std::find(used_.begin(), used_.end(), t.key) == used_.end())
        fail(SequenceErrorKind::unknown_key, t.column, "unexpected key '" + std::string(t.key) + "'");
  }

private:
  std::size_t line_;
  std::size_t keyword_column_;
  std::vector<Token> tokens_;
  std::vector<std::string_view> used_;
};

inline EventKind parse_event_body(std::string_view keyword, EventLine &line, PulseSchedule const &schedule)
{
  auto const opt_number = [&](std::string_view key, double fallback) {
    auto const *t = line.find(key);
    return t ? line.number(*t) : fallback;
  };
  auto const duration = [&](std::string_view kw) { return line.duration(line.require("dur", kw)); };
  auto const exactly_one = [&](std::string_view a, std::string_view b, std::string_view kw) {
    bool const ha = line.has(a), hb = line.has(b);
    if (ha && hb)
      line.fail(SequenceErrorKind::conflicting_keys, line.keyword_column(),
                "'" + std::string(kw) + "' takes either '" + std::string(a) + "' or '" + std::string(b) +
                    "', not both");
    if (!ha && !hb)
      line.fail(SequenceErrorKind::missing_key, line.keyword_column(),
                "'" + std::string(kw) + "' requires key '" + std::string(a) + "' or '" + std::string(b) + "'");
    return ha;
  };

  if (keyword == "prepare" || keyword == "inject")
  {
    double const amp = line.number(line.require("amp", keyword));
    double const phase = opt_number("phase", 0.0);
    if (keyword == "prepare")
      return PrepareSpinWave{amp, phase};
    return InjectWrite{amp, phase};
  }
  if (keyword == "stokes")
  {
    StokesPulse p;
    if (exactly_one("amp", "area", keyword))
    {
      auto const &t = *line.find("amp");
      p.amplitude = line.number(t);
      if (*p.amplitude < 0.0)
        line.fail(SequenceErrorKind::out_of_range, t.column, "stokes amplitude must be non-negative");
    }
    else
      p.area = line.number(*line.find("area"));
    p.duration_ns = duration(keyword);
    p.phase = opt_number("phase", 0.0);
    return p;
  }
  if (keyword == "delay")
  {
    Delay d;
    if (exactly_one("dur", "fiber", keyword))
      d.duration_ns = duration(keyword);
    else
    {
      auto const &t = *line.find("fiber");
      d.fiber_m = line.quantity(t, length_units);
      if (*d.fiber_m < 0.0)
        line.fail(SequenceErrorKind::negative_duration, t.column, "fiber length must be non-negative");
      d.duration_ns = fiber_delay_ns(*d.fiber_m, schedule.fiber_index);
    }
    return d;
  }
  if (keyword == "phase")
    return OpticalPhase{line.number(line.require("rad", keyword))};
  if (keyword == "probe")
  {
    ProbePulse p;
    auto const &pt = line.require("power", keyword);
    p.power_mw = line.quantity(pt, power_units);
    if (p.power_mw < 0.0)
      line.fail(SequenceErrorKind::out_of_range, pt.column, "probe power must be non-negative");
    auto const &dt = line.require("detune", keyword);
    p.detuning_ghz = line.quantity(dt, detuning_units);
    if (p.detuning_ghz == 0.0)
      line.fail(SequenceErrorKind::out_of_range, dt.column, "probe detuning must be nonzero");
    p.duration_ns = duration(keyword);
    if (auto const *t = line.find("field"))
      p.field_amplitude = line.number(*t);
    return p;
  }
  if (keyword == "read")
  {
    ReadPulse r;
    r.duration_ns = duration(keyword);
    auto const &t = line.require("eff", keyword);
    r.efficiency = line.number(t);
    if (r.efficiency < 0.0 || r.efficiency > 1.0)
      line.fail(SequenceErrorKind::out_of_range, t.column, "conversion efficiency must lie in [0, 1]");
    return r;
  }
  if (keyword == "detect")
  {
    Detect d;
    auto const &t = line.require("channel", keyword);
    auto const ch = channel_from_name(t.value);
    if (!ch)
      line.fail(SequenceErrorKind::bad_value, t.column,
                "channel must be 'write' or 'spinwave', got '" + std::string(t.value) + "'");
    d.channel = *ch;
    if (auto const *s = line.find("samples"))
    {
      auto const n = parse_integer(s->value);
      if (!n || *n < 1 || *n > 1000000)
        line.fail(SequenceErrorKind::bad_value, s->column, "samples must be an integer in [1, 1000000]");
      d.samples = static_cast<std::size_t>(*n);
    }
    return d;
  }
  line.fail(SequenceErrorKind::unknown_keyword, line.keyword_column(), "unknown keyword '" + std::string(keyword) + "'");
}

inline void set_param(PulseSchedule &s, std::string_view key, double value, std::size_t line, std::size_t column)
{
  auto const bad = [&](std::string const &msg) { throw SequenceError(SequenceErrorKind::bad_param, line, column, msg); };
  if (key == "g_eg")
    s.coupling.g_eg = value;
  else if (key == "g_em")
    s.coupling.g_em = value;
  else if (key == "delta")
  {
    if (value == 0.0)
      bad("delta must be nonzero");
    s.coupling.delta = value;
  }
  else if (key == "gamma")
  {
    if (value < 0.0)
      bad("gamma must be non-negative");
    s.decoherence.gamma = value;
  }
  else if (key == "optical_loss")
  {
    if (value < 0.0 || value > 1.0)
      bad("optical_loss must lie in [0, 1]");
    s.decoherence.optical_loss = value;
  }
  else if (key == "kappa")
    s.kappa = value;
  else if (key == "fiber_index")
  {
    if (value <= 0.0)
      bad("fiber_index must be positive");
    s.fiber_index = value;
  }
  else
    throw SequenceError(SequenceErrorKind::unknown_key, line, column, "unknown parameter '" + std::string(key) + "'");
}

}  // namespace detail

/// Checks ordering, overlap and the detect requirement. `lines` gives the
/// source line of each event for diagnostics (empty: report the event index).
inline void validate_schedule(PulseSchedule const &schedule, std::span<std::size_t const> lines = {},
                              std::size_t end_line = 1)
{
  auto const line_of = [&](std::size_t i) { return i < lines.size() ? lines[i] : i + 1; };
  double prev_start = -std::numeric_limits<double>::infinity();
  double exclusive_end = -std::numeric_limits<double>::infinity();
  std::size_t exclusive_index = 0;
  bool has_detect = false;
  bool has_stokes = false;
  for (std::size_t i = 0; i < schedule.events.size(); ++i)
  {
    auto const &ev = schedule.events[i];
    if (!std::isfinite(ev.start_ns) || ev.start_ns < 0.0)
      throw SequenceError(SequenceErrorKind::out_of_range, line_of(i), 1, "event start time must be non-negative");
    if (ev.start_ns < prev_start)
      throw SequenceError(SequenceErrorKind::unsorted_events, line_of(i), 1,
                          "event starts at " + format_double(ev.start_ns) + "ns, before the previous event");
    prev_start = ev.start_ns;
    if (event_duration_ns(ev.kind) < 0.0)
      throw SequenceError(SequenceErrorKind::negative_duration, line_of(i), 1, "negative duration");
    if (is_exclusive(ev.kind))
    {
      if (ev.start_ns < exclusive_end - 1e-9)
        throw SequenceError(SequenceErrorKind::overlapping_events, line_of(i), 1,
                            std::string(event_keyword(ev.kind)) + " overlaps the " +
                                std::string(event_keyword(schedule.events[exclusive_index].kind)) + " on line " +
                                std::to_string(line_of(exclusive_index)));
      exclusive_end = ev.start_ns + event_duration_ns(ev.kind);
      exclusive_index = i;
    }
    if (std::holds_alternative<StokesPulse>(ev.kind))
      has_stokes = true;
    if (auto const *d = std::get_if<Detect>(&ev.kind))
    {
      has_detect = true;
      if (d->samples > 1 && !has_stokes)
        throw SequenceError(SequenceErrorKind::bad_value, line_of(i), 1,
                            "detect with samples > 1 needs a preceding stokes pulse");
    }
  }
  if (!has_detect)
    throw SequenceError(SequenceErrorKind::missing_detect, end_line, 1, "schedule has no detect event");
  if (!schedule.coupling.valid())
    throw SequenceError(SequenceErrorKind::bad_param, 1, 1, "coupling detuning must be nonzero");
}

inline PulseSchedule parse_sequence(std::string_view text)
{
  std::size_t bad = 0;
  if (!detail::valid_utf8(text, bad))
  {
    auto const before = text.substr(0, bad);
    auto const line = static_cast<std::size_t>(std::count(before.begin(), before.end(), '\n')) + 1;
    auto const nl = before.rfind('\n');
    std::size_t const col = nl == std::string_view::npos ? bad + 1 : bad - nl;
    throw SequenceError(SequenceErrorKind::invalid_utf8, line, col, "input is not valid UTF-8");
  }

  PulseSchedule schedule;
  std::vector<std::size_t> event_lines;
  std::vector<std::string> seen_params;
  enum class Section
  {
    params,
    events
  } section = Section::events;
  double cursor = 0.0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size())
  {
    auto const nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (auto const hash = raw.find('#'); hash != std::string_view::npos)
      raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r')
      raw.remove_suffix(1);

    // Tokenise on blanks, remembering 1-based columns.
    std::vector<std::pair<std::string_view, std::size_t>> words;
    for (std::size_t i = 0; i < raw.size();)
    {
      if (raw[i] == ' ' || raw[i] == '\t')
      {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t')
        ++j;
      words.emplace_back(raw.substr(i, j - i), i + 1);
      i = j;
    }
    if (words.empty())
      continue;

    auto const [first, first_col] = words.front();
    if (first.starts_with('['))
    {
      if (words.size() != 1 || !first.ends_with(']'))
        throw SequenceError(SequenceErrorKind::malformed_line, line_no, first_col, "malformed section header");
      if (first == "[params]")
      {
        if (!schedule.events.empty())
          throw SequenceError(SequenceErrorKind::malformed_line, line_no, first_col,
                              "[params] must come before the first event");
        section = Section::params;
      }
      else if (first == "[events]")
        section = Section::events;
      else
        throw SequenceError(SequenceErrorKind::unknown_section, line_no, first_col,
                            "unknown section '" + std::string(first) + "'");
      continue;
    }

    if (section == Section::params)
    {
      // key=value, blanks around '=' allowed
      std::string joined;
      for (auto const &w : words)
        joined += w.first;
      auto const eq = joined.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == joined.size())
        throw SequenceError(SequenceErrorKind::malformed_line, line_no, first_col, "expected 'key=value' in [params]");
      std::string const key = joined.substr(0, eq);
      auto const value = parse_double(std::string_view(joined).substr(eq + 1));
      if (std::find(seen_params.begin(), seen_params.end(), key) != seen_params.end())
        throw SequenceError(SequenceErrorKind::duplicate_key, line_no, first_col, "parameter '" + key + "' given twice");
      if (!value)
        throw SequenceError(SequenceErrorKind::bad_value, line_no, first_col,
                            "parameter '" + key + "' needs a finite number");
      detail::set_param(schedule, key, *value, line_no, first_col);
      seen_params.push_back(key);
      continue;
    }

    if (first.find('=') != std::string_view::npos)
      throw SequenceError(SequenceErrorKind::malformed_line, line_no, first_col,
                          "event line must start with a keyword");
    std::vector<detail::Token> tokens;
    for (std::size_t k = 1; k < words.size(); ++k)
    {
      auto const [w, col] = words[k];
      auto const eq = w.find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == w.size())
        throw SequenceError(SequenceErrorKind::malformed_line, line_no, col,
                            "expected 'key=value', got '" + std::string(w) + "'");
      tokens.push_back({w.substr(0, eq), w.substr(eq + 1), col});
    }
    detail::EventLine line(line_no, first_col, std::move(tokens));
    auto kind = detail::parse_event_body(first, line, schedule);
    double start = cursor;
    if (auto const *t = line.find("at"))
    {
      start = line.quantity(*t, detail::time_units);
      if (start < 0.0)
        line.fail(SequenceErrorKind::out_of_range, t->column, "start time must be non-negative");
    }
    line.reject_unused();
    cursor = std::max(cursor, start + event_duration_ns(kind));
    schedule.events.push_back({start, std::move(kind)});
    event_lines.push_back(line_no);
  }

  validate_schedule(schedule, event_lines, line_no);
  return schedule;
}

inline std::string serialize_sequence(PulseSchedule const &schedule)
{
  std::string out = "# ramanlab sequence v1\n[params]\n";
  auto const param = [&](std::string_view key, double v) {
    out += key;
    out += '=';
    out += format_double(v);
    out += '\n';
  };
  param("g_eg", schedule.coupling.g_eg);
  param("g_em", schedule.coupling.g_em);
  param("delta", schedule.coupling.delta);
  param("gamma", schedule.decoherence.gamma);
  param("optical_loss", schedule.decoherence.optical_loss);
  param("kappa", schedule.kappa);
  param("fiber_index", schedule.fiber_index);
  if (schedule.events.empty())
    return out;

  out += "[events]\n";
  for (auto const &ev : schedule.events)
  {
    out += event_keyword(ev.kind);
    auto const kv = [&](std::string_view key, std::string const &value) {
      out += ' ';
      out += key;
      out += '=';
      out += value;
    };
    kv("at", format_double(ev.start_ns) + "ns");
    std::visit(
        [&](auto const &e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, PrepareSpinWave> || std::is_same_v<T, InjectWrite>)
          {
            kv("amp", format_double(e.amplitude));
            kv("phase", format_double(e.phase));
          }
          else if constexpr (std::is_same_v<T, StokesPulse>)
          {
            if (e.amplitude)
              kv("amp", format_double(*e.amplitude));
            else
              kv("area", format_double(e.area.value_or(0.0)));
            kv("dur", format_double(e.duration_ns) + "ns");
            kv("phase", format_double(e.phase));
          }
          else if constexpr (std::is_same_v<T, Delay>)
          {
            if (e.fiber_m)
              kv("fiber", format_double(*e.fiber_m) + "m");
            else
              kv("dur", format_double(e.duration_ns) + "ns");
          }
          else if constexpr (std::is_same_v<T, OpticalPhase>)
            kv("rad", format_double(e.radians));
          else if constexpr (std::is_same_v<T, ProbePulse>)
          {
            kv("power", format_double(e.power_mw) + "mW");
            kv("detune", format_double(e.detuning_ghz) + "GHz");
            kv("dur", format_double(e.duration_ns) + "ns");
            if (e.field_amplitude)
              kv("field", format_double(*e.field_amplitude));
          }
          else if constexpr (std::is_same_v<T, ReadPulse>)
          {
            kv("dur", format_double(e.duration_ns) + "ns");
            kv("eff", format_double(e.efficiency));
          }
          else if constexpr (std::is_same_v<T, Detect>)
          {
            kv("channel", std::string(channel_name(e.channel)));
            if (e.samples != 1)
              kv("samples", std::to_string(e.samples));
          }
        },
        ev.kind);
    out += '\n';
  }
  return out;
}

// Presets as shipped. Stokes amplitudes are in field units of the default
// coupling (eta = 1e7 rad/s), so amp=5 gives |Omega| = 0.1 rad/ns.
namespace presets
{

inline constexpr std::string_view rabi_from_spinwave = R"(# Rabi-like oscillation from a prepared spin wave.
# The 100 ns gap between preparation and drive is nominal.
[params]
g_eg=1e8
g_em=1e8
delta=1e9
gamma=6e5
optical_loss=1
kappa=0.06
fiber_index=1.47
[events]
prepare at=0ns amp=1
stokes at=100ns amp=5 dur=200ns
detect at=300ns channel=write samples=201
)";

inline constexpr std::string_view rabi_from_write = R"(# Rabi-like oscillation from an injected write field, atoms in the ground state.
[params]
g_eg=1e8
g_em=1e8
delta=1e9
gamma=6e5
optical_loss=1
kappa=0.06
fiber_index=1.47
[events]
inject at=0ns amp=1
stokes at=100ns amp=5 dur=200ns
detect at=300ns channel=write samples=201
)";

inline constexpr std::string_view hybrid_interferometer = R"(# Atom-light hybrid interferometer: split, delay through 100 m of fiber,
# optical phase and optional Stark probe, mix, then read out the spin wave.
# The mixing pulse starts as the delay ends.
[params]
g_eg=1e8
g_em=1e8
delta=1e9
gamma=6e5
optical_loss=1
kappa=0.06
fiber_index=1.47
[events]
prepare at=0ns amp=1
stokes at=100ns area=1.5707963267948966 dur=20ns
delay at=120ns fiber=100m
phase at=130ns rad=0
probe at=250ns power=0mW detune=2.5GHz dur=80ns
stokes area=1.5707963267948966 dur=20ns
detect channel=write
read dur=20ns eff=0.2
detect channel=spinwave
)";

}  // namespace presets

inline std::map<std::string, std::string_view> builtin_sequence_sources()
{
  return {{"rabi_from_spinwave", presets::rabi_from_spinwave},
          {"rabi_from_write", presets::rabi_from_write},
          {"hybrid_interferometer", presets::hybrid_interferometer}};
}

inline std::map<std::string, PulseSchedule> builtin_sequences()
{
  std::map<std::string, PulseSchedule> out;
  for (auto const &[name, text] : builtin_sequence_sources())
    out.emplace(name, parse_sequence(text));
  return out;
}

}  // namespace ramanlab
