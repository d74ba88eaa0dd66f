// Acceptance run: one PASS/FAIL line per check, nonzero exit on any failure.
// Usage: acceptance [scratch_dir]

#include "ramanlab/ramanlab.hpp"
#include "oracles.hpp"
#include "sequence_corpus.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace ramanlab;
using std::numbers::pi;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check
{
  bool pass = true;
  std::ostringstream detail;

  Check() { detail.precision(10); }

  void require(bool ok, std::string const &what)
  {
    if (!ok)
    {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double state_distance(TriWaveState const &a, TriWaveState const &b)
{
  return std::max({std::abs(a.a_w - b.a_w), std::abs(a.a_s - b.a_s), std::abs(a.s_a - b.s_a)});
}

std::pair<double, double> write_and_spin(std::vector<DetectorRecord> const &records)
{
  double w = 0.0, a = 0.0;
  for (auto const &r : records)
    (r.channel == Channel::write ? w : a) = r.intensity;
  return {w, a};
}

template <class T>
std::size_t index_of(PulseSchedule const &s, std::size_t nth = 0)
{
  for (std::size_t i = 0; i < s.events.size(); ++i)
    if (std::holds_alternative<T>(s.events[i].kind) && nth-- == 0)
      return i;
  throw std::logic_error("event not found");
}

std::pair<FitResult, FitResult> fringe_fits(PulseSchedule const &s, std::size_t points)
{
  auto const res = scan(s, parse_scan_spec("phase=0:" + format_double(4 * pi) + ":" + std::to_string(points), s));
  return {fit_cosine_fringe(channel_series(res, Channel::write)),
          fit_cosine_fringe(channel_series(res, Channel::spinwave))};
}

std::string slurp(std::filesystem::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void beam_splitter_exactness(Check &c)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto const t0 = Clock::now();
  double worst_sum = 0.0, worst_inverse = 0.0, worst_compose = 0.0;
  for (int i = 0; i < 100000; ++i)
  {
    TriWaveState const s{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    double const theta = 4 * pi * u(rng), theta2 = 4 * pi * u(rng), chi = pi * u(rng);
    auto const once = beam_splitter_transform(s, theta, chi);
    worst_sum = std::max(worst_sum, std::abs(once.signal_sum() - s.signal_sum()));
    worst_inverse = std::max(worst_inverse, state_distance(beam_splitter_transform(once, -theta, chi), s));
    worst_compose = std::max(worst_compose, state_distance(beam_splitter_transform(once, theta2, chi),
                                                           beam_splitter_transform(s, theta + theta2, chi)));
  }
  double const elapsed = seconds_since(t0);
  c.detail << "1e5 pairs, sum err " << worst_sum << ", inverse err " << worst_inverse << ", composition err "
           << worst_compose << ", " << elapsed << " s";
  c.require(worst_sum <= 1e-12, "intensity sum");
  c.require(worst_inverse <= 1e-12 && worst_compose <= 1e-12, "inverse composition");
  c.require(elapsed < 1.0, "runtime");
}

void ode_conservation(Check &c)
{
  auto const t0 = Clock::now();
  RamanCoupling const coupling{1e8, 1e8, 1e9};
  TriWaveState const initial{{0.3, 0.1}, {-10.0, 0.0}, {0.5, -0.2}};
  double const duration = 50e-9;
  auto const traj = integrate_three_wave(initial, coupling, {}, duration, duration / 10000.0);
  double const mr1 = initial.signal_sum(), mr2 = initial.drive_excess();
  double worst1 = 0.0, worst2 = 0.0;
  for (auto const &s : traj.states)
  {
    worst1 = std::max(worst1, std::abs(s.signal_sum() - mr1) / std::abs(mr1));
    worst2 = std::max(worst2, std::abs(s.drive_excess() - mr2) / std::abs(mr2));
  }

  auto const final_state = [&](std::size_t steps) {
    return integrate_three_wave(initial, coupling, {}, duration, duration / static_cast<double>(steps)).states.back();
  };
  auto const reference = final_state(20000);
  double const e1 = state_distance(final_state(50), reference);
  double const e2 = state_distance(final_state(100), reference);
  double const ratio = e1 / e2;
  double const elapsed = seconds_since(t0);
  c.detail << traj.states.size() - 1 << " steps, |a_w|^2+|s_a|^2 rel err " << worst1 << ", |a_s|^2-|s_a|^2 rel err "
           << worst2 << ", dt-halving error ratio " << ratio << ", " << elapsed << " s";
  c.require(traj.states.size() - 1 == 10000, "step count");
  c.require(worst1 <= 1e-9 && worst2 <= 1e-9, "invariants");
  c.require(ratio >= 12.0 && ratio <= 20.0, "convergence order");
  c.require(elapsed < 5.0, "runtime");
}

void undepleted_pump(Check &c)
{
  RamanCoupling const coupling{1e8, 1e8, 1e9};
  double const drive = 100.0;
  TriWaveState const initial{{0.0, 0.0}, {-drive, 0.0}, {1.0, 0.0}};
  double const omega = 2.0 * coupling.eta() * drive;
  double const duration = 2 * pi / omega;
  auto const traj = integrate_three_wave(initial, coupling, {}, duration, duration / 2000.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k)
  {
    double const theta = omega * traj.times[k];
    auto const [aw, sa] = oracle::two_mode(initial.a_w, initial.s_a, theta, 0.0, 0.0);
    auto const bs = beam_splitter_transform(initial, theta);
    double const norm = std::sqrt(initial.signal_sum());
    worst = std::max({worst, std::abs(traj.states[k].a_w - aw) / norm, std::abs(traj.states[k].s_a - sa) / norm,
                      std::abs(traj.states[k].a_w - bs.a_w) / norm, std::abs(traj.states[k].s_a - bs.s_a) / norm});
  }
  c.detail << "drive/signal intensity 1e4, theta 0..2pi, max rel err " << worst;
  c.require(worst <= 1e-3, "rotation mismatch");
}

void rabi_linearity(Check &c)
{
  std::vector<double> amps;
  for (int k = 0; k < 8; ++k)
    amps.push_back(2.0 + k);
  for (char const *name : {"rabi_from_spinwave", "rabi_from_write"})
  {
    auto base = builtin_sequences().at(name);
    base.decoherence.gamma = 0.0;
    double const two_eta = 2.0 * base.coupling.eta() * 1e-9;
    std::size_t const stokes = index_of<StokesPulse>(base);
    Series pts;
    bool all_converged = true;
    for (double a : amps)
    {
      auto s = base;
      set_event_field(s, stokes, "amp", a);
      auto const fit = fit_damped_rabi(channel_trace(run_schedule(s), Channel::write));
      all_converged = all_converged && fit.converged;
      pts.emplace_back(a, fit.at("omega"));
    }
    auto const line = fit_linear(pts);
    double const slope_err = std::abs(line.at("slope") / two_eta - 1.0);
    double const intercept = std::abs(line.at("intercept"));
    c.detail << name << ": slope rel err " << slope_err << ", |intercept| " << intercept << " rad/ns; ";
    c.require(all_converged, std::string(name) + " fit");
    c.require(slope_err <= 1e-6, std::string(name) + " slope");
    c.require(intercept <= 1e-8, std::string(name) + " intercept");
  }
}

void complementarity(Check &c)
{
  auto a = builtin_sequences().at("rabi_from_spinwave");
  auto w = builtin_sequences().at("rabi_from_write");
  a.decoherence.gamma = w.decoherence.gamma = 0.0;
  auto const ta = channel_trace(run_schedule(a), Channel::write);
  auto const tw = channel_trace(run_schedule(w), Channel::write);
  c.require(ta.size() == tw.size() && ta.size() > 1, "trace length");
  double lo = 1e300, hi = -1e300;
  for (std::size_t k = 0; k < std::min(ta.size(), tw.size()); ++k)
  {
    c.require(ta[k].first == tw[k].first, "time axis");
    lo = std::min(lo, ta[k].second + tw[k].second);
    hi = std::max(hi, ta[k].second + tw[k].second);
  }
  c.detail << ta.size() << " samples, spread of summed write intensity " << hi - lo;
  c.require(hi - lo <= 1e-9, "sum not constant");
}

void ideal_fringe(Check &c)
{
  auto s = builtin_sequences().at("hybrid_interferometer");
  s.decoherence.gamma = 0.0;
  auto const [fw, fs] = fringe_fits(s, 100);
  double const vw = fw.at("visibility"), vs = fs.at("visibility");
  double const offset = std::abs(wrap_phase(fs.at("phase0") - fw.at("phase0")));

  // probe phase in rad equals power in mW with this calibration
  s.kappa = 1.0;
  std::size_t const ph = index_of<OpticalPhase>(s), probe = index_of<ProbePulse>(s);
  set_event_field(s, probe, "detune", 1.0);
  set_event_field(s, probe, "dur", 180.0 / pi);
  double worst = 0.0;
  for (double po : {0.0, 0.9, 2.5})
    for (double pa : {0.0, 0.4, 3.0})
    {
      auto x = s;
      set_event_field(x, ph, "rad", po);
      set_event_field(x, probe, "power", pa);
      auto const [w0, a0] = write_and_spin(run_schedule(x));
      for (double common : {0.5, 2.0, 7.0})
      {
        auto y = s;
        set_event_field(y, ph, "rad", po + common);
        set_event_field(y, probe, "power", pa + common);
        auto const [w1, a1] = write_and_spin(run_schedule(y));
        worst = std::max({worst, std::abs(w1 - w0), std::abs(a1 - a0)});
      }
    }
  c.detail << "V_write " << vw << ", V_spin " << vs << ", offset " << offset << ", common-offset err " << worst;
  c.require(fw.converged && fs.converged, "fit");
  c.require(std::abs(vw - 1.0) <= 1e-6 && std::abs(vs - 1.0) <= 1e-6, "visibility");
  c.require(std::abs(offset - pi) <= 1e-6, "phase offset");
  c.require(worst <= 1e-12, "common-offset invariance");
}

void visibility_regression(Check &c)
{
  auto balanced = builtin_sequences().at("hybrid_interferometer");
  double const tau = event_duration_ns(balanced.events[index_of<Delay>(balanced)].kind) * 1e-9;
  balanced.decoherence.gamma = gamma_tau_for_visibility(0.966) / tau;
  auto const eff = std::get<ReadPulse>(balanced.events[index_of<ReadPulse>(balanced)].kind).efficiency;
  auto const [bw, bs] = fringe_fits(balanced, 100);

  auto const calibrated = calibrate_interferometer(builtin_sequences().at("hybrid_interferometer"), 0.966, 0.948);
  auto const [cw, cs] = fringe_fits(calibrated, 100);

  c.detail << "readout eff " << eff << "; closed-form gamma*tau: V_write " << bw.at("visibility") << ", V_spin "
           << bs.at("visibility") << " (target 0.966); calibrated: V_write " << cw.at("visibility") << ", V_spin "
           << cs.at("visibility") << " (targets 0.966/0.948)";
  c.require(eff == 0.2, "readout efficiency");
  c.require(std::abs(bw.at("visibility") - 0.966) <= 0.005 && std::abs(bs.at("visibility") - 0.966) <= 0.005,
            "closed-form visibility");
  c.require(std::abs(cw.at("visibility") - 0.966) <= 0.005 && std::abs(cs.at("visibility") - 0.948) <= 0.005,
            "calibrated visibility");
}

void stark_phase(Check &c, std::filesystem::path const &dir)
{
  auto s = calibrate_interferometer(builtin_sequences().at("hybrid_interferometer"), 0.966, 0.948);
  std::size_t const probe = index_of<ProbePulse>(s);
  double const detune = 2.5, dur = 80.0, target = 2.5;
  double const power = target / degrees_to_radians * detune / (s.kappa * dur);
  set_event_field(s, probe, "detune", detune);
  set_event_field(s, probe, "dur", dur);
  auto const [off, off_s] = fringe_fits(s, 100);
  set_event_field(s, probe, "power", power);
  auto const [on, on_s] = fringe_fits(s, 100);
  double const recovered = -wrap_phase(on.at("phase0") - off.at("phase0"));

  auto const summary = generate_figures(dir / "stark");
  double const kappa_fit = summary["fig6"]["kappa_fit"].get<double>();
  double const kappa = summary["fig6"]["kappa_configured"].get<double>();
  c.detail << "probe " << power << " mW at " << detune << " GHz, recovered " << recovered << " rad (injected "
           << target << "); kappa fit " << kappa_fit << " vs " << kappa;
  c.require(std::abs(recovered - target) <= 0.01, "phase shift");
  c.require(std::abs(kappa_fit / kappa - 1.0) <= 0.01, "kappa");
}

void parser(Check &c)
{
  std::mt19937_64 rng(7);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i)
  {
    auto const s = corpus::random_valid_schedule(rng);
    try
    {
      if (parse_sequence(serialize_sequence(s)) == s)
        ++round_trips;
    }
    catch (std::exception const &)
    {
    }
  }
  std::size_t located = 0;
  auto const &cases = corpus::malformed_inputs();
  for (auto const &bad : cases)
  {
    try
    {
      parse_sequence(bad.text);
    }
    catch (SequenceError const &e)
    {
      if (e.kind() == bad.kind && e.line() == bad.line && e.column() == bad.column)
        ++located;
    }
    catch (...)
    {
    }
  }
  c.detail << round_trips << "/1000 random schedules round-trip, " << located << "/" << cases.size()
           << " malformed inputs located";
  c.require(round_trips == 1000, "round trip");
  c.require(located == cases.size(), "malformed corpus");
}

void figures_end_to_end(Check &c, std::filesystem::path const &dir)
{
  auto const t0 = Clock::now();
  generate_figures(dir / "run1");
  generate_figures(dir / "run2");
  double const elapsed = seconds_since(t0);
  std::size_t identical = 0;
  std::vector<std::string> const files{"fig2a.csv", "fig2b.csv", "fig2c.csv", "fig2d.csv",
                                       "fig4.csv",  "fig5.csv",  "fig6a.csv", "fig6b.csv"};
  for (auto const &f : files)
  {
    auto const a = slurp(dir / "run1" / f);
    if (!a.empty() && a == slurp(dir / "run2" / f))
      ++identical;
  }
  c.detail << identical << "/" << files.size() << " datasets byte-identical across two runs, " << elapsed
           << " s for both";
  c.require(identical == files.size(), "determinism");
  c.require(slurp(dir / "run1" / "summary.json") == slurp(dir / "run2" / "summary.json"), "summary");
  c.require(elapsed < 30.0, "runtime");
}

}  // namespace

int main(int argc, char **argv)
{
  std::filesystem::path const dir =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::temp_directory_path() / "ramanlab_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  std::vector<std::pair<char const *, std::function<void(Check &)>>> const checks{
      {"beam-splitter exactness", beam_splitter_exactness},
      {"ODE conservation and 4th-order convergence", ode_conservation},
      {"undepleted-pump rotation", undepleted_pump},
      {"Rabi frequency linear in drive", rabi_linearity},
      {"complementary Rabi traces", complementarity},
      {"ideal fringe", ideal_fringe},
      {"visibility regression", visibility_regression},
      {"AC Stark phase and kappa", [&](Check &c) { stark_phase(c, dir); }},
      {"sequence parser", parser},
      {"figures end to end", [&](Check &c) { figures_end_to_end(c, dir); }},
  };

  int failures = 0;
  int number = 0;
  for (auto const &[name, fn] : checks)
  {
    Check c;
    try
    {
      fn(c);
    }
    catch (std::exception const &e)
    {
      c.require(false, std::string("exception: ") + e.what());
    }
    failures += c.pass ? 0 : 1;
    std::cout << (c.pass ? "PASS" : "FAIL") << " " << ++number << " " << name << ": " << c.detail.str() << "\n";
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << "\n";
  return failures == 0 ? 0 : 1;
}
