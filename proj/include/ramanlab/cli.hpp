#pragma once

// Command-line front end: simulate, fit, figures, init.

#include "ramanlab/analysis.hpp"
#include "ramanlab/figures.hpp"
#include "ramanlab/interferometer.hpp"
#include "ramanlab/sequence.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ramanlab::cli
{

enum ExitCode : int
{
  ok = 0,
  internal_error = 1,
  usage_error = 2,
  file_not_found = 3,
  sequence_error = 4,
  scan_spec_error = 5,
  schema_error = 6,
  not_converged = 7,
  io_error = 8,
  config_error = 9,
};

inline constexpr char const *exit_code_help = R"(Exit codes:
  0  success
  1  internal error
  2  usage error (bad option, unknown model or subcommand)
  3  input file not found or unreadable
  4  sequence file failed to parse or validate
  5  invalid scan specification
  6  CSV input does not match the scan schema
  7  fit did not converge
  8  output could not be written
  9  invalid figure configuration (e.g. empty grid)
Environment:
  RAMANLAB_OUTPUT_DIR  default directory for outputs when no path is given)";

/// Options of one simulate invocation.
struct RunConfig
{
  std::string sequence_path;
  std::string scan;
  std::string out_path;
  std::string format;  // csv | json, inferred from the output extension when empty
  std::optional<std::uint64_t> seed;
  double noise_sigma = 0.0;
  std::string fit;  // rabi | fringe | linear, optional
  std::string channel = "write";
  unsigned jobs = 1;
};

namespace detail
{

inline std::filesystem::path default_output_dir()
{
  if (char const *env = std::getenv("RAMANLAB_OUTPUT_DIR"); env && *env)
    return env;
  return ".";
}

inline std::optional<std::string> read_text(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool write_text(std::filesystem::path const &path, std::string const &text)
{
  if (path.has_parent_path())
  {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

inline FitResult run_fit(ScanResult const &data, std::string const &model, Channel channel)
{
  if (model == "rabi")
    return fit_damped_rabi(channel_trace(data, channel));
  if (model == "fringe")
    return fit_cosine_fringe(channel_series(data, channel));
  return fit_linear(channel_series(data, channel));
}

}  // namespace detail

inline int cmd_simulate(RunConfig const &cfg, std::ostream &out, std::ostream &err)
{
  std::filesystem::path const seq_path(cfg.sequence_path);
  auto const text = detail::read_text(seq_path);
  if (!text)
  {
    err << "error: file not found: " << cfg.sequence_path << "\n";
    return file_not_found;
  }

  PulseSchedule schedule;
  try
  {
    schedule = parse_sequence(*text);
  }
  catch (SequenceError const &e)
  {
    err << cfg.sequence_path << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
    return sequence_error;
  }

  std::string format = cfg.format;
  std::filesystem::path out_path = cfg.out_path;
  if (format.empty())
    format = out_path.extension() == ".json" ? "json" : "csv";
  if (format != "csv" && format != "json")
  {
    err << "error: output format must be csv or json\n";
    return usage_error;
  }
  if (out_path.empty())
    out_path = detail::default_output_dir() / (seq_path.stem().string() + "." + format);

  NoiseConfig noise;
  if (cfg.noise_sigma < 0.0)
  {
    err << "error: noise sigma must be non-negative\n";
    return usage_error;
  }
  if (cfg.noise_sigma > 0.0)
    noise = {cfg.noise_sigma, cfg.seed.value_or(0)};

  ScanResult result;
  try
  {
    if (cfg.scan.empty())
      result = single_run(schedule, noise);
    else
      result = scan(schedule, parse_scan_spec(cfg.scan, schedule), {cfg.jobs, noise});
  }
  catch (ScanSpecError const &e)
  {
    err << "error: invalid scan spec '" << cfg.scan << "': " << e.what() << "\n";
    return scan_spec_error;
  }

  std::string const payload = format == "csv" ? to_csv(result) : to_json(result).dump(2) + "\n";
  if (!detail::write_text(out_path, payload))
  {
    err << "error: cannot write " << out_path.string() << "\n";
    return io_error;
  }

  if (!cfg.fit.empty())
  {
    auto const channel = channel_from_name(cfg.channel).value_or(Channel::write);
    FitResult fit;
    try
    {
      fit = detail::run_fit(result, cfg.fit, channel);
    }
    catch (std::invalid_argument const &e)
    {
      err << "error: " << e.what() << "\n";
      return not_converged;
    }
    out << to_json(fit, cfg.fit).dump(2) << "\n";
    if (!fit.converged)
    {
      err << "error: fit did not converge: " << fit.message << "\n";
      return not_converged;
    }
  }
  return ok;
}

inline int cmd_fit(std::string const &input, std::string const &model, std::string const &channel_name,
                   std::ostream &out, std::ostream &err)
{
  auto const text = detail::read_text(input);
  if (!text)
  {
    err << "error: file not found: " << input << "\n";
    return file_not_found;
  }
  ScanResult data;
  try
  {
    data = read_scan_csv(*text);
  }
  catch (CsvSchemaError const &e)
  {
    err << input << ": schema mismatch: " << e.what() << "\n";
    return schema_error;
  }
  auto const channel = channel_from_name(channel_name).value_or(Channel::write);
  FitResult fit;
  try
  {
    fit = detail::run_fit(data, model, channel);
  }
  catch (std::invalid_argument const &e)
  {
    err << "error: " << e.what() << "\n";
    return not_converged;
  }
  out << to_json(fit, model).dump(2) << "\n";
  if (!fit.converged)
  {
    err << "error: fit did not converge: " << fit.message << "\n";
    return not_converged;
  }
  return ok;
}

inline int cmd_figures(std::string const &dir, FiguresConfig const &cfg, std::ostream &out, std::ostream &err)
{
  try
  {
    auto const summary = generate_figures(dir, cfg);
    out << summary.dump(2) << "\n";
    return ok;
  }
  catch (std::invalid_argument const &e)
  {
    err << "error: " << e.what() << "\n";
    return config_error;
  }
  catch (FiguresError const &e)
  {
    err << "error: " << e.what() << "\n";
    return io_error;
  }
}

inline int cmd_init(std::string const &dir, std::ostream &out, std::ostream &err)
{
  std::filesystem::path const root(dir);
  for (auto const &[name, text] : builtin_sequence_sources())
  {
    auto const path = root / (name + ".seq");
    if (!detail::write_text(path, std::string(text)))
    {
      err << "error: cannot write " << path.string() << "\n";
      return io_error;
    }
    out << path.string() << "\n";
  }
  return ok;
}

inline int run(int argc, char const *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
{
  CLI::App app{"Raman atom-light interferometer simulator and fitter"};
  app.footer(exit_code_help);
  app.require_subcommand(1);

  RunConfig run_cfg;
  auto *simulate = app.add_subcommand("simulate", "Run or scan a sequence file and write detector records");
  simulate->add_option("sequence", run_cfg.sequence_path, "Sequence file (.seq)")->required();
  simulate->add_option("--scan", run_cfg.scan, "Scan spec name=start:stop:count (stop excluded)");
  simulate->add_option("--out", run_cfg.out_path, "Output file (default: $RAMANLAB_OUTPUT_DIR/<sequence>.csv)");
  simulate->add_option("--format", run_cfg.format, "csv or json (default: from --out extension)");
  simulate->add_option("--seed", run_cfg.seed, "Noise seed");
  simulate->add_option("--noise", run_cfg.noise_sigma, "Gaussian intensity noise sigma (default 0: off)");
  simulate->add_option("--fit", run_cfg.fit, "Fit the output: rabi, fringe or linear")
      ->check(CLI::IsMember({"rabi", "fringe", "linear"}));
  simulate->add_option("--channel", run_cfg.channel, "Channel to fit")->check(CLI::IsMember({"write", "spinwave"}));
  simulate->add_option("--jobs", run_cfg.jobs, "Parallel scan workers")->check(CLI::Range(1u, 256u));

  std::string fit_input, fit_model, fit_channel = "write";
  auto *fit = app.add_subcommand("fit", "Fit a scan CSV and print the result as JSON");
  fit->add_option("input", fit_input, "CSV written by simulate")->required();
  fit->add_option("--model", fit_model, "rabi, fringe or linear")
      ->required()
      ->check(CLI::IsMember({"rabi", "fringe", "linear"}));
  fit->add_option("--channel", fit_channel, "write or spinwave")->check(CLI::IsMember({"write", "spinwave"}));

  std::string figures_dir;
  FiguresConfig fig_cfg;
  auto *figures = app.add_subcommand("figures", "Regenerate every figure dataset and a summary JSON");
  figures->add_option("dir", figures_dir, "Output directory (default: $RAMANLAB_OUTPUT_DIR/figures)");
  figures->add_option("--amp-points", fig_cfg.amplitude_points, "Drive amplitude grid size");
  figures->add_option("--phase-points", fig_cfg.phase_points, "Fringe scan points");
  figures->add_option("--shift-phase-points", fig_cfg.shift_phase_points, "Fringe points per phase-shift point");
  figures->add_option("--power-points", fig_cfg.power_points, "Probe power grid size");
  figures->add_option("--detuning-points", fig_cfg.detuning_points, "Probe detuning grid size");
  figures->add_option("--kappa", fig_cfg.kappa, "Stark calibration in deg GHz/(ns mW)");
  figures->add_option("--jobs", fig_cfg.jobs, "Parallel scan workers")->check(CLI::Range(1u, 256u));

  std::string init_dir = "presets";
  auto *init = app.add_subcommand("init", "Write the built-in preset sequences for editing");
  init->add_option("dir", init_dir, "Target directory");

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &)
  {
    out << app.help();
    return ok;
  }
  catch (CLI::CallForAllHelp const &)
  {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  }
  catch (CLI::ParseError const &e)
  {
    err << "error: " << e.what() << "\n" << app.help();
    return usage_error;
  }

  try
  {
    if (*simulate)
      return cmd_simulate(run_cfg, out, err);
    if (*fit)
      return cmd_fit(fit_input, fit_model, fit_channel, out, err);
    if (*figures)
    {
      if (figures_dir.empty())
        figures_dir = (detail::default_output_dir() / "figures").string();
      return cmd_figures(figures_dir, fig_cfg, out, err);
    }
    if (*init)
      return cmd_init(init_dir, out, err);
  }
  catch (std::exception const &e)
  {
    err << "internal error: " << e.what() << "\n";
    return internal_error;
  }
  return usage_error;
}

}  // namespace ramanlab::cli
