#include "ramanlab/analysis.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace ramanlab;
using std::numbers::pi;

namespace
{

Series rabi_trace(double i0, double omega, double gamma, double offset, double phase, double t_end, std::size_t n)
{
  Series out;
  for (std::size_t k = 0; k < n; ++k)
  {
    double const t = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    out.emplace_back(t, damped_rabi_model(t, i0, omega, gamma, offset, phase));
  }
  return out;
}

Series fringe(double mean, double vis, double phase0, std::size_t n, double span = 4 * pi, double start = 0.0)
{
  Series out;
  for (std::size_t k = 0; k < n; ++k)
  {
    double const phi = start + span * static_cast<double>(k) / static_cast<double>(n);
    out.emplace_back(phi, fringe_model(phi, mean, vis, phase0));
  }
  return out;
}

}  // namespace

TEST(FitDampedRabi, RecoversFrequencyNoiseless)
{
  double const omega = 2 * pi * 5.0;  // rad/us
  auto const fit = fit_damped_rabi(rabi_trace(1.0, omega, 0.0, 0.0, 0.0, 1.0, 201));
  ASSERT_TRUE(fit.converged) << fit.message;
  EXPECT_NEAR(fit.at("omega") / omega, 1.0, 1e-6);
  EXPECT_NEAR(fit.at("I0"), 1.0, 1e-6);
  EXPECT_NEAR(fit.at("gamma"), 0.0, 1e-6);
  EXPECT_EQ(fit.at("phase"), 0.0);
  EXPECT_LE(fit.residual_norm, fit.initial_residual_norm);
}

TEST(FitDampedRabi, RecoversDecayRate)
{
  double const omega = 2 * pi * 5.0, gamma = 0.5;
  auto const fit = fit_damped_rabi(rabi_trace(0.8, omega, gamma, 0.05, 0.0, 2.0, 301));
  ASSERT_TRUE(fit.converged) << fit.message;
  EXPECT_NEAR(fit.at("gamma") / gamma, 1.0, 1e-3);
  EXPECT_NEAR(fit.at("omega") / omega, 1.0, 1e-6);
  EXPECT_NEAR(fit.at("offset"), 0.05, 1e-6);
}

TEST(FitDampedRabi, SelectsCosineBranch)
{
  auto const fit = fit_damped_rabi(rabi_trace(1.0, 0.1, 0.002, 0.0, pi / 2, 200.0, 201));
  ASSERT_TRUE(fit.converged) << fit.message;
  EXPECT_DOUBLE_EQ(fit.at("phase"), pi / 2);
  EXPECT_NEAR(fit.at("omega"), 0.1, 1e-9);
  EXPECT_NEAR(fit.at("gamma"), 0.002, 1e-9);
}

TEST(FitDampedRabi, ConstantTraceDoesNotConverge)
{
  Series flat;
  for (int k = 0; k < 50; ++k)
    flat.emplace_back(k, 0.4);
  auto const fit = fit_damped_rabi(flat);
  EXPECT_FALSE(fit.converged);
  EXPECT_FALSE(fit.message.empty());
}

TEST(FitDampedRabi, TooFewPoints)
{
  EXPECT_FALSE(fit_damped_rabi(rabi_trace(1.0, 3.0, 0.0, 0.0, 0.0, 5.0, 7)).converged);
}

TEST(FitDampedRabi, NoisyTraceStaysClose)
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto trace = rabi_trace(1.0, 0.1, 0.001, 0.0, 0.0, 200.0, 201);
  for (auto &d : trace)
    d.second += noise(rng);
  auto const fit = fit_damped_rabi(trace);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.at("omega"), 0.1, 1e-3);
  EXPECT_LE(fit.residual_norm, fit.initial_residual_norm);
}

TEST(DominantFrequency, FindsPeak)
{
  EXPECT_NEAR(dominant_frequency(rabi_trace(1.0, 0.37, 0.0, 0.0, 0.0, 300.0, 301)), 0.37, 0.37 * 0.02);
  Series flat(20, {0.0, 1.0});
  EXPECT_EQ(dominant_frequency(flat), 0.0);
}

TEST(FitCosineFringe, IdealFringe)
{
  auto const fit = fit_cosine_fringe(fringe(0.5, 1.0, 0.0, 100));
  ASSERT_TRUE(fit.converged) << fit.message;
  EXPECT_NEAR(fit.at("visibility"), 1.0, 1e-6);
  EXPECT_NEAR(fit.at("mean"), 0.5, 1e-12);
  EXPECT_NEAR(fit.at("phase0"), 0.0, 1e-9);
}

TEST(FitCosineFringe, PartialVisibility)
{
  auto const fit = fit_cosine_fringe(fringe(0.3, 0.966, -1.1, 100));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.at("visibility"), 0.966, 1e-9);
  EXPECT_NEAR(fit.at("phase0"), -1.1, 1e-9);
  EXPECT_NEAR(fit.at("contrast"), 0.3 * 0.966, 1e-9);
}

TEST(FitCosineFringe, RecoversInjectedPhaseDifference)
{
  auto const a = fit_cosine_fringe(fringe(0.5, 0.95, 0.0, 100));
  auto const b = fit_cosine_fringe(fringe(0.5, 0.95, -2.5, 100));
  EXPECT_NEAR(-wrap_phase(b.at("phase0") - a.at("phase0")), 2.5, 1e-9);
}

TEST(FitCosineFringe, VisibilityClampedToUnitInterval)
{
  // over-modulated data (negative intensities) still reports V <= 1
  Series pts;
  for (int k = 0; k < 40; ++k)
  {
    double const phi = 2 * pi * k / 40.0;
    pts.emplace_back(phi, 1.0 + 1.3 * std::cos(phi));
  }
  auto const fit = fit_cosine_fringe(pts);
  EXPECT_LE(fit.at("visibility"), 1.0);
  EXPECT_GE(fit.at("visibility"), 0.0);
}

TEST(FitCosineFringe, InvariantUnderTwoPiAndEquivariantUnderOffset)
{
  auto const base = fringe(0.4, 0.8, 0.6, 60);
  auto const ref = fit_cosine_fringe(base);
  for (double offset : {2 * pi, 0.3, -1.7, 4.0})
  {
    Series moved = base;
    for (auto &d : moved)
      d.first += offset;
    auto const fit = fit_cosine_fringe(moved);
    EXPECT_NEAR(fit.at("mean"), ref.at("mean"), 1e-9);
    EXPECT_NEAR(fit.at("contrast"), ref.at("contrast"), 1e-9);
    EXPECT_NEAR(wrap_phase(fit.at("phase0") + offset - ref.at("phase0")), 0.0, 1e-9);
  }
}

TEST(FitCosineFringe, ModelVisibilityMatchesRatio)
{
  auto const fit = fit_cosine_fringe(fringe(0.7, 0.61, 2.0, 50));
  EXPECT_DOUBLE_EQ(model_visibility(fit), fit.at("contrast") / fit.at("mean"));
}

TEST(FitCosineFringe, DegenerateInputsAreFlagged)
{
  EXPECT_FALSE(fit_cosine_fringe(fringe(0.5, 0.9, 0.0, 4)).converged);
  EXPECT_FALSE(fit_cosine_fringe(fringe(0.5, 0.9, 0.0, 20, pi)).converged);
  EXPECT_FALSE(fit_cosine_fringe(fringe(-0.5, 0.9, 0.0, 20)).converged);
}

TEST(FitLinear, ExactLine)
{
  Series pts;
  for (int x = 0; x < 5; ++x)
    pts.emplace_back(x, 2.0 * x + 1.0);
  auto const fit = fit_linear(pts);
  EXPECT_DOUBLE_EQ(fit.at("slope"), 2.0);
  EXPECT_DOUBLE_EQ(fit.at("intercept"), 1.0);
  EXPECT_DOUBLE_EQ(fit.at("r_squared"), 1.0);
}

TEST(FitLinear, RejectsIdenticalX)
{
  EXPECT_THROW(fit_linear({{1.0, 2.0}, {1.0, 3.0}}), std::invalid_argument);
  EXPECT_THROW(fit_linear({{1.0, 2.0}}), std::invalid_argument);
}

TEST(FitLinear, NoisyRSquaredBelowOne)
{
  auto const fit = fit_linear({{0, 0.1}, {1, 0.9}, {2, 2.2}, {3, 2.8}});
  EXPECT_LT(fit.at("r_squared"), 1.0);
  EXPECT_GT(fit.at("r_squared"), 0.9);
}

TEST(FitResultJson, CarriesSchemaVersion)
{
  auto const j = to_json(fit_linear({{0, 1}, {1, 3}}), "linear");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["model"], "linear");
  EXPECT_DOUBLE_EQ(j["params"]["slope"].get<double>(), 2.0);
}
