#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "ssmc/pulsegrid.hpp"
#include "ssmc/units.hpp"

using namespace ssmc;
using big = boost::multiprecision::cpp_dec_float_50;

TEST(TimeGrid, PaperMolecularGrid) {
  const auto g = make_time_grid(0.0, 2.5, 1000);
  EXPECT_EQ(g.n_steps, 1000u);
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
  EXPECT_DOUBLE_EQ(g.time(999), 2497.5);
  EXPECT_DOUBLE_EQ(g.t_end(), 2500.0);
  EXPECT_DOUBLE_EQ(g.duration(), 2500.0);
}

TEST(TimeGrid, SingleSample) {
  const auto g = make_time_grid(0.0, 1.0, 1);
  EXPECT_EQ(g.n_steps, 1u);
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
}

TEST(TimeGrid, RejectsBadArguments) {
  EXPECT_THROW(make_time_grid(5.0, 0.0, 10), invalid_argument);
  EXPECT_THROW(make_time_grid(0.0, -1.0, 10), invalid_argument);
  EXPECT_THROW(make_time_grid(0.0, 1.0, 0), invalid_argument);
  EXPECT_THROW(make_time_grid(NAN, 1.0, 3), invalid_argument);
}

TEST(SampledField, ValidatesValues) {
  const auto g = make_time_grid(0.0, 1.0, 3);
  EXPECT_THROW(SampledField(g, {1.0, 2.0}, field_kind::electric_field), invalid_argument);
  EXPECT_THROW(SampledField(g, {1.0, NAN, 2.0}, field_kind::electric_field), invalid_argument);
  EXPECT_THROW(SampledField(g, {1.0, INFINITY, 2.0}, field_kind::electric_field), invalid_argument);
  EXPECT_NO_THROW(SampledField(g, {1.0, 0.0, 2.0}, field_kind::peierls_phase));
}

class MolecularPump : public ::testing::Test {
 protected:
  double e0 = 1e-5;
  double T = 2500.0;
  double we = convert(3000.0, unit::wavenumber, unit::au_angular_frequency);
  TimeGrid grid = make_time_grid(0.0, 2.5, 1000);
  SampledField pump = pump_pulse_molecular(e0, T, we, grid);
};

TEST_F(MolecularPump, ZeroAtStart) { EXPECT_EQ(pump[0], 0.0); }

TEST_F(MolecularPump, EnvelopePeakAtHalfDuration) {
  EXPECT_NEAR(pump[500], e0 * std::cos(we * T / 2), 1e-20);
}

TEST_F(MolecularPump, MatchesArbitraryPrecisionEvaluation) {
  using boost::multiprecision::cos;
  using boost::multiprecision::sin;
  const big pi = boost::math::constants::pi<big>();
  for (std::size_t k : {1u, 17u, 123u, 250u, 333u, 499u, 500u, 777u, 901u, 999u}) {
    const big t = big(2.5) * k;
    const big s = sin(pi * t / big(T));
    const big exact = big(e0) * s * s * cos(big(we) * t);
    EXPECT_NEAR(pump[k], exact.convert_to<double>(), 1e-13 * e0) << "k = " << k;
  }
}

TEST_F(MolecularPump, GridBeyondDurationRejected) {
  EXPECT_THROW(pump_pulse_molecular(e0, T, we, make_time_grid(0.0, 2.5, 1001)), invalid_argument);
  EXPECT_THROW(pump_pulse_molecular(e0, T, we, make_time_grid(-2.5, 2.5, 10)), invalid_argument);
}

TEST(HubbardPump, ZeroAtBothEnds) {
  const double T = hubbard_pump_duration(32.9);
  const auto field = pump_phase_hubbard(10.0, 32.9, 4.0, T, make_time_grid(0.0, T / 2000, 2000));
  EXPECT_EQ(field[0], 0.0);
  EXPECT_EQ(field.kind(), field_kind::peierls_phase);
  // t = T lies one past the pump grid; evaluate the same closed form there
  const auto closed = sin2_peierls_phase(10.0, 32.9, 4.0, T, make_time_grid(0.0, T / 2000, 2001));
  EXPECT_NEAR(closed[2000], 0.0, 1e-12);
}

TEST(HubbardPump, DurationIsTwoPeriods) {
  const double omega = convert(32.9, unit::terahertz, unit::model_angular_frequency);
  EXPECT_NEAR(hubbard_pump_duration(32.9), 4.0 * std::numbers::pi / omega, 1e-12);
  EXPECT_NEAR(omega, 0.26166, 1e-4);
}

TEST(HubbardPump, PeakAmplitude) {
  const double T = hubbard_pump_duration(32.9);
  const double omega = convert(32.9, unit::terahertz, unit::model_angular_frequency);
  const auto grid = make_time_grid(0.0, T / 2000, 2000);
  const auto field = pump_phase_hubbard(10.0, 32.9, 4.0, T, grid);
  // the prefactor a E0 / (hbar omega0) multiplying sin^2(pi t / T) sin(omega t)
  for (std::size_t k : {137u, 400u, 1234u}) {
    const double t = grid.time(k);
    const double shape = std::pow(std::sin(std::numbers::pi * t / T), 2) * std::sin(omega * t);
    EXPECT_NEAR(field[k] / shape, 2.94, 5e-3);
  }
}

TEST(HubbardPump, NonPositiveFrequencyRejected) {
  EXPECT_THROW(pump_phase_hubbard(10.0, 0.0, 4.0, 10.0, make_time_grid(0.0, 0.1, 10)), invalid_argument);
  EXPECT_THROW(pump_phase_hubbard(10.0, -3.0, 4.0, 10.0, make_time_grid(0.0, 0.1, 10)), invalid_argument);
  EXPECT_THROW(hubbard_pump_duration(0.0), invalid_argument);
}

TEST(Concat, LengthsAdd) {
  std::vector<SampledField> parts;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> v(1000);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.001 * k + j) * 1e-5;
    parts.emplace_back(make_time_grid(2500.0 * j, 2.5, 1000), std::move(v), field_kind::electric_field);
  }
  const auto all = concat_pulses(parts);
  ASSERT_EQ(all.size(), 3000u);
  EXPECT_DOUBLE_EQ(all.grid().t_start, 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 1000; ++k) EXPECT_EQ(all[1000 * j + k], parts[j][k]);
  }
}

TEST(Concat, SingleSegmentIsIdentity) {
  const SampledField f(make_time_grid(0.0, 2.5, 4), {0.0, 1.0, -2.0, 3.5}, field_kind::electric_field);
  std::vector<SampledField> one{f};
  EXPECT_EQ(concat_pulses(one), f);
}

TEST(Concat, MismatchesRejected) {
  const SampledField a(make_time_grid(0.0, 2.5, 2), {0.0, 1.0}, field_kind::electric_field);
  const SampledField dt2(make_time_grid(5.0, 2.0, 2), {0.0, 1.0}, field_kind::electric_field);
  const SampledField phase(make_time_grid(5.0, 2.5, 2), {0.0, 1.0}, field_kind::peierls_phase);
  const SampledField gap(make_time_grid(7.5, 2.5, 2), {0.0, 1.0}, field_kind::electric_field);
  EXPECT_THROW(concat_pulses(std::vector<SampledField>{a, dt2}), invalid_argument);
  EXPECT_THROW(concat_pulses(std::vector<SampledField>{a, phase}), invalid_argument);
  EXPECT_THROW(concat_pulses(std::vector<SampledField>{a, gap}), invalid_argument);
  EXPECT_THROW(concat_pulses(std::vector<SampledField>{}), invalid_argument);
}
