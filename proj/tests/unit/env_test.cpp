#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ste/env.hpp"
#include "ste/errors.hpp"

using namespace ste;

namespace {

// Plume parameters of the illustrative 25 m map: q=5, u=2, phi=45 deg, d=2, tau=10.
SourceTerm illustrative_source() { return {12.5, 12.5, 5.0, 2.0, std::numbers::pi / 4.0, 2.0, 10.0}; }

oracle::Source to_oracle(const SourceTerm& s) { return {s.x, s.y, s.q, s.u, s.phi, s.d, s.tau}; }

}  // namespace

TEST(Plume, LengthScaleSpotValue) {
  SourceTerm s{0, 0, 1.0, 2.0, 0.0, 2.0, 10.0};
  EXPECT_NEAR(plume_length_scale(s), std::sqrt(20.0 / 6.0), 1e-12);
  EXPECT_NEAR(plume_length_scale(s), 1.825742, 1e-6);
  EXPECT_NEAR(PlumeKernel(s).length_scale(), 1.8257418583505538, 1e-14);
}

TEST(Plume, IllustrativeSourceUnitOffset) {
  const SourceTerm s = illustrative_source();
  const double m = mean_concentration({s.x + 1.0, s.y}, s);
  // Frozen from the single-expression oracle.
  EXPECT_NEAR(m, 0.0807813253, 1e-9);
  EXPECT_NEAR(m, oracle::plume(s.x + 1.0, s.y, to_oracle(s)), 1e-15);
}

TEST(Plume, CoincidentPositionIsSingular) {
  const SourceTerm s = illustrative_source();
  EXPECT_THROW(mean_concentration(s.position(), s), SingularityError);
  EXPECT_THROW(mean_concentration({s.x + 1e-10, s.y}, s), SingularityError);
  EXPECT_NO_THROW(mean_concentration({s.x + 1e-8, s.y}, s));
  EXPECT_TRUE(std::isfinite(PlumeKernel(s).guarded(s.position())));
}

TEST(Plume, ZeroWindIsRadiallySymmetric) {
  SourceTerm s{10, 10, 300, 0.0, 1.1, 3.0, 10.0};
  for (double r : {0.5, 1.0, 3.7, 9.0}) {
    const double ref = mean_concentration({10 + r, 10}, s);
    for (double a = 0.0; a < 2 * std::numbers::pi; a += 0.37) {
      EXPECT_NEAR(mean_concentration({10 + r * std::cos(a), 10 + r * std::sin(a)}, s), ref, 1e-12);
    }
  }
}

TEST(Plume, MatchesOracleOnRandomPairs) {
  Rng rng(20240611);
  for (int i = 0; i < 1000; ++i) {
    SourceTerm s{uniform(rng, 0, 30), uniform(rng, 0, 30), uniform(rng, 1, 500), uniform(rng, 0, 5),
                 uniform(rng, 0, 2 * std::numbers::pi), uniform(rng, 0.5, 8), uniform(rng, 1, 20)};
    Position p{uniform(rng, 0, 30), uniform(rng, 0, 30)};
    const double ref = oracle::plume(p.x, p.y, to_oracle(s));
    const double got = mean_concentration(p, s);
    ASSERT_GT(got, 0.0);
    ASSERT_NEAR(got, ref, 1e-12 * ref) << "pair " << i;
  }
}

TEST(Plume, WindRotationEquivariance) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    SourceTerm s{15, 15, uniform(rng, 100, 500), uniform(rng, 0.5, 4), uniform(rng, 0, 6.28), uniform(rng, 1, 8), 10};
    const double ox = uniform(rng, -8, 8), oy = uniform(rng, -8, 8);
    const double a = uniform(rng, -3, 3);
    SourceTerm rotated = s;
    rotated.phi += a;
    const Position p{15 + ox, 15 + oy};
    const Position pr{15 + ox * std::cos(a) - oy * std::sin(a), 15 + ox * std::sin(a) + oy * std::cos(a)};
    const double m = mean_concentration(p, s);
    EXPECT_NEAR(mean_concentration(pr, rotated), m, 1e-12 * m);
  }
}

TEST(Plume, DecreasesAlongUpwindRay) {
  // Along the direction where the drift term is largest, m still falls off.
  SourceTerm s{15, 15, 400, 4.0, 0.3, 1.0, 10.0};
  const double ux = -std::cos(s.phi), uy = -std::sin(s.phi);
  double prev = mean_concentration({15 + 0.01 * ux, 15 + 0.01 * uy}, s);
  for (double r = 0.05; r < 14.0; r += 0.05) {
    const double m = mean_concentration({15 + r * ux, 15 + r * uy}, s);
    ASSERT_LT(m, prev) << "r=" << r;
    ASSERT_GT(m, 0.0);
    prev = m;
  }
}

TEST(Sensor, NoiseStdComposition) {
  EnvConfig cfg;
  EXPECT_DOUBLE_EQ(noise_std(1.0, cfg), 0.5);
  EXPECT_DOUBLE_EQ(noise_std(0.0, cfg), 0.2);
}

TEST(Sensor, NearlyNoiselessSampleEqualsMean) {
  EnvConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 1e-12;
  const SourceTerm s = illustrative_source();
  Rng rng(1);
  const Position p{s.x + 2, s.y + 1};
  const double m = mean_concentration(p, s);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_measurement(p, s, cfg, rng), m, 6e-12);
}

TEST(Sensor, MomentsMatchModelAwayFromClamp) {
  EnvConfig cfg;
  cfg.alpha = 0.05;  // keeps the mean many sigmas above the clamp
  const SourceTerm s{10, 10, 400, 1.0, 0.0, 2.0, 10.0};
  const Position p{10.5, 10};
  const double m = mean_concentration(p, s);
  const double sigma = noise_std(m, cfg);
  ASSERT_GT(m, 8.0 * sigma);
  Rng rng(99);
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_measurement(p, s, cfg, rng);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, m, 3.0 * sigma / std::sqrt(n));
  // Standard error of a normal sample std is sigma / sqrt(2n).
  EXPECT_NEAR(sd, sigma, 3.0 * sigma / std::sqrt(2.0 * n));
}

TEST(Sensor, ZeroMeanReadingsClampHalfTheTime) {
  EnvConfig cfg;
  Rng rng(5);
  const int n = 20000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_from_mean(0.0, cfg, rng);
    ASSERT_GE(z, 0.0);
    zeros += (z == 0.0);
  }
  EXPECT_NEAR(static_cast<double>(zeros) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(Sensor, DrawsExactlyOneNormal) {
  EnvConfig cfg;
  Rng a(3), b(3);
  sample_from_mean(0.7, cfg, a);
  standard_normal(b);
  EXPECT_EQ(a(), b());
}

TEST(Motion, UnitMoves) {
  EnvConfig cfg;
  EXPECT_EQ(apply_action({5, 5}, Action::East, cfg), (Position{6, 5}));
  EXPECT_EQ(apply_action({5, 5}, Action::North, cfg), (Position{5, 6}));
  EXPECT_EQ(apply_action({5, 5}, Action::South, cfg), (Position{5, 4}));
  EXPECT_EQ(apply_action({5, 5}, Action::West, cfg), (Position{4, 5}));
}

TEST(Motion, ClampsAtTheWall) {
  EnvConfig cfg;
  EXPECT_EQ(apply_action({30, 15}, Action::East, cfg), (Position{30, 15}));
  EXPECT_EQ(apply_action({29.5, 15}, Action::East, cfg), (Position{30, 15}));
  EXPECT_EQ(apply_action({0, 0}, Action::SouthWest, cfg), (Position{0, 0}));
}

TEST(Motion, DiagonalMovesKeepStepLength) {
  EnvConfig cfg;
  cfg.action_set = ActionSet::EightConnected;
  const Position p = apply_action({10, 10}, Action::NorthEast, cfg);
  EXPECT_NEAR(distance(p, {10, 10}), 1.0, 1e-12);
  EXPECT_EQ(actions(ActionSet::FourConnected).size(), 4u);
  EXPECT_EQ(actions(ActionSet::EightConnected).size(), 8u);
}

TEST(Motion, StepObservesAtNewPosition) {
  EnvConfig cfg;
  const SourceTerm s = illustrative_source();
  Rng a(11), b(11);
  Position pa{0, 0}, pb{0, 0};
  for (int i = 0; i < 200; ++i) {
    const Action act = actions(cfg.action_set)[static_cast<std::size_t>(i * 7 % 4)];
    const StepResult ra = step(pa, act, cfg, s, a);
    const StepResult rb = step(pb, act, cfg, s, b);
    ASSERT_EQ(ra.observation.position, ra.position);
    ASSERT_TRUE(cfg.domain.contains(ra.position));
    ASSERT_EQ(ra.position, rb.position);
    ASSERT_EQ(ra.observation.concentration, rb.observation.concentration);
    pa = ra.position;
    pb = rb.position;
  }
}

TEST(Config, RejectsInvalidEnv) {
  EnvConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  EnvConfig bad = cfg;
  bad.beta = 0.0;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = cfg;
  bad.step_length = -1;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = cfg;
  bad.start_region = {25, 35, 0, 5};
  EXPECT_THROW(validate(bad), ConfigError);
  bad = cfg;
  bad.domain = {5, 5, 0, 30};
  EXPECT_THROW(validate(bad), ConfigError);
  bad = cfg;
  bad.max_steps = 0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Config, RejectsInvalidSource) {
  EXPECT_NO_THROW(validate(illustrative_source()));
  SourceTerm s = illustrative_source();
  s.q = 0;
  EXPECT_THROW(validate(s), ConfigError);
  s = illustrative_source();
  s.u = -0.1;
  EXPECT_THROW(validate(s), ConfigError);
  s = illustrative_source();
  s.tau = NAN;
  EXPECT_THROW(validate(s), ConfigError);
}
