#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "qctx/simulator.hpp"
#include "support/fixtures.hpp"

using namespace qctx;

namespace {

// Straight transcription of the published xoshiro256** reference code,
// kept separate from the library so the two can be compared.
struct ReferenceXoshiro {
  std::array<std::uint64_t, 4> s;

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  void jump() {
    static const std::uint64_t table[] = {0x180ec6d33cfd0aba, 0xd5a61266f0c9392c, 0xa9582618e03fc9aa,
                                          0x39abdc4529b1661c};
    std::uint64_t s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    for (std::uint64_t w : table)
      for (int b = 0; b < 64; b++) {
        if (w & UINT64_C(1) << b) {
          s0 ^= s[0];
          s1 ^= s[1];
          s2 ^= s[2];
          s3 ^= s[3];
        }
        next();
      }
    s = {s0, s1, s2, s3};
  }

  static ReferenceXoshiro seeded(std::uint64_t seed) {
    ReferenceXoshiro r{};
    std::uint64_t x = seed;
    for (auto& w : r.s) {
      std::uint64_t z = (x += 0x9e3779b97f4a7c15);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
      z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
      w = z ^ (z >> 31);
    }
    return r;
  }
};

double bound_5_sigma(double p, std::size_t n) { return 5.0 * std::sqrt(p * (1 - p) / static_cast<double>(n)) + 1e-12; }

}  // namespace

TEST(Rng, SplitMixKnownOutput) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xE220A8397B1DCDAFull);
}

TEST(Rng, ReferenceTranscriptionMatchesKnownVector) {
  ReferenceXoshiro r{{1, 2, 3, 4}};
  EXPECT_EQ(r.next(), 11520u);
  EXPECT_EQ(r.next(), 0u);
  EXPECT_EQ(r.next(), 1509978240u);
  EXPECT_EQ(r.next(), 1215971899390074240u);
}

TEST(Rng, LibraryGeneratorMatchesReference) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xDEADBEEFull}) {
    Xoshiro256 g(seed);
    ReferenceXoshiro r = ReferenceXoshiro::seeded(seed);
    for (int k = 0; k < 1000; ++k) ASSERT_EQ(g.next(), r.next());
    g.jump();
    r.jump();
    for (int k = 0; k < 100; ++k) ASSERT_EQ(g.next(), r.next());
  }
}

TEST(Rng, UniformUsesTopBits) {
  Xoshiro256 g(9);
  ReferenceXoshiro r = ReferenceXoshiro::seeded(9);
  for (int k = 0; k < 100; ++k) {
    const double u = g.uniform();
    EXPECT_EQ(u, std::ldexp(static_cast<double>(r.next() >> 11), -53));
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_EQ(run_seed(5, 3), 6u);
}

TEST(MakeApparatus, BuildsAndRejectsIncompatibleHandles) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  EXPECT_EQ(app.primary.blocks.size(), 2u);
  EXPECT_EQ(app.secondary.size(), 2u);
  EXPECT_EQ(app.pointer_map, (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(make_apparatus(s, "B", "A", "C"), Incompatible);
  EXPECT_THROW(make_apparatus(s, "A", "B", "Z"), ValidationError);
}

TEST(SampleProperty, InverseCdfOverBornProbabilities) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const PDI a = make_apparatus(s).primary;  // blocks: A=+1 (2/3), A=-1 (1/3)
  EXPECT_EQ(sample_property(s.rho, a, 0.0), 0u);
  EXPECT_EQ(sample_property(s.rho, a, 0.66), 0u);
  EXPECT_EQ(sample_property(s.rho, a, 0.67), 1u);
  EXPECT_EQ(sample_property(s.rho, a, 0.999999), 1u);
  EXPECT_THROW(sample_property(s.rho, a, 1.0), OutOfRange);
  EXPECT_THROW(sample_property(s.rho, a, -0.1), OutOfRange);
  EXPECT_THROW(sample_property(s.rho, a, std::nan("")), OutOfRange);
}

TEST(SampleProperty, StrictBoundaryAndZeroProbabilityBlocks) {
  const DensityOperator half = validate_density(fixtures::diag3(0.5, 0.5, 0));
  const PDI c = spectral_decompose(ComplexMatrix::real(3, {1, 0, 0, 0, 2, 0, 0, 0, 3}));
  // Blocks in descending order: 3 (prob 0), 2 (0.5), 1 (0.5).
  EXPECT_EQ(sample_property(half, c, 0.0), 1u);
  EXPECT_EQ(sample_property(half, c, 0.5), 2u);  // u == cdf moves on
  const Scenario pure = builtin_abc(0.0);
  EXPECT_EQ(sample_property(pure.rho, make_apparatus(pure).primary, 0.999), 0u);
}

TEST(SampleProperty, IncompletePdiIsDegenerate) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  PDI partial = make_apparatus(s).primary;
  partial.blocks.pop_back();
  EXPECT_THROW(sample_property(s.rho, partial, 0.1), DegenerateDistribution);
}

TEST(RunExperiment, RecordsBornAndConditionalProbabilities) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const RunRecord r = run_experiment(s, app, seed);
    EXPECT_EQ(r.seed, seed);
    EXPECT_EQ(r.handle, Handle::B);
    EXPECT_LE(fixtures::max_abs_diff(r.property_probs, {2.0 / 3.0, 1.0 / 3.0}), 1e-12);
    const std::vector<double> expected = r.property == 0 ? std::vector<double>{0.5, 0.5} : std::vector<double>{1, 0};
    EXPECT_LE(fixtures::max_abs_diff(r.conditional_probs, expected), 1e-12);
    EXPECT_EQ(infer_property(r), r.property);
    if (r.property == 1) {
      EXPECT_EQ(r.pointer2, 0u);
    }
  }
}

TEST(RunExperiment, FirstDrawDecidesTheProperty) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Xoshiro256 g(seed);
    const double u1 = g.uniform();
    EXPECT_EQ(run_experiment(s, app, seed).property, sample_property(s.rho, app.primary, u1));
  }
}

TEST(RunExperiment, DeterministicForFixedSeed) {
  const Scenario s = builtin_abc(0.2);
  Apparatus app = make_apparatus(s);
  app.handle = Handle::C;
  EXPECT_EQ(run_experiment(s, app, 77), run_experiment(s, app, 77));
  const auto batch = simulate_batch(s, app, 50, 1234);
  const auto again = simulate_batch(s, app, 50, 1234);
  ASSERT_EQ(batch.size(), 50u);
  EXPECT_EQ(batch, again);
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_EQ(batch[i], run_experiment(s, app, 1234 ^ i));
}

TEST(CounterfactualPair, PrimaryOutcomeIgnoresTheHandle) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto [b, c] = counterfactual_pair(s, app, seed);
    ASSERT_EQ(b.property, c.property);
    ASSERT_EQ(b.pointer1, c.pointer1);
    EXPECT_EQ(b.handle, Handle::B);
    EXPECT_EQ(c.handle, Handle::C);
  }
}

TEST(Calibrate, PassesThenDetectsSwappedPointers) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  Apparatus app = make_apparatus(s);
  EXPECT_TRUE(calibrate(s, app, 0, 100, 5).passed());
  EXPECT_TRUE(calibrate(s, app, 1, 100, 5).passed());
  EXPECT_THROW(calibrate(s, app, 2, 10, 5), OutOfRange);
  app.pointer_map = {1, 0};
  try {
    calibrate(s, app, 0, 100, 5);
    FAIL() << "expected CalibrationFailure";
  } catch (const CalibrationFailure& e) {
    EXPECT_EQ(e.run(), 1u);
  }
}

TEST(TwoApparatus, SecondParticleUsesJumpedStream) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TwoApparatusRecord r = two_apparatus_run(s, app, seed);
    EXPECT_EQ(r.particle1, run_experiment(s, app, seed));  // handle B
    EXPECT_EQ(r.particle2.handle, Handle::C);
    ReferenceXoshiro ref = ReferenceXoshiro::seeded(seed);
    ref.jump();
    const double u = std::ldexp(static_cast<double>(ref.next() >> 11), -53);
    EXPECT_EQ(r.particle2.property, sample_property(s.rho, app.primary, u));
  }
}

TEST(Frequencies, ErrorsAndTally) {
  EXPECT_THROW(empirical_frequencies({}), EmptyInput);
  EXPECT_THROW(joint_frequencies({}), EmptyInput);
  RunRecord b, c;
  c.handle = Handle::C;
  EXPECT_THROW(empirical_frequencies({b, c}), MixedHandles);
  const FrequencyTable t = tally({{0, 1}, {0, 1}, {1, 0}, {0, 0}});
  EXPECT_EQ(t.total, 4u);
  EXPECT_EQ(t.count({0, 1}), 2u);
  EXPECT_EQ(t.count({1, 1}), 0u);
  EXPECT_DOUBLE_EQ(t.frequency({0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(t.frequency({1, 1}), 0.0);
}

TEST(Frequencies, ConvergeToBornProbabilities) {
  const std::size_t n = 20000;
  for (Handle h : {Handle::B, Handle::C}) {
    const Scenario s = builtin_abc(1.0 / 3.0);
    Apparatus app = make_apparatus(s);
    app.handle = h;
    const FrequencyTable t = empirical_frequencies(simulate_batch(s, app, n, 2024));
    // Joint (A, secondary) table for rho = diag(1/3, 1/3, 1/3): 1/3 on each of
    // (+,+), (+,-), (-,+) and 0 on (-,-).
    double total = 0;
    for (const auto& key : std::vector<std::vector<std::size_t>>{{0, 0}, {0, 1}, {1, 0}}) {
      EXPECT_LE(std::abs(t.frequency(key) - 1.0 / 3.0), bound_5_sigma(1.0 / 3.0, n));
      total += t.frequency(key);
    }
    EXPECT_EQ(t.count({1, 1}), 0u);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Frequencies, JointTableOfTwoApparatuses) {
  const Scenario s = builtin_abc(1.0 / 3.0);
  const Apparatus app = make_apparatus(s);
  std::vector<TwoApparatusRecord> recs;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) recs.push_back(two_apparatus_run(s, app, run_seed(99, i)));
  const FrequencyTable t = joint_frequencies(recs);
  // Independent particles: product of the two single-apparatus tables (1/9 each).
  for (std::size_t a1 = 0; a1 < 2; ++a1)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t a2 = 0; a2 < 2; ++a2)
        for (std::size_t c = 0; c < 2; ++c) {
          const double expected = (a1 == 1 && b == 1) || (a2 == 1 && c == 1) ? 0.0 : 1.0 / 9.0;
          EXPECT_LE(std::abs(t.frequency({a1, b, a2, c}) - expected), bound_5_sigma(expected, n));
        }
}

TEST(JsonLine, FieldOrderAndValues) {
  RunRecord r;
  r.seed = 12;
  r.handle = Handle::C;
  r.property = 1;
  r.pointer1 = 1;
  r.pointer2 = 0;
  r.property_probs = {0.5, 0.5};
  EXPECT_EQ(to_json_line(r), R"({"seed":12,"handle":"C","property":1,"pointer1":1,"pointer2":0})");
}

// Both handles reuse u2, so the secondary indices differ exactly when u2
// falls between the two conditional CDF thresholds. For two-outcome
// secondaries that happens with probability sum_j p_j |P(B=+|j) - P(C=+|j)|.
TEST(CounterfactualPair, SecondaryDisagreementMatchesCdfGap) {
  const auto disagreement = [](const Scenario& s, std::size_t n) {
    const Apparatus app = make_apparatus(s);
    std::size_t differ = 0;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
      const auto [b, c] = counterfactual_pair(s, app, seed);
      differ += b.pointer2 != c.pointer2;
    }
    return static_cast<double>(differ) / static_cast<double>(n);
  };
  const std::size_t n = 10000;

  // Diagonal state: both conditionals are (1/2, 1/2) given A=+1 and (1, 0)
  // given A=-1, so the gap is zero and the indices never differ.
  EXPECT_EQ(disagreement(builtin_abc(1.0 / 3.0), n), 0.0);

  // Pure state cos(t) e2 + sin(t) e3: P(C=+|+) = cos^2 t, P(B=+|+) = (1 + sin 2t) / 2.
  const double t = 0.3;
  std::vector<Complex> psi{0.0, std::cos(t), std::sin(t)};
  const Scenario s = with_state(builtin_abc(0.0), ComplexMatrix::outer(psi));
  const double gap = std::abs(std::cos(t) * std::cos(t) - (1 + std::sin(2 * t)) / 2);
  EXPECT_LE(std::abs(disagreement(s, n) - gap), bound_5_sigma(gap, n));
  EXPECT_GT(disagreement(s, n), 0.0);
}
