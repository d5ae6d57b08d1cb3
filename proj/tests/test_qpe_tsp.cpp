#include "qsolve/qpe_tsp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qsolve;
using namespace qsolve::tsp;

namespace {

TspInstance four_nodes()
{
  return {{{0, 2, 1, 3}, {2, 0, 2, 1}, {1, 2, 0, 4}, {3, 1, 4, 0}}};
}

TspInstance ones(std::size_t n)
{
  TspInstance t{std::vector<std::vector<std::uint64_t>>(n, std::vector<std::uint64_t>(n, 1))};
  for (std::size_t i = 0; i < n; ++i) {
    t.weights[i][i] = 0;
  }
  return t;
}

TspInstance random_instance(std::size_t n, std::uint64_t max_weight, std::mt19937_64& rng)
{
  TspInstance t{std::vector<std::vector<std::uint64_t>>(n, std::vector<std::uint64_t>(n, 0))};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      t.weights[i][j] = t.weights[j][i] = rng() % (max_weight + 1);
    }
  }
  return t;
}

// Minimum over all n! orderings, summing the matrix directly.
std::uint64_t brute_force_minimum(const TspInstance& t)
{
  std::vector<std::size_t> order(t.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t best = ~std::uint64_t{0};
  do {
    std::uint64_t len = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      len += t.weights[order[i]][order[(i + 1) % order.size()]];
    }
    best = std::min(best, len);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

}  // namespace

// enumerate_cycles

TEST(EnumerateCycles, Triangle)
{
  EXPECT_EQ(enumerate_cycles(3), (std::vector<Tour>{{{1, 2, 3}}}));
}

TEST(EnumerateCycles, FourNodes)
{
  EXPECT_EQ(enumerate_cycles(4),
            (std::vector<Tour>{{{1, 2, 3, 4}}, {{1, 2, 4, 3}}, {{1, 3, 2, 4}}}));
}

TEST(EnumerateCycles, CountsAndUniqueness)
{
  const std::size_t expected[] = {1, 3, 12, 60, 360, 2520};
  for (std::size_t n = 3; n <= 8; ++n) {
    const auto tours = enumerate_cycles(n);
    ASSERT_EQ(tours.size(), expected[n - 3]);
    EXPECT_TRUE(std::is_sorted(tours.begin(), tours.end()));
    std::set<Tour> unique;
    for (const auto& t : tours) {
      EXPECT_EQ(canonical(t), t);
      EXPECT_TRUE(unique.insert(t).second);
      EXPECT_FALSE(unique.count(canonical(reversed(t))) && canonical(reversed(t)) != t);
    }
  }
  EXPECT_THROW(enumerate_cycles(2), std::invalid_argument);
  EXPECT_THROW(enumerate_cycles(9), std::invalid_argument);
}

TEST(Canonical, RotationAndReversal)
{
  EXPECT_EQ(canonical({{1, 4, 2, 3}}), (Tour{{1, 3, 2, 4}}));
  EXPECT_EQ(canonical({{2, 4, 1, 3}}), (Tour{{1, 3, 2, 4}}));
  EXPECT_EQ(reversed({{1, 3, 2, 4}}), (Tour{{1, 4, 2, 3}}));
  EXPECT_EQ(to_string({{1, 4, 2, 3}}), "[1, 4, 2, 3]");
  EXPECT_THROW(canonical({{1, 1, 2}}), std::invalid_argument);
}

// tour_length

TEST(TourLength, Examples)
{
  EXPECT_EQ(tour_length(four_nodes(), {{1, 4, 2, 3}}), 7u);
  EXPECT_EQ(tour_length(four_nodes(), {{1, 2, 3, 4}}), 11u);
  EXPECT_EQ(tour_length(four_nodes(), {{1, 2, 4, 3}}), 8u);
  EXPECT_EQ(tour_length(ones(3), {{1, 2, 3}}), 3u);
  EXPECT_THROW(tour_length(four_nodes(), {{1, 2, 3}}), std::invalid_argument);
}

TEST(TourLength, ReversalSymmetry)
{
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_instance(6, 20, rng);
    for (const auto& tour : enumerate_cycles(6)) {
      ASSERT_EQ(tour_length(t, tour), tour_length(t, reversed(tour)));
    }
  }
}

// validate

TEST(Validate, RejectsMalformedInstances)
{
  EXPECT_THROW(validate({{{0, 1}, {1, 0}}}), std::invalid_argument);
  EXPECT_THROW(validate({{{0, 1, 2}, {1, 0, 3}, {2, 4, 0}}}), std::invalid_argument);
  EXPECT_THROW(validate({{{0, 1, 2}, {1, 0}, {2, 3, 0}}}), std::invalid_argument);
  EXPECT_NO_THROW(validate(four_nodes()));
}

// phase_scale

TEST(PhaseScale, Examples)
{
  EXPECT_EQ(phase_scale(four_nodes()), (PhaseScale{16, 4}));
  EXPECT_EQ(phase_scale(ones(3)), (PhaseScale{4, 2}));
  std::mt19937_64 rng(1);
  EXPECT_EQ(phase_scale(random_instance(3, 0, rng)), (PhaseScale{2, 1}));  // all zero
}

TEST(PhaseScale, BoundsEveryTour)
{
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_instance(3 + trial % 4, 50, rng);
    const auto s = phase_scale(t);
    EXPECT_EQ(s.scale, std::uint64_t{1} << s.precision_bits);
    for (const auto& tour : enumerate_cycles(t.n())) {
      ASSERT_LT(tour_length(t, tour), s.scale);
    }
  }
}

// encode / decode

TEST(EncodeEigenstate, Examples)
{
  EXPECT_EQ(encode_eigenstate({{1, 2, 3, 4}}, 4), 0b01101100u);
  EXPECT_EQ(encode_eigenstate({{1, 4, 2, 3}}, 4), 0b11100001u);
  // Triangle: 2 bits per block, succ(1)=2, succ(2)=3, succ(3)=1.
  EXPECT_EQ(encode_eigenstate({{1, 2, 3}}, 3), 0b011000u);
}

TEST(DecodeEigenstate, RoundTripsAndRejectsNonCycles)
{
  for (std::size_t n = 3; n <= 6; ++n) {
    for (const auto& t : enumerate_cycles(n)) {
      ASSERT_EQ(decode_eigenstate(encode_eigenstate(t, n), n), t);
      ASSERT_EQ(decode_eigenstate(encode_eigenstate(reversed(t), n), n), t);
    }
  }
  EXPECT_FALSE(decode_eigenstate(0, 4).has_value());               // every node -> 1
  EXPECT_FALSE(decode_eigenstate(0b01001110u, 4).has_value());     // two 2-cycles
  EXPECT_FALSE(decode_eigenstate(0b111111u, 3).has_value());       // successor 4 out of range
}

// build_phase_unitary

TEST(PhaseUnitary, EigenphasesOfFourNodes)
{
  const auto u = build_phase_unitary(four_nodes(), 16);
  EXPECT_DOUBLE_EQ(u.eigenphase(encode_eigenstate({{1, 4, 2, 3}}, 4)), 7.0 / 16.0);
  EXPECT_DOUBLE_EQ(u.eigenphase(encode_eigenstate({{1, 2, 3, 4}}, 4)), 11.0 / 16.0);
  EXPECT_EQ(u.num_qubits(), 8u);
}

TEST(PhaseUnitary, ZeroWeightsGiveIdentity)
{
  std::mt19937_64 rng(0);
  const auto u = build_phase_unitary(random_instance(4, 0, rng), 2);
  for (const auto a : u.power_gate(1).angles) {
    ASSERT_EQ(a, 0.0);
  }
}

TEST(PhaseUnitary, EigenstateProperty)
{
  // U applied to each cycle basis state changes only that amplitude, by
  // exp(2 pi i L / S).
  const auto t = four_nodes();
  const auto s = phase_scale(t);
  const auto u = build_phase_unitary(t, s.scale);
  for (const auto& tour : enumerate_cycles(4)) {
    const auto idx = encode_eigenstate(tour, 4);
    std::vector<Amplitude> e(std::size_t{1} << u.num_qubits(), 0.0);
    e[idx] = 1.0;
    auto state = StateVector::from_amplitudes(e);
    std::vector<Qubit> all(u.num_qubits());
    std::iota(all.begin(), all.end(), Qubit{0});
    state.apply_gate(u.power_gate(1), {}, all);
    const auto expected = std::polar(1.0, 2.0 * std::numbers::pi *
                                              static_cast<double>(tour_length(t, tour)) /
                                              static_cast<double>(s.scale));
    EXPECT_LT(std::abs(state[idx] - expected), 1e-12);
    EXPECT_NEAR(state.norm_squared(), 1.0, 1e-12);
  }
}

TEST(PhaseUnitary, PowersReduceModScale)
{
  const auto u = build_phase_unitary(four_nodes(), 16);
  const auto idx = encode_eigenstate({{1, 4, 2, 3}}, 4);
  EXPECT_NEAR(u.power_gate(4).angles[idx], 2.0 * std::numbers::pi * 12.0 / 16.0, 1e-12);
  EXPECT_EQ(u.power_gate(16).angles[idx], 0.0);
  EXPECT_THROW(build_phase_unitary(four_nodes(), 12), std::invalid_argument);
}

// qpe

TEST(Qpe, ZeroPhaseGivesZero)
{
  std::mt19937_64 rng(0);
  const auto u = build_phase_unitary(random_instance(3, 0, rng), 2);
  for (std::size_t m = 1; m <= 4; ++m) {
    const auto run = qpe(encode_eigenstate({{1, 2, 3}}, 3), u, m, 64, 1);
    EXPECT_EQ(run.estimate.raw, 0u);
    EXPECT_NEAR(run.estimate.probability, 1.0, 1e-9);
  }
}

TEST(Qpe, ThreeEighths)
{
  // Triangle of unit weights has length 3; with S = 8 the phase is 3/8.
  const auto u = build_phase_unitary(ones(3), 8);
  const auto run = qpe(encode_eigenstate({{1, 2, 3}}, 3), u, 3, 256, 4);
  EXPECT_EQ(run.estimate.raw, 3u);
  EXPECT_NEAR(run.estimate.probability, 1.0, 1e-9);
  EXPECT_EQ(run.histogram.counts, (std::map<std::string, std::size_t>{{"011", 256}}));
  EXPECT_DOUBLE_EQ(run.estimate.phase(), 0.375);
}

TEST(Qpe, FourNodeShortestCycle)
{
  const auto u = build_phase_unitary(four_nodes(), 16);
  const auto run = qpe(encode_eigenstate({{1, 4, 2, 3}}, 4), u, 4);
  EXPECT_EQ(run.estimate.raw, 7u);
  EXPECT_NEAR(run.estimate.probability, 1.0, 1e-9);
}

TEST(Qpe, InexactPhasePeaksAtNearestValue)
{
  // Length 3 with S = 8 read on 2 precision qubits: phase 3/8 sits between
  // 1/4 and 2/4, each with probability about 0.43.
  const auto u = build_phase_unitary(ones(3), 8);
  const auto run = qpe(encode_eigenstate({{1, 2, 3}}, 3), u, 2, 4096, 2);
  EXPECT_TRUE(run.estimate.raw == 1 || run.estimate.raw == 2);
  EXPECT_LT(run.estimate.probability, 0.5);
}

TEST(Qpe, RespectsQubitCap)
{
  const auto u = build_phase_unitary(four_nodes(), 16);
  EXPECT_THROW(qpe(0, u, 4, 1, 0, 11), ResourceError);
  EXPECT_THROW(build_qpe_body(u, 0), std::invalid_argument);
}

// decode_phase

TEST(DecodePhase, Examples)
{
  EXPECT_EQ(decode_phase({7, 4, 1.0}, 16), 7u);
  EXPECT_EQ(decode_phase({0, 4, 1.0}, 16), 0u);
}

TEST(DecodePhase, ExactForEveryCycleUpToFiveNodes)
{
  std::mt19937_64 rng(31);
  for (std::size_t n = 3; n <= 5; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto t = random_instance(n, 9, rng);
      const auto s = phase_scale(t);
      const auto u = build_phase_unitary(t, s.scale);
      for (const auto& tour : enumerate_cycles(n)) {
        const auto run = qpe(encode_eigenstate(tour, n), u, s.precision_bits, 32, trial);
        ASSERT_EQ(decode_phase(run.estimate, s.scale), tour_length(t, tour));
        ASSERT_GE(run.estimate.probability, 1 - 1e-9);
        ASSERT_EQ(run.histogram.counts.size(), 1u);
      }
    }
  }
}

// solve

TEST(Solve, FourNodes)
{
  const auto r = solve(four_nodes());
  EXPECT_EQ(r.best_tour, (Tour{{1, 3, 2, 4}}));
  EXPECT_EQ(reversed(r.best_tour), (Tour{{1, 4, 2, 3}}));
  EXPECT_EQ(r.best_length, 7u);
  EXPECT_EQ(r.scale, 16u);
  EXPECT_EQ(r.precision_bits, 4u);
  ASSERT_EQ(r.per_cycle.size(), 3u);
  EXPECT_EQ(r.per_cycle[0].length, 11u);
  EXPECT_EQ(r.per_cycle[1].length, 8u);
  EXPECT_EQ(r.per_cycle[2].length, 7u);
}

TEST(Solve, Triangle)
{
  const auto r = solve(ones(3));
  EXPECT_EQ(r.best_tour, (Tour{{1, 2, 3}}));
  EXPECT_EQ(r.best_length, 3u);
}

TEST(Solve, TiesGoToSmallestTour)
{
  const auto r = solve(ones(5));
  EXPECT_EQ(r.best_tour, (Tour{{1, 2, 3, 4, 5}}));
  EXPECT_EQ(r.best_length, 5u);
}

TEST(Solve, MatchesBruteForceMinimum)
{
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 3 + trial % 3;
    const auto t = random_instance(n, 9, rng);
    const auto r = solve(t, {static_cast<std::uint64_t>(trial), 64});
    ASSERT_EQ(r.best_length, brute_force_minimum(t));
    ASSERT_EQ(tour_length(t, r.best_tour), r.best_length);
    std::uint64_t lowest = ~std::uint64_t{0};
    for (const auto& c : r.per_cycle) {
      lowest = std::min(lowest, c.length);
    }
    ASSERT_EQ(r.best_length, lowest);
  }
}

TEST(Solve, Deterministic)
{
  const auto a = solve(four_nodes(), {9, 100});
  const auto b = solve(four_nodes(), {9, 100});
  ASSERT_EQ(a.per_cycle.size(), b.per_cycle.size());
  for (std::size_t i = 0; i < a.per_cycle.size(); ++i) {
    EXPECT_EQ(a.per_cycle[i].estimate.raw, b.per_cycle[i].estimate.raw);
  }
}

TEST(Solve, ErrorsPropagate)
{
  EXPECT_THROW(solve(four_nodes(), {0, 0}), std::invalid_argument);
  EXPECT_THROW(solve(four_nodes(), {0, 16, 10}), ResourceError);
}
