#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "doctest.h"
#include "qexam/state_vector.hpp"

using namespace qexam;

namespace {

StateVector random_state(int num_qubits, Rng& rng) {
  std::vector<Amplitude> amps(std::size_t{1} << num_qubits);
  double total = 0.0;
  for (auto& a : amps) {
    a = Amplitude{rng.next_double() - 0.5, rng.next_double() - 0.5};
    total += std::norm(a);
  }
  const double scale = 1.0 / std::sqrt(total);
  for (auto& a : amps) a *= scale;
  return StateVector(num_qubits, std::move(amps));
}

ShiftMask mask_of(std::vector<std::uint8_t> bits) { return ShiftMask{std::move(bits)}; }

}  // namespace

TEST_CASE("ghz_prepare puts equal weight on the all-zero and all-one labels") {
  const StateVector ghz = ghz_prepare(3);
  const double w = 1.0 / std::sqrt(2.0);
  CHECK(ghz.amplitude(0).real() == doctest::Approx(w));
  CHECK(ghz.amplitude(7).real() == doctest::Approx(w));
  for (std::size_t i = 1; i < 7; ++i) CHECK(std::abs(ghz.amplitude(i)) == doctest::Approx(0.0));
  CHECK(ghz.norm_sq() == doctest::Approx(1.0).epsilon(1e-9));

  const StateVector single = ghz_prepare(1);
  CHECK(single.amplitude(0).real() == doctest::Approx(w));
  CHECK(single.amplitude(1).real() == doctest::Approx(w));
}

TEST_CASE("ghz_prepare rejects out-of-range qubit counts") {
  CHECK_THROWS_AS(ghz_prepare(0), std::invalid_argument);
  CHECK_THROWS_AS(ghz_prepare(kMaxQubits + 1), std::invalid_argument);
}

TEST_CASE("apply_shift_mask relabels the GHZ branches") {
  const StateVector ghz = ghz_prepare(3);

  SUBCASE("all-zero mask is the identity") {
    const StateVector same = apply_shift_mask(ghz, mask_of({0, 0}));
    for (std::size_t i = 0; i < ghz.dim(); ++i) {
      CHECK(same.amplitude(i) == ghz.amplitude(i));
    }
  }

  SUBCASE("mask (1,0) flips Bob 1's qubit") {
    const StateVector masked = apply_shift_mask(ghz, mask_of({1, 0}));
    const double w = 1.0 / std::sqrt(2.0);
    CHECK(masked.amplitude(0b010).real() == doctest::Approx(w));
    CHECK(masked.amplitude(0b101).real() == doctest::Approx(w));
    CHECK(std::abs(masked.amplitude(0)) == doctest::Approx(0.0));
    CHECK(std::abs(masked.amplitude(7)) == doctest::Approx(0.0));
  }

  SUBCASE("mask (1,1) flips both students' qubits") {
    const StateVector masked = apply_shift_mask(ghz, mask_of({1, 1}));
    const double w = 1.0 / std::sqrt(2.0);
    CHECK(masked.amplitude(0b011).real() == doctest::Approx(w));
    CHECK(masked.amplitude(0b100).real() == doctest::Approx(w));
  }

  SUBCASE("mask length must match") {
    CHECK_THROWS_AS(apply_shift_mask(ghz, mask_of({1, 0, 1})), std::invalid_argument);
  }
}

TEST_CASE("Bz measurement collapses every party onto the same branch") {
  Rng rng(2024);
  int saw[2] = {0, 0};
  for (int trial = 0; trial < 200; ++trial) {
    MeasurementResult first = measure(ghz_prepare(3), 0, Basis::Bz, rng);
    ++saw[first.outcome];
    MeasurementResult second = measure(first.post_state, 1, Basis::Bz, rng);
    MeasurementResult third = measure(second.post_state, 2, Basis::Bz, rng);
    CHECK(second.outcome == first.outcome);
    CHECK(third.outcome == first.outcome);
  }
  CHECK(saw[0] > 50);  // both branches appear
  CHECK(saw[1] > 50);
}

TEST_CASE("measuring an eigenstate is deterministic") {
  Rng rng(7);
  const StateVector zero(3);  // |000>
  for (int trial = 0; trial < 50; ++trial) {
    CHECK(measure(zero, 1, Basis::Bz, rng).outcome == 0);
  }
}

TEST_CASE("X-basis signs of a GHZ state multiply to +1") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    StateVector state = ghz_prepare(3);
    int product = 1;
    for (int q = 0; q < 3; ++q) {
      MeasurementResult r = measure(state, q, Basis::Bx, rng);
      product *= r.outcome;
      state = std::move(r.post_state);
    }
    CHECK(product == +1);
  }
}

TEST_CASE("repeating a measurement repeats the outcome") {
  Rng rng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    StateVector state = random_state(4, rng);
    const int qubit = static_cast<int>(rng.uniform_index(4));
    const Basis basis = rng.next_bit() ? Basis::Bx : Basis::Bz;
    MeasurementResult first = measure(state, qubit, basis, rng);
    MeasurementResult second = measure(first.post_state, qubit, basis, rng);
    CHECK(second.outcome == first.outcome);
  }
}

TEST_CASE("a state with no probability mass is reported as corrupted") {
  Rng rng(1);
  StateVector dead(2, std::vector<Amplitude>(4, Amplitude{0.0, 0.0}));
  CHECK_THROWS_AS(measure(dead, 0, Basis::Bz, rng), InternalStateError);
}

TEST_CASE("outcome_distribution matches the hand-computed GHZ tables") {
  const StateVector ghz = ghz_prepare(3);

  SUBCASE("Bz on the plain state") {
    const auto dist = outcome_distribution(ghz, {0, 1, 2}, Basis::Bz);
    REQUIRE(dist.size() == 2);
    CHECK(dist.at({0, 0, 0}) == doctest::Approx(0.5));
    CHECK(dist.at({1, 1, 1}) == doctest::Approx(0.5));
  }

  SUBCASE("Bz after mask (1,0)") {
    const auto dist =
        outcome_distribution(apply_shift_mask(ghz, mask_of({1, 0})), {0, 1, 2}, Basis::Bz);
    REQUIRE(dist.size() == 2);
    CHECK(dist.at({0, 1, 0}) == doctest::Approx(0.5));
    CHECK(dist.at({1, 0, 1}) == doctest::Approx(0.5));
  }

  SUBCASE("Bx is uniform over the even-minus tuples") {
    const auto dist = outcome_distribution(ghz, {0, 1, 2}, Basis::Bx);
    // Independently enumerated: every sign tuple with an even number of -1.
    std::set<std::vector<int>> expected;
    for (int bits = 0; bits < 8; ++bits) {
      std::vector<int> tuple;
      int minuses = 0;
      for (int q = 0; q < 3; ++q) {
        const bool minus = (bits >> q) & 1;
        minuses += minus;
        tuple.push_back(minus ? -1 : +1);
      }
      if (minuses % 2 == 0) expected.insert(tuple);
    }
    REQUIRE(dist.size() == expected.size());
    for (const auto& tuple : expected) CHECK(dist.at(tuple) == doctest::Approx(0.25));
  }

  SUBCASE("probabilities sum to one on random states") {
    Rng rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
      const StateVector state = random_state(5, rng);
      double total = 0.0;
      for (const auto& [tuple, p] : outcome_distribution(state, {0, 2, 4}, Basis::Bx)) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("duplicate qubits are rejected") {
    CHECK_THROWS_AS(outcome_distribution(ghz, {0, 0}, Basis::Bz), std::invalid_argument);
  }
}

TEST_CASE("Bz marginals from sampling agree with the exact distribution") {
  Rng rng(8675309);
  const int trials = 10000;
  int all_zero = 0;
  for (int t = 0; t < trials; ++t) {
    StateVector state = ghz_prepare(4);
    MeasurementResult r = measure(state, 0, Basis::Bz, rng);
    if (r.outcome == 0) ++all_zero;
  }
  // Exact probability 0.5; three standard errors at 1e4 trials is 0.015.
  CHECK(std::abs(all_zero / static_cast<double>(trials) - 0.5) < 0.015);
}

TEST_CASE("joint sampling frequencies match outcome_distribution on a probed state") {
  // A state with a non-uniform four-outcome joint distribution.
  const StateVector probed =
      entangle_ancilla(ghz_prepare(2), 1, std::sqrt(0.7), std::sqrt(0.3));
  const std::vector<int> qubits = {0, 1, 2};
  const auto exact = outcome_distribution(probed, qubits, Basis::Bz);

  Rng rng(5551212);
  const int trials = 10000;
  std::map<std::vector<int>, int> counts;
  for (int t = 0; t < trials; ++t) {
    StateVector state = probed;
    std::vector<int> tuple;
    for (int q : qubits) {
      MeasurementResult r = measure(state, q, Basis::Bz, rng);
      state = std::move(r.post_state);
      tuple.push_back(r.outcome);
    }
    ++counts[tuple];
  }
  for (const auto& [tuple, count] : counts) {
    CHECK(exact.count(tuple) == 1);  // sampling never leaves the support
  }
  for (const auto& [tuple, p] : exact) {
    const double freq = counts[tuple] / static_cast<double>(trials);
    const double se = std::sqrt(p * (1.0 - p) / trials);
    CHECK(std::abs(freq - p) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("entangle_ancilla implements the conditional-flip probe") {
  SUBCASE("alpha=1 leaves the state in a product with the probe") {
    const StateVector ghz = ghz_prepare(2);
    const StateVector probed = entangle_ancilla(ghz, 1, 1.0, 0.0);
    REQUIRE(probed.num_qubits() == 3);
    for (std::size_t i = 0; i < ghz.dim(); ++i) {
      CHECK(probed.amplitude(i << 1) == ghz.amplitude(i));
      CHECK(std::abs(probed.amplitude((i << 1) | 1)) == doctest::Approx(0.0));
    }
  }

  SUBCASE("beta=1 always flips the target and flags the probe") {
    const StateVector zero(1);  // |0>
    const StateVector probed = entangle_ancilla(zero, 0, 0.0, 1.0);
    CHECK(std::abs(probed.amplitude(0b11)) == doctest::Approx(1.0));
  }

  SUBCASE("a balanced probe breaks the Bz correlation half the time") {
    const StateVector probed =
        entangle_ancilla(ghz_prepare(3), 1, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    const auto dist = outcome_distribution(probed, {0, 1}, Basis::Bz);
    double mismatch = 0.0;
    for (const auto& [tuple, p] : dist) {
      if (tuple[0] != tuple[1]) mismatch += p;
    }
    CHECK(mismatch == doctest::Approx(0.5));
  }

  SUBCASE("complex probe amplitudes are accepted when normalized") {
    const Amplitude alpha{0.6, 0.0};
    const Amplitude beta{0.0, 0.8};
    const StateVector probed = entangle_ancilla(ghz_prepare(2), 1, alpha, beta);
    CHECK(probed.is_normalized(1e-9));
  }

  SUBCASE("non-normalized probe amplitudes are rejected") {
    CHECK_THROWS_AS(entangle_ancilla(ghz_prepare(2), 1, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("tensor respects the qubit cap") {
  CHECK_THROWS_AS(tensor(ghz_prepare(13), ghz_prepare(12)), ResourceError);
}

TEST_CASE("norm stays within 1e-9 across random operation chains") {
  Rng rng(4242);
  for (int trial = 0; trial < 30; ++trial) {
    StateVector state = ghz_prepare(4);
    for (int step = 0; step < 12; ++step) {
      switch (rng.uniform_index(3)) {
        case 0:
          state.apply_x(static_cast<int>(rng.uniform_index(state.num_qubits())));
          break;
        case 1:
          if (state.num_qubits() < 7) {
            state = entangle_ancilla(state,
                                     static_cast<int>(rng.uniform_index(state.num_qubits())),
                                     std::sqrt(0.7), std::sqrt(0.3));
          }
          break;
        default: {
          const Basis basis = rng.next_bit() ? Basis::Bx : Basis::Bz;
          state = measure(state, static_cast<int>(rng.uniform_index(state.num_qubits())), basis,
                          rng)
                      .post_state;
          break;
        }
      }
      CHECK(state.is_normalized(1e-9));
    }
  }
}

TEST_CASE("GHZ Z-correlation holds exactly for up to 8 students") {
  for (int students = 1; students <= 8; ++students) {
    std::vector<int> qubits;
    for (int q = 0; q <= students; ++q) qubits.push_back(q);
    const auto dist = outcome_distribution(ghz_prepare(students + 1), qubits, Basis::Bz);
    REQUIRE(dist.size() == 2);
    CHECK(dist.at(std::vector<int>(qubits.size(), 0)) == doctest::Approx(0.5));
    CHECK(dist.at(std::vector<int>(qubits.size(), 1)) == doctest::Approx(0.5));
  }
}

TEST_CASE("masked Z-correlation and X-parity hold for every mask up to 6 students") {
  for (int students = 1; students <= 6; ++students) {
    std::vector<int> qubits;
    for (int q = 0; q <= students; ++q) qubits.push_back(q);
    const StateVector ghz = ghz_prepare(students + 1);

    for (std::size_t bits = 0; bits < (std::size_t{1} << students); ++bits) {
      std::vector<std::uint8_t> mask_bits(static_cast<std::size_t>(students));
      for (int n = 0; n < students; ++n) {
        mask_bits[static_cast<std::size_t>(n)] = (bits >> n) & 1u;
      }
      const StateVector masked = apply_shift_mask(ghz, mask_of(mask_bits));

      for (const auto& [tuple, p] : outcome_distribution(masked, qubits, Basis::Bz)) {
        CHECK(p == doctest::Approx(0.5));
        for (int n = 1; n <= students; ++n) {
          CHECK(tuple[static_cast<std::size_t>(n)] ==
                (tuple[0] ^ mask_bits[static_cast<std::size_t>(n) - 1]));
        }
      }
      for (const auto& [tuple, p] : outcome_distribution(masked, qubits, Basis::Bx)) {
        CHECK(p > 0.0);
        int product = 1;
        for (std::size_t i = 1; i < tuple.size(); ++i) product *= tuple[i];
        CHECK(tuple[0] == product);
      }
    }
  }
}
