#include "qexam/state_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qexam {

namespace {

constexpr double kNormTol = 1e-9;
constexpr double kZeroProjectionTol = 1e-12;

void require_qubit(const StateVector& state, int qubit) {
  if (qubit < 0 || qubit >= state.num_qubits()) {
    throw std::invalid_argument("qubit index " + std::to_string(qubit) +
                                " out of range for " + std::to_string(state.num_qubits()) +
                                " qubits");
  }
}

void require_basis_outcome(Basis basis, int outcome) {
  if (basis == Basis::Bz) {
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("Bz outcome must be 0 or 1");
  } else {
    if (outcome != 1 && outcome != -1) throw std::invalid_argument("Bx outcome must be +1 or -1");
  }
}

}  // namespace

const char* to_string(Basis basis) { return basis == Basis::Bz ? "Bz" : "Bx"; }

ShiftMask ShiftMask::random(std::size_t students, Rng& rng) {
  ShiftMask mask;
  mask.bits.resize(students);
  for (auto& b : mask.bits) b = static_cast<std::uint8_t>(rng.next_bit());
  return mask;
}

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) +
                                "], got " + std::to_string(num_qubits));
  }
  amps_.assign(std::size_t{1} << num_qubits, Amplitude{0.0, 0.0});
  amps_[0] = Amplitude{1.0, 0.0};
}

StateVector::StateVector(int num_qubits, std::vector<Amplitude> amplitudes)
    : num_qubits_(num_qubits), amps_(std::move(amplitudes)) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) + "]");
  }
  if (amps_.size() != (std::size_t{1} << num_qubits)) {
    throw std::invalid_argument("amplitude vector must have 2^k entries");
  }
}

double StateVector::norm_sq() const {
  double total = 0.0;
  for (const auto& a : amps_) total += std::norm(a);
  return total;
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm_sq() - 1.0) <= tol; }

void StateVector::apply_x(int qubit) {
  require_qubit(*this, qubit);
  const std::size_t bit = std::size_t{1} << shift_of(qubit);
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if ((i & bit) == 0) std::swap(amps_[i], amps_[i | bit]);
  }
}

StateVector ghz_prepare(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("ghz_prepare: qubit count must be in [1, " +
                                std::to_string(kMaxQubits) + "], got " +
                                std::to_string(num_qubits));
  }
  std::vector<Amplitude> amps(std::size_t{1} << num_qubits, Amplitude{0.0, 0.0});
  const double w = 1.0 / std::sqrt(2.0);
  amps.front() = Amplitude{w, 0.0};
  amps.back() = Amplitude{w, 0.0};
  return StateVector(num_qubits, std::move(amps));
}

StateVector apply_shift_mask(const StateVector& state, const ShiftMask& mask) {
  if (mask.size() + 1 != static_cast<std::size_t>(state.num_qubits())) {
    throw std::invalid_argument("apply_shift_mask: mask length must equal qubit count minus 1");
  }
  StateVector out = state;
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (mask[n]) out.apply_x(static_cast<int>(n) + 1);
  }
  return out;
}

Projection project(const StateVector& state, int qubit, int outcome, Basis basis) {
  require_qubit(state, qubit);
  require_basis_outcome(basis, outcome);

  const std::size_t bit = std::size_t{1} << state.shift_of(qubit);
  const auto& amps = state.amplitudes();
  std::vector<Amplitude> post(amps.size(), Amplitude{0.0, 0.0});
  double prob = 0.0;

  if (basis == Basis::Bz) {
    for (std::size_t i = 0; i < amps.size(); ++i) {
      const bool one = (i & bit) != 0;
      if (one == (outcome == 1)) {
        prob += std::norm(amps[i]);
        post[i] = amps[i];
      }
    }
  } else {
    // |s> component of each (i0, i1) pair is (a0 + s*a1)/sqrt(2); the post
    // state leaves the qubit in |s>.
    const double sign = outcome > 0 ? 1.0 : -1.0;
    for (std::size_t i0 = 0; i0 < amps.size(); ++i0) {
      if ((i0 & bit) != 0) continue;
      const std::size_t i1 = i0 | bit;
      const Amplitude c = 0.5 * (amps[i0] + sign * amps[i1]);
      prob += 2.0 * std::norm(c);
      post[i0] = c;
      post[i1] = sign * c;
    }
  }

  if (prob > 0.0) {
    const double scale = 1.0 / std::sqrt(prob);
    for (auto& a : post) a *= scale;
  }
  return Projection{prob, StateVector(state.num_qubits(), std::move(post))};
}

MeasurementResult measure(const StateVector& state, int qubit, Basis basis, Rng& rng) {
  const int first = basis == Basis::Bz ? 0 : +1;
  const int second = basis == Basis::Bz ? 1 : -1;

  Projection pf = project(state, qubit, first, basis);
  if (pf.probability < kZeroProjectionTol) {
    Projection ps = project(state, qubit, second, basis);
    if (ps.probability < kZeroProjectionTol) {
      throw InternalStateError("measure: both projections vanish; state is corrupted");
    }
    return MeasurementResult{second, std::move(ps.post_state)};
  }
  if (rng.next_double() < pf.probability) {
    return MeasurementResult{first, std::move(pf.post_state)};
  }
  Projection ps = project(state, qubit, second, basis);
  if (ps.probability < kZeroProjectionTol) {
    // All the mass was in the first outcome; the draw hit float round-off.
    return MeasurementResult{first, std::move(pf.post_state)};
  }
  return MeasurementResult{second, std::move(ps.post_state)};
}

namespace {

void distribution_walk(const StateVector& state, const std::vector<int>& qubits,
                       std::size_t depth, std::vector<int>& prefix, double acc,
                       Basis basis, std::map<std::vector<int>, double>& out) {
  if (depth == qubits.size()) {
    out[prefix] += acc;
    return;
  }
  const int outcomes[2] = {basis == Basis::Bz ? 0 : +1, basis == Basis::Bz ? 1 : -1};
  for (int outcome : outcomes) {
    Projection p = project(state, qubits[depth], outcome, basis);
    if (p.probability <= 1e-15) continue;
    prefix.push_back(outcome);
    distribution_walk(p.post_state, qubits, depth + 1, prefix, acc * p.probability, basis, out);
    prefix.pop_back();
  }
}

}  // namespace

std::map<std::vector<int>, double> outcome_distribution(const StateVector& state,
                                                        const std::vector<int>& qubits,
                                                        Basis basis) {
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    require_qubit(state, qubits[i]);
    for (std::size_t j = i + 1; j < qubits.size(); ++j) {
      if (qubits[i] == qubits[j]) {
        throw std::invalid_argument("outcome_distribution: qubit indices must be distinct");
      }
    }
  }
  std::map<std::vector<int>, double> out;
  std::vector<int> prefix;
  distribution_walk(state, qubits, 0, prefix, 1.0, basis, out);
  return out;
}

StateVector entangle_ancilla(const StateVector& state, int qubit, Amplitude alpha,
                             Amplitude beta) {
  require_qubit(state, qubit);
  const double weight = std::norm(alpha) + std::norm(beta);
  if (std::abs(weight - 1.0) > kNormTol) {
    throw std::invalid_argument("entangle_ancilla: |alpha|^2 + |beta|^2 must be 1");
  }
  if (state.num_qubits() + 1 > kMaxQubits) {
    throw ResourceError("entangle_ancilla: qubit cap exceeded");
  }

  const std::size_t bit = std::size_t{1} << state.shift_of(qubit);
  const auto& amps = state.amplitudes();
  std::vector<Amplitude> out(amps.size() * 2, Amplitude{0.0, 0.0});
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (amps[i] == Amplitude{0.0, 0.0}) continue;
    out[i << 1] += alpha * amps[i];             // ancilla |0>: target kept
    out[((i ^ bit) << 1) | 1] += beta * amps[i];  // ancilla |1>: target flipped
  }
  return StateVector(state.num_qubits() + 1, std::move(out));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  const int total = a.num_qubits() + b.num_qubits();
  if (total > kMaxQubits) throw ResourceError("tensor: qubit cap exceeded");
  std::vector<Amplitude> out(std::size_t{1} << total, Amplitude{0.0, 0.0});
  const std::size_t db = b.dim();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const Amplitude ai = a.amplitude(i);
    if (ai == Amplitude{0.0, 0.0}) continue;
    for (std::size_t j = 0; j < db; ++j) {
      out[i * db + j] = ai * b.amplitude(j);
    }
  }
  return StateVector(total, std::move(out));
}

}  // namespace qexam
