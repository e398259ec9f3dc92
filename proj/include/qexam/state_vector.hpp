#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "qexam/common.hpp"
#include "qexam/rng.hpp"

namespace qexam {

using Amplitude = std::complex<double>;

// Measurement bases. Bz is the computational basis {|0>,|1>} with bit
// outcomes; Bx is the Hadamard basis {|+>,|->} with sign outcomes +1/-1.
enum class Basis { Bz, Bx };

const char* to_string(Basis basis);

// Per-student secret flip bits. Entry n-1 decides whether Bob n's qubit of a
// shared state was bit-flipped before distribution.
struct ShiftMask {
  std::vector<std::uint8_t> bits;

  static ShiftMask random(std::size_t students, Rng& rng);
  std::size_t size() const { return bits.size(); }
  std::uint8_t operator[](std::size_t n) const { return bits[n]; }
};

// Dense complex amplitude vector over the k-qubit computational basis.
// Qubit 0 is the most significant bit of the basis label.
class StateVector {
 public:
  explicit StateVector(int num_qubits);  // |0...0>
  StateVector(int num_qubits, std::vector<Amplitude> amplitudes);

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  const std::vector<Amplitude>& amplitudes() const { return amps_; }
  Amplitude amplitude(std::size_t basis_label) const { return amps_[basis_label]; }

  double norm_sq() const;
  bool is_normalized(double tol = 1e-9) const;

  // Pauli bit flip on one qubit, in place.
  void apply_x(int qubit);

  // Bit position of `qubit` inside a basis label.
  int shift_of(int qubit) const { return num_qubits_ - 1 - qubit; }

 private:
  int num_qubits_;
  std::vector<Amplitude> amps_;
};

struct MeasurementResult {
  int outcome;             // Bz: 0/1, Bx: +1/-1
  StateVector post_state;  // measured qubit left in the found eigenstate
};

struct Projection {
  double probability;
  StateVector post_state;  // normalized; meaningful only if probability > 0
};

// (|0...0> + |1...1>)/sqrt(2) over num_qubits qubits.
StateVector ghz_prepare(int num_qubits);

// Applies the mask's bit flips to qubits 1..N; qubit 0 (Alice's) is left
// alone. The state must have mask.size()+1 qubits.
StateVector apply_shift_mask(const StateVector& state, const ShiftMask& mask);

// Projects `qubit` onto the given outcome (0/1 for Bz, +1/-1 for Bx) and
// renormalizes. probability may be 0, in which case post_state is unusable.
Projection project(const StateVector& state, int qubit, int outcome, Basis basis);

// Born-rule sample of a single-qubit measurement; collapses the qubit.
MeasurementResult measure(const StateVector& state, int qubit, Basis basis, Rng& rng);

// Exact joint distribution of measuring the listed qubits in order.
// Unlisted qubits are left unmeasured (marginalized). Keys are outcome
// tuples, one entry per listed qubit.
std::map<std::vector<int>, double> outcome_distribution(const StateVector& state,
                                                        const std::vector<int>& qubits,
                                                        Basis basis);

// Appends a probe qubit (initialized per the attack convention: |0> marks
// "kept", |1> marks "flipped") and entangles it with `qubit`: the target is
// flipped with amplitude beta and left alone with amplitude alpha.
StateVector entangle_ancilla(const StateVector& state, int qubit, Amplitude alpha,
                             Amplitude beta);

// Tensor product; the qubits of `a` come first in the combined labeling.
StateVector tensor(const StateVector& a, const StateVector& b);

}  // namespace qexam
