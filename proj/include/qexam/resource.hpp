#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qexam/state_vector.hpp"

namespace qexam {

enum class ResourceKind { Psi, Phi };

const char* to_string(ResourceKind kind);

// Party naming: party 0 is Alice, parties 1..N are the Bobs.
std::string party_name(int party);

// One ordered shared entangled state plus the party-to-qubit ownership map.
// As prepared, qubit 0 is Alice's and qubit n belongs to Bob n. Channel
// attacks may extend the state with probe qubits or splice in a substituted
// state; they then update the map and record which qubits Eve holds.
struct EntangledResource {
  std::int64_t index = 0;  // ordering label m
  ResourceKind kind = ResourceKind::Psi;
  StateVector state{1};
  std::vector<int> party_qubit;    // [0] = Alice, [n] = Bob n
  std::optional<ShiftMask> mask;   // Phi only; known to Alice alone
  std::vector<int> eve_ancillas;   // probe qubits appended by Eve
  std::vector<int> eve_captured;   // original qubits Eve kept back
  std::optional<int> eve_kept;     // Eve's own retained qubit (substitution)

  int students() const { return static_cast<int>(party_qubit.size()) - 1; }
};

// Prepares a fresh shared state for N students. Phi resources get a fresh
// uniform mask drawn from `rng` and applied before distribution.
EntangledResource make_resource(ResourceKind kind, int students, std::int64_t index, Rng& rng);

// Single-party measurements on the shared state; the state collapses in
// place and the outcome is returned.
int measure_party_bit(EntangledResource& res, int party, Rng& rng);    // Bz
int measure_party_sign(EntangledResource& res, int party, Rng& rng);   // Bx
int measure_qubit_bit(EntangledResource& res, int qubit, Rng& rng);    // Bz, raw index

}  // namespace qexam
