#include "qexam/resource.hpp"

#include <stdexcept>

namespace qexam {

const char* to_string(ResourceKind kind) { return kind == ResourceKind::Psi ? "psi" : "phi"; }

std::string party_name(int party) {
  if (party == 0) return "alice";
  return "bob" + std::to_string(party);
}

EntangledResource make_resource(ResourceKind kind, int students, std::int64_t index, Rng& rng) {
  if (students < 1) throw std::invalid_argument("make_resource: need at least one student");
  if (students + 1 > kMaxQubits) throw ResourceError("make_resource: qubit cap exceeded");

  EntangledResource res;
  res.index = index;
  res.kind = kind;
  res.state = ghz_prepare(students + 1);
  res.party_qubit.resize(students + 1);
  for (int p = 0; p <= students; ++p) res.party_qubit[p] = p;
  if (kind == ResourceKind::Phi) {
    ShiftMask mask = ShiftMask::random(static_cast<std::size_t>(students), rng);
    res.state = apply_shift_mask(res.state, mask);
    res.mask = std::move(mask);
  }
  return res;
}

namespace {

int measure_qubit(EntangledResource& res, int qubit, Basis basis, Rng& rng) {
  MeasurementResult r = measure(res.state, qubit, basis, rng);
  res.state = std::move(r.post_state);
  return r.outcome;
}

}  // namespace

int measure_party_bit(EntangledResource& res, int party, Rng& rng) {
  return measure_qubit(res, res.party_qubit.at(party), Basis::Bz, rng);
}

int measure_party_sign(EntangledResource& res, int party, Rng& rng) {
  return measure_qubit(res, res.party_qubit.at(party), Basis::Bx, rng);
}

int measure_qubit_bit(EntangledResource& res, int qubit, Rng& rng) {
  return measure_qubit(res, qubit, Basis::Bz, rng);
}

}  // namespace qexam
