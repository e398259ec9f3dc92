#include "qexam/attack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qexam/common.hpp"

namespace qexam {

namespace {

struct AttackName {
  AttackKind kind;
  const char* name;
};

constexpr AttackName kAttackNames[] = {
    {AttackKind::None, "none"},
    {AttackKind::MeasureResend, "measure-resend"},
    {AttackKind::Disturbance, "disturbance"},
    {AttackKind::EntangleMeasure, "entangle-measure"},
    {AttackKind::InterceptResend, "intercept-resend"},
    {AttackKind::Masquerade, "masquerade"},
};

}  // namespace

const char* to_string(AttackKind kind) {
  for (const auto& an : kAttackNames) {
    if (an.kind == kind) return an.name;
  }
  return "unknown";
}

std::optional<AttackKind> attack_kind_from(const std::string& name) {
  for (const auto& an : kAttackNames) {
    if (name == an.name) return an.kind;
  }
  return std::nullopt;
}

bool RoundSelector::selects(std::int64_t m) const {
  switch (mode) {
    case Mode::All:
      return true;
    case Mode::List:
      return std::find(list.begin(), list.end(), m) != list.end();
    case Mode::Stride:
      return stride > 0 && m % stride == 0;
  }
  return false;
}

RoundSelector RoundSelector::all() { return RoundSelector{}; }

RoundSelector RoundSelector::parse(const std::string& text) {
  RoundSelector sel;
  if (text.empty() || text == "all") {
    sel.mode = Mode::All;
    return sel;
  }
  if (text.rfind("stride:", 0) == 0) {
    sel.mode = Mode::Stride;
    sel.stride = std::stoll(text.substr(7));
    if (sel.stride < 1) throw ConfigError("rounds stride must be >= 1");
    return sel;
  }
  sel.mode = Mode::List;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sel.list.push_back(std::stoll(item));
  }
  if (sel.list.empty()) throw ConfigError("rounds list is empty: " + text);
  return sel;
}

std::string RoundSelector::str() const {
  switch (mode) {
    case Mode::All:
      return "all";
    case Mode::Stride:
      return "stride:" + std::to_string(stride);
    case Mode::List: {
      std::string out;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(list[i]);
      }
      return out;
    }
  }
  return "all";
}

void AttackConfig::validate(int students) const {
  if (kind == AttackKind::EntangleMeasure) {
    const double w = std::norm(alpha) + std::norm(beta);
    if (std::abs(w - 1.0) > 1e-9) {
      throw ConfigError("entangle-measure: |alpha|^2 + |beta|^2 must equal 1");
    }
    if (target_bob < 1 || target_bob > students) {
      throw ConfigError("entangle-measure: target student out of range");
    }
  }
  if (kind == AttackKind::InterceptResend && intercept_mask &&
      intercept_mask->size() != static_cast<std::size_t>(students)) {
    throw ConfigError("intercept-resend: substitute mask length must equal student count");
  }
  if (kind == AttackKind::Masquerade) {
    bool ok = impersonated == "alice";
    for (int n = 1; n <= students && !ok; ++n) ok = impersonated == party_name(n);
    if (!ok) throw ConfigError("masquerade: unknown party to impersonate: " + impersonated);
  }
  if (rounds.mode == RoundSelector::Mode::Stride && rounds.stride < 1) {
    throw ConfigError("rounds stride must be >= 1");
  }
}

int AttackConfig::extra_qubits(int students) const {
  switch (kind) {
    case AttackKind::EntangleMeasure:
      return 1;
    case AttackKind::InterceptResend:
      return students + 1;
    default:
      return 0;
  }
}

void Attack::on_round_complete(EntangledResource& /*res*/, const RoundPublicInfo& /*info*/,
                               Rng& /*rng*/) {}

void Attack::record_estimates(const EntangledResource& res, const RoundPublicInfo& info,
                              Rng& rng) {
  const auto it = knowledge_.rounds.find(res.index);
  const EveRoundRecord* rec = it == knowledge_.rounds.end() ? nullptr : &it->second;

  if (info.kind == RoundPublicInfo::Kind::MessageGive && info.alice_broadcast) {
    std::optional<int> pad;
    if (rec) {
      if (rec->alice_pad) {
        pad = rec->alice_pad;
      } else if (!rec->pad_bits.empty()) {
        pad = rec->pad_bits.begin()->second;
      }
    }
    const int estimate = pad ? (*info.alice_broadcast ^ *pad) : rng.next_bit();
    knowledge_.problem_estimates.push_back(BitEstimate{info.position, estimate});
  }

  if (info.kind == RoundPublicInfo::Kind::MessageCollect) {
    for (const auto& [bob, y] : info.bob_broadcasts) {
      std::optional<int> pad;
      if (rec) {
        const auto pb = rec->pad_bits.find(bob);
        if (pb != rec->pad_bits.end()) pad = pb->second;
      }
      const int estimate = pad ? (y ^ *pad) : rng.next_bit();
      knowledge_.solution_estimates[bob].push_back(BitEstimate{info.position, estimate});
    }
  }
}

namespace {

class NoAttack final : public Attack {
 public:
  using Attack::Attack;
};

// Eve Bz-measures every qubit bound for a Bob while it is in flight and
// forwards it. The shared state collapses to a product state; her outcomes
// are exactly the pads the parties will later measure.
class MeasureResendAttack final : public Attack {
 public:
  using Attack::Attack;

  void on_distribute(EntangledResource& res, Rng& rng) override {
    if (!taps_round(res.index)) return;
    auto& rec = knowledge_.rounds[res.index];
    rec.tapped = true;
    for (int n = 1; n <= res.students(); ++n) {
      rec.pad_bits[n] = measure_qubit_bit(res, res.party_qubit[n], rng);
    }
  }

  void on_round_complete(EntangledResource& res, const RoundPublicInfo& info,
                         Rng& rng) override {
    record_estimates(res, info, rng);
  }
};

// Eve flips each in-flight qubit with probability 1/2 and learns nothing:
// denial of service only. No estimates are ever recorded.
class DisturbanceAttack final : public Attack {
 public:
  using Attack::Attack;

  void on_distribute(EntangledResource& res, Rng& rng) override {
    if (!taps_round(res.index)) return;
    knowledge_.rounds[res.index].tapped = true;
    for (int n = 1; n <= res.students(); ++n) {
      if (rng.next_bit()) res.state.apply_x(res.party_qubit[n]);
    }
  }
};

// Eve entangles a probe qubit with one Bob's in-flight qubit. Her later
// Bz measurement of the probe reveals whether the qubit was flipped.
class EntangleMeasureAttack final : public Attack {
 public:
  using Attack::Attack;

  void on_distribute(EntangledResource& res, Rng& rng) override {
    (void)rng;
    if (!taps_round(res.index)) return;
    const int target = res.party_qubit.at(cfg_.target_bob);
    res.state = entangle_ancilla(res.state, target, cfg_.alpha, cfg_.beta);
    res.eve_ancillas.push_back(res.state.num_qubits() - 1);
    knowledge_.rounds[res.index].tapped = true;
  }

  void on_round_complete(EntangledResource& res, const RoundPublicInfo& info,
                         Rng& rng) override {
    auto it = knowledge_.rounds.find(res.index);
    if (it != knowledge_.rounds.end() && !it->second.flip_flag && !res.eve_ancillas.empty()) {
      it->second.flip_flag = measure_qubit_bit(res, res.eve_ancillas.front(), rng);
    }
    record_estimates(res, info, rng);
  }
};

// Eve keeps the qubits Alice sends and forwards qubits of her own entangled
// state instead. After the parties measure she reads both halves: the
// captured qubits carry Alice's pads, her retained qubit fixes the pads the
// Bobs actually used.
class InterceptResendAttack final : public Attack {
 public:
  using Attack::Attack;

  void on_distribute(EntangledResource& res, Rng& rng) override {
    if (!taps_round(res.index)) return;
    const int students = res.students();

    StateVector own = ghz_prepare(students + 1);
    ShiftMask own_mask{std::vector<std::uint8_t>(static_cast<std::size_t>(students), 0)};
    if (res.kind == ResourceKind::Phi) {
      own_mask = cfg_.intercept_mask ? ShiftMask{*cfg_.intercept_mask}
                                     : ShiftMask::random(static_cast<std::size_t>(students), rng);
      own = apply_shift_mask(own, own_mask);
    }

    const int base = res.state.num_qubits();
    res.state = tensor(res.state, own);
    res.eve_captured.clear();
    for (int n = 1; n <= students; ++n) {
      res.eve_captured.push_back(res.party_qubit[n]);
      res.party_qubit[n] = base + n;  // Bobs now hold Eve's qubits
    }
    res.eve_kept = base;

    auto& rec = knowledge_.rounds[res.index];
    rec.tapped = true;
    own_masks_[res.index] = own_mask;
  }

  void on_round_complete(EntangledResource& res, const RoundPublicInfo& info,
                         Rng& rng) override {
    auto it = knowledge_.rounds.find(res.index);
    if (it != knowledge_.rounds.end() && it->second.pad_bits.empty() && res.eve_kept) {
      auto& rec = it->second;
      // Captured qubits: collapsed by Alice's measurement, value = her pad.
      if (!res.eve_captured.empty()) {
        rec.alice_pad = measure_qubit_bit(res, res.eve_captured.front(), rng);
      }
      // Retained qubit plus her own mask give every Bob's pad.
      const int kept = measure_qubit_bit(res, *res.eve_kept, rng);
      const ShiftMask& mask = own_masks_.at(res.index);
      for (int n = 1; n <= res.students(); ++n) {
        const int s = res.kind == ResourceKind::Phi ? mask[static_cast<std::size_t>(n - 1)] : 0;
        rec.pad_bits[n] = kept ^ s;
      }
    }
    record_estimates(res, info, rng);
  }

 private:
  std::map<std::int64_t, ShiftMask> own_masks_;
};

// Eve emits classical messages under a forged identity. The authenticated
// channel rejects them; this attack exists to exercise that detection.
class MasqueradeAttack final : public Attack {
 public:
  using Attack::Attack;

  std::optional<Forgery> forge_message(std::int64_t m) override {
    if (!taps_round(m)) return std::nullopt;
    return Forgery{cfg_.impersonated};
  }
};

}  // namespace

std::unique_ptr<Attack> make_attack(const AttackConfig& cfg) {
  switch (cfg.kind) {
    case AttackKind::None:
      return std::make_unique<NoAttack>(cfg);
    case AttackKind::MeasureResend:
      return std::make_unique<MeasureResendAttack>(cfg);
    case AttackKind::Disturbance:
      return std::make_unique<DisturbanceAttack>(cfg);
    case AttackKind::EntangleMeasure:
      return std::make_unique<EntangleMeasureAttack>(cfg);
    case AttackKind::InterceptResend:
      return std::make_unique<InterceptResendAttack>(cfg);
    case AttackKind::Masquerade:
      return std::make_unique<MasqueradeAttack>(cfg);
  }
  return std::make_unique<NoAttack>(cfg);
}

}  // namespace qexam
