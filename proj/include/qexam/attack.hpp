#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qexam/resource.hpp"

namespace qexam {

enum class AttackKind {
  None,
  MeasureResend,
  Disturbance,
  EntangleMeasure,
  InterceptResend,
  Masquerade,
};

const char* to_string(AttackKind kind);
std::optional<AttackKind> attack_kind_from(const std::string& name);

// Which rounds Eve taps: every round, an explicit list, or every k-th round.
struct RoundSelector {
  enum class Mode { All, List, Stride };

  Mode mode = Mode::All;
  std::vector<std::int64_t> list;
  std::int64_t stride = 1;

  bool selects(std::int64_t m) const;
  static RoundSelector all();
  static RoundSelector parse(const std::string& text);  // "all", "stride:k", "1,4,9"
  std::string str() const;
};

struct AttackConfig {
  AttackKind kind = AttackKind::None;
  RoundSelector rounds;

  // EntangleMeasure probe amplitudes, |alpha|^2 + |beta|^2 = 1.
  std::complex<double> alpha{1.0, 0.0};
  std::complex<double> beta{0.0, 0.0};
  int target_bob = 1;

  // InterceptResend: fixed substitute mask, or uniform random per round.
  std::optional<std::vector<std::uint8_t>> intercept_mask;

  // Masquerade: party Eve pretends to be ("alice", "bob1", ...).
  std::string impersonated = "alice";

  void validate(int students) const;       // throws ConfigError
  int extra_qubits(int students) const;    // worst-case qubits Eve adds
};

// Eve's per-round take from a quantum-channel tap.
struct EveRoundRecord {
  bool tapped = false;
  std::map<int, int> pad_bits;       // Bob n -> pad bit Eve knows
  std::optional<int> alice_pad;      // Alice-side pad learned from captured qubits
  std::optional<int> flip_flag;      // entangle-measure ancilla outcome
};

struct BitEstimate {
  std::int64_t position = 0;  // message bit index
  int bit = 0;
};

// Everything Eve has accumulated: tap records plus bit estimates formed from
// public broadcasts. Only channel taps and public events feed this.
struct EveKnowledge {
  std::map<std::int64_t, EveRoundRecord> rounds;          // keyed by resource index
  std::vector<BitEstimate> problem_estimates;
  std::map<int, std::vector<BitEstimate>> solution_estimates;  // Bob n -> estimates

  bool has_estimates() const {
    return !problem_estimates.empty() || !solution_estimates.empty();
  }
};

// Public view of one finished round, handed to Eve after the legitimate
// parties measured and broadcast.
struct RoundPublicInfo {
  enum class Kind { ShareCheck, ControlCheck, MessageGive, MessageCollect };

  Kind kind = Kind::ShareCheck;
  std::int64_t position = -1;              // message bit index, if any
  std::optional<int> alice_broadcast;      // x_m
  std::map<int, int> bob_broadcasts;       // n -> y_nm
  std::optional<Basis> basis;              // check rounds
};

struct Forgery {
  std::string claimed;  // identity Eve writes on the message
};

// Strategy interface. One instance is owned by one protocol run; it mutates
// in-flight states, may forge classical messages, and keeps Eve's knowledge.
class Attack {
 public:
  explicit Attack(AttackConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~Attack() = default;

  AttackKind kind() const { return cfg_.kind; }
  const AttackConfig& config() const { return cfg_; }
  const EveKnowledge& knowledge() const { return knowledge_; }

  bool taps_round(std::int64_t m) const { return cfg_.rounds.selects(m); }

  // Quantum tap, applied while the round's qubits are in flight.
  virtual void on_distribute(EntangledResource& /*res*/, Rng& /*rng*/) {}

  // Classical forgery hook for the authentication exchange.
  virtual std::optional<Forgery> forge_message(std::int64_t /*m*/) { return std::nullopt; }

  // Runs after the round's legitimate measurements and broadcasts. Default:
  // Eve has no pad knowledge and guesses every message bit.
  virtual void on_round_complete(EntangledResource& res, const RoundPublicInfo& info, Rng& rng);

 protected:
  // Best-effort estimates from broadcasts: uses known pads where available,
  // uniform guesses otherwise.
  void record_estimates(const EntangledResource& res, const RoundPublicInfo& info, Rng& rng);

  AttackConfig cfg_;
  EveKnowledge knowledge_;
};

std::unique_ptr<Attack> make_attack(const AttackConfig& cfg);

}  // namespace qexam
