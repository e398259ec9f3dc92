#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qexam/attack.hpp"
#include "qexam/bitstring.hpp"
#include "qexam/transcript.hpp"

namespace qexam {

enum class RunStatus { Completed, AbortedEveDetected, Restarted };

const char* to_string(RunStatus status);

// Per-round coin flip in the direct protocols: a security check (control
// mode, rate c) or a data transfer (message mode, rate 1 - c). Chosen by
// Alice alone and announced before any measurement of the round.
enum class OperatingMode { Control, Message };

const char* to_string(OperatingMode mode);

// What a direct protocol does when a control check fails. Terminate ends the
// run at the first detection; Restart resets the message counter and keeps
// going until the round cap.
enum class DetectionPolicy { Terminate, Restart };

struct SessionConfig {
  int students = 2;
  double check_fraction = 0.25;   // share of distributed states spent on checks
  double error_threshold = 0.0;   // failed-check rate that triggers a restart
  int max_restarts = 3;           // per sharing phase, then hard stop
  std::int64_t round_cap_factor = 64;  // direct round cap = factor * M / (1 - c)
  DetectionPolicy direct_policy = DetectionPolicy::Terminate;
  bool record_transcript = true;
};

struct RunStats {
  std::int64_t rounds_used = 0;
  std::int64_t checks_passed = 0;
  std::int64_t checks_failed = 0;
  std::int64_t restarts = 0;
  double error_rate = 0.0;        // failed/checked in the last attempt
  std::int64_t eve_leaked_bits = 0;  // message bits Eve got right before detection
  bool eve_detected = false;
};

struct ProtocolOutcome {
  RunStatus status = RunStatus::Completed;
  std::string detail;
  std::map<std::string, BitString> decoded;  // per-recipient payloads
  RunStats stats;
  std::size_t transcript_begin = 0;  // event range of this phase
  std::size_t transcript_end = 0;
};

// Ordered resources that survived a sharing phase; consumed front to back.
struct ResourcePool {
  ResourceKind kind = ResourceKind::Psi;
  std::vector<EntangledResource> resources;
  std::size_t cursor = 0;

  std::size_t remaining() const { return resources.size() - cursor; }
  EntangledResource& next();  // throws ResourceError when exhausted
};

struct SharingResult {
  ResourcePool pool;
  ProtocolOutcome outcome;
};

struct CheckRecord {
  Basis basis = Basis::Bz;
  int alice_outcome = 0;
  std::vector<int> bob_outcomes;  // Bob 1..N in order
  bool passed = true;
};

// Sharing-phase equalities. Bz: Alice's bit must equal each Bob's bit XOR
// that Bob's mask bit (mask absent means plain equality). Bx: Alice's sign
// must equal the product of all Bobs' signs.
bool bz_check_passes(ResourceKind kind, int alice_bit, const std::vector<int>& bob_bits,
                     const ShiftMask* mask);
bool bx_check_passes(int alice_sign, const std::vector<int>& bob_signs);

// Measures every party's qubit in `basis` (Alice first, Bobs in order) and
// evaluates the equality for this resource kind. Shared by the protocol
// phases and the Monte Carlo detection estimator.
CheckRecord run_security_check(EntangledResource& res, Basis basis, Rng& rng);

// Pool size that leaves `need` resources after check consumption, with slack.
std::size_t recommended_pool_count(std::size_t need, double check_fraction);

// Authenticated broadcast registry: parties hold secret identity tokens;
// every identity-bearing message is verified against the registry. Eve has
// her own token, which matches no registered party.
class ClassicalChannel {
 public:
  ClassicalChannel(int students, Rng& rng);

  std::uint64_t token_of(const std::string& party) const;
  std::uint64_t eve_token() const { return eve_token_; }
  bool verify(const std::string& claimed, std::uint64_t token) const;

 private:
  std::map<std::string, std::uint64_t> registry_;
  std::uint64_t eve_token_ = 0;
};

// One exam run: Alice, N Bobs, an authenticated classical channel, a
// tappable quantum channel, and at most one eavesdropping strategy. All
// randomness flows through the session generator, so a (config, seed) pair
// reproduces a run exactly.
class ExamSession {
 public:
  ExamSession(SessionConfig cfg, AttackConfig attack, std::uint64_t seed);

  // Entanglement sharing. Distributes `count` fresh states, checks a random
  // subset in random bases, restarts on error rates above the threshold and
  // returns the surviving resources in their original order.
  SharingResult share_psi(std::size_t count);
  SharingResult share_phi(std::size_t count);

  // One-time-pad transfer over a previously shared pool.
  ProtocolOutcome give_problem(ResourcePool& pool, const BitString& problem);
  ProtocolOutcome collect_solutions(ResourcePool& pool, const std::vector<BitString>& solutions);

  // Direct protocols: fresh state per round, control rounds with rate c.
  ProtocolOutcome direct_give_problem(const BitString& problem, double control_rate);
  ProtocolOutcome direct_collect_solutions(const std::vector<BitString>& solutions,
                                           double control_rate);

  // Notice/receipt identity exchange for round m without a quantum payload;
  // false when a forged identity was caught (outcome is filled in).
  bool authenticate_exchange(std::int64_t m, ProtocolOutcome& out);

  void post_phase_marker(const std::string& name);

  const Transcript& transcript() const { return transcript_; }
  const EveKnowledge& eve_knowledge() const { return attack_->knowledge(); }
  const SessionConfig& config() const { return cfg_; }
  const ClassicalChannel& channel() const { return channel_; }
  Rng& rng() { return rng_; }

 private:
  SharingResult share_phase(ResourceKind kind, std::size_t count);
  ProtocolOutcome direct_phase(ResourceKind kind, const BitString* problem,
                               const std::vector<BitString>* solutions, double control_rate);

  bool begin_exchange(std::int64_t m, ProtocolOutcome& out);
  void finish_exchange(std::int64_t m);
  bool distribute_resource(EntangledResource& res, ProtocolOutcome& out);

  CheckRecord checked_measurement(EntangledResource& res, ProtocolOutcome& out,
                                  RoundPublicInfo::Kind round_kind);
  void post_check_events(const EntangledResource& res, const CheckRecord& rec);

  std::string token_hex(std::uint64_t token) const;

  SessionConfig cfg_;
  Rng rng_;
  Transcript transcript_;
  ClassicalChannel channel_;
  std::unique_ptr<Attack> attack_;
  std::int64_t next_resource_index_ = 0;
};

}  // namespace qexam
