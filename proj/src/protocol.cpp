#include "qexam/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qexam {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed:
      return "completed";
    case RunStatus::AbortedEveDetected:
      return "aborted_eve_detected";
    case RunStatus::Restarted:
      return "restarted";
  }
  return "unknown";
}

const char* to_string(OperatingMode mode) {
  return mode == OperatingMode::Control ? "control" : "message";
}

EntangledResource& ResourcePool::next() {
  if (cursor >= resources.size()) throw ResourceError("resource pool exhausted");
  return resources[cursor++];
}

bool bz_check_passes(ResourceKind kind, int alice_bit, const std::vector<int>& bob_bits,
                     const ShiftMask* mask) {
  if (kind == ResourceKind::Phi && mask == nullptr) {
    throw std::invalid_argument("bz_check_passes: phi check needs the mask");
  }
  for (std::size_t n = 0; n < bob_bits.size(); ++n) {
    const int s = kind == ResourceKind::Phi ? (*mask)[n] : 0;
    if (alice_bit != (bob_bits[n] ^ s)) return false;
  }
  return true;
}

bool bx_check_passes(int alice_sign, const std::vector<int>& bob_signs) {
  int product = 1;
  for (int s : bob_signs) product *= s;
  return alice_sign == product;
}

CheckRecord run_security_check(EntangledResource& res, Basis basis, Rng& rng) {
  CheckRecord rec;
  rec.basis = basis;
  const int students = res.students();
  rec.bob_outcomes.reserve(students);
  if (basis == Basis::Bz) {
    rec.alice_outcome = measure_party_bit(res, 0, rng);
    for (int n = 1; n <= students; ++n) rec.bob_outcomes.push_back(measure_party_bit(res, n, rng));
    rec.passed = bz_check_passes(res.kind, rec.alice_outcome, rec.bob_outcomes,
                                 res.mask ? &*res.mask : nullptr);
  } else {
    rec.alice_outcome = measure_party_sign(res, 0, rng);
    for (int n = 1; n <= students; ++n) {
      rec.bob_outcomes.push_back(measure_party_sign(res, n, rng));
    }
    rec.passed = bx_check_passes(rec.alice_outcome, rec.bob_outcomes);
  }
  return rec;
}

std::size_t recommended_pool_count(std::size_t need, double check_fraction) {
  if (check_fraction < 0.0 || check_fraction >= 1.0) {
    throw ConfigError("check fraction must be in [0, 1)");
  }
  const double raw = static_cast<double>(need) / (1.0 - check_fraction);
  return static_cast<std::size_t>(std::ceil(raw)) + 8;
}

ClassicalChannel::ClassicalChannel(int students, Rng& rng) {
  auto fresh_token = [&]() {
    while (true) {
      const std::uint64_t t = rng.next_u64();
      bool clash = t == eve_token_;
      for (const auto& [name, tok] : registry_) clash = clash || tok == t;
      if (!clash) return t;
    }
  };
  registry_["alice"] = fresh_token();
  for (int n = 1; n <= students; ++n) registry_[party_name(n)] = fresh_token();
  eve_token_ = fresh_token();
}

std::uint64_t ClassicalChannel::token_of(const std::string& party) const {
  return registry_.at(party);
}

bool ClassicalChannel::verify(const std::string& claimed, std::uint64_t token) const {
  const auto it = registry_.find(claimed);
  return it != registry_.end() && it->second == token;
}

ExamSession::ExamSession(SessionConfig cfg, AttackConfig attack, std::uint64_t seed)
    : cfg_(cfg),
      rng_(seed),
      transcript_(cfg.record_transcript),
      channel_(cfg.students, rng_),
      attack_(make_attack(attack)) {
  if (cfg_.students < 1) throw ConfigError("session needs at least one student");
  if (cfg_.check_fraction < 0.0 || cfg_.check_fraction > 1.0) {
    throw ConfigError("check fraction must be in [0, 1]");
  }
  attack.validate(cfg_.students);
  const int budget = cfg_.students + 1 + attack.extra_qubits(cfg_.students);
  if (budget > kMaxQubits) {
    throw ResourceError("qubit budget " + std::to_string(budget) + " exceeds cap " +
                        std::to_string(kMaxQubits));
  }
}

std::string ExamSession::token_hex(std::uint64_t token) const {
  std::ostringstream os;
  os << std::hex << token;
  return os.str();
}

void ExamSession::post_phase_marker(const std::string& name) {
  transcript_.post(-1, "alice", EventKind::Announcement, Json{{"type", "phase"}, {"name", name}});
}

bool ExamSession::begin_exchange(std::int64_t m, ProtocolOutcome& out) {
  if (auto forged = attack_->forge_message(m)) {
    const bool as_alice = forged->claimed == "alice";
    transcript_.post(m, "eve", as_alice ? EventKind::AuthNotice : EventKind::QubitReceiptConfirmed,
                     Json{{"claimed", forged->claimed}, {"token", token_hex(channel_.eve_token())}});
    if (!channel_.verify(forged->claimed, channel_.eve_token())) {
      const std::string detector = as_alice ? party_name(1) : "alice";
      transcript_.post(m, detector, EventKind::Abort,
                       Json{{"cause", "masquerade"}, {"claimed", forged->claimed}});
      out.status = RunStatus::AbortedEveDetected;
      out.detail = "masquerade detected: forged identity " + forged->claimed;
      out.stats.eve_detected = true;
      return false;
    }
  }
  for (int n = 1; n <= cfg_.students; ++n) {
    const std::string to = party_name(n);
    transcript_.post(m, "alice", EventKind::AuthNotice,
                     Json{{"to", to}, {"token", token_hex(channel_.token_of("alice"))}});
  }
  return true;
}

void ExamSession::finish_exchange(std::int64_t m) {
  for (int n = 1; n <= cfg_.students; ++n) {
    const std::string from = party_name(n);
    transcript_.post(m, from, EventKind::QubitReceiptConfirmed,
                     Json{{"token", token_hex(channel_.token_of(from))}});
  }
}

bool ExamSession::authenticate_exchange(std::int64_t m, ProtocolOutcome& out) {
  if (!begin_exchange(m, out)) return false;
  finish_exchange(m);
  return true;
}

bool ExamSession::distribute_resource(EntangledResource& res, ProtocolOutcome& out) {
  if (!begin_exchange(res.index, out)) return false;
  for (int n = 1; n <= cfg_.students; ++n) {
    transcript_.post(res.index, "alice", EventKind::QubitSent, Json{{"to", party_name(n)}});
  }
  attack_->on_distribute(res, rng_);
  finish_exchange(res.index);
  return true;
}

void ExamSession::post_check_events(const EntangledResource& res, const CheckRecord& rec) {
  const bool z = rec.basis == Basis::Bz;
  for (std::size_t i = 0; i < rec.bob_outcomes.size(); ++i) {
    transcript_.post(res.index, party_name(static_cast<int>(i) + 1),
                     z ? EventKind::PublicBit : EventKind::PublicSign,
                     Json{{"j", rec.bob_outcomes[i]}});
  }
  Json verdict;
  verdict["type"] = "check_verdict";
  verdict["basis"] = to_string(rec.basis);
  verdict["resource"] = to_string(res.kind);
  verdict["alice"] = rec.alice_outcome;
  verdict["bobs"] = rec.bob_outcomes;
  if (res.kind == ResourceKind::Phi) {
    std::vector<int> mask_bits(res.mask->bits.begin(), res.mask->bits.end());
    verdict["mask"] = mask_bits;
  }
  verdict["pass"] = rec.passed;
  transcript_.post(res.index, "alice", EventKind::Announcement, std::move(verdict));
}

CheckRecord ExamSession::checked_measurement(EntangledResource& res, ProtocolOutcome& out,
                                             RoundPublicInfo::Kind round_kind) {
  const Basis basis = rng_.next_bit() ? Basis::Bx : Basis::Bz;
  transcript_.post(res.index, "alice", EventKind::BasisAnnounce,
                   Json{{"basis", to_string(basis)}});
  CheckRecord rec = run_security_check(res, basis, rng_);
  post_check_events(res, rec);
  if (rec.passed) {
    ++out.stats.checks_passed;
  } else {
    ++out.stats.checks_failed;
    out.stats.eve_detected = true;
  }
  RoundPublicInfo info;
  info.kind = round_kind;
  info.basis = rec.basis;
  attack_->on_round_complete(res, info, rng_);
  return rec;
}

SharingResult ExamSession::share_phase(ResourceKind kind, std::size_t count) {
  if (count == 0) throw ConfigError("sharing requires a positive state count");

  SharingResult result;
  result.pool.kind = kind;
  ProtocolOutcome& out = result.outcome;
  out.transcript_begin = transcript_.size();

  for (int attempt = 0;; ++attempt) {
    std::vector<EntangledResource> resources;
    resources.reserve(count);
    bool masqueraded = false;
    for (std::size_t i = 0; i < count; ++i) {
      EntangledResource res = make_resource(kind, cfg_.students, next_resource_index_++, rng_);
      if (!distribute_resource(res, out)) {
        masqueraded = true;
        break;
      }
      ++out.stats.rounds_used;
      resources.push_back(std::move(res));
    }
    if (masqueraded) break;

    // Random check subset, announced before any measurement.
    const auto checks =
        static_cast<std::size_t>(std::llround(static_cast<double>(count) * cfg_.check_fraction));
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    for (std::size_t i = 0; i < checks; ++i) {
      const std::size_t j = i + rng_.uniform_index(count - i);
      std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> subset(order.begin(), order.begin() + checks);
    std::sort(subset.begin(), subset.end());

    std::vector<std::int64_t> subset_ids;
    subset_ids.reserve(subset.size());
    for (std::size_t i : subset) subset_ids.push_back(resources[i].index);
    transcript_.post(-1, "alice", EventKind::Announcement,
                     Json{{"type", "check_subset"}, {"resources", subset_ids}});

    std::size_t failures = 0;
    for (std::size_t i : subset) {
      const CheckRecord rec =
          checked_measurement(resources[i], out, RoundPublicInfo::Kind::ShareCheck);
      if (!rec.passed) ++failures;
    }
    out.stats.error_rate =
        checks == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(checks);

    if (out.stats.error_rate > cfg_.error_threshold) {
      if (attempt >= cfg_.max_restarts) {
        transcript_.post(-1, "alice", EventKind::Abort,
                         Json{{"cause", "restart_budget_exhausted"},
                              {"error_rate", out.stats.error_rate}});
        out.status = RunStatus::Restarted;
        out.detail = "sharing abandoned after " + std::to_string(attempt + 1) +
                     " attempts with failing checks";
        break;
      }
      transcript_.post(-1, "alice", EventKind::Restart,
                       Json{{"attempt", attempt + 1}, {"error_rate", out.stats.error_rate}});
      ++out.stats.restarts;
      continue;
    }

    std::set<std::size_t> checked(subset.begin(), subset.end());
    for (std::size_t i = 0; i < count; ++i) {
      if (!checked.count(i)) result.pool.resources.push_back(std::move(resources[i]));
    }
    out.status = RunStatus::Completed;
    break;
  }

  out.transcript_end = transcript_.size();
  return result;
}

SharingResult ExamSession::share_psi(std::size_t count) {
  return share_phase(ResourceKind::Psi, count);
}

SharingResult ExamSession::share_phi(std::size_t count) {
  return share_phase(ResourceKind::Phi, count);
}

ProtocolOutcome ExamSession::give_problem(ResourcePool& pool, const BitString& problem) {
  if (pool.kind != ResourceKind::Psi) {
    throw std::invalid_argument("give_problem runs on a psi pool");
  }
  ProtocolOutcome out;
  out.transcript_begin = transcript_.size();
  if (pool.remaining() < problem.size()) {
    throw ResourceError("psi pool exhausted: need " + std::to_string(problem.size()) +
                        ", have " + std::to_string(pool.remaining()));
  }

  std::vector<BitString> received(static_cast<std::size_t>(cfg_.students) + 1);
  std::set<std::int64_t> leaked;

  for (std::size_t pos = 0; pos < problem.size(); ++pos) {
    EntangledResource& res = pool.next();
    const int j_alice = measure_party_bit(res, 0, rng_);
    std::vector<int> j_bob(static_cast<std::size_t>(cfg_.students) + 1, 0);
    for (int n = 1; n <= cfg_.students; ++n) j_bob[n] = measure_party_bit(res, n, rng_);

    const int x = problem[pos] ^ j_alice;
    transcript_.post(res.index, "alice", EventKind::PublicBit,
                     Json{{"x", x}, {"pos", static_cast<std::int64_t>(pos)}});
    for (int n = 1; n <= cfg_.students; ++n) {
      const int q = x ^ j_bob[n];
      received[n].push_back(q);
      transcript_.post(res.index, party_name(n), EventKind::Decode,
                       Json{{"pos", static_cast<std::int64_t>(pos)},
                            {"x", x},
                            {"j", j_bob[n]},
                            {"q", q}});
    }
    ++out.stats.rounds_used;

    RoundPublicInfo info;
    info.kind = RoundPublicInfo::Kind::MessageGive;
    info.position = static_cast<std::int64_t>(pos);
    info.alice_broadcast = x;
    attack_->on_round_complete(res, info, rng_);
    const auto& est = attack_->knowledge().problem_estimates;
    if (!out.stats.eve_detected && !est.empty() &&
        est.back().position == static_cast<std::int64_t>(pos) &&
        est.back().bit == problem[pos]) {
      leaked.insert(static_cast<std::int64_t>(pos));
    }
  }

  for (int n = 1; n <= cfg_.students; ++n) out.decoded[party_name(n)] = received[n];
  out.stats.eve_leaked_bits = static_cast<std::int64_t>(leaked.size());
  out.status = RunStatus::Completed;
  out.transcript_end = transcript_.size();
  return out;
}

ProtocolOutcome ExamSession::collect_solutions(ResourcePool& pool,
                                               const std::vector<BitString>& solutions) {
  if (pool.kind != ResourceKind::Phi) {
    throw std::invalid_argument("collect_solutions runs on a phi pool");
  }
  if (solutions.size() != static_cast<std::size_t>(cfg_.students)) {
    throw ConfigError("need one solution per student");
  }
  std::size_t rounds = 0;
  for (const auto& s : solutions) rounds = std::max(rounds, s.size());

  ProtocolOutcome out;
  out.transcript_begin = transcript_.size();
  if (pool.remaining() < rounds) {
    throw ResourceError("phi pool exhausted: need " + std::to_string(rounds) + ", have " +
                        std::to_string(pool.remaining()));
  }

  std::vector<BitString> recovered(static_cast<std::size_t>(cfg_.students) + 1);
  std::set<std::pair<int, std::int64_t>> leaked;

  for (std::size_t pos = 0; pos < rounds; ++pos) {
    EntangledResource& res = pool.next();
    const int j_alice = measure_party_bit(res, 0, rng_);
    std::vector<int> j_bob(static_cast<std::size_t>(cfg_.students) + 1, 0);
    for (int n = 1; n <= cfg_.students; ++n) j_bob[n] = measure_party_bit(res, n, rng_);

    RoundPublicInfo info;
    info.kind = RoundPublicInfo::Kind::MessageCollect;
    info.position = static_cast<std::int64_t>(pos);

    for (int n = 1; n <= cfg_.students; ++n) {
      const auto& solution = solutions[static_cast<std::size_t>(n) - 1];
      if (pos >= solution.size()) continue;
      const int y = solution[pos] ^ j_bob[n];
      transcript_.post(res.index, party_name(n), EventKind::PublicBit,
                       Json{{"y", y}, {"pos", static_cast<std::int64_t>(pos)}});
      info.bob_broadcasts[n] = y;
      const int s = (*res.mask)[static_cast<std::size_t>(n) - 1];
      const int r = y ^ j_alice ^ s;
      recovered[n].push_back(r);
      transcript_.post(res.index, "alice", EventKind::Decode,
                       Json{{"bob", n},
                            {"pos", static_cast<std::int64_t>(pos)},
                            {"y", y},
                            {"j", j_alice},
                            {"s", s},
                            {"r", r}});
    }
    ++out.stats.rounds_used;

    attack_->on_round_complete(res, info, rng_);
    if (!out.stats.eve_detected) {
      for (const auto& [bob, estimates] : attack_->knowledge().solution_estimates) {
        if (estimates.empty()) continue;
        const auto& last = estimates.back();
        if (last.position != static_cast<std::int64_t>(pos)) continue;
        const auto& solution = solutions[static_cast<std::size_t>(bob) - 1];
        if (pos < solution.size() && last.bit == solution[pos]) {
          leaked.insert({bob, static_cast<std::int64_t>(pos)});
        }
      }
    }
  }

  for (int n = 1; n <= cfg_.students; ++n) out.decoded[party_name(n)] = recovered[n];
  out.stats.eve_leaked_bits = static_cast<std::int64_t>(leaked.size());
  out.status = RunStatus::Completed;
  out.transcript_end = transcript_.size();
  return out;
}

ProtocolOutcome ExamSession::direct_phase(ResourceKind kind, const BitString* problem,
                                          const std::vector<BitString>* solutions,
                                          double control_rate) {
  if (control_rate < 0.0 || control_rate >= 1.0) {
    throw ConfigError("control rate must be in [0, 1)");
  }

  std::size_t message_len = 0;
  if (problem) message_len = problem->size();
  if (solutions) {
    if (solutions->size() != static_cast<std::size_t>(cfg_.students)) {
      throw ConfigError("need one solution per student");
    }
    for (const auto& s : *solutions) message_len = std::max(message_len, s.size());
  }
  if (message_len == 0) throw ConfigError("nothing to transfer");

  const auto cap = static_cast<std::int64_t>(std::llround(
      static_cast<double>(cfg_.round_cap_factor) * static_cast<double>(message_len) /
      (1.0 - control_rate)));

  ProtocolOutcome out;
  out.transcript_begin = transcript_.size();

  std::vector<BitString> buffers(static_cast<std::size_t>(cfg_.students) + 1);
  std::set<std::pair<int, std::int64_t>> leaked;  // {0,pos} for give, {bob,pos} for collect
  bool detected = false;
  std::size_t transferred = 0;

  while (true) {
    if (out.stats.rounds_used >= cap) {
      transcript_.post(-1, "alice", EventKind::Abort,
                       Json{{"cause", "round_cap"}, {"rounds", out.stats.rounds_used}});
      out.status = RunStatus::AbortedEveDetected;
      out.detail = "round cap reached under persistent interference";
      break;
    }

    EntangledResource res = make_resource(kind, cfg_.students, next_resource_index_++, rng_);
    if (!distribute_resource(res, out)) break;  // masquerade abort
    ++out.stats.rounds_used;

    const OperatingMode mode =
        rng_.bernoulli(control_rate) ? OperatingMode::Control : OperatingMode::Message;
    transcript_.post(res.index, "alice", EventKind::ModeAnnounce,
                     Json{{"mode", to_string(mode)}});

    if (mode == OperatingMode::Control) {
      const CheckRecord rec =
          checked_measurement(res, out, RoundPublicInfo::Kind::ControlCheck);
      if (!rec.passed) {
        detected = true;
        if (cfg_.direct_policy == DetectionPolicy::Terminate) {
          transcript_.post(res.index, "alice", EventKind::Abort,
                           Json{{"cause", "control_check_failed"}});
          out.status = RunStatus::AbortedEveDetected;
          out.detail = "eavesdropper detected in control mode";
          break;
        }
        transcript_.post(res.index, "alice", EventKind::Restart,
                         Json{{"reason", "control_check_failed"}});
        ++out.stats.restarts;
        transferred = 0;
        for (auto& b : buffers) b = BitString();
        continue;
      }
      continue;
    }

    // Message mode: one pad bit per party, one payload bit transferred.
    const int j_alice = measure_party_bit(res, 0, rng_);
    std::vector<int> j_bob(static_cast<std::size_t>(cfg_.students) + 1, 0);
    for (int n = 1; n <= cfg_.students; ++n) j_bob[n] = measure_party_bit(res, n, rng_);

    RoundPublicInfo info;
    info.position = static_cast<std::int64_t>(transferred);

    if (problem) {
      info.kind = RoundPublicInfo::Kind::MessageGive;
      const int x = (*problem)[transferred] ^ j_alice;
      info.alice_broadcast = x;
      transcript_.post(res.index, "alice", EventKind::PublicBit,
                       Json{{"x", x}, {"pos", static_cast<std::int64_t>(transferred)}});
      for (int n = 1; n <= cfg_.students; ++n) {
        const int q = x ^ j_bob[n];
        buffers[n].push_back(q);
        transcript_.post(res.index, party_name(n), EventKind::Decode,
                         Json{{"pos", static_cast<std::int64_t>(transferred)},
                              {"x", x},
                              {"j", j_bob[n]},
                              {"q", q}});
      }
    } else {
      info.kind = RoundPublicInfo::Kind::MessageCollect;
      for (int n = 1; n <= cfg_.students; ++n) {
        const auto& solution = (*solutions)[static_cast<std::size_t>(n) - 1];
        if (transferred >= solution.size()) continue;
        const int y = solution[transferred] ^ j_bob[n];
        info.bob_broadcasts[n] = y;
        transcript_.post(res.index, party_name(n), EventKind::PublicBit,
                         Json{{"y", y}, {"pos", static_cast<std::int64_t>(transferred)}});
        const int s = (*res.mask)[static_cast<std::size_t>(n) - 1];
        const int r = y ^ j_alice ^ s;
        buffers[n].push_back(r);
        transcript_.post(res.index, "alice", EventKind::Decode,
                         Json{{"bob", n},
                              {"pos", static_cast<std::int64_t>(transferred)},
                              {"y", y},
                              {"j", j_alice},
                              {"s", s},
                              {"r", r}});
      }
    }

    attack_->on_round_complete(res, info, rng_);
    if (!detected) {
      if (problem) {
        const auto& est = attack_->knowledge().problem_estimates;
        if (!est.empty() && est.back().position == static_cast<std::int64_t>(transferred) &&
            est.back().bit == (*problem)[transferred]) {
          leaked.insert({0, static_cast<std::int64_t>(transferred)});
        }
      } else {
        for (const auto& [bob, estimates] : attack_->knowledge().solution_estimates) {
          if (estimates.empty()) continue;
          const auto& last = estimates.back();
          if (last.position != static_cast<std::int64_t>(transferred)) continue;
          const auto& solution = (*solutions)[static_cast<std::size_t>(bob) - 1];
          if (last.position < static_cast<std::int64_t>(solution.size()) &&
              last.bit == solution[last.position]) {
            leaked.insert({bob, last.position});
          }
        }
      }
    }

    ++transferred;
    if (transferred == message_len) {
      transcript_.post(-1, "alice", EventKind::Announcement,
                       Json{{"text", problem
                                         ? "problem transfer complete; solutions due after period T"
                                         : "solution collection complete"}});
      out.status = RunStatus::Completed;
      for (int n = 1; n <= cfg_.students; ++n) out.decoded[party_name(n)] = buffers[n];
      break;
    }
  }

  out.stats.eve_leaked_bits = static_cast<std::int64_t>(leaked.size());
  out.transcript_end = transcript_.size();
  return out;
}

ProtocolOutcome ExamSession::direct_give_problem(const BitString& problem, double control_rate) {
  return direct_phase(ResourceKind::Psi, &problem, nullptr, control_rate);
}

ProtocolOutcome ExamSession::direct_collect_solutions(const std::vector<BitString>& solutions,
                                                      double control_rate) {
  return direct_phase(ResourceKind::Phi, nullptr, &solutions, control_rate);
}

}  // namespace qexam
