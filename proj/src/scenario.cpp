#include "qexam/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace qexam {

namespace {

const std::set<std::string> kProtocols = {"absolute", "direct"};
const std::set<std::string> kPhases = {"give", "collect", "share-psi", "share-phi", "full-exam"};

bool phase_gives(const std::string& phase) { return phase == "give" || phase == "full-exam"; }
bool phase_collects(const std::string& phase) {
  return phase == "collect" || phase == "full-exam";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::int64_t bit_diff(const BitString& a, const BitString& b) {
  std::int64_t errors = std::llabs(static_cast<std::int64_t>(a.size()) -
                                   static_cast<std::int64_t>(b.size()));
  const std::size_t common = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < common; ++i) errors += a[i] != b[i];
  return errors;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!kProtocols.count(protocol)) {
    throw ConfigError("protocol: expected 'absolute' or 'direct', got '" + protocol + "'");
  }
  if (!kPhases.count(phase)) {
    throw ConfigError("phase: expected give|collect|share-psi|share-phi|full-exam, got '" +
                      phase + "'");
  }
  if (protocol == "direct" && (phase == "share-psi" || phase == "share-phi")) {
    throw ConfigError("phase: the direct protocol has no separate sharing phase");
  }
  if (students < 1) throw ConfigError("students: must be >= 1");
  if (phase_gives(phase)) {
    if (problem_bits.empty() && problem_len < 1) throw ConfigError("problem_len: must be >= 1");
    for (char c : problem_bits) {
      if (c != '0' && c != '1') throw ConfigError("problem_bits: must contain only 0 and 1");
    }
  }
  if (phase_collects(phase) && solution_len < 1) throw ConfigError("solution_len: must be >= 1");
  if (control_rate < 0.0 || control_rate >= 1.0) {
    throw ConfigError("control_rate: must be in [0, 1)");
  }
  if (check_fraction < 0.0 || check_fraction > 1.0) {
    throw ConfigError("check_fraction: must be in [0, 1]");
  }
  if (protocol == "absolute" && phase != "share-psi" && phase != "share-phi" &&
      check_fraction >= 1.0) {
    throw ConfigError("check_fraction: must be < 1 when resources are needed after checks");
  }
  if (pool_count && *pool_count < 1) throw ConfigError("pool_count: must be >= 1");
  if (direct_policy != "terminate" && direct_policy != "restart") {
    throw ConfigError("direct_policy: expected 'terminate' or 'restart'");
  }
  if (error_threshold < 0.0 || error_threshold > 1.0) {
    throw ConfigError("error_threshold: must be in [0, 1]");
  }
  if (max_restarts < 0) throw ConfigError("max_restarts: must be >= 0");
  if (round_cap_factor < 1) throw ConfigError("round_cap_factor: must be >= 1");
  if (trials < 1) throw ConfigError("trials: must be >= 1");
  attack.validate(students);

  const int budget = students + 1 + attack.extra_qubits(students);
  if (budget > kMaxQubits) {
    throw ResourceError("qubit budget " + std::to_string(budget) + " exceeds the cap of " +
                        std::to_string(kMaxQubits) + " (students + ancillas)");
  }
}

SessionConfig ScenarioConfig::session_config() const {
  SessionConfig scfg;
  scfg.students = students;
  scfg.check_fraction = check_fraction;
  scfg.error_threshold = error_threshold;
  scfg.max_restarts = static_cast<int>(max_restarts);
  scfg.round_cap_factor = round_cap_factor;
  scfg.direct_policy =
      direct_policy == "restart" ? DetectionPolicy::Restart : DetectionPolicy::Terminate;
  scfg.record_transcript = true;
  return scfg;
}

Json ScenarioConfig::to_json() const {
  Json j;
  j["protocol"] = protocol;
  j["phase"] = phase;
  j["students"] = students;
  j["problem_len"] = problem_len;
  j["solution_len"] = solution_len;
  j["control_rate"] = control_rate;
  j["check_fraction"] = check_fraction;
  j["pool_count"] = pool_count ? Json(*pool_count) : Json(nullptr);
  j["problem_bits"] = problem_bits;
  j["attack"] = to_string(attack.kind);
  j["rounds"] = attack.rounds.str();
  j["alpha_re"] = attack.alpha.real();
  j["alpha_im"] = attack.alpha.imag();
  j["beta_re"] = attack.beta.real();
  j["beta_im"] = attack.beta.imag();
  j["target_bob"] = attack.target_bob;
  if (attack.intercept_mask) {
    std::string mask;
    for (auto b : *attack.intercept_mask) mask.push_back(b ? '1' : '0');
    j["intercept_mask"] = mask;
  } else {
    j["intercept_mask"] = "";
  }
  j["impersonated"] = attack.impersonated;
  j["direct_policy"] = direct_policy;
  j["error_threshold"] = error_threshold;
  j["max_restarts"] = max_restarts;
  j["round_cap_factor"] = round_cap_factor;
  j["seed"] = seed;
  j["trials"] = trials;
  j["out"] = out_dir;
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const Json& j) {
  ScenarioConfig cfg;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "protocol") {
        cfg.protocol = value.get<std::string>();
      } else if (key == "phase") {
        cfg.phase = value.get<std::string>();
      } else if (key == "students") {
        cfg.students = value.get<int>();
      } else if (key == "problem_len") {
        cfg.problem_len = value.get<std::int64_t>();
      } else if (key == "solution_len") {
        cfg.solution_len = value.get<std::int64_t>();
      } else if (key == "control_rate") {
        cfg.control_rate = value.get<double>();
      } else if (key == "check_fraction") {
        cfg.check_fraction = value.get<double>();
      } else if (key == "pool_count") {
        if (!value.is_null()) cfg.pool_count = value.get<std::int64_t>();
      } else if (key == "problem_bits") {
        cfg.problem_bits = value.get<std::string>();
      } else if (key == "attack") {
        const auto kind = attack_kind_from(value.get<std::string>());
        if (!kind) throw ConfigError("attack: unknown kind '" + value.get<std::string>() + "'");
        cfg.attack.kind = *kind;
      } else if (key == "rounds") {
        cfg.attack.rounds = RoundSelector::parse(value.get<std::string>());
      } else if (key == "alpha_re") {
        cfg.attack.alpha.real(value.get<double>());
      } else if (key == "alpha_im") {
        cfg.attack.alpha.imag(value.get<double>());
      } else if (key == "beta_re") {
        cfg.attack.beta.real(value.get<double>());
      } else if (key == "beta_im") {
        cfg.attack.beta.imag(value.get<double>());
      } else if (key == "target_bob") {
        cfg.attack.target_bob = value.get<int>();
      } else if (key == "intercept_mask") {
        const auto text = value.get<std::string>();
        if (!text.empty()) {
          std::vector<std::uint8_t> mask;
          for (char c : text) {
            if (c != '0' && c != '1') throw ConfigError("intercept_mask: must be a bit string");
            mask.push_back(c == '1');
          }
          cfg.attack.intercept_mask = std::move(mask);
        }
      } else if (key == "impersonated") {
        cfg.attack.impersonated = value.get<std::string>();
      } else if (key == "direct_policy") {
        cfg.direct_policy = value.get<std::string>();
      } else if (key == "error_threshold") {
        cfg.error_threshold = value.get<double>();
      } else if (key == "max_restarts") {
        cfg.max_restarts = value.get<std::int64_t>();
      } else if (key == "round_cap_factor") {
        cfg.round_cap_factor = value.get<std::int64_t>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "trials") {
        cfg.trials = value.get<std::int64_t>();
      } else if (key == "out") {
        cfg.out_dir = value.get<std::string>();
      } else {
        throw ConfigError("unknown config field: '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "': invalid value " + value.dump());
    }
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  return from_json(j);
}

Json PhaseSummary::to_json() const {
  Json j;
  j["phase"] = phase;
  j["status"] = to_string(status);
  j["detail"] = detail;
  j["rounds_used"] = stats.rounds_used;
  j["checks_passed"] = stats.checks_passed;
  j["checks_failed"] = stats.checks_failed;
  j["restarts"] = stats.restarts;
  j["error_rate"] = stats.error_rate;
  j["eve_leaked_bits"] = stats.eve_leaked_bits;
  j["eve_detected"] = stats.eve_detected;
  j["decode_errors"] = decode_errors;
  return j;
}

Json TrialResult::to_json() const {
  Json j;
  j["trial"] = trial;
  j["status"] = to_string(status);
  Json phases_json = Json::array();
  for (const auto& p : phases) phases_json.push_back(p.to_json());
  j["phases"] = std::move(phases_json);
  return j;
}

TrialResult execute_trial(const ScenarioConfig& cfg, std::int64_t trial_index) {
  cfg.validate();
  const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial_index));
  ExamSession session(cfg.session_config(), cfg.attack, derive_seed(trial_seed, 0));
  Rng payload_rng(derive_seed(trial_seed, 1));

  const BitString problem =
      cfg.problem_bits.empty()
          ? BitString::random(static_cast<std::size_t>(cfg.problem_len), payload_rng)
          : BitString::parse(cfg.problem_bits);
  std::vector<BitString> solutions;
  for (int n = 1; n <= cfg.students; ++n) {
    solutions.push_back(
        BitString::random(static_cast<std::size_t>(cfg.solution_len), payload_rng));
  }

  TrialResult result;
  result.trial = trial_index;

  auto record = [&](const std::string& name, const ProtocolOutcome& out,
                    const BitString* expect_problem,
                    const std::vector<BitString>* expect_solutions) {
    PhaseSummary ps;
    ps.phase = name;
    ps.status = out.status;
    ps.detail = out.detail;
    ps.stats = out.stats;
    if (out.status == RunStatus::Completed && (expect_problem || expect_solutions)) {
      std::int64_t errors = 0;
      for (int n = 1; n <= cfg.students; ++n) {
        const auto it = out.decoded.find(party_name(n));
        const BitString& truth =
            expect_problem ? *expect_problem
                           : (*expect_solutions)[static_cast<std::size_t>(n) - 1];
        errors += it == out.decoded.end() ? static_cast<std::int64_t>(truth.size())
                                          : bit_diff(it->second, truth);
      }
      ps.decode_errors = errors;
    }
    result.phases.push_back(ps);
    result.status = out.status;
    return out.status == RunStatus::Completed;
  };

  const bool direct = cfg.protocol == "direct";
  bool proceed = true;

  if (direct) {
    if (phase_gives(cfg.phase)) {
      session.post_phase_marker("direct-problem-giving");
      proceed = record("direct-give", session.direct_give_problem(problem, cfg.control_rate),
                       &problem, nullptr);
    }
    if (proceed && cfg.phase == "full-exam") session.post_phase_marker("solving-period");
    if (proceed && phase_collects(cfg.phase)) {
      session.post_phase_marker("direct-solution-collecting");
      record("direct-collect", session.direct_collect_solutions(solutions, cfg.control_rate),
             nullptr, &solutions);
    }
  } else {
    const bool share_only = cfg.phase == "share-psi" || cfg.phase == "share-phi";
    auto pool_size = [&](std::size_t need) {
      if (cfg.pool_count) return static_cast<std::size_t>(*cfg.pool_count);
      if (share_only) return std::size_t{200};
      return recommended_pool_count(need, cfg.check_fraction);
    };
    const std::size_t psi_count = pool_size(problem.size());
    const std::size_t phi_count = pool_size(static_cast<std::size_t>(cfg.solution_len));

    if (cfg.phase == "share-psi" || phase_gives(cfg.phase)) {
      session.post_phase_marker("psi-sharing");
      SharingResult shared = session.share_psi(psi_count);
      proceed = record("share-psi", shared.outcome, nullptr, nullptr);
      if (proceed && phase_gives(cfg.phase)) {
        session.post_phase_marker("problem-giving");
        proceed = record("give", session.give_problem(shared.pool, problem), &problem, nullptr);
      }
    }
    if (proceed && cfg.phase == "full-exam") session.post_phase_marker("solving-period");
    if (proceed && (cfg.phase == "share-phi" || phase_collects(cfg.phase))) {
      session.post_phase_marker("phi-sharing");
      SharingResult shared = session.share_phi(phi_count);
      proceed = record("share-phi", shared.outcome, nullptr, nullptr);
      if (proceed && phase_collects(cfg.phase)) {
        session.post_phase_marker("solution-collecting");
        record("collect", session.collect_solutions(shared.pool, solutions), nullptr,
               &solutions);
      }
    }
  }

  result.transcript_jsonl = session.transcript().to_jsonl();
  return result;
}

RunStatus RunReport::worst_status() const {
  RunStatus worst = RunStatus::Completed;
  for (const auto& t : trials) {
    if (t.status != RunStatus::Completed) worst = t.status;
  }
  return worst;
}

Json RunReport::to_json() const {
  Json j;
  j["config"] = config.to_json();
  Json trials_json = Json::array();
  for (const auto& t : trials) trials_json.push_back(t.to_json());
  j["trials"] = std::move(trials_json);
  j["artifacts"] = artifacts;
  j["duration_ms"] = duration_ms;
  j["status"] = to_string(worst_status());
  return j;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  RunReport report;
  report.config = cfg;
  for (std::int64_t t = 0; t < cfg.trials; ++t) {
    report.trials.push_back(execute_trial(cfg, t));
  }

  std::filesystem::create_directories(cfg.out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
  };

  {
    std::ofstream out(path("transcript.jsonl"), std::ios::binary);
    out << report.trials.front().transcript_jsonl;
    report.artifacts.push_back(path("transcript.jsonl"));
  }
  {
    std::ofstream out(path("estimates.csv"), std::ios::binary);
    out << "trial,phase,status,rounds_used,checks_passed,checks_failed,restarts,error_rate,"
           "eve_leaked_bits,decode_errors\n";
    for (const auto& t : report.trials) {
      for (const auto& p : t.phases) {
        out << t.trial << ',' << p.phase << ',' << to_string(p.status) << ','
            << p.stats.rounds_used << ',' << p.stats.checks_passed << ','
            << p.stats.checks_failed << ',' << p.stats.restarts << ','
            << fmt(p.stats.error_rate) << ',' << p.stats.eve_leaked_bits << ','
            << p.decode_errors << '\n';
      }
    }
    report.artifacts.push_back(path("estimates.csv"));
  }

  const auto end = std::chrono::steady_clock::now();
  report.duration_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(end - start).count();

  {
    std::ofstream out(path("summary.json"), std::ios::binary);
    out << report.to_json().dump(2) << '\n';
    report.artifacts.push_back(path("summary.json"));
  }
  return report;
}

namespace {

struct ReplayIndex {
  std::map<std::pair<std::int64_t, std::string>, Json> public_bits;
  std::map<std::int64_t, std::string> basis_announced;
};

bool is_bit(const Json& v) { return v.is_number_integer() && (v == 0 || v == 1); }
bool is_sign(const Json& v) { return v.is_number_integer() && (v == 1 || v == -1); }

}  // namespace

ReplayVerdict replay_events(const std::vector<TranscriptEvent>& events) {
  ReplayVerdict verdict;
  auto issue = [&](std::uint64_t seq, const std::string& message) {
    verdict.consistent = false;
    verdict.issues.push_back(ReplayIssue{seq, message});
  };

  ReplayIndex index;
  bool have_prev = false;
  std::uint64_t prev_seq = 0;
  bool aborted = false;

  // Pass 1: ordering, domains, broadcast index.
  for (const auto& ev : events) {
    if (have_prev && ev.seq <= prev_seq) {
      issue(ev.seq, "sequence numbers must be strictly increasing");
    }
    prev_seq = ev.seq;
    have_prev = true;

    if (aborted) issue(ev.seq, "event after an abort");
    if (ev.kind == EventKind::Abort) aborted = true;

    try {
      if (ev.kind == EventKind::PublicBit) {
        for (const char* key : {"x", "y", "j"}) {
          if (ev.payload.contains(key) && !is_bit(ev.payload.at(key))) {
            issue(ev.seq, std::string("public bit '") + key + "' out of domain");
          }
        }
        index.public_bits[{ev.m, ev.actor}] = ev.payload;
      } else if (ev.kind == EventKind::PublicSign) {
        if (!ev.payload.contains("j") || !is_sign(ev.payload.at("j"))) {
          issue(ev.seq, "public sign out of domain");
        }
        index.public_bits[{ev.m, ev.actor}] = ev.payload;
      } else if (ev.kind == EventKind::BasisAnnounce) {
        index.basis_announced[ev.m] = ev.payload.at("basis").get<std::string>();
      }
    } catch (const std::exception& e) {
      issue(ev.seq, std::string("malformed payload: ") + e.what());
    }
  }

  // Pass 2: decode relations and check verdicts.
  for (const auto& ev : events) {
    try {
      if (ev.kind == EventKind::Decode) {
        ++verdict.relations_checked;
        if (ev.payload.contains("bob")) {
          const int y = ev.payload.at("y").get<int>();
          const int j = ev.payload.at("j").get<int>();
          const int s = ev.payload.at("s").get<int>();
          const int r = ev.payload.at("r").get<int>();
          if (r != (y ^ j ^ s)) issue(ev.seq, "decode breaks the masked pad relation");
          const int bob = ev.payload.at("bob").get<int>();
          const auto it = index.public_bits.find({ev.m, party_name(bob)});
          if (it == index.public_bits.end() || !it->second.contains("y")) {
            issue(ev.seq, "decode references a missing broadcast");
          } else if (it->second.at("y").get<int>() != y) {
            issue(ev.seq, "decode disagrees with the recorded broadcast");
          }
        } else {
          const int x = ev.payload.at("x").get<int>();
          const int j = ev.payload.at("j").get<int>();
          const int q = ev.payload.at("q").get<int>();
          if (q != (x ^ j)) issue(ev.seq, "decode breaks the pad relation");
          const auto it = index.public_bits.find({ev.m, "alice"});
          if (it == index.public_bits.end() || !it->second.contains("x")) {
            issue(ev.seq, "decode references a missing broadcast");
          } else if (it->second.at("x").get<int>() != x) {
            issue(ev.seq, "decode disagrees with the recorded broadcast");
          }
        }
      } else if (ev.kind == EventKind::Announcement && ev.payload.contains("type") &&
                 ev.payload.at("type") == "check_verdict") {
        ++verdict.relations_checked;
        const std::string basis_text = ev.payload.at("basis").get<std::string>();
        const bool bz = basis_text == "Bz";
        const bool phi = ev.payload.at("resource").get<std::string>() == "phi";
        const int alice = ev.payload.at("alice").get<int>();
        const auto bobs = ev.payload.at("bobs").get<std::vector<int>>();
        const bool recorded_pass = ev.payload.at("pass").get<bool>();

        const auto announced = index.basis_announced.find(ev.m);
        if (announced == index.basis_announced.end() || announced->second != basis_text) {
          issue(ev.seq, "check basis disagrees with the announced basis");
        }

        bool domain_ok = bz ? alice == 0 || alice == 1 : alice == 1 || alice == -1;
        for (int b : bobs) domain_ok = domain_ok && (bz ? b == 0 || b == 1 : b == 1 || b == -1);
        if (!domain_ok) {
          issue(ev.seq, "check outcomes out of domain for basis " + basis_text);
        } else {
          bool recomputed;
          if (bz) {
            ShiftMask mask;
            if (phi) {
              for (int b : ev.payload.at("mask").get<std::vector<int>>()) {
                mask.bits.push_back(static_cast<std::uint8_t>(b));
              }
            }
            recomputed = bz_check_passes(phi ? ResourceKind::Phi : ResourceKind::Psi, alice,
                                         bobs, phi ? &mask : nullptr);
          } else {
            recomputed = bx_check_passes(alice, bobs);
          }
          if (recomputed != recorded_pass) issue(ev.seq, "check verdict does not recompute");
        }

        for (std::size_t i = 0; i < bobs.size(); ++i) {
          const auto it = index.public_bits.find({ev.m, party_name(static_cast<int>(i) + 1)});
          if (it == index.public_bits.end() || !it->second.contains("j")) {
            issue(ev.seq, "check outcome missing its public broadcast");
          } else if (it->second.at("j").get<int>() != bobs[i]) {
            issue(ev.seq, "check outcome disagrees with the public broadcast");
          }
        }
      }
    } catch (const std::exception& e) {
      issue(ev.seq, std::string("malformed payload: ") + e.what());
    }
  }
  return verdict;
}

ReplayVerdict replay_stream(std::istream& is) {
  return replay_events(Transcript::parse_jsonl(is));
}

ReplayVerdict replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transcript: " + path);
  return replay_stream(in);
}

int exit_code_for(RunStatus status) {
  switch (status) {
    case RunStatus::Completed:
      return 0;
    case RunStatus::AbortedEveDetected:
    case RunStatus::Restarted:
      return 2;
  }
  return 1;
}

void write_detection_csv(std::ostream& os, const std::vector<DetectionRow>& rows) {
  os << "attack,phase,basis,students,trials,detections,rate,ci_low,ci_high,oracle\n";
  for (const auto& row : rows) {
    const auto& e = row.estimate;
    os << to_string(e.attack) << ',' << to_string(e.phase) << ',' << to_string(e.basis) << ','
       << e.students << ',' << e.trials << ',' << e.detections << ',' << fmt(e.rate) << ','
       << fmt(e.interval.low) << ',' << fmt(e.interval.high) << ',' << fmt(row.oracle) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const LeakageSweep& sweep, AttackKind attack) {
  os << "attack,control_rate,message_len,trials,mean_leaked,detection_rate,ci_low,ci_high,"
        "model_mean_leaked,model_detection\n";
  for (const auto& cell : sweep.cells) {
    os << to_string(attack) << ',' << fmt(cell.control_rate) << ',' << cell.message_len << ','
       << cell.trials << ',' << fmt(cell.mean_leaked) << ',' << fmt(cell.detection_rate) << ','
       << fmt(cell.detection_interval.low) << ',' << fmt(cell.detection_interval.high) << ','
       << fmt(cell.model_mean_leaked) << ',' << fmt(cell.model_detection) << '\n';
  }
}

}  // namespace qexam
