#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "qexam/protocol.hpp"

using namespace qexam;

namespace {

SessionConfig session_for(int students) {
  SessionConfig cfg;
  cfg.students = students;
  return cfg;
}

AttackConfig no_attack() { return AttackConfig{}; }

AttackConfig attack_of(AttackKind kind) {
  AttackConfig cfg;
  cfg.kind = kind;
  return cfg;
}

}  // namespace

TEST_CASE("honest psi sharing keeps the unchecked resources in order") {
  ExamSession session(session_for(2), no_attack(), 11);
  SharingResult shared = session.share_psi(200);

  CHECK(shared.outcome.status == RunStatus::Completed);
  CHECK(shared.outcome.stats.checks_failed == 0);
  CHECK(shared.outcome.stats.checks_passed == 50);
  CHECK(shared.outcome.stats.restarts == 0);
  REQUIRE(shared.pool.resources.size() == 150);
  for (std::size_t i = 1; i < shared.pool.resources.size(); ++i) {
    CHECK(shared.pool.resources[i].index > shared.pool.resources[i - 1].index);
  }
}

TEST_CASE("honest sharing never fails a check, either kind") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    ExamSession session(session_for(3), no_attack(), seed);
    CHECK(session.share_psi(40).outcome.stats.checks_failed == 0);
    CHECK(session.share_phi(40).outcome.stats.checks_failed == 0);
  }
}

TEST_CASE("a persistent measure-resend attack exhausts the restart budget") {
  ExamSession session(session_for(2), attack_of(AttackKind::MeasureResend), 21);
  SharingResult shared = session.share_psi(80);

  CHECK(shared.outcome.status == RunStatus::Restarted);
  CHECK(shared.outcome.stats.eve_detected);
  CHECK(shared.outcome.stats.restarts == 3);
  CHECK(shared.pool.resources.empty());
  // Only Bx checks can fail under measure-resend; roughly a quarter overall.
  CHECK(shared.outcome.stats.checks_failed > 0);
}

TEST_CASE("an intercept-resend attack is caught in either basis") {
  ExamSession session(session_for(2), attack_of(AttackKind::InterceptResend), 22);
  SharingResult shared = session.share_psi(80);
  CHECK(shared.outcome.status == RunStatus::Restarted);
  // Half of all checks fail regardless of basis; 20 checks per attempt.
  CHECK(shared.outcome.stats.checks_failed > 10);
}

TEST_CASE("problem giving decodes exactly for every student") {
  ExamSession session(session_for(3), no_attack(), 33);
  SharingResult shared = session.share_psi(16);
  REQUIRE(shared.outcome.status == RunStatus::Completed);

  const BitString problem = BitString::parse("101");
  ProtocolOutcome out = session.give_problem(shared.pool, problem);
  CHECK(out.status == RunStatus::Completed);
  REQUIRE(out.decoded.size() == 3);
  for (const auto& [who, decoded] : out.decoded) CHECK(decoded == problem);
}

TEST_CASE("solution collecting recovers every student's string exactly") {
  ExamSession session(session_for(3), no_attack(), 44);
  SharingResult shared = session.share_phi(40);
  REQUIRE(shared.outcome.status == RunStatus::Completed);

  std::vector<BitString> solutions = {BitString::parse("1100"), BitString::parse("0110"),
                                      BitString::parse("1010")};
  ProtocolOutcome out = session.collect_solutions(shared.pool, solutions);
  CHECK(out.status == RunStatus::Completed);
  for (int n = 1; n <= 3; ++n) {
    CHECK(out.decoded.at(party_name(n)) == solutions[static_cast<std::size_t>(n) - 1]);
  }
}

TEST_CASE("round trips are error free for one to eight students") {
  for (int students = 1; students <= 8; ++students) {
    ExamSession session(session_for(students), no_attack(), 500 + students);
    Rng payload(derive_seed(900, students));

    SharingResult psi = session.share_psi(96);
    REQUIRE(psi.outcome.status == RunStatus::Completed);
    const BitString problem = BitString::random(64, payload);
    const ProtocolOutcome give = session.give_problem(psi.pool, problem);
    for (const auto& [who, decoded] : give.decoded) CHECK(decoded == problem);

    SharingResult phi = session.share_phi(96);
    REQUIRE(phi.outcome.status == RunStatus::Completed);
    std::vector<BitString> solutions;
    for (int n = 0; n < students; ++n) solutions.push_back(BitString::random(64, payload));
    const ProtocolOutcome collect = session.collect_solutions(phi.pool, solutions);
    for (int n = 1; n <= students; ++n) {
      CHECK(collect.decoded.at(party_name(n)) == solutions[static_cast<std::size_t>(n) - 1]);
    }
  }
}

TEST_CASE("an exhausted pool raises a resource error") {
  ExamSession session(session_for(2), no_attack(), 55);
  SharingResult shared = session.share_psi(8);
  REQUIRE(shared.outcome.status == RunStatus::Completed);
  CHECK_THROWS_AS(session.give_problem(shared.pool, BitString::random(64, session.rng())),
                  ResourceError);
}

TEST_CASE("broadcast bits look uniform even for a constant problem") {
  ExamSession session(session_for(2), no_attack(), 66);
  SharingResult shared = session.share_psi(2700);
  REQUIRE(shared.outcome.status == RunStatus::Completed);

  const BitString problem(std::vector<std::uint8_t>(2000, 1));
  session.give_problem(shared.pool, problem);

  int ones = 0;
  int total = 0;
  for (const auto& ev : session.transcript().events()) {
    if (ev.kind == EventKind::PublicBit && ev.payload.contains("x")) {
      ones += ev.payload.at("x").get<int>();
      ++total;
    }
  }
  REQUIRE(total == 2000);
  // Three standard errors around the uniform expectation.
  CHECK(std::abs(ones / 2000.0 - 0.5) < 3.0 * std::sqrt(0.25 / 2000.0));
}

TEST_CASE("one student cannot decode another student's broadcasts") {
  const int rounds = 10000;
  ExamSession session(session_for(2), no_attack(), 77);
  SharingResult shared = session.share_phi(static_cast<std::size_t>(rounds / 0.74));
  REQUIRE(shared.outcome.status == RunStatus::Completed);

  Rng payload(derive_seed(77, 1));
  std::vector<BitString> solutions = {BitString::random(rounds, payload),
                                      BitString::random(rounds, payload)};
  REQUIRE(session.collect_solutions(shared.pool, solutions).status == RunStatus::Completed);

  // Bob 2 tries to read Bob 1: his own pad is j2 = y2 xor r2; his best guess
  // for Bob 1's bit is y1 xor j2.
  std::map<std::int64_t, std::map<std::string, int>> broadcasts;
  for (const auto& ev : session.transcript().events()) {
    if (ev.kind == EventKind::PublicBit && ev.payload.contains("y")) {
      broadcasts[ev.payload.at("pos").get<std::int64_t>()][ev.actor] =
          ev.payload.at("y").get<int>();
    }
  }
  REQUIRE(broadcasts.size() == static_cast<std::size_t>(rounds));
  int hits = 0;
  for (const auto& [pos, per_actor] : broadcasts) {
    const int y1 = per_actor.at("bob1");
    const int y2 = per_actor.at("bob2");
    const int j2 = y2 ^ solutions[1][static_cast<std::size_t>(pos)];
    if ((y1 ^ j2) == solutions[0][static_cast<std::size_t>(pos)]) ++hits;
  }
  const double accuracy = hits / static_cast<double>(rounds);
  CHECK(accuracy > 0.45);
  CHECK(accuracy < 0.55);
}

TEST_CASE("decode events reference rounds in stored order") {
  ExamSession session(session_for(2), no_attack(), 88);
  SharingResult shared = session.share_psi(32);
  REQUIRE(shared.outcome.status == RunStatus::Completed);
  session.give_problem(shared.pool, BitString::parse("11010010"));

  std::int64_t last_m = -1;
  for (const auto& ev : session.transcript().events()) {
    if (ev.kind == EventKind::Decode) {
      CHECK(ev.m >= last_m);
      last_m = ev.m;
    }
  }
  CHECK(last_m >= 0);
}

TEST_CASE("identical seeds replay byte-identical transcripts") {
  auto run = [](std::uint64_t seed) {
    ExamSession session(session_for(3), no_attack(), seed);
    SharingResult shared = session.share_psi(40);
    session.give_problem(shared.pool, BitString::parse("110101"));
    return session.transcript().to_jsonl();
  };
  CHECK(run(123) == run(123));
  CHECK(run(123) != run(124));
}

TEST_CASE("the direct protocol completes in about M/(1-c) rounds") {
  double total_rounds = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    ExamSession session(session_for(2), no_attack(), derive_seed(4000, s));
    Rng payload(derive_seed(4001, s));
    ProtocolOutcome out = session.direct_give_problem(BitString::random(16, payload), 0.5);
    REQUIRE(out.status == RunStatus::Completed);
    CHECK(out.stats.checks_failed == 0);  // honest control rounds cannot fail
    for (const auto& [who, decoded] : out.decoded) CHECK(decoded.size() == 16);
    total_rounds += static_cast<double>(out.stats.rounds_used);
  }
  const double mean = total_rounds / seeds;
  CHECK(mean > 26.0);  // expectation 32, sd of the mean about 1.1
  CHECK(mean < 38.0);
}

TEST_CASE("direct solution collecting at c=0.9 uses about ten times M' rounds") {
  double total_rounds = 0.0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    ExamSession session(session_for(2), no_attack(), derive_seed(4100, s));
    Rng payload(derive_seed(4101, s));
    std::vector<BitString> solutions = {BitString::random(8, payload),
                                        BitString::random(8, payload)};
    ProtocolOutcome out = session.direct_collect_solutions(solutions, 0.9);
    REQUIRE(out.status == RunStatus::Completed);
    for (int n = 1; n <= 2; ++n) {
      CHECK(out.decoded.at(party_name(n)) == solutions[static_cast<std::size_t>(n) - 1]);
    }
    total_rounds += static_cast<double>(out.stats.rounds_used);
  }
  const double mean = total_rounds / seeds;
  CHECK(mean > 60.0);  // expectation 80, sd of the mean about 4
  CHECK(mean < 100.0);
}

TEST_CASE("with no control rounds an eavesdropper reads the whole problem") {
  ExamSession session(session_for(2), attack_of(AttackKind::MeasureResend), 91);
  Rng payload(derive_seed(91, 1));
  const BitString problem = BitString::random(32, payload);
  ProtocolOutcome out = session.direct_give_problem(problem, 0.0);
  CHECK(out.status == RunStatus::Completed);
  CHECK(out.stats.eve_leaked_bits == 32);
  CHECK_FALSE(out.stats.eve_detected);
}

TEST_CASE("a tapped direct run terminates at the first failed check") {
  int detected = 0;
  for (int s = 0; s < 20; ++s) {
    ExamSession session(session_for(2), attack_of(AttackKind::MeasureResend),
                        derive_seed(4200, s));
    Rng payload(derive_seed(4201, s));
    ProtocolOutcome out = session.direct_give_problem(BitString::random(64, payload), 0.5);
    if (out.status == RunStatus::AbortedEveDetected) {
      ++detected;
      CHECK(out.stats.checks_failed == 1);  // terminate policy stops at the first failure
      CHECK(out.stats.eve_leaked_bits <= 64);
    }
  }
  CHECK(detected >= 19);  // survival chance is about 6e-7 per run
}

TEST_CASE("the restart policy keeps going and hits the round cap under persistent attack") {
  SessionConfig cfg = session_for(2);
  cfg.direct_policy = DetectionPolicy::Restart;
  ExamSession session(cfg, attack_of(AttackKind::MeasureResend), 92);
  Rng payload(derive_seed(92, 1));
  // A 64-bit transfer survives a persistent tap with probability ~6e-7 per
  // restart cycle, so the run keeps restarting until the cap.
  ProtocolOutcome out = session.direct_give_problem(BitString::random(64, payload), 0.5);
  CHECK(out.status == RunStatus::AbortedEveDetected);
  CHECK(out.stats.restarts > 0);
  CHECK(out.stats.rounds_used == 8192);  // 64 * 64 / (1 - 0.5)
}

TEST_CASE("the restart policy does not disturb honest runs") {
  SessionConfig cfg = session_for(2);
  cfg.direct_policy = DetectionPolicy::Restart;
  ExamSession session(cfg, no_attack(), 93);
  Rng payload(derive_seed(93, 1));
  const BitString problem = BitString::random(16, payload);
  ProtocolOutcome out = session.direct_give_problem(problem, 0.25);
  CHECK(out.status == RunStatus::Completed);
  CHECK(out.stats.restarts == 0);
  for (const auto& [who, decoded] : out.decoded) CHECK(decoded == problem);
}

TEST_CASE("masquerading is disclosed by the authenticated channel") {
  SUBCASE("posing as a student during psi sharing") {
    AttackConfig masq = attack_of(AttackKind::Masquerade);
    masq.impersonated = "bob2";
    ExamSession session(session_for(2), masq, 94);
    SharingResult shared = session.share_psi(16);
    CHECK(shared.outcome.status == RunStatus::AbortedEveDetected);
    CHECK(shared.outcome.detail.find("masquerade") != std::string::npos);
    CHECK(shared.pool.resources.empty());
  }

  SUBCASE("posing as the teacher during phi sharing") {
    AttackConfig masq = attack_of(AttackKind::Masquerade);
    masq.impersonated = "alice";
    ExamSession session(session_for(2), masq, 95);
    SharingResult shared = session.share_phi(16);
    CHECK(shared.outcome.status == RunStatus::AbortedEveDetected);
  }

  SUBCASE("honest runs carry no masquerade aborts") {
    ExamSession session(session_for(2), no_attack(), 96);
    SharingResult shared = session.share_psi(16);
    REQUIRE(shared.outcome.status == RunStatus::Completed);
    for (const auto& ev : session.transcript().events()) CHECK(ev.kind != EventKind::Abort);
  }
}

TEST_CASE("authenticate_exchange passes for honest parties") {
  ExamSession session(session_for(3), no_attack(), 97);
  ProtocolOutcome out;
  CHECK(session.authenticate_exchange(0, out));
  CHECK_FALSE(out.stats.eve_detected);
  // One notice per student plus one receipt per student.
  CHECK(session.transcript().size() == 6);
}

TEST_CASE("check predicates implement the two sharing equalities") {
  SUBCASE("plain Bz equality") {
    CHECK(bz_check_passes(ResourceKind::Psi, 1, {1, 1}, nullptr));
    CHECK_FALSE(bz_check_passes(ResourceKind::Psi, 1, {1, 0}, nullptr));
  }
  SUBCASE("masked Bz equality reduces to plain XOR when the mask is zero") {
    const ShiftMask mask{{0, 1}};
    CHECK(bz_check_passes(ResourceKind::Phi, 1, {1, 0}, &mask));
    CHECK_FALSE(bz_check_passes(ResourceKind::Phi, 1, {0, 0}, &mask));
  }
  SUBCASE("X parity compares Alice's sign with the product") {
    CHECK(bx_check_passes(+1, {-1, -1}));
    CHECK(bx_check_passes(-1, {-1, +1}));
    CHECK_FALSE(bx_check_passes(-1, {-1, -1}));
  }
}
