#include "qexam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qexam {

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) return WilsonInterval{0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return WilsonInterval{std::max(0.0, center - half), std::min(1.0, center + half)};
}

double chi_square_p_df1(double stat) {
  if (stat <= 0.0) return 1.0;
  return std::erfc(std::sqrt(stat / 2.0));
}

namespace {

// One post-attack joint state: the qubits the legitimate parties will
// measure, and the mask Alice checks against.
struct OracleBranch {
  double probability = 1.0;
  StateVector state{1};
  std::vector<int> party_qubit;  // [0] Alice, [n] Bob n
  std::optional<ShiftMask> mask;
};

StateVector collapse_outcomes(StateVector state, const std::vector<int>& qubits,
                              const std::vector<int>& outcomes, Basis basis) {
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    state = project(state, qubits[i], outcomes[i], basis).post_state;
  }
  return state;
}

std::vector<int> identity_map(int students) {
  std::vector<int> map(static_cast<std::size_t>(students) + 1);
  for (int p = 0; p <= students; ++p) map[static_cast<std::size_t>(p)] = p;
  return map;
}

std::vector<std::pair<double, ShiftMask>> enumerate_masks(int students) {
  std::vector<std::pair<double, ShiftMask>> masks;
  const std::size_t total = std::size_t{1} << students;
  const double w = 1.0 / static_cast<double>(total);
  for (std::size_t bits = 0; bits < total; ++bits) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(students));
    for (int n = 0; n < students; ++n) mask[static_cast<std::size_t>(n)] = (bits >> n) & 1u;
    masks.push_back({w, ShiftMask{std::move(mask)}});
  }
  return masks;
}

// Base states for the sharing phase. Detection rates are invariant under XOR
// relabeling of Alice's mask (flips commute with every attack map and with
// both check predicates), so the mask space is enumerated exactly only while
// it is small.
std::vector<std::pair<double, ShiftMask>> mask_space(ResourceKind phase, int students) {
  if (phase == ResourceKind::Psi || students > 6) {
    return {{1.0, ShiftMask{std::vector<std::uint8_t>(static_cast<std::size_t>(students), 0)}}};
  }
  return enumerate_masks(students);
}

std::vector<std::pair<double, ShiftMask>> single_zero_mask(int students) {
  return {{1.0, ShiftMask{std::vector<std::uint8_t>(static_cast<std::size_t>(students), 0)}}};
}

std::vector<OracleBranch> attack_branches(const AttackConfig& attack, ResourceKind phase,
                                          int students) {
  std::vector<OracleBranch> branches;
  const std::vector<int> legit = identity_map(students);

  // Intercept-resend on a phi phase: only the XOR of Alice's mask and the
  // substitute mask enters the check, and it is uniform whenever Alice's is.
  // Alice's side is pinned and the XOR space enumerated exactly.
  std::vector<std::pair<double, ShiftMask>> alice_masks;
  if (attack.kind == AttackKind::InterceptResend && phase == ResourceKind::Phi) {
    alice_masks = single_zero_mask(students);
  } else {
    alice_masks = mask_space(phase, students);
  }

  for (const auto& [mask_prob, mask] : alice_masks) {
    StateVector base = ghz_prepare(students + 1);
    std::optional<ShiftMask> check_mask;
    if (phase == ResourceKind::Phi) {
      base = apply_shift_mask(base, mask);
      check_mask = mask;
    }

    switch (attack.kind) {
      case AttackKind::None:
      case AttackKind::Masquerade: {
        branches.push_back({mask_prob, base, legit, check_mask});
        break;
      }
      case AttackKind::MeasureResend: {
        std::vector<int> bob_qubits;
        for (int n = 1; n <= students; ++n) bob_qubits.push_back(n);
        for (const auto& [outcomes, prob] : outcome_distribution(base, bob_qubits, Basis::Bz)) {
          branches.push_back({mask_prob * prob,
                              collapse_outcomes(base, bob_qubits, outcomes, Basis::Bz), legit,
                              check_mask});
        }
        break;
      }
      case AttackKind::Disturbance: {
        const std::size_t patterns = std::size_t{1} << students;
        const double w = mask_prob / static_cast<double>(patterns);
        for (std::size_t v = 0; v < patterns; ++v) {
          StateVector flipped = base;
          for (int n = 0; n < students; ++n) {
            if ((v >> n) & 1u) flipped.apply_x(n + 1);
          }
          branches.push_back({w, std::move(flipped), legit, check_mask});
        }
        break;
      }
      case AttackKind::EntangleMeasure: {
        branches.push_back({mask_prob,
                            entangle_ancilla(base, attack.target_bob, attack.alpha, attack.beta),
                            legit, check_mask});
        break;
      }
      case AttackKind::InterceptResend: {
        std::vector<std::pair<double, ShiftMask>> own_masks;
        if (phase == ResourceKind::Psi) {
          own_masks = single_zero_mask(students);
        } else {
          own_masks = enumerate_masks(students);
        }
        for (const auto& [own_prob, own_mask] : own_masks) {
          StateVector own = ghz_prepare(students + 1);
          if (phase == ResourceKind::Phi) own = apply_shift_mask(own, own_mask);
          std::vector<int> map(static_cast<std::size_t>(students) + 1);
          map[0] = 0;  // Alice keeps her qubit of the original state
          for (int n = 1; n <= students; ++n) map[static_cast<std::size_t>(n)] = students + 1 + n;
          branches.push_back({mask_prob * own_prob, tensor(base, own), map, check_mask});
        }
        break;
      }
    }
  }
  return branches;
}

double branch_failure(const OracleBranch& branch, Basis basis) {
  std::vector<int> qubits;
  qubits.reserve(branch.party_qubit.size());
  for (int q : branch.party_qubit) qubits.push_back(q);
  double fail = 0.0;
  for (const auto& [outcomes, prob] : outcome_distribution(branch.state, qubits, basis)) {
    const int alice = outcomes.front();
    const std::vector<int> bobs(outcomes.begin() + 1, outcomes.end());
    const bool pass =
        basis == Basis::Bz
            ? bz_check_passes(branch.mask ? ResourceKind::Phi : ResourceKind::Psi, alice, bobs,
                              branch.mask ? &*branch.mask : nullptr)
            : bx_check_passes(alice, bobs);
    if (!pass) fail += prob;
  }
  return fail;
}

}  // namespace

double oracle_detection_rate(const AttackConfig& attack, ResourceKind phase, Basis basis,
                             int students) {
  attack.validate(students);
  double detection = 0.0;
  for (const auto& branch : attack_branches(attack, phase, students)) {
    detection += branch.probability * branch_failure(branch, basis);
  }
  return detection;
}

double oracle_round_detection(const AttackConfig& attack, ResourceKind phase, int students) {
  return 0.5 * oracle_detection_rate(attack, phase, Basis::Bz, students) +
         0.5 * oracle_detection_rate(attack, phase, Basis::Bx, students);
}

DetectionEstimate estimate_detection(const AttackConfig& attack, ResourceKind phase, Basis basis,
                                     int students, std::int64_t trials, const Rng& root) {
  if (trials < 100) throw std::invalid_argument("estimate_detection: trials must be >= 100");
  attack.validate(students);

  DetectionEstimate est;
  est.attack = attack.kind;
  est.phase = phase;
  est.basis = basis;
  est.students = students;
  est.trials = trials;

  for (std::int64_t t = 0; t < trials; ++t) {
    Rng rng = root.derive(static_cast<std::uint64_t>(t));
    auto eve = make_attack(attack);
    EntangledResource res = make_resource(phase, students, t, rng);
    eve->on_distribute(res, rng);
    const CheckRecord rec = run_security_check(res, basis, rng);
    if (!rec.passed) ++est.detections;
  }
  est.rate = static_cast<double>(est.detections) / static_cast<double>(trials);
  est.interval = wilson_interval(est.detections, trials);
  return est;
}

double geometric_mean_prefix(double control_rate, double per_check_detection, std::int64_t m) {
  const double c = control_rate;
  const double p = per_check_detection;
  const double fail_weight = c * p;
  if (fail_weight <= 0.0) return static_cast<double>(m);
  const double u = (1.0 - c) / ((1.0 - c) + fail_weight);
  return u * (1.0 - std::pow(u, static_cast<double>(m))) / (1.0 - u);
}

double geometric_detection_probability(double control_rate, double per_check_detection,
                                       std::int64_t m) {
  const double c = control_rate;
  const double p = per_check_detection;
  const double fail_weight = c * p;
  if (fail_weight <= 0.0) return 0.0;
  const double u = (1.0 - c) / ((1.0 - c) + fail_weight);
  return 1.0 - std::pow(u, static_cast<double>(m));
}

std::vector<double> default_control_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

std::vector<std::int64_t> default_length_grid() { return {8, 16, 32, 64, 128}; }

LeakageSweep leakage_sweep(const AttackConfig& attack, const std::vector<double>& control_rates,
                           const std::vector<std::int64_t>& message_lengths, int students,
                           std::int64_t trials, const Rng& root) {
  if (trials < 1) throw std::invalid_argument("leakage_sweep: trials must be >= 1");
  attack.validate(students);

  LeakageSweep sweep;
  std::vector<double> leak_se;  // standard error of each cell's mean leakage

  std::uint64_t cell_counter = 0;
  for (double c : control_rates) {
    for (std::int64_t m : message_lengths) {
      const Rng cell_root = root.derive(cell_counter++);
      LeakageCell cell;
      cell.control_rate = c;
      cell.message_len = m;
      cell.trials = trials;

      double leak_sum = 0.0;
      double leak_sq_sum = 0.0;
      std::int64_t detected = 0;
      for (std::int64_t t = 0; t < trials; ++t) {
        const Rng trial_root = cell_root.derive(static_cast<std::uint64_t>(t));
        SessionConfig scfg;
        scfg.students = students;
        scfg.record_transcript = false;
        ExamSession session(scfg, attack, derive_seed(trial_root.seed(), 0));
        Rng payload_rng(derive_seed(trial_root.seed(), 1));
        const BitString problem = BitString::random(static_cast<std::size_t>(m), payload_rng);
        const ProtocolOutcome out = session.direct_give_problem(problem, c);
        const double leaked = static_cast<double>(out.stats.eve_leaked_bits);
        leak_sum += leaked;
        leak_sq_sum += leaked * leaked;
        if (out.stats.eve_detected) ++detected;
      }
      const double n = static_cast<double>(trials);
      cell.mean_leaked = leak_sum / n;
      cell.detection_rate = static_cast<double>(detected) / n;
      cell.detection_interval = wilson_interval(detected, trials);

      const double variance =
          std::max(0.0, leak_sq_sum / n - cell.mean_leaked * cell.mean_leaked);
      leak_se.push_back(std::sqrt(variance / n));

      const double p_round = oracle_round_detection(attack, ResourceKind::Psi, students);
      cell.model_mean_leaked = geometric_mean_prefix(c, p_round, m);
      cell.model_detection = geometric_detection_probability(c, p_round, m);
      sweep.cells.push_back(cell);
    }
  }

  // Monotonicity diagnostics, with confidence slack.
  const std::size_t m_count = message_lengths.size();
  for (std::size_t ci = 0; ci + 1 < control_rates.size(); ++ci) {
    for (std::size_t mi = 0; mi < m_count; ++mi) {
      const std::size_t a = ci * m_count + mi;
      const std::size_t b = (ci + 1) * m_count + mi;
      const double slack = 2.0 * (leak_se[a] + leak_se[b]);
      if (sweep.cells[b].mean_leaked > sweep.cells[a].mean_leaked + slack) {
        sweep.leakage_monotone_in_c = false;
      }
    }
  }
  for (std::size_t ci = 0; ci < control_rates.size(); ++ci) {
    for (std::size_t mi = 0; mi + 1 < m_count; ++mi) {
      const auto& a = sweep.cells[ci * m_count + mi];
      const auto& b = sweep.cells[ci * m_count + mi + 1];
      if (b.detection_rate < a.detection_rate &&
          b.detection_interval.high < a.detection_interval.low) {
        sweep.detection_monotone_in_m = false;
      }
    }
  }
  return sweep;
}

UniformityReport pad_uniformity_test(const std::vector<int>& broadcast_bits,
                                     const std::vector<int>* plaintext_bits) {
  if (broadcast_bits.size() < 1000) {
    throw std::invalid_argument("pad_uniformity_test: need at least 1000 broadcast bits");
  }
  if (plaintext_bits && plaintext_bits->size() != broadcast_bits.size()) {
    throw std::invalid_argument("pad_uniformity_test: plaintext length mismatch");
  }

  UniformityReport report;
  report.samples = broadcast_bits.size();

  const double n = static_cast<double>(broadcast_bits.size());
  double ones = 0.0;
  for (int b : broadcast_bits) ones += b;
  const double expected = n / 2.0;
  const double zeros = n - ones;
  report.uniformity_stat = (zeros - expected) * (zeros - expected) / expected +
                           (ones - expected) * (ones - expected) / expected;
  report.uniformity_p = chi_square_p_df1(report.uniformity_stat);

  bool independence_ok = true;
  if (plaintext_bits) {
    double count[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::size_t i = 0; i < broadcast_bits.size(); ++i) {
      count[broadcast_bits[i] & 1][(*plaintext_bits)[i] & 1] += 1.0;
    }
    const double row0 = count[0][0] + count[0][1];
    const double row1 = count[1][0] + count[1][1];
    const double col0 = count[0][0] + count[1][0];
    const double col1 = count[0][1] + count[1][1];
    // Degenerate margins (e.g. constant plaintext) leave nothing to test.
    if (row0 > 0 && row1 > 0 && col0 > 0 && col1 > 0) {
      const double det = count[0][0] * count[1][1] - count[0][1] * count[1][0];
      const double stat = n * det * det / (row0 * row1 * col0 * col1);
      report.independence_stat = stat;
      report.independence_p = chi_square_p_df1(stat);
      independence_ok = *report.independence_p > report.significance;
    }
  }

  report.pass = report.uniformity_p > report.significance && independence_ok;
  return report;
}

std::vector<int> extract_broadcast_bits(const std::vector<TranscriptEvent>& events) {
  std::vector<int> bits;
  for (const auto& ev : events) {
    if (ev.kind != EventKind::PublicBit) continue;
    if (ev.payload.contains("x")) {
      bits.push_back(ev.payload.at("x").get<int>());
    } else if (ev.payload.contains("y")) {
      bits.push_back(ev.payload.at("y").get<int>());
    }
  }
  return bits;
}

}  // namespace qexam
