#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qexam/protocol.hpp"

namespace qexam {

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

// 95% score interval by default; well behaved for rates near 0 and 1.
WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959964);

// Upper-tail p-value of a chi-square statistic with one degree of freedom.
double chi_square_p_df1(double stat);

// Per-check detection probability for one attack, estimated by repeated
// single-check experiments through the real tap and measurement machinery.
struct DetectionEstimate {
  AttackKind attack = AttackKind::None;
  ResourceKind phase = ResourceKind::Psi;
  Basis basis = Basis::Bz;
  int students = 2;
  std::int64_t trials = 0;
  std::int64_t detections = 0;
  double rate = 0.0;
  WilsonInterval interval;
};

DetectionEstimate estimate_detection(const AttackConfig& attack, ResourceKind phase, Basis basis,
                                     int students, std::int64_t trials, const Rng& root);

// Exact per-check detection probability, computed from explicit joint states
// and their outcome distributions. Independent of the sampling path above.
double oracle_detection_rate(const AttackConfig& attack, ResourceKind phase, Basis basis,
                             int students);

// Detection probability of a control round when the basis is drawn 50/50.
double oracle_round_detection(const AttackConfig& attack, ResourceKind phase, int students);

// Geometric race model for the direct protocols: each decisive event is a
// message round or a failed check. Expected message rounds before the first
// detection (truncated at M) and the end-of-run detection probability.
double geometric_mean_prefix(double control_rate, double per_check_detection, std::int64_t m);
double geometric_detection_probability(double control_rate, double per_check_detection,
                                       std::int64_t m);

struct LeakageCell {
  double control_rate = 0.0;
  std::int64_t message_len = 0;
  std::int64_t trials = 0;
  double mean_leaked = 0.0;          // bits Eve decoded correctly before detection
  double detection_rate = 0.0;       // runs with at least one failed check
  WilsonInterval detection_interval;
  double model_mean_leaked = 0.0;    // geometric model, truncated at M
  double model_detection = 0.0;
};

struct LeakageSweep {
  std::vector<LeakageCell> cells;
  bool leakage_monotone_in_c = true;    // at fixed M, within confidence slack
  bool detection_monotone_in_m = true;  // at fixed c
};

// Runs the direct problem-giving protocol under `attack` across the grid.
LeakageSweep leakage_sweep(const AttackConfig& attack, const std::vector<double>& control_rates,
                           const std::vector<std::int64_t>& message_lengths, int students,
                           std::int64_t trials, const Rng& root);

std::vector<double> default_control_grid();        // 0.1 .. 0.9
std::vector<std::int64_t> default_length_grid();   // 8, 16, 32, 64, 128

// Frequency tests on broadcast bits: uniformity, and independence from the
// plaintext when it is supplied.
struct UniformityReport {
  std::size_t samples = 0;
  double uniformity_stat = 0.0;
  double uniformity_p = 1.0;
  std::optional<double> independence_stat;
  std::optional<double> independence_p;
  double significance = 0.01;
  bool pass = false;
};

UniformityReport pad_uniformity_test(const std::vector<int>& broadcast_bits,
                                     const std::vector<int>* plaintext_bits = nullptr);

// Pulls the x/y values of every PublicBit event out of a transcript.
std::vector<int> extract_broadcast_bits(const std::vector<TranscriptEvent>& events);

}  // namespace qexam
