#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qexam/analysis.hpp"
#include "qexam/protocol.hpp"

namespace qexam {

// Flat scenario description; file form is a flat JSON document and every
// field can be overridden by the CLI flag of the same name.
struct ScenarioConfig {
  std::string protocol = "absolute";  // absolute | direct
  std::string phase = "full-exam";    // give | collect | share-psi | share-phi | full-exam
  int students = 2;
  std::int64_t problem_len = 16;
  std::int64_t solution_len = 16;
  double control_rate = 0.5;
  double check_fraction = 0.25;
  std::optional<std::int64_t> pool_count;  // share-only phases; default 200
  std::string problem_bits;                // literal payload; empty = random

  AttackConfig attack;

  std::string direct_policy = "terminate";  // terminate | restart
  double error_threshold = 0.0;
  std::int64_t max_restarts = 3;
  std::int64_t round_cap_factor = 64;

  std::uint64_t seed = 12345;
  std::int64_t trials = 1;
  std::string out_dir = "out";

  void validate() const;  // throws ConfigError / ResourceError
  Json to_json() const;
  static ScenarioConfig from_json(const Json& j);
  static ScenarioConfig load_file(const std::string& path);

  SessionConfig session_config() const;
};

struct PhaseSummary {
  std::string phase;
  RunStatus status = RunStatus::Completed;
  std::string detail;
  RunStats stats;
  std::int64_t decode_errors = -1;  // -1 when the phase has no payload
  Json to_json() const;
};

struct TrialResult {
  std::int64_t trial = 0;
  RunStatus status = RunStatus::Completed;
  std::vector<PhaseSummary> phases;
  std::string transcript_jsonl;
  Json to_json() const;
};

// Executes one seeded trial of the configured scenario entirely in memory.
TrialResult execute_trial(const ScenarioConfig& cfg, std::int64_t trial_index);

struct RunReport {
  ScenarioConfig config;
  std::vector<TrialResult> trials;
  std::vector<std::string> artifacts;
  double duration_ms = 0.0;

  RunStatus worst_status() const;
  Json to_json() const;
};

// Runs all trials and writes transcript.jsonl (first trial), summary.json
// and estimates.csv under config.out_dir.
RunReport run_scenario(const ScenarioConfig& cfg);

// Transcript audit: re-derives every decode from the recorded broadcasts and
// outcomes, recomputes every check verdict, and verifies event ordering.
struct ReplayIssue {
  std::uint64_t seq = 0;
  std::string message;
};

struct ReplayVerdict {
  bool consistent = true;
  std::size_t relations_checked = 0;
  std::vector<ReplayIssue> issues;
};

ReplayVerdict replay_events(const std::vector<TranscriptEvent>& events);
ReplayVerdict replay_stream(std::istream& is);   // throws TranscriptParseError
ReplayVerdict replay_file(const std::string& path);

// Stable CLI exit codes: 0 completed, 2 eavesdropper detected / phase
// abandoned, 3 config error, 4 resource error.
int exit_code_for(RunStatus status);

struct DetectionRow {
  DetectionEstimate estimate;
  double oracle = 0.0;
};

void write_detection_csv(std::ostream& os, const std::vector<DetectionRow>& rows);
void write_sweep_csv(std::ostream& os, const LeakageSweep& sweep, AttackKind attack);

}  // namespace qexam
