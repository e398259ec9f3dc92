// Command-line runner: protocol scenarios, detection tables, leakage sweeps
// and transcript replay. See README.md for usage examples.

#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qexam/scenario.hpp"

namespace {

using namespace qexam;

void apply_attack_param(AttackConfig& attack, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--attack-param expects KEY=VALUE, got '" + spec + "'");
  }
  const std::string key = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  try {
    if (key == "rounds") {
      attack.rounds = RoundSelector::parse(value);
    } else if (key == "alpha_re") {
      attack.alpha.real(std::stod(value));
    } else if (key == "alpha_im") {
      attack.alpha.imag(std::stod(value));
    } else if (key == "beta_re") {
      attack.beta.real(std::stod(value));
    } else if (key == "beta_im") {
      attack.beta.imag(std::stod(value));
    } else if (key == "beta_sq") {
      const double b = std::stod(value);
      if (b < 0.0 || b > 1.0) throw ConfigError("beta_sq must be in [0, 1]");
      attack.beta = std::sqrt(b);
      attack.alpha = std::sqrt(1.0 - b);
    } else if (key == "target") {
      attack.target_bob = std::stoi(value);
    } else if (key == "mask") {
      if (value.empty() || value == "random") {
        attack.intercept_mask.reset();
      } else {
        std::vector<std::uint8_t> mask;
        for (char c : value) {
          if (c != '0' && c != '1') throw ConfigError("mask must be a bit string or 'random'");
          mask.push_back(c == '1');
        }
        attack.intercept_mask = std::move(mask);
      }
    } else if (key == "party") {
      attack.impersonated = value;
    } else {
      throw ConfigError("unknown attack parameter '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("attack parameter '" + key + "': invalid value '" + value + "'");
  }
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> protocol;
  std::optional<std::string> phase;
  std::optional<int> students;
  std::optional<std::int64_t> problem_len;
  std::optional<std::int64_t> solution_len;
  std::optional<double> control_rate;
  std::optional<double> check_fraction;
  std::optional<std::int64_t> pool_count;
  std::optional<std::string> attack;
  std::vector<std::string> attack_params;
  std::optional<std::string> direct_policy;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<std::string> out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "scenario config file (flat JSON)");
  cmd->add_option("--protocol", flags.protocol, "absolute | direct");
  cmd->add_option("--phase", flags.phase, "give | collect | share-psi | share-phi | full-exam");
  cmd->add_option("--students", flags.students, "number of students N");
  cmd->add_option("--problem-len", flags.problem_len, "problem length M");
  cmd->add_option("--solution-len", flags.solution_len, "solution length M'");
  cmd->add_option("--control-rate", flags.control_rate, "control mode rate c in [0,1)");
  cmd->add_option("--check-fraction", flags.check_fraction, "checked share of distributed states");
  cmd->add_option("--pool-count", flags.pool_count, "states distributed per sharing phase");
  cmd->add_option("--attack", flags.attack,
                  "none | measure-resend | disturbance | entangle-measure | intercept-resend | "
                  "masquerade");
  cmd->add_option("--attack-param", flags.attack_params,
                  "attack parameter KEY=VALUE (repeatable): rounds, alpha_re, alpha_im, beta_re, "
                  "beta_im, beta_sq, target, mask, party");
  cmd->add_option("--direct-policy", flags.direct_policy,
                  "terminate | restart (direct protocols, on detection)");
  cmd->add_option("--seed", flags.seed, "root random seed");
  cmd->add_option("--trials", flags.trials, "trial count");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

ScenarioConfig build_config(const CommonFlags& flags) {
  ScenarioConfig cfg;
  if (flags.config_path) cfg = ScenarioConfig::load_file(*flags.config_path);
  if (flags.protocol) cfg.protocol = *flags.protocol;
  if (flags.phase) cfg.phase = *flags.phase;
  if (flags.students) cfg.students = *flags.students;
  if (flags.problem_len) cfg.problem_len = *flags.problem_len;
  if (flags.solution_len) cfg.solution_len = *flags.solution_len;
  if (flags.control_rate) cfg.control_rate = *flags.control_rate;
  if (flags.check_fraction) cfg.check_fraction = *flags.check_fraction;
  if (flags.pool_count) cfg.pool_count = *flags.pool_count;
  if (flags.attack) {
    const auto kind = attack_kind_from(*flags.attack);
    if (!kind) throw ConfigError("unknown attack kind '" + *flags.attack + "'");
    cfg.attack.kind = *kind;
  }
  for (const auto& p : flags.attack_params) apply_attack_param(cfg.attack, p);
  if (flags.direct_policy) cfg.direct_policy = *flags.direct_policy;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.trials) cfg.trials = *flags.trials;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const ScenarioConfig cfg = build_config(flags);
  const RunReport report = run_scenario(cfg);
  std::cout << "status: " << to_string(report.worst_status()) << "  trials: "
            << report.trials.size() << "  duration_ms: " << report.duration_ms << '\n';
  for (const auto& path : report.artifacts) std::cout << "wrote " << path << '\n';
  return exit_code_for(report.worst_status());
}

int cmd_detect(const CommonFlags& flags) {
  ScenarioConfig cfg = build_config(flags);
  if (!flags.phase) cfg.phase = "share-psi";
  if (!flags.trials) cfg.trials = 10000;
  cfg.validate();
  const ResourceKind phase =
      cfg.phase == "share-phi" ? ResourceKind::Phi : ResourceKind::Psi;

  const Rng root(cfg.seed);
  std::vector<DetectionRow> rows;
  int basis_index = 0;
  for (Basis basis : {Basis::Bz, Basis::Bx}) {
    DetectionRow row;
    row.estimate = estimate_detection(cfg.attack, phase, basis, cfg.students, cfg.trials,
                                      root.derive(static_cast<std::uint64_t>(basis_index++)));
    row.oracle = oracle_detection_rate(cfg.attack, phase, basis, cfg.students);
    rows.push_back(row);
  }

  std::filesystem::create_directories(cfg.out_dir);
  const auto csv_path = (std::filesystem::path(cfg.out_dir) / "estimates.csv").string();
  {
    std::ofstream out(csv_path, std::ios::binary);
    write_detection_csv(out, rows);
  }
  Json summary;
  summary["config"] = cfg.to_json();
  Json rows_json = Json::array();
  for (const auto& row : rows) {
    Json r;
    r["attack"] = to_string(row.estimate.attack);
    r["phase"] = to_string(row.estimate.phase);
    r["basis"] = to_string(row.estimate.basis);
    r["trials"] = row.estimate.trials;
    r["detections"] = row.estimate.detections;
    r["rate"] = row.estimate.rate;
    r["ci_low"] = row.estimate.interval.low;
    r["ci_high"] = row.estimate.interval.high;
    r["oracle"] = row.oracle;
    rows_json.push_back(std::move(r));
  }
  summary["estimates"] = std::move(rows_json);
  const auto json_path = (std::filesystem::path(cfg.out_dir) / "summary.json").string();
  {
    std::ofstream out(json_path, std::ios::binary);
    out << summary.dump(2) << '\n';
  }

  for (const auto& row : rows) {
    std::cout << to_string(row.estimate.attack) << " " << to_string(row.estimate.basis)
              << ": rate " << row.estimate.rate << " (oracle " << row.oracle << ")\n";
  }
  std::cout << "wrote " << csv_path << '\n' << "wrote " << json_path << '\n';
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& c_grid_text,
              const std::string& m_grid_text) {
  ScenarioConfig cfg = build_config(flags);
  if (!flags.attack) cfg.attack.kind = AttackKind::MeasureResend;
  if (!flags.trials) cfg.trials = 1000;
  cfg.phase = "give";
  cfg.protocol = "direct";
  cfg.validate();

  std::vector<double> c_grid = default_control_grid();
  if (!c_grid_text.empty()) {
    c_grid.clear();
    std::stringstream ss(c_grid_text);
    std::string item;
    while (std::getline(ss, item, ',')) c_grid.push_back(std::stod(item));
  }
  std::vector<std::int64_t> m_grid = default_length_grid();
  if (!m_grid_text.empty()) {
    m_grid.clear();
    std::stringstream ss(m_grid_text);
    std::string item;
    while (std::getline(ss, item, ',')) m_grid.push_back(std::stoll(item));
  }

  const Rng root(cfg.seed);
  const LeakageSweep sweep =
      leakage_sweep(cfg.attack, c_grid, m_grid, cfg.students, cfg.trials, root);

  std::filesystem::create_directories(cfg.out_dir);
  const auto csv_path = (std::filesystem::path(cfg.out_dir) / "estimates.csv").string();
  {
    std::ofstream out(csv_path, std::ios::binary);
    write_sweep_csv(out, sweep, cfg.attack.kind);
  }
  Json summary;
  summary["config"] = cfg.to_json();
  summary["leakage_monotone_in_c"] = sweep.leakage_monotone_in_c;
  summary["detection_monotone_in_m"] = sweep.detection_monotone_in_m;
  Json cells = Json::array();
  for (const auto& cell : sweep.cells) {
    Json c;
    c["control_rate"] = cell.control_rate;
    c["message_len"] = cell.message_len;
    c["trials"] = cell.trials;
    c["mean_leaked"] = cell.mean_leaked;
    c["detection_rate"] = cell.detection_rate;
    c["model_mean_leaked"] = cell.model_mean_leaked;
    c["model_detection"] = cell.model_detection;
    cells.push_back(std::move(c));
  }
  summary["cells"] = std::move(cells);
  const auto json_path = (std::filesystem::path(cfg.out_dir) / "summary.json").string();
  {
    std::ofstream out(json_path, std::ios::binary);
    out << summary.dump(2) << '\n';
  }
  std::cout << "cells: " << sweep.cells.size()
            << "  leakage monotone in c: " << (sweep.leakage_monotone_in_c ? "yes" : "no")
            << "  detection monotone in M: " << (sweep.detection_monotone_in_m ? "yes" : "no")
            << '\n';
  std::cout << "wrote " << csv_path << '\n' << "wrote " << json_path << '\n';
  return 0;
}

int cmd_replay(const std::string& transcript_path) {
  const ReplayVerdict verdict = replay_file(transcript_path);
  std::cout << (verdict.consistent ? "consistent" : "inconsistent") << " ("
            << verdict.relations_checked << " relations checked)\n";
  for (const auto& issue : verdict.issues) {
    std::cout << "  seq " << issue.seq << ": " << issue.message << '\n';
  }
  return verdict.consistent ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum exam protocol simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run a protocol scenario");
  add_common_flags(run, run_flags);

  CommonFlags detect_flags;
  auto* detect = app.add_subcommand("detect", "per-check detection table (Monte Carlo + oracle)");
  add_common_flags(detect, detect_flags);

  CommonFlags sweep_flags;
  std::string c_grid_text;
  std::string m_grid_text;
  auto* sweep = app.add_subcommand("sweep", "leakage/detection sweep over (c, M)");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--c-grid", c_grid_text, "comma list of control rates");
  sweep->add_option("--m-grid", m_grid_text, "comma list of message lengths");

  std::string transcript_path;
  auto* replay = app.add_subcommand("replay", "audit a transcript for internal consistency");
  replay->add_option("--transcript", transcript_path, "transcript.jsonl path")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_flags);
    if (detect->parsed()) return cmd_detect(detect_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, c_grid_text, m_grid_text);
    if (replay->parsed()) return cmd_replay(transcript_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  } catch (const qexam::TranscriptParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const qexam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const qexam::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
