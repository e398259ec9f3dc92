#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace qexam {

// Insertion-ordered JSON keeps transcript bytes stable across identical runs.
using Json = nlohmann::ordered_json;

enum class EventKind {
  QubitSent,
  QubitReceiptConfirmed,
  AuthNotice,
  BasisAnnounce,
  ModeAnnounce,
  PublicBit,
  PublicSign,
  Decode,
  Abort,
  Restart,
  Announcement,
};

const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from(const std::string& name);

// One classical broadcast, authentication message, measurement record or
// mode announcement. The transcript is the audit surface: it records private
// outcomes too. Eavesdroppers only get to read the public kinds.
struct TranscriptEvent {
  std::uint64_t seq = 0;
  std::int64_t m = -1;  // round / resource index, -1 for phase-level events
  std::string actor;
  EventKind kind = EventKind::Announcement;
  Json payload;

  Json to_json() const;
  static TranscriptEvent from_json(const Json& j);
};

class TranscriptParseError : public std::runtime_error {
 public:
  TranscriptParseError(std::size_t line, const std::string& what)
      : std::runtime_error("transcript line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Append-only event log with strictly increasing sequence numbers. Can be
// disabled for bulk Monte Carlo runs; sequence numbers still advance so the
// round structure stays identical either way.
class Transcript {
 public:
  explicit Transcript(bool enabled = true) : enabled_(enabled) {}

  std::uint64_t post(std::int64_t m, std::string actor, EventKind kind, Json payload);

  bool enabled() const { return enabled_; }
  const std::vector<TranscriptEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  std::string to_jsonl() const;
  void write_jsonl(std::ostream& os) const;
  static std::vector<TranscriptEvent> parse_jsonl(std::istream& is);

 private:
  bool enabled_;
  std::uint64_t next_seq_ = 0;
  std::vector<TranscriptEvent> events_;
};

}  // namespace qexam
