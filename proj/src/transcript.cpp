#include "qexam/transcript.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace qexam {

namespace {

struct KindName {
  EventKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {EventKind::QubitSent, "qubit_sent"},
    {EventKind::QubitReceiptConfirmed, "qubit_receipt_confirmed"},
    {EventKind::AuthNotice, "auth_notice"},
    {EventKind::BasisAnnounce, "basis_announce"},
    {EventKind::ModeAnnounce, "mode_announce"},
    {EventKind::PublicBit, "public_bit"},
    {EventKind::PublicSign, "public_sign"},
    {EventKind::Decode, "decode"},
    {EventKind::Abort, "abort"},
    {EventKind::Restart, "restart"},
    {EventKind::Announcement, "announcement"},
};

}  // namespace

const char* to_string(EventKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  return std::nullopt;
}

Json TranscriptEvent::to_json() const {
  Json j;
  j["seq"] = seq;
  j["m"] = m;
  j["actor"] = actor;
  j["kind"] = to_string(kind);
  j["payload"] = payload;
  return j;
}

TranscriptEvent TranscriptEvent::from_json(const Json& j) {
  TranscriptEvent ev;
  ev.seq = j.at("seq").get<std::uint64_t>();
  ev.m = j.at("m").get<std::int64_t>();
  ev.actor = j.at("actor").get<std::string>();
  const auto kind = event_kind_from(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown event kind: " + j.at("kind").dump());
  ev.kind = *kind;
  ev.payload = j.at("payload");
  return ev;
}

std::uint64_t Transcript::post(std::int64_t m, std::string actor, EventKind kind, Json payload) {
  const std::uint64_t seq = next_seq_++;
  if (enabled_) {
    events_.push_back(TranscriptEvent{seq, m, std::move(actor), kind, std::move(payload)});
  }
  return seq;
}

std::string Transcript::to_jsonl() const {
  std::ostringstream os;
  write_jsonl(os);
  return os.str();
}

void Transcript::write_jsonl(std::ostream& os) const {
  for (const auto& ev : events_) {
    os << ev.to_json().dump() << '\n';
  }
}

std::vector<TranscriptEvent> Transcript::parse_jsonl(std::istream& is) {
  std::vector<TranscriptEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw TranscriptParseError(line_no, "invalid JSON");
    try {
      events.push_back(TranscriptEvent::from_json(j));
    } catch (const std::exception& e) {
      throw TranscriptParseError(line_no, e.what());
    }
  }
  return events;
}

}  // namespace qexam
