#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "palace/error.hpp"
#include "palace/util/hash.hpp"

namespace palace::distill {

using nlohmann::json;

enum class RoomType { file, concept_, workflow };

inline std::string_view to_string(RoomType t) {
  switch (t) {
    case RoomType::file: return "file";
    case RoomType::concept_: return "concept";
    case RoomType::workflow: return "workflow";
  }
  return "concept";
}

inline bool parse_room_type(std::string_view s, RoomType& out) {
  if (s == "file") out = RoomType::file;
  else if (s == "concept") out = RoomType::concept_;
  else if (s == "workflow") out = RoomType::workflow;
  else return false;
  return true;
}

/// FNV-1a 64 over "type\x1Fkey\x1Fproject". Keys are hashed exactly as received.
inline std::uint64_t room_id(RoomType type, std::string_view key, std::string_view project_id) {
  std::string buf;
  buf.reserve(key.size() + project_id.size() + 12);
  buf += to_string(type);
  buf += '\x1F';
  buf += key;
  buf += '\x1F';
  buf += project_id;
  return hash::fnv1a64(buf);
}

inline std::string room_id_hex(std::uint64_t id) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id));
  return buf;
}

struct RoomAssignment {
  RoomType room_type = RoomType::concept_;
  std::string room_key;
  std::string room_label;
  double relevance = 1.0;
  std::uint64_t room_id = 0;

  friend bool operator==(const RoomAssignment&, const RoomAssignment&) = default;
};

struct DistilledObject {
  std::string exchange_core;
  std::string specific_context;
  std::vector<RoomAssignment> room_assignments;
  std::vector<std::string> files_touched;
  std::string conversation_id;
  int ply_start = 0;
  int ply_end = 0;
  std::string project_id;
  std::string distill_text;
  int token_len = 0;

  std::string ref() const {
    return conversation_id + ":" + std::to_string(ply_start) + "-" + std::to_string(ply_end);
  }

  friend bool operator==(const DistilledObject&, const DistilledObject&) = default;
};

inline std::string make_distill_text(std::string_view core, std::string_view context) {
  std::string out(core);
  out += '\n';
  out += context;
  return out;
}

inline json to_json(const RoomAssignment& r) {
  return {{"room_type", to_string(r.room_type)},
          {"room_key", r.room_key},
          {"room_label", r.room_label},
          {"relevance", r.relevance},
          {"room_id", room_id_hex(r.room_id)}};
}

inline json to_json(const DistilledObject& o) {
  json rooms = json::array();
  for (const auto& r : o.room_assignments) rooms.push_back(to_json(r));
  return {{"conversation_id", o.conversation_id},
          {"project_id", o.project_id},
          {"ply_start", o.ply_start},
          {"ply_end", o.ply_end},
          {"exchange_core", o.exchange_core},
          {"specific_context", o.specific_context},
          {"room_assignments", rooms},
          {"files_touched", o.files_touched},
          {"distill_text", o.distill_text},
          {"token_len", o.token_len}};
}

inline RoomAssignment room_from_json(const json& j, std::string_view project_id) {
  RoomAssignment r;
  if (!parse_room_type(j.at("room_type").get<std::string>(), r.room_type)) {
    throw Error(ErrorKind::malformed_input, "bad room_type in stored object");
  }
  r.room_key = j.at("room_key").get<std::string>();
  r.room_label = j.value("room_label", std::string());
  r.relevance = j.value("relevance", 1.0);
  r.room_id = room_id(r.room_type, r.room_key, project_id);
  return r;
}

inline DistilledObject object_from_json(const json& j) {
  DistilledObject o;
  try {
    o.conversation_id = j.at("conversation_id").get<std::string>();
    o.project_id = j.value("project_id", std::string());
    o.ply_start = j.at("ply_start").get<int>();
    o.ply_end = j.at("ply_end").get<int>();
    o.exchange_core = j.at("exchange_core").get<std::string>();
    o.specific_context = j.at("specific_context").get<std::string>();
    for (const auto& r : j.at("room_assignments")) {
      o.room_assignments.push_back(room_from_json(r, o.project_id));
    }
    o.files_touched = j.value("files_touched", std::vector<std::string>{});
    o.distill_text = j.value("distill_text", make_distill_text(o.exchange_core, o.specific_context));
    o.token_len = j.value("token_len", 0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("bad distilled object: ") + e.what());
  }
  return o;
}

}  // namespace palace::distill
