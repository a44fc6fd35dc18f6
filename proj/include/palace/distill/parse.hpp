#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "palace/distill/types.hpp"
#include "palace/error.hpp"
#include "palace/util/json_extract.hpp"

namespace palace::distill {

struct ParsedDistill {
  std::string exchange_core;
  std::string specific_context;
  std::vector<RoomAssignment> room_assignments;  // room_id not yet assigned
};

inline constexpr std::size_t kMaxRooms = 3;

/// Keeps the `limit` highest-relevance rooms (stable on ties), preserving
/// their input order.
inline std::vector<RoomAssignment> keep_top_rooms(std::vector<RoomAssignment> rooms,
                                                  std::size_t limit = kMaxRooms) {
  if (rooms.size() <= limit) return rooms;
  std::vector<std::size_t> order(rooms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rooms[a].relevance > rooms[b].relevance;
  });
  order.resize(limit);
  std::sort(order.begin(), order.end());
  std::vector<RoomAssignment> kept;
  for (const auto i : order) kept.push_back(std::move(rooms[i]));
  return kept;
}

/// Rooms repeating an earlier (type, key) are merged into the first, which
/// keeps the larger relevance.
inline std::vector<RoomAssignment> dedupe_rooms(std::vector<RoomAssignment> rooms) {
  std::vector<RoomAssignment> out;
  for (auto& r : rooms) {
    auto it = std::find_if(out.begin(), out.end(), [&](const RoomAssignment& o) {
      return o.room_type == r.room_type && o.room_key == r.room_key;
    });
    if (it == out.end()) out.push_back(std::move(r));
    else it->relevance = std::max(it->relevance, r.relevance);
  }
  return out;
}

inline ParsedDistill parse_distill_response(std::string_view raw) {
  const std::string raw_copy(raw);
  auto obj = json_extract::first_object(raw);
  if (!obj) throw ParseError("no JSON object in distiller output", raw_copy);

  auto require_string = [&](const char* field) {
    const auto it = obj->find(field);
    if (it == obj->end() || !it->is_string()) {
      throw ParseError(std::string("missing or non-string field '") + field + "'", raw_copy);
    }
    return it->get<std::string>();
  };

  ParsedDistill out;
  out.exchange_core = require_string("exchange_core");
  out.specific_context = require_string("specific_context");

  const auto rooms = obj->find("room_assignments");
  if (rooms == obj->end() || !rooms->is_array()) {
    throw ParseError("missing room_assignments array", raw_copy);
  }
  for (const auto& r : *rooms) {
    if (!r.is_object()) throw ParseError("room entry is not an object", raw_copy);
    RoomAssignment room;
    const auto type = r.find("room_type");
    if (type == r.end() || !type->is_string() ||
        !parse_room_type(type->get<std::string>(), room.room_type)) {
      throw ParseError("room_type must be file, concept or workflow", raw_copy);
    }
    const auto key = r.find("room_key");
    if (key == r.end() || !key->is_string() || key->get<std::string>().empty()) {
      throw ParseError("room_key missing", raw_copy);
    }
    room.room_key = key->get<std::string>();
    const auto label = r.find("room_label");
    room.room_label = label != r.end() && label->is_string() ? label->get<std::string>() : room.room_key;
    const auto rel = r.find("relevance");
    if (rel != r.end() && !rel->is_null()) {
      if (!rel->is_number()) throw ParseError("relevance must be a number", raw_copy);
      room.relevance = std::clamp(rel->get<double>(), 0.0, 1.0);
    }
    out.room_assignments.push_back(std::move(room));
  }
  out.room_assignments = keep_top_rooms(dedupe_rooms(std::move(out.room_assignments)));
  if (out.room_assignments.empty()) throw ParseError("zero rooms", raw_copy);
  return out;
}

}  // namespace palace::distill
