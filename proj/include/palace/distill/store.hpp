#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "palace/distill/distill.hpp"
#include "palace/distill/types.hpp"
#include "palace/util/jsonl.hpp"

namespace palace::distill {

inline const json& object_store_header() {
  static const json header = {{"format", "palace-object"}, {"version", 1}};
  return header;
}

inline void write_objects(const std::filesystem::path& path, std::span<const DistilledObject> objects) {
  std::vector<json> rows;
  rows.reserve(objects.size() + 1);
  rows.push_back(object_store_header());
  for (const auto& o : objects) rows.push_back(to_json(o));
  jsonl::write(path, rows);
}

inline std::vector<DistilledObject> read_objects(const std::filesystem::path& path) {
  const auto rows = jsonl::read(path);
  if (rows.empty() || rows.front().value("format", "") != "palace-object") {
    throw Error(ErrorKind::malformed_input, path.string() + ": missing palace-object header");
  }
  if (rows.front().value("version", 0) != 1) {
    throw Error(ErrorKind::malformed_input, path.string() + ": unsupported object store version");
  }
  std::vector<DistilledObject> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(object_from_json(rows[i]));
  return out;
}

inline void write_skip_list(const std::filesystem::path& path, std::span<const SkipEntry> skipped) {
  std::vector<json> rows;
  for (const auto& s : skipped) {
    rows.push_back({{"conversation_id", s.conversation_id},
                    {"ply_start", s.ply_start},
                    {"ply_end", s.ply_end},
                    {"reason", s.reason}});
  }
  jsonl::write(path, rows);
}

inline std::vector<SkipEntry> read_skip_list(const std::filesystem::path& path) {
  std::vector<SkipEntry> out;
  for (const auto& j : jsonl::read(path)) {
    out.push_back({j.at("conversation_id").get<std::string>(), j.at("ply_start").get<int>(),
                   j.at("ply_end").get<int>(), j.value("reason", "")});
  }
  return out;
}

}  // namespace palace::distill
