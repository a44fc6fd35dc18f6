#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "palace/corpus/types.hpp"
#include "palace/util/jsonl.hpp"

namespace palace::corpus {

using nlohmann::json;

inline Message message_from_json(const json& j) {
  try {
    Message m;
    m.conversation_id = j.at("conversation_id").get<std::string>();
    m.project_id = j.value("project_id", std::string{});
    m.ply_index = j.at("ply_index").get<int>();
    m.role = parse_role(j.at("role").get<std::string>());
    m.text = j.at("text").get<std::string>();
    m.is_tool_only = j.value("is_tool_only", false);
    if (j.contains("timestamp") && j["timestamp"].is_string()) {
      m.timestamp = j["timestamp"].get<std::string>();
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("bad message record: ") + e.what());
  }
}

inline json to_json(const Message& m) {
  json j = {{"conversation_id", m.conversation_id},
            {"project_id", m.project_id},
            {"ply_index", m.ply_index},
            {"role", to_string(m.role)},
            {"text", m.text},
            {"is_tool_only", m.is_tool_only}};
  if (m.timestamp) j["timestamp"] = *m.timestamp;
  return j;
}

/// External exchange record; messages are resolved from the corpus store.
inline json to_json(const Exchange& ex) {
  return {{"conversation_id", ex.conversation_id}, {"project_id", ex.project_id},
          {"ply_start", ex.ply_start},             {"ply_end", ex.ply_end},
          {"char_len", ex.char_len},               {"token_len", ex.token_len},
          {"incomplete", ex.incomplete}};
}

/// Conversations keyed by id, messages in file order (ordering is validated
/// by segmentation, not repaired here).
using ConversationMap = std::map<std::string, std::vector<Message>>;

inline ConversationMap read_conversations(const std::filesystem::path& path) {
  ConversationMap conversations;
  for (const auto& row : jsonl::read(path)) {
    auto m = message_from_json(row);
    conversations[m.conversation_id].push_back(std::move(m));
  }
  return conversations;
}

/// Rebuilds exchange records against the stored conversations so each
/// exchange carries its verbatim messages again.
inline std::vector<Exchange> read_exchanges(const std::filesystem::path& path,
                                            const ConversationMap& conversations) {
  std::vector<Exchange> out;
  for (const auto& row : jsonl::read(path)) {
    Exchange ex;
    ex.conversation_id = row.at("conversation_id").get<std::string>();
    ex.project_id = row.value("project_id", std::string{});
    ex.ply_start = row.at("ply_start").get<int>();
    ex.ply_end = row.at("ply_end").get<int>();
    ex.char_len = row.value("char_len", 0);
    ex.token_len = row.value("token_len", 0);
    ex.incomplete = row.value("incomplete", false);
    const auto it = conversations.find(ex.conversation_id);
    if (it == conversations.end()) {
      throw Error(ErrorKind::not_found, "exchange refers to unknown conversation " +
                                            ex.conversation_id);
    }
    for (const auto& m : it->second) {
      if (m.ply_index >= ex.ply_start && m.ply_index <= ex.ply_end) ex.messages.push_back(m);
    }
    if (ex.messages.empty()) {
      throw Error(ErrorKind::not_found, "exchange " + ex.ref() + " resolves to no messages");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace palace::corpus
