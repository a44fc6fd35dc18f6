#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palace/error.hpp"

namespace palace::corpus {

enum class Role { user, assistant };

inline std::string_view to_string(Role role) {
  return role == Role::user ? "user" : "assistant";
}

inline Role parse_role(std::string_view s) {
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error(ErrorKind::malformed_input, "role must be user or assistant, got '" +
                                              std::string(s) + "'");
}

/// One half-ply of a conversation log.
struct Message {
  Role role = Role::user;
  std::string text;
  bool is_tool_only = false;
  std::optional<std::string> timestamp;
  std::string conversation_id;
  std::string project_id;
  int ply_index = 0;
};

struct Exchange {
  std::string conversation_id;
  std::string project_id;
  int ply_start = 0;
  int ply_end = 0;
  std::vector<Message> messages;
  int char_len = 0;
  int token_len = 0;
  // Trailing user turn that never received a substantive answer.
  bool incomplete = false;
  // Produced by splitting an over-long exchange; exempt from the length filter.
  bool is_fragment = false;

  int ply_count() const { return ply_end - ply_start + 1; }

  /// Verbatim text: message texts joined by newlines. This is what users see.
  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
      if (i) out += '\n';
      out += messages[i].text;
    }
    return out;
  }

  /// "conversation_id:ply_start-ply_end", the external form of a back-reference.
  std::string ref() const {
    return conversation_id + ":" + std::to_string(ply_start) + "-" + std::to_string(ply_end);
  }
};

struct SegmentConfig {
  int min_chars = 200;
  int max_plies = 20;

  void validate() const {
    if (min_chars < 0) throw Error(ErrorKind::config, "min_chars must be >= 0");
    if (max_plies < 2) throw Error(ErrorKind::config, "max_plies must be >= 2");
  }
};

struct CorpusStats {
  int n_conversations = 0;
  int n_exchanges = 0;
  int n_distilled = 0;
  double avg_verbatim_tokens = 0.0;
  double avg_distilled_tokens = 0.0;
  double ratio_from_totals = 0.0;
  double ratio_per_item = 0.0;
  int n_unpaired = 0;
  std::string tokenizer;
  std::vector<std::string> warnings;
};

}  // namespace palace::corpus
