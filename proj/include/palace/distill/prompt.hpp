#pragma once

#include <string>
#include <string_view>

#include "palace/corpus/types.hpp"
#include "palace/util/text.hpp"

namespace palace::distill {

inline constexpr std::string_view kDistillTemplate =
    R"(Distill this conversation exchange into JSON:

- "exchange_core": 1-2 sentences. What was accomplished or decided?
  Use the specific terms from the exchange. Do not invent details
  not present in the text. If the exchange is mostly empty, say so
  briefly.
- "specific_context": One concrete detail from the text: a number,
  error message, parameter name, or file path. Copy it exactly from
  the text. Do not use the project path.
- "room_assignments": 1-3 rooms. Each room is a topic this exchange
  belongs to. {"room_type": "<file|concept|workflow>",
  "room_key": "<identifier>", "room_label": "<short label>",
  "relevance": <0.0-1.0>}. A room should be specific enough to
  group related exchanges (e.g. "retry_timeout" not "errors").

Do NOT include "files_touched".

Project: {project_id}

Exchange (messages {ply_start}-{ply_end}):
{messages_text}

Respond with ONLY valid JSON.
)";

// Per-turn variant: keywords instead of rooms. Not used by the batch pipeline.
inline constexpr std::string_view kTagTemplate =
    R"(Summarize this conversation turn into JSON:

- "exchange_core": 1-2 sentences. What was accomplished or decided?
  Use the specific terms from the turn.
- "specific_context": One concrete detail copied exactly from the text.
- "tags": 2-4 short keywords for this turn.

Project: {project_id}

Turn (messages {ply_start}-{ply_end}):
{messages_text}

Respond with ONLY valid JSON.
)";

inline constexpr std::size_t kDefaultMessageTruncation = 2000;

/// Replaces each "{name}" placeholder in one left-to-right pass, so
/// interpolated values containing braces are never re-expanded.
inline std::string interpolate(std::string_view tmpl,
                               std::initializer_list<std::pair<std::string_view, std::string_view>> vars) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [name, value] : vars) {
        if (tmpl.compare(i + 1, name.size(), name) == 0 && i + 1 + name.size() < tmpl.size() &&
            tmpl[i + 1 + name.size()] == '}') {
          out += value;
          i += name.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

/// One block per message: "role: text", blank line between messages.
inline std::string format_messages(const corpus::Exchange& ex, std::size_t truncate_chars) {
  std::string out;
  for (std::size_t i = 0; i < ex.messages.size(); ++i) {
    if (i) out += "\n\n";
    out += corpus::to_string(ex.messages[i].role);
    out += ": ";
    out += text::truncate_chars(ex.messages[i].text, truncate_chars);
  }
  return out;
}

inline std::string build_prompt(std::string_view tmpl, const corpus::Exchange& ex,
                                std::string_view project_id, std::size_t truncate_chars) {
  const auto ps = std::to_string(ex.ply_start);
  const auto pe = std::to_string(ex.ply_end);
  const auto body = format_messages(ex, truncate_chars);
  return interpolate(tmpl, {{"project_id", project_id},
                            {"ply_start", ps},
                            {"ply_end", pe},
                            {"messages_text", body}});
}

inline std::string build_distill_prompt(const corpus::Exchange& ex, std::string_view project_id,
                                        std::size_t truncate_chars = kDefaultMessageTruncation) {
  return build_prompt(kDistillTemplate, ex, project_id, truncate_chars);
}

inline std::string build_tag_prompt(const corpus::Exchange& ex, std::string_view project_id,
                                    std::size_t truncate_chars = kDefaultMessageTruncation) {
  return build_prompt(kTagTemplate, ex, project_id, truncate_chars);
}

}  // namespace palace::distill
