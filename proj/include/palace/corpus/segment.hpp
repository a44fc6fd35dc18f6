#pragma once

#include <span>
#include <string>
#include <vector>

#include "palace/corpus/types.hpp"
#include "palace/util/text.hpp"

namespace palace::corpus {

/// Assistant prose counts as substantive when something other than
/// whitespace remains after tool blocks are removed.
inline bool is_substantive_assistant(const Message& m) {
  return m.role == Role::assistant && !m.is_tool_only && !text::trim(m.text).empty();
}

inline int char_length(std::span<const Message> messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += text::code_point_count(m.text);
  return static_cast<int>(n);
}

namespace detail {

inline Exchange open_exchange(const Message& first) {
  Exchange ex;
  ex.conversation_id = first.conversation_id;
  ex.project_id = first.project_id;
  ex.ply_start = first.ply_index;
  ex.ply_end = first.ply_index;
  return ex;
}

inline void close_exchange(Exchange& ex, bool answered) {
  ex.ply_end = ex.messages.back().ply_index;
  ex.char_len = char_length(ex.messages);
  ex.incomplete = !answered;
}

}  // namespace detail

/// Ply-model segmentation of one conversation. A non-tool user message opens a
/// new exchange once the current one has received a substantive assistant
/// reply; tool round-trips keep the current exchange open.
inline std::vector<Exchange> segment_conversation(std::span<const Message> messages,
                                                  const SegmentConfig& cfg = {}) {
  cfg.validate();
  std::vector<Exchange> out;
  if (messages.empty()) return out;

  const auto& conversation = messages.front().conversation_id;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i].conversation_id != conversation) {
      throw Error(ErrorKind::malformed_input,
                  "segment_conversation got messages from more than one conversation");
    }
    if (i > 0 && messages[i].ply_index <= messages[i - 1].ply_index) {
      throw Error(ErrorKind::malformed_input,
                  "ply_index not strictly increasing in conversation " + conversation);
    }
  }

  Exchange current = detail::open_exchange(messages.front());
  bool answered = false;
  for (const auto& m : messages) {
    const bool opens = m.role == Role::user && !m.is_tool_only && answered;
    if (opens) {
      detail::close_exchange(current, answered);
      out.push_back(std::move(current));
      current = detail::open_exchange(m);
      answered = false;
    }
    current.messages.push_back(m);
    if (is_substantive_assistant(m)) answered = true;
  }
  detail::close_exchange(current, answered);
  out.push_back(std::move(current));
  return out;
}

/// Splits an exchange into fragments covering fixed ply intervals of
/// `max_plies`. Fragment ply ranges are the interval bounds clipped to the
/// messages that fall inside them.
inline std::vector<Exchange> split_exchange(const Exchange& ex, int max_plies) {
  if (ex.ply_count() <= max_plies) return {ex};
  std::vector<Exchange> fragments;
  for (int lo = ex.ply_start; lo <= ex.ply_end; lo += max_plies) {
    const int hi = lo + max_plies - 1;
    Exchange frag;
    frag.conversation_id = ex.conversation_id;
    frag.project_id = ex.project_id;
    frag.is_fragment = true;
    for (const auto& m : ex.messages) {
      if (m.ply_index >= lo && m.ply_index <= hi) frag.messages.push_back(m);
    }
    if (frag.messages.empty()) continue;
    frag.ply_start = frag.messages.front().ply_index;
    frag.ply_end = frag.messages.back().ply_index;
    frag.char_len = char_length(frag.messages);
    frag.incomplete = ex.incomplete && frag.ply_end == ex.ply_end;
    fragments.push_back(std::move(frag));
  }
  return fragments;
}

/// Drops trivial exchanges (char_len < min_chars), then splits over-long ones.
/// Fragments are never re-filtered, so the operation is idempotent.
inline std::vector<Exchange> filter_and_split(std::span<const Exchange> exchanges,
                                              const SegmentConfig& cfg = {}) {
  cfg.validate();
  std::vector<Exchange> out;
  for (const auto& ex : exchanges) {
    if (!ex.is_fragment && ex.char_len < cfg.min_chars) continue;
    for (auto& frag : split_exchange(ex, cfg.max_plies)) out.push_back(std::move(frag));
  }
  return out;
}

}  // namespace palace::corpus
