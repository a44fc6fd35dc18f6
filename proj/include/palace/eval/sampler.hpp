#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "palace/corpus/types.hpp"
#include "palace/error.hpp"
#include "palace/util/text.hpp"

namespace palace::eval {

struct SamplerConfig {
  std::size_t pool_size = 200;
  double oversample = 3.0;
  std::size_t min_chars = 20;
  std::size_t max_chars = 300;
  std::uint64_t seed = 7;
};

struct Candidate {
  std::string group;
  corpus::Role role = corpus::Role::user;
  std::string conversation_id;
  int ply_index = 0;
  std::string text;
};

struct SamplePool {
  std::vector<Candidate> candidates;
  std::map<std::string, std::size_t> allocation;
  std::vector<std::string> warnings;
};

/// Removes fenced code blocks and paired markup tags with their content,
/// then collapses whitespace.
inline std::string strip_for_sampling(std::string_view s) {
  static const std::regex fenced("```[\\s\\S]*?```");
  static const std::regex tagged("<([A-Za-z][\\w-]*)[^>]*>[\\s\\S]*?</\\1>");
  static const std::regex lone_tag("</?[A-Za-z][\\w-]*[^>]*>");
  std::string out = std::regex_replace(std::string(s), fenced, " ");
  out = std::regex_replace(out, tagged, " ");
  out = std::regex_replace(out, lone_tag, " ");
  std::string collapsed;
  bool space = false;
  for (const char c : out) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = !collapsed.empty();
    } else {
      if (space) collapsed += ' ';
      space = false;
      collapsed += c;
    }
  }
  return collapsed;
}

/// Largest-remainder split of `total` proportional to `weights`; remainder
/// ties go to the earlier key.
inline std::map<std::string, std::size_t> proportional_allocation(const std::map<std::string, double>& weights,
                                                                  std::size_t total) {
  std::map<std::string, std::size_t> out;
  double sum = 0.0;
  for (const auto& [k, w] : weights) sum += w;
  if (sum <= 0.0) return out;
  std::vector<std::pair<double, std::string>> rem;
  std::size_t used = 0;
  for (const auto& [k, w] : weights) {
    const double exact = static_cast<double>(total) * w / sum;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    out[k] = base;
    used += base;
    rem.push_back({exact - static_cast<double>(base), k});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total && i < rem.size(); ++i, ++used) ++out[rem[i].second];
  return out;
}

/// Candidate pool of query-seed messages: proportional to each group's share
/// of the corpus, half user and half assistant, cleaned and length-filtered,
/// `oversample` times the target pool size. Deterministic per seed.
inline SamplePool stratified_query_sample(std::span<const corpus::Message> messages, const SamplerConfig& cfg,
                                          const std::function<std::string(const corpus::Message&)>& group_of = {}) {
  auto group = [&](const corpus::Message& m) { return group_of ? group_of(m) : m.project_id; };
  std::map<std::string, double> share;
  std::map<std::string, std::array<std::vector<Candidate>, 2>> eligible;
  for (const auto& m : messages) {
    const auto g = group(m);
    share[g] += 1.0;
    if (m.is_tool_only) continue;
    auto cleaned = strip_for_sampling(m.text);
    const auto len = text::code_point_count(cleaned);
    if (len < cfg.min_chars || len > cfg.max_chars) continue;
    eligible[g][m.role == corpus::Role::user ? 0 : 1].push_back(
        {g, m.role, m.conversation_id, m.ply_index, std::move(cleaned)});
  }
  SamplePool pool;
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.pool_size) * cfg.oversample));
  std::map<std::string, double> live;
  for (const auto& [g, w] : share) {
    const auto it = eligible.find(g);
    if (it == eligible.end() || (it->second[0].empty() && it->second[1].empty())) {
      pool.warnings.push_back("group '" + g + "' has no eligible messages; its share is redistributed");
    } else {
      live[g] = w;
    }
  }
  if (live.empty()) {
    pool.warnings.push_back("no message passes the filters; the pool is empty");
    return pool;
  }
  pool.allocation = proportional_allocation(live, total);
  std::mt19937_64 rng(cfg.seed);
  for (const auto& [g, want] : pool.allocation) {
    auto& halves = eligible[g];
    for (auto& h : halves) std::shuffle(h.begin(), h.end(), rng);
    std::size_t take_user = (want + 1) / 2, take_asst = want / 2;
    // A short half is topped up from the other one.
    if (halves[0].size() < take_user) {
      take_asst += take_user - halves[0].size();
      take_user = halves[0].size();
    }
    if (halves[1].size() < take_asst) {
      take_user = std::min(halves[0].size(), take_user + (take_asst - halves[1].size()));
      take_asst = halves[1].size();
    }
    if (take_user + take_asst < want) {
      pool.warnings.push_back("group '" + g + "' has only " + std::to_string(take_user + take_asst) +
                              " eligible messages for an allocation of " + std::to_string(want));
    }
    for (std::size_t i = 0; i < take_user; ++i) pool.candidates.push_back(halves[0][i]);
    for (std::size_t i = 0; i < take_asst; ++i) pool.candidates.push_back(halves[1][i]);
  }
  return pool;
}

}  // namespace palace::eval
