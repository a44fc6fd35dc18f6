#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "palace/index/layers.hpp"
#include "palace/search/config.hpp"
#include "palace/search/ranked_list.hpp"
#include "palace/util/jsonl.hpp"
#include "palace/util/text.hpp"

namespace palace::search {

/// Shortest decimal form that round-trips a double.
inline std::string format_score(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// TREC-style: query_id \t config_id \t exchange_ref \t rank \t score.
inline std::string format_run(std::span<const RankedList> lists, const index::ExchangeStore& store) {
  std::string out;
  for (const auto& l : lists) {
    for (const auto& e : l.entries) {
      out += l.query_id + '\t' + l.config_id + '\t' + store[e.exchange].ref() + '\t' + std::to_string(e.rank) +
             '\t' + format_score(e.score) + '\n';
    }
  }
  return out;
}

/// Sidecar rows naming the signals behind each entry.
inline std::vector<nlohmann::json> provenance_rows(std::span<const RankedList> lists,
                                                   const index::ExchangeStore& store,
                                                   const std::vector<SearchConfig>& configs) {
  std::map<std::string, const SearchConfig*> by_id;
  for (const auto& c : configs) by_id[c.id()] = &c;
  std::vector<nlohmann::json> rows;
  for (const auto& l : lists) {
    const auto* cfg = by_id.count(l.config_id) ? by_id[l.config_id] : nullptr;
    for (const auto& e : l.entries) {
      nlohmann::json sig = nlohmann::json::array();
      for (std::size_t i = 0; cfg && i < cfg->signals.size(); ++i) {
        if (e.provenance & (1u << i)) sig.push_back(to_string(cfg->signals[i]));
      }
      rows.push_back({{"query_id", l.query_id},
                      {"config_id", l.config_id},
                      {"exchange_ref", store[e.exchange].ref()},
                      {"rank", e.rank},
                      {"signals", sig}});
    }
  }
  return rows;
}

/// Parses a run file back into lists grouped by (query, config) in file order.
inline std::vector<RankedList> parse_run(std::string_view body, const index::ExchangeStore& store) {
  std::vector<RankedList> out;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(body)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string_view::npos; start = tab + 1) {
      f.emplace_back(line.substr(start, tab - start));
    }
    f.emplace_back(line.substr(start));
    if (f.size() != 5) throw Error(ErrorKind::malformed_input, "run line " + std::to_string(line_no) + ": expected 5 fields");
    const auto id = store.find(f[2]);
    if (!id) throw Error(ErrorKind::not_found, "run line " + std::to_string(line_no) + ": unknown exchange " + f[2]);
    if (out.empty() || out.back().query_id != f[0] || out.back().config_id != f[1]) {
      out.push_back({f[0], f[1], {}});
    }
    out.back().entries.push_back({*id, std::stod(f[4]), std::stoi(f[3]), 0});
  }
  return out;
}

}  // namespace palace::search
