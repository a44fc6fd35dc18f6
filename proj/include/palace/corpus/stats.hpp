#pragma once

#include <set>
#include <span>
#include <string>

#include "palace/corpus/tokenizer.hpp"
#include "palace/corpus/types.hpp"

namespace palace::corpus {

/// Token lengths of the two layers, as consumed by compute_corpus_stats.
struct DistilledLength {
  std::string conversation_id;
  int ply_start = 0;
  int ply_end = 0;
  std::string distill_text;
};

/// Corpus-level compression statistics. ratio_from_totals divides verbatim
/// token mass by distilled token mass; ratio_per_item averages the per-object
/// ratio against the exchange its back-reference resolves to (containment of
/// the ply range within the same conversation).
inline CorpusStats compute_corpus_stats(std::span<const Exchange> exchanges,
                                        std::span<const DistilledLength> distilled,
                                        const TokenizerProvider& tokenizer) {
  if (exchanges.empty() || distilled.empty()) {
    throw Error(ErrorKind::empty_corpus, "compute_corpus_stats needs both layers nonempty");
  }
  CorpusStats stats;
  stats.tokenizer = tokenizer.name();
  stats.n_exchanges = static_cast<int>(exchanges.size());
  stats.n_distilled = static_cast<int>(distilled.size());

  std::set<std::string> conversations;
  std::vector<double> verbatim_tokens(exchanges.size());
  double verbatim_total = 0.0;
  for (std::size_t i = 0; i < exchanges.size(); ++i) {
    conversations.insert(exchanges[i].conversation_id);
    verbatim_tokens[i] = static_cast<double>(tokenizer.count(exchanges[i].text()));
    verbatim_total += verbatim_tokens[i];
  }
  stats.n_conversations = static_cast<int>(conversations.size());

  double distilled_total = 0.0;
  double ratio_sum = 0.0;
  int paired = 0;
  for (const auto& obj : distilled) {
    const auto tokens = static_cast<double>(tokenizer.count(obj.distill_text));
    distilled_total += tokens;
    for (std::size_t i = 0; i < exchanges.size(); ++i) {
      const auto& ex = exchanges[i];
      if (ex.conversation_id == obj.conversation_id && ex.ply_start <= obj.ply_start &&
          obj.ply_end <= ex.ply_end) {
        if (tokens > 0) {
          ratio_sum += verbatim_tokens[i] / tokens;
          ++paired;
        }
        break;
      }
    }
  }
  stats.n_unpaired = stats.n_distilled - paired;
  stats.avg_verbatim_tokens = verbatim_total / static_cast<double>(exchanges.size());
  stats.avg_distilled_tokens = distilled_total / static_cast<double>(distilled.size());
  if (distilled_total > 0) {
    stats.ratio_from_totals =
        (stats.n_exchanges * stats.avg_verbatim_tokens) /
        (stats.n_distilled * stats.avg_distilled_tokens);
  }
  if (paired > 0) stats.ratio_per_item = ratio_sum / paired;
  return stats;
}

}  // namespace palace::corpus
