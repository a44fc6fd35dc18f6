#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palace/corpus/tokenizer.hpp"
#include "palace/corpus/types.hpp"
#include "palace/distill/fallback.hpp"
#include "palace/distill/files.hpp"
#include "palace/distill/parse.hpp"
#include "palace/distill/prompt.hpp"
#include "palace/distill/types.hpp"
#include "palace/provider.hpp"
#include "palace/util/parallel.hpp"

namespace palace::distill {

struct DistillConfig {
  std::size_t truncate_chars = kDefaultMessageTruncation;
  int max_attempts = 3;
  std::size_t workers = 4;
  bool include_incomplete = false;
};

struct SkipEntry {
  std::string conversation_id;
  int ply_start = 0;
  int ply_end = 0;
  std::string reason;
};

struct DistillOutcome {
  std::optional<DistilledObject> object;
  int attempts = 0;
  std::string failure;
};

/// Attaches everything the model does not produce: back-reference, regex
/// files, room ids, distill_text and token_len.
inline DistilledObject finalize_object(ParsedDistill parsed, const corpus::Exchange& ex,
                                       const corpus::TokenizerProvider& tokenizer) {
  DistilledObject obj;
  obj.exchange_core = std::move(parsed.exchange_core);
  obj.specific_context = std::move(parsed.specific_context);
  obj.room_assignments = std::move(parsed.room_assignments);
  obj.conversation_id = ex.conversation_id;
  obj.project_id = ex.project_id;
  obj.ply_start = ex.ply_start;
  obj.ply_end = ex.ply_end;
  obj.files_touched = extract_files_touched(ex.text());
  for (auto& r : obj.room_assignments) r.room_id = room_id(r.room_type, r.room_key, obj.project_id);
  obj.distill_text = make_distill_text(obj.exchange_core, obj.specific_context);
  obj.token_len = static_cast<int>(tokenizer.count(obj.distill_text));
  return obj;
}

class Distiller {
 public:
  virtual ~Distiller() = default;
  virtual DistillOutcome distill(const corpus::Exchange& ex) const = 0;
  virtual std::string name() const = 0;
};

/// Prompt, call, parse; retried on provider or parse errors.
class LlmDistiller final : public Distiller {
 public:
  LlmDistiller(TextProvider& provider, const corpus::TokenizerProvider& tokenizer,
               DistillConfig cfg = {})
      : provider_(provider), tokenizer_(tokenizer), cfg_(cfg) {}

  DistillOutcome distill(const corpus::Exchange& ex) const override {
    DistillOutcome out;
    const auto prompt = build_distill_prompt(ex, ex.project_id, cfg_.truncate_chars);
    for (int attempt = 1; attempt <= std::max(1, cfg_.max_attempts); ++attempt) {
      out.attempts = attempt;
      try {
        out.object = finalize_object(parse_distill_response(provider_.complete(prompt)), ex, tokenizer_);
        out.failure.clear();
        return out;
      } catch (const Error& e) {
        out.failure = std::string(to_string(e.kind())) + ": " + e.what();
      }
    }
    return out;
  }

  std::string name() const override { return "llm:" + provider_.name(); }

 private:
  TextProvider& provider_;
  const corpus::TokenizerProvider& tokenizer_;
  DistillConfig cfg_;
};

class FallbackDistiller final : public Distiller {
 public:
  FallbackDistiller(std::span<const corpus::Exchange> corpus,
                    const corpus::TokenizerProvider& tokenizer)
      : idf_(corpus), tokenizer_(tokenizer) {}

  DistillOutcome distill(const corpus::Exchange& ex) const override {
    DistillOutcome out;
    out.attempts = 1;
    auto obj = fallback_distill(ex, idf_);
    obj.token_len = static_cast<int>(tokenizer_.count(obj.distill_text));
    out.object = std::move(obj);
    return out;
  }

  std::string name() const override { return "fallback"; }

 private:
  CorpusIdf idf_;
  const corpus::TokenizerProvider& tokenizer_;
};

struct DistillResult {
  std::vector<DistilledObject> objects;
  std::vector<SkipEntry> skipped;
};

/// Distills every complete exchange with bounded parallelism. Output is
/// ordered by (conversation_id, ply_start) whatever the scheduling.
inline DistillResult distill_corpus(std::span<const corpus::Exchange> exchanges,
                                    const Distiller& distiller, const DistillConfig& cfg = {}) {
  std::vector<const corpus::Exchange*> todo;
  for (const auto& ex : exchanges) {
    if (!ex.incomplete || cfg.include_incomplete) todo.push_back(&ex);
  }
  std::sort(todo.begin(), todo.end(), [](const auto* a, const auto* b) {
    return a->conversation_id != b->conversation_id ? a->conversation_id < b->conversation_id
                                                    : a->ply_start < b->ply_start;
  });
  std::vector<DistillOutcome> outcomes(todo.size());
  parallel_for(todo.size(), cfg.workers, [&](std::size_t i) { outcomes[i] = distiller.distill(*todo[i]); });
  DistillResult result;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (outcomes[i].object) {
      result.objects.push_back(std::move(*outcomes[i].object));
    } else {
      result.skipped.push_back({todo[i]->conversation_id, todo[i]->ply_start, todo[i]->ply_end,
                                outcomes[i].failure});
    }
  }
  return result;
}

struct Facets {
  bool files = false;
  bool rooms = false;
};

/// Text indexed for a distilled object: core fields, then optional facets.
inline std::string build_bm25_document(const DistilledObject& obj, Facets facets) {
  std::string doc = obj.distill_text;
  if (facets.files) {
    for (const auto& f : obj.files_touched) {
      doc += ' ';
      doc += f;
    }
  }
  if (facets.rooms) {
    for (const auto& r : obj.room_assignments) {
      doc += ' ';
      doc += r.room_key;
      doc += ' ';
      doc += r.room_label;
    }
  }
  return doc;
}

}  // namespace palace::distill
