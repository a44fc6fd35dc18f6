#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "palace/error.hpp"
#include "palace/index/analyzer.hpp"
#include "palace/util/hash.hpp"
#include "palace/util/subprocess.hpp"

namespace palace::index {

struct EmbeddingVector {
  std::vector<float> values;
  float norm = 0.0f;

  std::size_t dimension() const { return values.size(); }
};

/// Scales `v` to unit L2 norm in place and returns the post-normalization norm.
inline float normalize(std::vector<float>& v) {
  double sq = 0.0;
  for (const float x : v) sq += static_cast<double>(x) * x;
  if (sq <= 0.0) return 0.0f;
  const double inv = 1.0 / std::sqrt(sq);
  double after = 0.0;
  for (float& x : v) {
    x = static_cast<float>(x * inv);
    after += static_cast<double>(x) * x;
  }
  return static_cast<float>(std::sqrt(after));
}

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;
  /// Raw (not necessarily normalized) vector of length dimension().
  virtual std::vector<float> raw_embed(std::string_view text) const = 0;
};

/// Deterministic fallback: signed feature hashing of lowercase word tokens,
/// each token weighted 1 + ln(tf). The empty token set maps to the constant
/// vector with every component equal to 1/sqrt(d).
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 384) : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorKind::config, "embedding dimension must be > 0");
  }

  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "hashing-" + std::to_string(dimension_); }

  std::vector<float> raw_embed(std::string_view text) const override {
    std::vector<float> v(dimension_, 0.0f);
    std::unordered_map<std::string, int> tf;
    for (auto& t : split_terms(text)) ++tf[std::move(t)];
    if (tf.empty()) {
      std::fill(v.begin(), v.end(), 1.0f);
      return v;
    }
    for (const auto& [term, count] : tf) {
      const auto h = hash::mix64(hash::fnv1a64(term));
      const auto bucket = static_cast<std::size_t>(h % dimension_);
      const float sign = (h >> 63) != 0 ? -1.0f : 1.0f;
      v[bucket] += sign * static_cast<float>(1.0 + std::log(static_cast<double>(count)));
    }
    // A token multiset whose signed contributions cancel exactly falls back to
    // the empty-input constant.
    if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) {
      std::fill(v.begin(), v.end(), 1.0f);
    }
    return v;
  }

 private:
  std::size_t dimension_;
};

/// External embedder: text on stdin, JSON float array on stdout.
class CommandEmbedder final : public EmbeddingProvider {
 public:
  CommandEmbedder(std::string command, std::size_t dimension,
                  std::chrono::milliseconds timeout = std::chrono::seconds(60))
      : command_(std::move(command)), dimension_(dimension), timeout_(timeout) {}

  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "command:" + command_; }

  std::vector<float> raw_embed(std::string_view text) const override {
    const auto result = run_command(command_, text, timeout_);
    if (result.timed_out || result.exit_code != 0) {
      throw Error(ErrorKind::provider, "embedding command failed: " + command_);
    }
    const auto parsed = nlohmann::json::parse(result.out, nullptr, false);
    if (!parsed.is_array() || parsed.size() != dimension_) {
      throw Error(ErrorKind::provider, "embedding command returned a non-vector or wrong dimension");
    }
    return parsed.get<std::vector<float>>();
  }

 private:
  std::string command_;
  std::size_t dimension_;
  std::chrono::milliseconds timeout_;
};

/// Unit-normalized embedding. Failures name the text id so a batch run can
/// report which item broke; substitution of another provider is the caller's
/// explicit decision.
inline EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider,
                             std::string_view text_id = {}) {
  EmbeddingVector out;
  try {
    out.values = provider.raw_embed(text);
  } catch (const Error& e) {
    throw Error(ErrorKind::provider,
                "embedding failed for '" + std::string(text_id) + "': " + e.what());
  }
  if (out.values.size() != provider.dimension()) {
    throw Error(ErrorKind::dimension_mismatch,
                "provider returned dimension " + std::to_string(out.values.size()));
  }
  out.norm = normalize(out.values);
  if (out.norm == 0.0f) {
    throw Error(ErrorKind::provider, "zero embedding for '" + std::string(text_id) + "'");
  }
  return out;
}

}  // namespace palace::index
