#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "palace/error.hpp"
#include "palace/index/layers.hpp"

namespace palace::search {

enum class Family { pure, cross_layer, hybrid };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::pure: return "pure";
    case Family::cross_layer: return "cross_layer";
    case Family::hybrid: return "hybrid";
  }
  return "pure";
}

enum class Mechanism { hnsw, exact, bm25_okapi, bm25_fts };

inline std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::hnsw: return "hnsw";
    case Mechanism::exact: return "exact";
    case Mechanism::bm25_okapi: return "bm25_okapi";
    case Mechanism::bm25_fts: return "bm25_fts";
  }
  return "hnsw";
}

inline constexpr Mechanism kMechanisms[] = {Mechanism::hnsw, Mechanism::exact, Mechanism::bm25_okapi,
                                            Mechanism::bm25_fts};

enum class FusionKind { passthrough, rrf, weighted, additive, combmnz, max };

/// One retrieval signal: a mechanism over a document view (which fixes the layer).
struct SignalKey {
  index::DocView view = index::DocView::raw;
  Mechanism mechanism = Mechanism::bm25_okapi;

  friend bool operator==(const SignalKey&, const SignalKey&) = default;
  friend auto operator<=>(const SignalKey&, const SignalKey&) = default;
};

inline std::string to_string(const SignalKey& s) {
  return std::string(to_string(index::layer_of(s.view))) + ":" + std::string(to_string(s.view)) + ":" +
         std::string(to_string(s.mechanism));
}

struct FusionSpec {
  std::string name;
  FusionKind kind = FusionKind::passthrough;
  std::vector<double> weights;  // weighted only, one per signal
};

struct SearchConfig {
  Family family = Family::pure;
  std::string mode;
  std::string mechanism;  // "hnsw", or compound "bm25_okapi+hnsw"
  FusionSpec fusion;
  std::vector<SignalKey> signals;  // first = dominant signal for weighted fusions

  std::string id() const { return mode + "/" + mechanism + "/" + fusion.name; }
};

enum class ConfigSpace { pure, cross, hybrid, evaluated, all };

inline ConfigSpace parse_space(std::string_view s) {
  if (s == "pure") return ConfigSpace::pure;
  if (s == "cross") return ConfigSpace::cross;
  if (s == "hybrid") return ConfigSpace::hybrid;
  if (s == "evaluated") return ConfigSpace::evaluated;
  if (s == "all") return ConfigSpace::all;
  throw Error(ErrorKind::config, "unknown config space '" + std::string(s) + "'");
}

namespace detail {

using index::DocView;

inline FusionSpec two_signal_fusion(std::string_view name) {
  if (name == "rrf") return {"rrf", FusionKind::rrf, {}};
  if (name == "combmnz") return {"combmnz", FusionKind::combmnz, {}};
  if (name == "max") return {"max", FusionKind::max, {}};
  const double w = std::stoi(std::string(name.substr(1))) / 100.0;
  return {std::string(name), FusionKind::weighted, {w, 1.0 - w}};
}

inline constexpr std::string_view kTwoSignalFusions[] = {"rrf", "combmnz", "max", "w50", "w65", "w80", "w95"};

/// Three-signal grid: the seven two-signal fusions (wNN puts NN% on the first
/// signal and splits the rest evenly) plus equal thirds and a vector-heavy split.
inline std::vector<FusionSpec> three_signal_fusions() {
  std::vector<FusionSpec> out;
  for (const auto name : kTwoSignalFusions) {
    auto f = two_signal_fusion(name);
    if (f.kind == FusionKind::weighted) {
      const double w = f.weights[0];
      f.weights = {w, (1.0 - w) / 2.0, (1.0 - w) / 2.0};
    }
    out.push_back(std::move(f));
  }
  out.push_back({"weq", FusionKind::weighted, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}});
  out.push_back({"wvec", FusionKind::weighted, {0.25, 0.25, 0.5}});
  return out;
}

/// Multi-field weights: 0.6 on the core view, the rest split evenly.
inline std::vector<double> multi_field_weights(std::size_t n_views) {
  std::vector<double> w(n_views, 0.4 / static_cast<double>(n_views - 1));
  w[0] = 0.6;
  return w;
}

inline std::vector<SearchConfig> pure_configs() {
  std::vector<SearchConfig> out;
  const std::pair<const char*, DocView> single[] = {{"full_text", DocView::raw}, {"distill_core", DocView::core}};
  for (const auto& [mode, view] : single) {
    for (const auto m : kMechanisms) {
      out.push_back({Family::pure, mode, std::string(to_string(m)), {"passthrough", FusionKind::passthrough, {}},
                     {{view, m}}});
    }
  }
  const std::pair<const char*, std::vector<DocView>> multi[] = {
      {"distill_core_files", {DocView::core, DocView::core_files}},
      {"distill_core_rooms", {DocView::core, DocView::core_rooms}},
      {"distill_all", {DocView::core, DocView::core_files, DocView::core_rooms}},
  };
  for (const auto& [mode, views] : multi) {
    for (const auto m : kMechanisms) {
      std::vector<SignalKey> signals;
      for (const auto v : views) signals.push_back({v, m});
      const FusionSpec fusions[] = {{"rrf", FusionKind::rrf, {}},
                                    {"weighted", FusionKind::weighted, multi_field_weights(views.size())},
                                    {"additive", FusionKind::additive, {}}};
      for (const auto& f : fusions) out.push_back({Family::pure, mode, std::string(to_string(m)), f, signals});
    }
  }
  return out;
}

inline constexpr Mechanism kCompoundBm25[] = {Mechanism::bm25_okapi, Mechanism::bm25_fts};

inline std::string compound_name(Mechanism bm25) { return std::string(to_string(bm25)) + "+hnsw"; }

struct TwoSignalMode {
  const char* mode;
  bool bm25_first;
  DocView bm25_view;
  DocView hnsw_view;
};

inline std::vector<SearchConfig> two_signal_configs(Family family, std::span<const TwoSignalMode> modes) {
  std::vector<SearchConfig> out;
  for (const auto& md : modes) {
    for (const auto bm25 : kCompoundBm25) {
      const SignalKey lexical{md.bm25_view, bm25};
      const SignalKey vector{md.hnsw_view, Mechanism::hnsw};
      const std::vector<SignalKey> signals =
          md.bm25_first ? std::vector<SignalKey>{lexical, vector} : std::vector<SignalKey>{vector, lexical};
      for (const auto name : kTwoSignalFusions) {
        out.push_back({family, md.mode, compound_name(bm25), two_signal_fusion(name), signals});
      }
    }
  }
  return out;
}

// Distilled-side BM25 in the cross-layer modes indexes the full object
// (core, files, rooms); distilled vectors are the core embedding.
inline std::vector<SearchConfig> cross_configs() {
  static constexpr TwoSignalMode modes[] = {
      {"cross_bm25v_hnswd", true, DocView::raw, DocView::core},
      {"cross_bm25v_hnswd_rev", false, DocView::raw, DocView::core},
      {"cross_hnswv_bm25d", false, DocView::all, DocView::raw},
      {"cross_hnswv_bm25d_rev", true, DocView::all, DocView::raw},
  };
  auto out = two_signal_configs(Family::cross_layer, modes);
  for (const auto bm25 : kCompoundBm25) {
    const std::vector<SignalKey> signals = {{DocView::raw, bm25}, {DocView::all, bm25}, {DocView::core, Mechanism::hnsw}};
    for (auto& f : three_signal_fusions()) {
      out.push_back({Family::cross_layer, "cross_3signal", compound_name(bm25), f, signals});
    }
  }
  return out;
}

inline std::vector<SearchConfig> hybrid_configs() {
  static constexpr TwoSignalMode modes[] = {
      {"hybrid_raw", false, DocView::raw, DocView::raw},
      {"hybrid_raw_rev", true, DocView::raw, DocView::raw},
      {"hybrid_core", false, DocView::core, DocView::core},
      {"hybrid_core_rev", true, DocView::core, DocView::core},
  };
  return two_signal_configs(Family::hybrid, modes);
}

}  // namespace detail

inline std::vector<SearchConfig> enumerate_configs(ConfigSpace space) {
  std::vector<SearchConfig> out;
  auto append = [&](std::vector<SearchConfig> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (space == ConfigSpace::pure || space == ConfigSpace::evaluated || space == ConfigSpace::all) {
    append(detail::pure_configs());
  }
  if (space == ConfigSpace::cross || space == ConfigSpace::evaluated || space == ConfigSpace::all) {
    append(detail::cross_configs());
  }
  if (space == ConfigSpace::hybrid || space == ConfigSpace::all) append(detail::hybrid_configs());
  return out;
}

inline SearchConfig find_config(std::string_view id) {
  for (auto& c : enumerate_configs(ConfigSpace::all)) {
    if (c.id() == id) return c;
  }
  throw Error(ErrorKind::not_found, "unknown config '" + std::string(id) + "'");
}

}  // namespace palace::search
