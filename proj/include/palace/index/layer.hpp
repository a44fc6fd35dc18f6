#pragma once

#include <string>
#include <string_view>

#include "palace/error.hpp"

namespace palace::index {

/// The two separately indexed text corpora.
enum class Layer { verbatim, distilled };

inline std::string_view to_string(Layer layer) {
  return layer == Layer::verbatim ? "verbatim" : "distilled";
}

/// Query-time check that an index handle belongs to the layer a signal targets.
inline void require_layer(Layer actual, Layer expected, std::string_view what) {
  if (actual != expected) {
    throw Error(ErrorKind::layer_mismatch,
                std::string(what) + ": index belongs to the " + std::string(to_string(actual)) +
                    " layer, expected " + std::string(to_string(expected)));
  }
}

}  // namespace palace::index
