#pragma once

#include <array>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "palace/error.hpp"
#include "palace/eval/consensus.hpp"
#include "palace/eval/types.hpp"

namespace palace::eval {

/// Cohen's kappa over grades 0..3. When chance agreement is 1 the value is
/// 1.0 for perfect observed agreement and 0.0 otherwise.
inline double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::malformed_input, "cohen_kappa: length mismatch");
  if (a.empty()) throw Error(ErrorKind::malformed_input, "cohen_kappa: empty sequences");
  std::array<double, 4> ma{}, mb{};
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] > 3 || b[i] < 0 || b[i] > 3) {
      throw Error(ErrorKind::malformed_input, "cohen_kappa: grade outside 0..3");
    }
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double n = static_cast<double>(a.size());
  const double po = agree / n;
  double pe = 0.0;
  for (int k = 0; k < 4; ++k) pe += (ma[k] / n) * (mb[k] / n);
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

/// Fleiss' kappa over rows of per-category counts with a constant rater count.
inline double fleiss_kappa(std::span<const std::array<int, 4>> rows) {
  if (rows.empty()) throw Error(ErrorKind::malformed_input, "fleiss_kappa: no items");
  const int n = rows[0][0] + rows[0][1] + rows[0][2] + rows[0][3];
  if (n < 2) throw Error(ErrorKind::malformed_input, "fleiss_kappa: need at least 2 raters per item");
  std::array<double, 4> col{};
  double p_bar = 0.0;
  for (const auto& r : rows) {
    const int s = r[0] + r[1] + r[2] + r[3];
    if (s != n) {
      throw Error(ErrorKind::malformed_input,
                  "fleiss_kappa: inconsistent rater count " + std::to_string(s) + " vs " + std::to_string(n));
    }
    double agree = 0.0;
    for (int k = 0; k < 4; ++k) {
      col[k] += r[k];
      agree += static_cast<double>(r[k]) * (r[k] - 1);
    }
    p_bar += agree / (static_cast<double>(n) * (n - 1));
  }
  const double items = static_cast<double>(rows.size());
  p_bar /= items;
  double pe = 0.0;
  for (const double c : col) {
    const double p = c / (items * n);
    pe += p * p;
  }
  if (pe >= 1.0) return p_bar >= 1.0 ? 1.0 : 0.0;
  return (p_bar - pe) / (1.0 - pe);
}

struct AgreementReport {
  std::vector<std::string> graders;
  // kappa[i][j] over items both graders graded; NaN when they share none.
  std::vector<std::vector<double>> kappa;
  double mean_pairwise = 0.0;
  double fleiss = 0.0;
  int fleiss_items = 0;
};

/// Agreement over distinct (query, result) items. Records for the same item
/// under several configs are the same grading call, so each item counts once.
inline AgreementReport agreement(std::span<const GradeRecord> records) {
  std::map<std::string, int> grader_index;
  for (const auto& r : records) grader_index.emplace(r.grader_id, 0);
  AgreementReport out;
  for (auto& [id, i] : grader_index) {
    i = static_cast<int>(out.graders.size());
    out.graders.push_back(id);
  }
  const std::size_t g = out.graders.size();
  std::map<std::pair<std::string, std::string>, std::vector<int>> items;
  for (const auto& r : records) {
    auto& v = items[{r.query_id + '\x1F' + std::string(snippet_layer_for_id(r.config_id) == SnippetLayer::distilled ? "d" : "v"),
                     r.exchange_ref}];
    if (v.empty()) v.assign(g, -1);
    if (r.grade) v[grader_index[r.grader_id]] = *r.grade;
  }
  out.kappa.assign(g, std::vector<double>(g, std::numeric_limits<double>::quiet_NaN()));
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      std::vector<int> a, b;
      for (const auto& [key, v] : items) {
        if (v[i] >= 0 && v[j] >= 0) {
          a.push_back(v[i]);
          b.push_back(v[j]);
        }
      }
      if (a.empty()) continue;
      out.kappa[i][j] = cohen_kappa(a, b);
      if (i < j) {
        sum += out.kappa[i][j];
        ++pairs;
      }
    }
  }
  out.mean_pairwise = pairs ? sum / pairs : 0.0;
  std::vector<std::array<int, 4>> full;
  for (const auto& [key, v] : items) {
    std::array<int, 4> row{};
    bool complete = true;
    for (const int x : v) {
      if (x < 0) complete = false;
      else ++row[x];
    }
    if (complete) full.push_back(row);
  }
  out.fleiss_items = static_cast<int>(full.size());
  if (!full.empty() && g >= 2) out.fleiss = fleiss_kappa(full);
  return out;
}

}  // namespace palace::eval
