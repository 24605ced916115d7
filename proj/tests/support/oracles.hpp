#pragma once

// Brute-force reference computations for the test suites. Kept independent
// of the library code they check: no calls into staykate here.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace staykate::oracle {

/// -sum p ln p accumulated in long double.
inline double entropy(const std::vector<double>& row) {
  long double sum = 0, h = 0;
  for (double p : row) sum += p;
  for (double p : row) {
    const long double q = p / sum;
    if (q > 0) h -= q * std::log(q);
  }
  return static_cast<double>(h);
}

struct Stats {
  double mean;
  double std_dev;
};

/// Two-pass population statistics in long double.
inline Stats two_pass(const std::vector<double>& xs) {
  long double sum = 0;
  for (double x : xs) sum += x;
  const long double mean = sum / xs.size();
  long double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(sq / xs.size()))};
}

/// Scores every candidate with plain double arithmetic in ascending-id
/// order, sorts the whole pool by (score, id), takes the first k.
inline std::vector<std::string> sort_and_take(const std::map<std::string, double>& h, std::size_t k,
                                              double lambda) {
  double sum = 0;
  for (const auto& kv : h) sum += kv.second;
  const double mean = sum / static_cast<double>(h.size());
  double sq = 0;
  for (const auto& kv : h) sq += (kv.second - mean) * (kv.second - mean);
  const double sd = std::sqrt(sq / static_cast<double>(h.size()));
  std::vector<std::pair<double, std::string>> all;
  for (const auto& [id, x] : h) all.emplace_back(std::abs(x - (mean + lambda * sd)), id);
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i];
  for (std::size_t i = 0; i < a.size(); ++i) aa += a[i] * a[i];
  for (std::size_t i = 0; i < b.size(); ++i) bb += b[i] * b[i];
  return ab / (std::sqrt(bb) * std::sqrt(aa));
}

/// Full scan: rank every record by (similarity desc, id asc), keep k, and
/// return them least similar first.
inline std::vector<std::pair<std::string, double>> knn_scan(
    const std::vector<std::pair<std::string, std::vector<double>>>& records,
    const std::vector<double>& query, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& [id, v] : records) all.emplace_back(id, cosine(query, v));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  all.resize(k);
  std::reverse(all.begin(), all.end());
  return all;
}

struct MatchCounts {
  int tp = 0, wrong = 0, over = 0, oversight = 0;
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

inline std::string fold(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/// Exhaustive search over all injective partial assignments of predictions to
/// gold, maximizing (exact pairs, same-surface pairs) lexicographically.
inline MatchCounts optimal_match(const std::vector<std::pair<std::string, std::string>>& pred,
                                 const std::vector<std::pair<std::string, std::string>>& gold) {
  MatchCounts best{-1, -1, 0, 0};
  std::vector<bool> used(gold.size(), false);
  std::function<void(std::size_t, int, int)> rec = [&](std::size_t i, int tp, int wrong) {
    if (i == pred.size()) {
      if (tp > best.tp || (tp == best.tp && wrong > best.wrong)) {
        best.tp = tp;
        best.wrong = wrong;
      }
      return;
    }
    rec(i + 1, tp, wrong);
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (used[g] || fold(gold[g].second) != fold(pred[i].second)) continue;
      used[g] = true;
      if (gold[g].first == pred[i].first) rec(i + 1, tp + 1, wrong);
      else rec(i + 1, tp, wrong + 1);
      used[g] = false;
    }
  };
  rec(0, 0, 0);
  best.over = static_cast<int>(pred.size()) - best.tp - best.wrong;
  best.oversight = static_cast<int>(gold.size()) - best.tp - best.wrong;
  return best;
}

}  // namespace staykate::oracle
