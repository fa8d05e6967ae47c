#pragma once

// Reference computations for the tests. Nothing here calls into the library:
// the oracle rebuilds context keys and sums table entries on its own.

#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace oracle {

struct Table {
  std::vector<std::string> symbols;
  std::size_t width = 1;
  std::map<std::string, std::vector<double>> probs;

  nlohmann::json to_json(std::size_t max_tokens = 512) const {
    nlohmann::json j;
    j["name"] = "oracle-table";
    j["vocabulary"] = symbols;
    j["context_width"] = width;
    j["max_tokens"] = max_tokens;
    j["table"] = probs;
    return j;
  }
};

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

// Every key a width-w table can be asked for: up to w symbols left of the
// hole and up to w right of it.
inline std::vector<std::string> all_keys(const std::vector<std::string>& symbols, std::size_t width) {
  std::vector<std::vector<std::string>> sides{{}};
  for (std::size_t n = 1; n <= width; ++n) {
    std::vector<std::vector<std::string>> grown;
    for (const auto& s : sides) {
      if (s.size() != n - 1) continue;
      for (const auto& sym : symbols) {
        auto t = s;
        t.push_back(sym);
        grown.push_back(t);
      }
    }
    sides.insert(sides.end(), grown.begin(), grown.end());
  }
  std::vector<std::string> keys;
  for (const auto& left : sides) {
    for (const auto& right : sides) {
      std::vector<std::string> parts = left;
      parts.push_back("_");
      parts.insert(parts.end(), right.begin(), right.end());
      keys.push_back(join(parts));
    }
  }
  return keys;
}

inline Table random_table(std::mt19937_64& rng, std::vector<std::string> symbols, std::size_t width) {
  Table t;
  t.symbols = std::move(symbols);
  t.width = width;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (const auto& key : all_keys(t.symbols, width)) {
    std::vector<double> p(t.symbols.size());
    double total = 0.0;
    for (auto& x : p) total += (x = u(rng));
    for (auto& x : p) x /= total;
    t.probs[key] = p;
  }
  return t;
}

inline std::size_t index_of(const Table& t, const std::string& sym) {
  for (std::size_t i = 0; i < t.symbols.size(); ++i) {
    if (t.symbols[i] == sym) return i;
  }
  return t.symbols.size();
}

inline std::string key_at(const Table& t, const std::vector<std::string>& words, std::size_t pos) {
  std::vector<std::string> parts;
  const std::size_t lo = pos >= t.width ? pos - t.width : 0;
  for (std::size_t i = lo; i < words.size() && i <= pos + t.width; ++i) {
    parts.push_back(i == pos ? "_" : words[i]);
  }
  return join(parts);
}

inline double conditional(const Table& t, const std::vector<std::string>& words, std::size_t pos) {
  return std::log(t.probs.at(key_at(t, words, pos)).at(index_of(t, words[pos])));
}

// Brute-force PLL: look up every position and add, left to right.
inline double pll(const Table& t, const std::vector<std::string>& words) {
  double sum = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) sum += conditional(t, words, i);
  return sum;
}

// All words of length n over the symbols, in lexicographic index order.
inline std::vector<std::vector<std::string>> all_sequences(const std::vector<std::string>& symbols,
                                                           std::size_t n) {
  std::vector<std::vector<std::string>> out{{}};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::vector<std::string>> next;
    next.reserve(out.size() * symbols.size());
    for (const auto& s : out) {
      for (const auto& sym : symbols) {
        auto t = s;
        t.push_back(sym);
        next.push_back(std::move(t));
      }
    }
    out = std::move(next);
  }
  return out;
}

// The 2-best rule spelled out pair by pair: every correct candidate must beat
// every incorrect one.
inline bool two_best_by_pairs(const std::vector<double>& scores, const std::vector<bool>& correct) {
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (!correct[c]) continue;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (correct[i]) continue;
      if (!(scores[c] > scores[i])) return false;
    }
  }
  return true;
}

// Distance between two doubles in units in the last place.
inline double ulps_apart(double a, double b) {
  if (a == b) return 0.0;
  const double ulp = std::nextafter(std::fabs(b), INFINITY) - std::fabs(b);
  return std::fabs(a - b) / ulp;
}

}  // namespace oracle
