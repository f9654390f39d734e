#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace chiropath {

// A set of vertex labels drawn from {1..32}; label i lives in bit i-1.
using LabelSet = std::uint32_t;

inline constexpr int kMaxLabels = 32;

constexpr LabelSet label_bit(int label) { return LabelSet{1} << (label - 1); }

constexpr int label_count(LabelSet s) { return std::popcount(s); }

constexpr int lowest_label(LabelSet s) { return std::countr_zero(s) + 1; }

constexpr bool contains(LabelSet s, int label) { return (s & label_bit(label)) != 0; }

// Lexicographic order of the sorted label tuples of two equal-size sets: the
// set owning the smallest element of the symmetric difference comes first.
constexpr bool lex_less(LabelSet a, LabelSet b) {
  const LabelSet diff = a ^ b;
  return diff != 0 && (a & (diff & (~diff + 1))) != 0;
}

// Number of members of s strictly greater than label.
constexpr int count_above(LabelSet s, int label) {
  return label >= kMaxLabels ? 0 : std::popcount(s >> label);
}

inline std::vector<int> to_labels(LabelSet s) {
  std::vector<int> out;
  out.reserve(label_count(s));
  while (s != 0) {
    out.push_back(lowest_label(s));
    s &= s - 1;
  }
  return out;
}

inline LabelSet from_labels(const std::vector<int>& labels) {
  LabelSet s = 0;
  for (int v : labels) s |= label_bit(v);
  return s;
}

inline LabelSet first_labels(int count) {
  return count >= kMaxLabels ? ~LabelSet{0} : (LabelSet{1} << count) - 1;
}

inline std::string format_labels(LabelSet s, char sep = ' ') {
  std::string out;
  for (int v : to_labels(s)) {
    if (!out.empty()) out += sep;
    out += std::to_string(v);
  }
  return out;
}

}  // namespace chiropath
