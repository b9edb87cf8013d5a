#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace lagree {

// Atoms that lattice values are built from. Equality is exact token equality.
using Element = std::string;

// Height grading in integer units (cardinality of the element set).
using Height = int;

/// A value of the finite set lattice: a set of opaque element tokens with
/// join = union. Immutable after construction; internally a sorted unique
/// vector so equality, subset tests and JSON bytes are deterministic.
class LatticeValue {
 public:
  LatticeValue() = default;

  explicit LatticeValue(std::vector<Element> elems) : elems_(std::move(elems)) {
    std::sort(elems_.begin(), elems_.end());
    elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
  }

  LatticeValue(std::initializer_list<Element> elems)
      : LatticeValue(std::vector<Element>(elems)) {}

  const std::vector<Element>& elems() const { return elems_; }
  bool empty() const { return elems_.empty(); }
  std::size_t size() const { return elems_.size(); }

  bool contains(const Element& e) const {
    return std::binary_search(elems_.begin(), elems_.end(), e);
  }

  bool operator==(const LatticeValue& other) const = default;

  // Lexicographic order on the sorted token vectors. Unrelated to the lattice
  // order; used only to key std::set/std::map deterministically.
  bool operator<(const LatticeValue& other) const {
    return elems_ < other.elems_;
  }

 private:
  std::vector<Element> elems_;
};

inline LatticeValue join(const LatticeValue& u, const LatticeValue& v) {
  std::vector<Element> out;
  out.reserve(u.size() + v.size());
  std::set_union(u.elems().begin(), u.elems().end(), v.elems().begin(),
                 v.elems().end(), std::back_inserter(out));
  return LatticeValue(std::move(out));
}

/// true iff u <= v in the lattice order (subset inclusion).
inline bool leq(const LatticeValue& u, const LatticeValue& v) {
  return std::includes(v.elems().begin(), v.elems().end(), u.elems().begin(),
                       u.elems().end());
}

inline bool comparable(const LatticeValue& u, const LatticeValue& v) {
  return leq(u, v) || leq(v, u);
}

template <typename Container>
LatticeValue join_all(const Container& vs) {
  if (vs.begin() == vs.end()) {
    throw std::invalid_argument("join_all: empty collection");
  }
  LatticeValue acc;
  for (const auto& v : vs) acc = join(acc, v);
  return acc;
}

inline Height height(const LatticeValue& v) {
  return static_cast<Height>(v.size());
}

struct ClosureCapExceeded : std::runtime_error {
  explicit ClosureCapExceeded(std::size_t cap)
      : std::runtime_error("join closure exceeds cap of " +
                           std::to_string(cap)) {}
};

/// Join closure of a set of values: every join of a nonempty subset.
/// Brute force; throws ClosureCapExceeded if the closure grows past `cap`.
template <typename Container>
std::set<LatticeValue> join_closure(const Container& inputs,
                                    std::size_t cap = 4096) {
  std::set<LatticeValue> closure(inputs.begin(), inputs.end());
  if (closure.empty()) {
    throw std::invalid_argument("join_closure: empty collection");
  }
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<LatticeValue> snapshot(closure.begin(), closure.end());
    for (const auto& u : snapshot) {
      for (const auto& v : snapshot) {
        if (closure.insert(join(u, v)).second) {
          grew = true;
          if (closure.size() > cap) throw ClosureCapExceeded(cap);
        }
      }
    }
  }
  return closure;
}

/// Longest chain (counted in edges) from any minimal element of the join
/// closure of `inputs` up to its top. Independent oracle for bound reports;
/// deliberately not the cardinality grading.
template <typename Container>
Height closure_height_oracle(const Container& inputs, std::size_t cap = 4096) {
  std::set<LatticeValue> closure = join_closure(inputs, cap);
  // Sort by cardinality so every strict subset precedes its supersets.
  std::vector<LatticeValue> order(closure.begin(), closure.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const LatticeValue& a, const LatticeValue& b) {
                     return a.size() < b.size();
                   });
  std::vector<int> longest(order.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (order[j].size() < order[i].size() && leq(order[j], order[i])) {
        longest[i] = std::max(longest[i], longest[j] + 1);
      }
    }
    best = std::max(best, longest[i]);
  }
  return best;
}

// JSON encoding: a sorted array of element tokens, e.g. ["a","b"].
inline void to_json(nlohmann::json& j, const LatticeValue& v) {
  j = v.elems();
}

inline void from_json(const nlohmann::json& j, LatticeValue& v) {
  v = LatticeValue(j.get<std::vector<Element>>());
}

}  // namespace lagree
