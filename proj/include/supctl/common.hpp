#pragma once

// Shared identifiers, atomic-proposition orderings and the exception family
// used across the toolkit.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace supctl {

using StateId = std::uint32_t;
using EventId = std::uint32_t;
using Rank = std::uint32_t;

inline constexpr StateId kNoState = std::numeric_limits<StateId>::max();

using StateSet = std::set<StateId>;
using EventSet = std::set<EventId>;

/// A letter of 2^AP, encoded as a bitset: bit i is set iff the i-th atom of
/// the owning AP ordering holds.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

/// Dense letter tables are 2^|AP| wide, so the ordering is capped.
inline constexpr std::size_t kMaxAtoms = 16;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class StateCapExceeded : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class UndefinedTransition : public Error {
 public:
  using Error::Error;
};

class EstimatorDivergence : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

/// Ordered list of atomic propositions. The position of an atom is its bit in
/// a Letter.
class ApOrdering {
 public:
  ApOrdering() = default;
  explicit ApOrdering(std::vector<std::string> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.size() > kMaxAtoms)
      throw Error("at most " + std::to_string(kMaxAtoms) + " atomic propositions are supported");
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      for (std::size_t j = i + 1; j < atoms_.size(); ++j)
        if (atoms_[i] == atoms_[j]) throw Error("duplicate atomic proposition '" + atoms_[i] + "'");
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<std::string>& atoms() const noexcept { return atoms_; }
  const std::string& operator[](std::size_t i) const { return atoms_[i]; }

  /// Number of letters, 2^|AP|.
  std::size_t alphabet_size() const noexcept { return std::size_t{1} << atoms_.size(); }

  std::size_t index_of(std::string_view name) const {
    auto it = std::find(atoms_.begin(), atoms_.end(), name);
    if (it == atoms_.end()) throw Error("atom '" + std::string(name) + "' is not in the AP ordering");
    return static_cast<std::size_t>(it - atoms_.begin());
  }

  bool contains(std::string_view name) const {
    return std::find(atoms_.begin(), atoms_.end(), name) != atoms_.end();
  }

  Letter letter(const std::vector<std::string>& names) const {
    Letter v = 0;
    for (const auto& n : names) v |= Letter{1} << index_of(n);
    return v;
  }

  std::vector<std::string> names(Letter v) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (v & (Letter{1} << i)) out.push_back(atoms_[i]);
    return out;
  }

  /// "{a,c}" style rendering.
  std::string render(Letter v) const {
    std::string s = "{";
    bool first = true;
    for (const auto& n : names(v)) {
      if (!first) s += ',';
      s += n;
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(const ApOrdering&, const ApOrdering&) = default;

 private:
  std::vector<std::string> atoms_;
};

inline bool is_subset(const StateSet& a, const StateSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace supctl
