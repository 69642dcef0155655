#pragma once

// Deterministic acceptors of good prefixes, built from formula derivatives.

#include <deque>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/formula.hpp"

namespace supctl {

/// Total DFA over the letters 2^AP. Transition rows are dense and indexed by
/// the letter's bitset value.
struct Dfa {
  ApOrdering ap;
  std::size_t num_states = 0;
  StateId initial = 0;
  std::vector<bool> accepting;
  std::vector<StateId> table;  // num_states * alphabet_size

  std::size_t alphabet_size() const { return ap.alphabet_size(); }
  StateId next(StateId q, Letter v) const { return table[static_cast<std::size_t>(q) * alphabet_size() + v]; }
  StateId& next(StateId q, Letter v) { return table[static_cast<std::size_t>(q) * alphabet_size() + v]; }
  bool is_accepting(StateId q) const { return accepting[q]; }

  std::size_t num_accepting() const {
    return static_cast<std::size_t>(std::count(accepting.begin(), accepting.end(), true));
  }

  /// Runs the automaton from `from` over w.
  StateId run(StateId from, std::span<const Letter> w) const {
    for (Letter v : w) {
      if (v >= alphabet_size()) throw Error("letter " + std::to_string(v) + " references atoms outside the AP ordering");
      from = next(from, v);
    }
    return from;
  }

  /// Every out-edge of an accepting state stays accepting.
  bool acceptance_absorbing() const {
    for (StateId q = 0; q < num_states; ++q)
      if (accepting[q])
        for (Letter v = 0; v < alphabet_size(); ++v)
          if (!accepting[next(q, v)]) return false;
    return true;
  }
};

struct CompileOptions {
  std::size_t state_cap = 100000;
};

/// Derivative automaton before any post-processing, with the residual formula
/// behind every state.
struct DerivativeAutomaton {
  Dfa dfa;
  std::vector<Formula> residuals;
};

/// States are the distinct simplified residuals reachable from f; the only
/// accepting residual is True.
inline DerivativeAutomaton derivative_automaton(const Formula& f, const ApOrdering& ap,
                                                const CompileOptions& opts = {}) {
  DerivativeAutomaton out;
  out.dfa.ap = ap;
  std::unordered_map<Formula, StateId, FormulaHash> ids;
  std::deque<StateId> queue;
  auto intern = [&](const Formula& r) {
    auto [it, fresh] = ids.emplace(r, static_cast<StateId>(out.residuals.size()));
    if (fresh) {
      if (out.residuals.size() >= opts.state_cap)
        throw StateCapExceeded("derivative automaton exceeds the state cap of " + std::to_string(opts.state_cap));
      out.residuals.push_back(r);
      queue.push_back(it->second);
    }
    return it->second;
  };
  const std::size_t letters = ap.alphabet_size();
  out.dfa.initial = intern(simplify(f));
  std::vector<std::vector<StateId>> rows;
  while (!queue.empty()) {
    StateId q = queue.front();
    queue.pop_front();
    if (rows.size() <= q) rows.resize(q + 1);
    rows[q].resize(letters);
    for (Letter v = 0; v < letters; ++v) {
      Formula r = out.residuals[q];
      rows[q][v] = intern(derivative(r, v, ap));
    }
  }
  out.dfa.num_states = out.residuals.size();
  out.dfa.accepting.assign(out.dfa.num_states, false);
  out.dfa.table.resize(out.dfa.num_states * letters);
  for (StateId q = 0; q < out.dfa.num_states; ++q) {
    out.dfa.accepting[q] = out.residuals[q].is_true();
    for (Letter v = 0; v < letters; ++v) out.dfa.next(q, v) = rows[q][v];
  }
  return out;
}

/// Marks as accepting every state from which no infinite path avoids the
/// accepting set. For a co-safe property this turns an acceptor of witnessed
/// prefixes into an acceptor of exactly the good prefixes.
inline Dfa close_acceptance(Dfa d) {
  std::vector<bool> avoiding(d.num_states);
  for (StateId q = 0; q < d.num_states; ++q) avoiding[q] = !d.accepting[q];
  bool changed = true;
  while (changed) {
    changed = false;
    for (StateId q = 0; q < d.num_states; ++q) {
      if (!avoiding[q]) continue;
      bool escape = false;
      for (Letter v = 0; v < d.alphabet_size() && !escape; ++v) escape = avoiding[d.next(q, v)];
      if (!escape) {
        avoiding[q] = false;
        changed = true;
      }
    }
  }
  for (StateId q = 0; q < d.num_states; ++q) d.accepting[q] = !avoiding[q];
  return d;
}

/// Redirects every out-edge of an accepting state to one accepting sink.
inline Dfa make_acceptance_absorbing(Dfa d) {
  StateId sink = kNoState;
  for (StateId q = 0; q < d.num_states && sink == kNoState; ++q)
    if (d.accepting[q]) {
      bool self = true;
      for (Letter v = 0; v < d.alphabet_size(); ++v) self = self && d.next(q, v) == q;
      if (self) sink = q;
    }
  bool any_accepting = std::find(d.accepting.begin(), d.accepting.end(), true) != d.accepting.end();
  if (!any_accepting) return d;
  if (sink == kNoState) {
    sink = static_cast<StateId>(d.num_states++);
    d.accepting.push_back(true);
    d.table.resize(d.num_states * d.alphabet_size(), sink);
  }
  for (StateId q = 0; q < d.num_states; ++q)
    if (d.accepting[q])
      for (Letter v = 0; v < d.alphabet_size(); ++v) d.next(q, v) = sink;
  return d;
}

/// Language-equivalent minimal DFA (Moore partition refinement). States are
/// renumbered in breadth-first order from the initial state; unreachable
/// states are dropped.
inline Dfa minimize(const Dfa& d) {
  const std::size_t letters = d.alphabet_size();
  std::vector<StateId> cls(d.num_states);
  for (StateId q = 0; q < d.num_states; ++q) cls[q] = d.accepting[q] ? 1 : 0;
  std::size_t num_classes = 0;
  for (;;) {
    std::map<std::vector<StateId>, StateId> sig_ids;
    std::vector<StateId> refined(d.num_states);
    for (StateId q = 0; q < d.num_states; ++q) {
      std::vector<StateId> sig;
      sig.reserve(letters + 1);
      sig.push_back(cls[q]);
      for (Letter v = 0; v < letters; ++v) sig.push_back(cls[d.next(q, v)]);
      auto [it, fresh] = sig_ids.emplace(std::move(sig), static_cast<StateId>(sig_ids.size()));
      refined[q] = it->second;
    }
    cls = std::move(refined);
    if (sig_ids.size() == num_classes) break;
    num_classes = sig_ids.size();
  }

  // Breadth-first renumbering of the quotient.
  std::vector<StateId> representative;
  std::map<StateId, StateId> new_id;
  std::deque<StateId> queue;
  auto visit = [&](StateId q) {
    auto [it, fresh] = new_id.emplace(cls[q], static_cast<StateId>(representative.size()));
    if (fresh) {
      representative.push_back(q);
      queue.push_back(q);
    }
    return it->second;
  };
  Dfa out;
  out.ap = d.ap;
  out.initial = visit(d.initial);
  std::vector<std::vector<StateId>> rows;
  while (!queue.empty()) {
    StateId q = queue.front();
    queue.pop_front();
    StateId id = new_id.at(cls[q]);
    if (rows.size() <= id) rows.resize(id + 1);
    rows[id].resize(letters);
    for (Letter v = 0; v < letters; ++v) rows[id][v] = visit(d.next(q, v));
  }
  out.num_states = representative.size();
  out.accepting.resize(out.num_states);
  out.table.resize(out.num_states * letters);
  for (StateId i = 0; i < out.num_states; ++i) {
    out.accepting[i] = d.accepting[representative[i]];
    for (Letter v = 0; v < letters; ++v) out.next(i, v) = rows[i][v];
  }
  return out;
}

/// Good-prefix acceptor for f: derivative automaton, acceptance closure,
/// absorbing acceptance, minimization.
inline Dfa compile(const Formula& f, const ApOrdering& ap, const CompileOptions& opts = {}) {
  return minimize(make_acceptance_absorbing(close_acceptance(derivative_automaton(f, ap, opts).dfa)));
}

/// True iff the run on w visits an accepting state at some prefix.
inline bool accepts(const Dfa& d, std::span<const Letter> w) {
  StateId q = d.initial;
  if (d.is_accepting(q)) return true;
  for (Letter v : w) {
    if (v >= d.alphabet_size()) throw Error("letter " + std::to_string(v) + " references atoms outside the AP ordering");
    q = d.next(q, v);
    if (d.is_accepting(q)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// JSON: {ap, states, initial, accepting, transitions}

inline nlohmann::json to_json(const Dfa& d) {
  nlohmann::json j;
  j["ap"] = d.ap.atoms();
  j["states"] = d.num_states;
  j["initial"] = d.initial;
  std::vector<StateId> acc;
  for (StateId q = 0; q < d.num_states; ++q)
    if (d.accepting[q]) acc.push_back(q);
  j["accepting"] = acc;
  nlohmann::json rows = nlohmann::json::array();
  for (StateId q = 0; q < d.num_states; ++q) {
    std::vector<StateId> row(d.alphabet_size());
    for (Letter v = 0; v < d.alphabet_size(); ++v) row[v] = d.next(q, v);
    rows.push_back(row);
  }
  j["transitions"] = rows;
  return j;
}

inline Dfa dfa_from_json(const nlohmann::json& j) {
  try {
    Dfa d;
    d.ap = ApOrdering(j.at("ap").get<std::vector<std::string>>());
    d.num_states = j.at("states").get<std::size_t>();
    if (d.num_states == 0) throw LoadError("DFA has no states");
    d.initial = j.at("initial").get<StateId>();
    if (d.initial >= d.num_states) throw LoadError("DFA initial state out of range");
    d.accepting.assign(d.num_states, false);
    for (StateId q : j.at("accepting").get<std::vector<StateId>>()) {
      if (q >= d.num_states) throw LoadError("DFA accepting state out of range");
      d.accepting[q] = true;
    }
    const auto& rows = j.at("transitions");
    if (rows.size() != d.num_states) throw LoadError("DFA transition table must have one row per state");
    d.table.resize(d.num_states * d.alphabet_size());
    for (StateId q = 0; q < d.num_states; ++q) {
      auto row = rows.at(q).get<std::vector<StateId>>();
      if (row.size() != d.alphabet_size())
        throw LoadError("DFA row " + std::to_string(q) + " must have 2^|AP| entries");
      for (Letter v = 0; v < d.alphabet_size(); ++v) {
        if (row[v] >= d.num_states) throw LoadError("DFA transition target out of range");
        d.next(q, v) = row[v];
      }
    }
    if (!d.acceptance_absorbing()) throw LoadError("DFA acceptance is not absorbing");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed DFA document: ") + e.what());
  }
}

}  // namespace supctl
