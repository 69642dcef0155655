#pragma once

// Independent brute-force references for the core computations. Used by the
// test suites and the `verify` command; none of these share traversal code
// with the main modules.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/dfa.hpp"
#include "supctl/formula.hpp"
#include "supctl/product.hpp"
#include "supctl/ranking.hpp"
#include "supctl/supervisor.hpp"

namespace supctl::oracle {

// ---------------------------------------------------------------------------
// Ranking by level sets

/// Level 0 is F_P. A non-accepting state with uncontrollable events joins
/// level 1 + (max level of its uncontrollable successors) once all of them are
/// leveled; one without joins level n as soon as a controllable successor sits
/// at level n - 1. States still unleveled after level α - 1 get α.
inline RankingFunction attractor_rank(const ProductAutomaton& p) {
  const std::size_t n = p.num_states();
  RankingFunction out;
  std::size_t acc = 0;
  for (StateId x = 0; x < n; ++x) acc += p.accepting(x) ? 1 : 0;
  out.alpha = static_cast<Rank>(n - acc + 1);
  std::vector<std::optional<Rank>> level(n);
  for (StateId x = 0; x < n; ++x)
    if (p.accepting(x)) level[x] = 0;
  for (Rank round = 1; round < out.alpha; ++round) {
    std::vector<std::optional<Rank>> next = level;
    for (StateId x = 0; x < n; ++x) {
      if (level[x]) continue;
      bool any_uc = false, all_uc_leveled = true, some_c_prev = false;
      Rank max_uc = 0;
      for (EventId e = 0; e < p.num_events(); ++e) {
        StateId y = p.successor(x, e);
        if (y == kNoState) continue;
        if (!p.controllable(e)) {
          any_uc = true;
          if (!level[y])
            all_uc_leveled = false;
          else
            max_uc = std::max(max_uc, *level[y]);
        } else if (level[y] && *level[y] == round - 1) {
          some_c_prev = true;
        }
      }
      if (any_uc ? (all_uc_leveled && max_uc + 1 == round) : some_c_prev) next[x] = round;
    }
    level = std::move(next);
  }
  out.xi.resize(n);
  for (StateId x = 0; x < n; ++x) out.xi[x] = level[x] ? *level[x] : out.alpha;
  return out;
}

// ---------------------------------------------------------------------------
// Observability by string enumeration

struct BoundedObservability {
  bool observable = true;
  std::optional<ObservabilityWitness> witness;
  std::size_t nodes = 0;
};

class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

/// Enumerates observation strings t and, for each, the states reachable by
/// strings s with projection t and |s| ≤ maxlen (keeping one shortest s per
/// state). Any two such states must agree on which shared events are
/// rank-decreasing.
inline BoundedObservability bounded_observability(const ProductAutomaton& p, const RankingFunction& r,
                                                  std::size_t maxlen, std::size_t node_limit = 2'000'000) {
  if (maxlen == 0) throw Error("maxlen must be at least 1");
  using Node = std::map<StateId, EventSeq>;  // state -> shortest string
  BoundedObservability out;

  auto close = [&](Node node) {
    // Unit-cost edges: settling lengths bucket by bucket keeps one shortest
    // string per state.
    for (std::size_t len = 0; len < maxlen; ++len) {
      std::vector<StateId> bucket;
      for (const auto& [x, s] : node)
        if (s.size() == len) bucket.push_back(x);
      for (StateId x : bucket)
        for (EventId e = 0; e < p.num_events(); ++e) {
          if (p.observable(e)) continue;
          StateId y = p.successor(x, e);
          if (y == kNoState) continue;
          auto it = node.find(y);
          if (it != node.end() && it->second.size() <= len + 1) continue;
          EventSeq t = node.at(x);
          t.push_back(e);
          node[y] = std::move(t);
        }
    }
    return node;
  };
  auto violation = [&](const Node& node) -> std::optional<ObservabilityWitness> {
    for (const auto& [x1, s1] : node)
      for (const auto& [x2, s2] : node)
        for (EventId e = 0; e < p.num_events(); ++e) {
          StateId y1 = p.successor(x1, e), y2 = p.successor(x2, e);
          if (y1 == kNoState || y2 == kNoState) continue;
          if (r[x1] > r[y1] && !(r[x2] > r[y2])) return ObservabilityWitness{x1, x2, e, s1, s2};
        }
    return std::nullopt;
  };
  // Key: state -> length. A node dominated by an already explored one (same
  // states or more, each reached no later) cannot expose anything new.
  using Sig = std::map<StateId, std::size_t>;
  std::vector<Sig> seen;
  auto signature = [](const Node& n) {
    Sig s;
    for (const auto& [x, str] : n) s[x] = str.size();
    return s;
  };
  auto dominated = [&](const Sig& s) {
    for (const Sig& o : seen) {
      bool dom = true;
      for (const auto& [x, len] : s) {
        auto it = o.find(x);
        if (it == o.end() || it->second > len) {
          dom = false;
          break;
        }
      }
      if (dom) return true;
    }
    return false;
  };

  std::vector<Node> work{close(Node{{p.initial(), {}}})};
  while (!work.empty()) {
    Node node = std::move(work.back());
    work.pop_back();
    Sig sig = signature(node);
    if (dominated(sig)) continue;
    seen.push_back(sig);
    if (++out.nodes > node_limit) throw InstanceTooLarge("bounded observability search exceeded its node limit");
    if (auto w = violation(node)) {
      out.observable = false;
      out.witness = std::move(w);
      return out;
    }
    for (EventId e = 0; e < p.num_events(); ++e) {
      if (!p.observable(e)) continue;
      Node succ;
      for (const auto& [x, s] : node) {
        if (s.size() >= maxlen) continue;
        StateId y = p.successor(x, e);
        if (y == kNoState) continue;
        auto it = succ.find(y);
        if (it == succ.end() || it->second.size() > s.size() + 1) {
          EventSeq t = s;
          t.push_back(e);
          succ[y] = std::move(t);
        }
      }
      if (!succ.empty()) work.push_back(close(std::move(succ)));
    }
  }
  return out;
}

/// Replays a witness: both strings are in L(P), have equal projections, lead
/// to the recorded states, and σ separates them as claimed.
inline bool replay_witness(const ProductAutomaton& p, const RankingFunction& r, const ObservabilityWitness& w) {
  auto walk = [&](const EventSeq& s) -> std::optional<StateId> {
    StateId x = p.initial();
    for (EventId e : s) {
      if (e >= p.num_events()) return std::nullopt;
      x = p.successor(x, e);
      if (x == kNoState) return std::nullopt;
    }
    return x;
  };
  auto proj = [&](const EventSeq& s) {
    EventSeq o;
    for (EventId e : s)
      if (p.observable(e)) o.push_back(e);
    return o;
  };
  auto a = walk(w.s), b = walk(w.s_prime);
  if (!a || !b || *a != w.x1 || *b != w.x2 || proj(w.s) != proj(w.s_prime)) return false;
  StateId y1 = p.successor(w.x1, w.sigma), y2 = p.successor(w.x2, w.sigma);
  if (y1 == kNoState || y2 == kNoState) return false;
  return r[w.x1] > r[y1] && r[w.x2] <= r[y2];
}

// ---------------------------------------------------------------------------
// Exhaustive closed loop

enum class Verdict { Pass, Fail, Inconclusive, NotEvaluated };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Inconclusive:
      return "inconclusive";
    case Verdict::NotEvaluated:
      return "not-evaluated";
  }
  return "?";
}

struct ClosedLoopReport {
  Verdict verdict = Verdict::Pass;
  std::string reason;
  EventSeq counterexample;
  std::size_t configurations = 0;
  std::size_t longest_branch = 0;
  /// Longest tail of a branch executed after the permissiveness reached zero.
  std::size_t longest_tail_after_zero = 0;
  std::size_t max_neutral_per_branch = 0;
};

/// Explores every plant resolution under the on-line supervisor. A branch
/// succeeds once the plant enters F_P; it fails if the plant blocks outside
/// F_P, an illegal transition is enabled and taken, the run can cycle outside
/// F_P, an empty pattern is issued, or a non-decreasing transition occurs after
/// η has reached zero.
inline ClosedLoopReport exhaustive_closed_loop(const ProductAutomaton& p, const RankingFunction& r,
                                               const PermissivenessFunction& eta, std::size_t depth,
                                               const SupervisorOptions& opts = {},
                                               std::size_t config_limit = 1'000'000) {
  ClosedLoopReport rep;
  if (!is_controllable(p, r) || !is_observable(p, r).observable) {
    rep.verdict = Verdict::NotEvaluated;
    rep.reason = "product is not controllable and observable";
    return rep;
  }
  const std::size_t kbar = eta.zero_index();

  struct Config {
    StateId x;
    StateSet ns;
    std::size_t k;
    auto operator<=>(const Config&) const = default;
  };
  struct Info {
    bool done = false;
    std::size_t longest = 0;
    std::size_t neutral = 0;
  };
  std::map<std::pair<StateSet, std::size_t>, StepResult> steps;
  std::map<Config, Info> memo;
  std::set<Config> on_path;
  EventSeq path;
  bool failed = false, inconclusive = false;

  auto fail = [&](std::string why) {
    if (!failed && !inconclusive) {
      failed = true;
      rep.reason = std::move(why);
      rep.counterexample = path;
    }
  };

  std::function<Info(const Config&)> visit = [&](const Config& c) -> Info {
    if (failed || inconclusive) return {};
    if (p.accepting(c.x)) return {true, 0, 0};
    if (auto it = memo.find(c); it != memo.end()) return it->second;
    if (on_path.contains(c)) {
      fail("closed loop can cycle outside the accepting set");
      return {};
    }
    if (path.size() > depth) {
      inconclusive = true;
      rep.reason = "depth limit reached";
      return {};
    }
    if (memo.size() + on_path.size() > config_limit) {
      inconclusive = true;
      rep.reason = "configuration limit reached";
      return {};
    }
    auto key = std::make_pair(c.ns, c.k);
    auto sit = steps.find(key);
    if (sit == steps.end()) {
      SupervisorState st;
      st.ns = c.ns;
      st.k = c.k;
      sit = steps.emplace(key, control_step(p, r, eta, st, opts)).first;
    }
    const StepResult& step = sit->second;
    if (step.pattern.events.empty()) {
      fail("empty control pattern");
      return {};
    }
    if (!step.ur.contains(c.x)) {
      fail("plant state missing from the estimate");
      return {};
    }
    on_path.insert(c);
    Info info{true, 0, 0};
    bool any = false;
    for (EventId e = 0; e < p.num_events() && !failed && !inconclusive; ++e) {
      if (!step.pattern.events.contains(e)) continue;
      StateId y = p.successor(c.x, e);
      if (y == kNoState) continue;
      any = true;
      path.push_back(e);
      if (r[y] >= r.alpha) fail("illegal transition enabled and taken");
      if (eta(c.k) == 0 && !(r[y] < r[c.x])) fail("non-decreasing transition after permissiveness reached zero");
      Config nc{y, c.ns, c.k};
      if (p.observable(e)) {
        SupervisorState st;
        st.ns = c.ns;
        st.k = c.k;
        try {
          SupervisorState ns = observe_update(p, st, e, step);
          nc.ns = ns.ns;
          nc.k = std::min(c.k + 1, kbar);
        } catch (const EstimatorDivergence&) {
          fail("estimator diverged");
        }
      }
      Info sub = failed ? Info{} : visit(nc);
      path.pop_back();
      const bool neutral = classify_ranks(r[c.x], r[y], r.alpha) == TransitionClass::Neutral;
      info.longest = std::max(info.longest, sub.longest + 1);
      info.neutral = std::max(info.neutral, sub.neutral + (neutral ? 1 : 0));
      if (eta(c.k) == 0) rep.longest_tail_after_zero = std::max(rep.longest_tail_after_zero, sub.longest + 1);
    }
    on_path.erase(c);
    if (!any) fail("plant blocked outside the accepting set");
    if (failed || inconclusive) return {};
    memo.emplace(c, info);
    return info;
  };

  Info root = visit(Config{p.initial(), StateSet{p.initial()}, std::min<std::size_t>(0, kbar)});
  rep.configurations = memo.size();
  if (failed) {
    rep.verdict = Verdict::Fail;
  } else if (inconclusive) {
    rep.verdict = Verdict::Inconclusive;
  } else {
    rep.longest_branch = root.longest;
    rep.max_neutral_per_branch = root.neutral;
    if (rep.longest_tail_after_zero > r.alpha) {
      rep.verdict = Verdict::Fail;
      rep.reason = "more than alpha events after permissiveness reached zero";
    } else if (root.longest > depth) {
      rep.verdict = Verdict::Inconclusive;
      rep.reason = "depth limit reached";
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Tableau construction of the good-prefix acceptor

namespace detail {

using Obligations = std::set<Formula>;

/// Ways to satisfy f at the current letter, each given as the obligations it
/// leaves for the next position.
inline std::vector<Obligations> expand(const Formula& f, Letter v, const ApOrdering& ap) {
  switch (f.op()) {
    case Op::True:
      return {Obligations{}};
    case Op::False:
      return {};
    case Op::Atom:
      return (v >> ap.index_of(f.name())) & 1U ? std::vector<Obligations>{Obligations{}} : std::vector<Obligations>{};
    case Op::NegAtom:
      return (v >> ap.index_of(f.name())) & 1U ? std::vector<Obligations>{} : std::vector<Obligations>{Obligations{}};
    case Op::And: {
      std::vector<Obligations> out;
      for (const auto& a : expand(f.lhs(), v, ap))
        for (const auto& b : expand(f.rhs(), v, ap)) {
          Obligations u = a;
          u.insert(b.begin(), b.end());
          out.push_back(std::move(u));
        }
      return out;
    }
    case Op::Or: {
      auto out = expand(f.lhs(), v, ap);
      for (auto& b : expand(f.rhs(), v, ap)) out.push_back(std::move(b));
      return out;
    }
    case Op::Next:
      return {Obligations{f.sub()}};
    case Op::Until: {
      auto out = expand(f.rhs(), v, ap);
      for (auto a : expand(f.lhs(), v, ap)) {
        a.insert(f);
        out.push_back(std::move(a));
      }
      return out;
    }
  }
  return {};
}

/// Successor obligation sets of a conjunction of obligations.
inline std::vector<Obligations> step(const Obligations& s, Letter v, const ApOrdering& ap) {
  std::vector<Obligations> acc{Obligations{}};
  for (const Formula& g : s) {
    std::vector<Obligations> next;
    for (const auto& ways : expand(g, v, ap))
      for (const auto& prefix : acc) {
        Obligations u = prefix;
        u.insert(ways.begin(), ways.end());
        next.push_back(std::move(u));
      }
    acc = std::move(next);
    if (acc.empty()) break;
  }
  return acc;
}

/// Drops obligation sets that contain another one of the set.
inline std::set<Obligations> prune(std::set<Obligations> m) {
  std::set<Obligations> out;
  for (const auto& a : m) {
    bool redundant = false;
    for (const auto& b : m)
      if (&a != &b && a != b && std::includes(a.begin(), a.end(), b.begin(), b.end())) {
        redundant = true;
        break;
      }
    if (!redundant) out.insert(a);
  }
  return out;
}

}  // namespace detail

/// Tableau NFA over obligation sets, determinized by subset construction with
/// subsumption pruning. A macro state holding the empty obligation set
/// witnesses f; states from which every infinite path meets such a state are
/// then marked accepting as well.
inline Dfa tableau_dfa(const Formula& f, const ApOrdering& ap, std::size_t state_cap = 100000) {
  using detail::Obligations;
  using Macro = std::set<Obligations>;
  const std::size_t letters = ap.alphabet_size();
  std::map<Macro, StateId> ids;
  std::vector<Macro> macros;
  std::vector<std::vector<StateId>> rows;
  auto intern = [&](Macro m) {
    m = detail::prune(std::move(m));
    if (m.contains(Obligations{})) m = Macro{Obligations{}};
    auto it = ids.find(m);
    if (it != ids.end()) return it->second;
    if (macros.size() >= state_cap) throw StateCapExceeded("tableau exceeds the state cap");
    StateId id = static_cast<StateId>(macros.size());
    ids.emplace(m, id);
    macros.push_back(std::move(m));
    return id;
  };
  intern(Macro{Obligations{f}});
  for (StateId q = 0; q < macros.size(); ++q) {
    std::vector<StateId> row(letters);
    for (Letter v = 0; v < letters; ++v) {
      Macro next;
      for (const auto& s : macros[q])
        for (auto& t : detail::step(s, v, ap)) next.insert(std::move(t));
      row[v] = intern(std::move(next));
    }
    rows.push_back(std::move(row));
  }

  Dfa d;
  d.ap = ap;
  d.num_states = macros.size();
  d.initial = 0;
  d.accepting.resize(d.num_states);
  d.table.resize(d.num_states * letters);
  for (StateId q = 0; q < d.num_states; ++q) {
    d.accepting[q] = macros[q].contains(Obligations{});
    for (Letter v = 0; v < letters; ++v) d.table[q * letters + v] = rows[q][v];
  }

  // A state is good iff no cycle of non-witnessing states is reachable from
  // it without passing a witnessing state. Checked per state by DFS.
  std::vector<bool> good(d.num_states);
  for (StateId q0 = 0; q0 < d.num_states; ++q0) {
    if (d.accepting[q0]) {
      good[q0] = true;
      continue;
    }
    std::vector<int> color(d.num_states, 0);
    bool cycle = false;
    std::function<void(StateId)> dfs = [&](StateId q) {
      color[q] = 1;
      for (Letter v = 0; v < letters && !cycle; ++v) {
        StateId t = d.table[q * letters + v];
        if (d.accepting[t]) continue;
        if (color[t] == 1) cycle = true;
        else if (color[t] == 0) dfs(t);
      }
      color[q] = 2;
    };
    dfs(q0);
    good[q0] = !cycle;
  }
  d.accepting = good;
  return d;
}

/// Shortest word on which exactly one of a, b visits an accepting state, or
/// nullopt when the two acceptors agree on every word.
inline std::optional<Word> dfa_difference(const Dfa& a, const Dfa& b) {
  if (!(a.ap == b.ap)) throw Error("acceptors use different AP orderings");
  const std::size_t letters = a.ap.alphabet_size();
  using Key = std::tuple<StateId, StateId, bool, bool>;
  std::map<Key, std::pair<Key, Letter>> parent;
  std::vector<Key> frontier;
  Key start{a.initial, b.initial, static_cast<bool>(a.accepting[a.initial]),
            static_cast<bool>(b.accepting[b.initial])};
  parent.emplace(start, std::make_pair(start, Letter{0}));
  frontier.push_back(start);
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    Key k = frontier[i];
    auto [qa, qb, sa, sb] = k;
    if (sa != sb) {
      Word w;
      while (k != start) {
        auto [prev, v] = parent.at(k);
        w.push_back(v);
        k = prev;
      }
      std::reverse(w.begin(), w.end());
      return w;
    }
    for (Letter v = 0; v < letters; ++v) {
      StateId ta = a.table[qa * letters + v], tb = b.table[qb * letters + v];
      Key n{ta, tb, sa || a.accepting[ta], sb || b.accepting[tb]};
      if (parent.emplace(n, std::make_pair(k, v)).second) frontier.push_back(n);
    }
  }
  return std::nullopt;
}

inline bool dfa_equivalent(const Dfa& a, const Dfa& b) { return !dfa_difference(a, b); }

// ---------------------------------------------------------------------------
// Reports

struct OracleReport {
  std::string component;
  std::string digest;
  bool agree = true;
  nlohmann::json input;
  nlohmann::json main_value;
  nlohmann::json oracle_value;
};

/// 64-bit FNV-1a of the text, as 16 hex digits.
inline std::string digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return out;
}

inline nlohmann::json to_json(const OracleReport& r) {
  nlohmann::json j{{"component", r.component}, {"digest", r.digest}, {"agree", r.agree}};
  if (!r.agree)
    j["divergence"] = {{"input", r.input}, {"main", r.main_value}, {"oracle", r.oracle_value}};
  return j;
}

}  // namespace supctl::oracle
