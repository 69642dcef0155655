#pragma once

// On-line permissive supervisor: permissiveness schedules, state estimation
// and the per-observation control pattern computation.

#include <algorithm>
#include <charconv>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/product.hpp"
#include "supctl/ranking.hpp"

namespace supctl {

// ---------------------------------------------------------------------------
// Permissiveness

/// η: ℕ → ℕ, nonincreasing and eventually zero. Either k ↦ max{a - b·k, 0} or
/// a finite table followed by zeros.
class PermissivenessFunction {
 public:
  static PermissivenessFunction linear(Rank a, Rank b) {
    if (a > 0 && b == 0) throw Error("linear permissiveness with b = 0 never reaches zero");
    PermissivenessFunction f;
    f.linear_ = true;
    f.a_ = a;
    f.b_ = b;
    return f;
  }

  static PermissivenessFunction table(std::vector<Rank> values) {
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[i - 1]) throw Error("permissiveness table must be nonincreasing");
    PermissivenessFunction f;
    f.values_ = std::move(values);
    return f;
  }

  static PermissivenessFunction zero() { return table({}); }

  /// "linear:a,b" or "table:v0,v1,...".
  static PermissivenessFunction parse(std::string_view spec) {
    auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw Error("permissiveness spec must be 'linear:a,b' or 'table:v0,...'");
    std::string_view kind = spec.substr(0, colon);
    std::vector<Rank> nums;
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view tok = rest.substr(0, comma);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      Rank v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
        throw Error("bad number '" + std::string(tok) + "' in permissiveness spec");
      nums.push_back(v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (kind == "linear") {
      if (nums.size() != 2) throw Error("linear permissiveness takes exactly two values");
      return linear(nums[0], nums[1]);
    }
    if (kind == "table") return table(std::move(nums));
    throw Error("unknown permissiveness kind '" + std::string(kind) + "'");
  }

  Rank operator()(std::size_t k) const {
    if (linear_) {
      const std::uint64_t dec = static_cast<std::uint64_t>(b_) * k;
      return dec >= a_ ? 0 : static_cast<Rank>(a_ - dec);
    }
    return k < values_.size() ? values_[k] : 0;
  }

  /// k̄ = min{k : η(k) = 0}.
  std::size_t zero_index() const {
    if (linear_) return a_ == 0 ? 0 : (a_ + b_ - 1) / b_;
    std::size_t k = 0;
    while (k < values_.size() && values_[k] > 0) ++k;
    return k;
  }

  /// η(0) ≤ α. Monotonicity and eventual zero hold by construction.
  void check(Rank alpha) const {
    if ((*this)(0) > alpha)
      throw Error("permissiveness η(0) = " + std::to_string((*this)(0)) + " exceeds α = " + std::to_string(alpha));
  }

  std::string to_string() const {
    if (linear_) return "linear:" + std::to_string(a_) + "," + std::to_string(b_);
    std::string s = "table:";
    for (std::size_t i = 0; i < values_.size(); ++i) s += (i ? "," : "") + std::to_string(values_[i]);
    return s;
  }

 private:
  bool linear_ = false;
  Rank a_ = 0, b_ = 0;
  std::vector<Rank> values_;
};

// ---------------------------------------------------------------------------
// Estimation

using EventMask = std::vector<bool>;

inline EventMask mask_of(const ProductAutomaton& p, const EventSet& events) {
  EventMask m(p.num_events(), false);
  for (EventId e : events) {
    if (e >= p.num_events()) throw Error("event id " + std::to_string(e) + " out of range");
    m[e] = true;
  }
  return m;
}

inline EventMask all_events(const ProductAutomaton& p) { return EventMask(p.num_events(), true); }

/// UR_{Σ'}(X'): closure of xs under unobservable events inside Σ'.
inline StateSet unobservable_reach(const ProductAutomaton& p, const StateSet& xs, const EventMask& allowed) {
  StateSet out(xs);
  std::vector<StateId> stack(xs.begin(), xs.end());
  while (!stack.empty()) {
    StateId x = stack.back();
    stack.pop_back();
    for (EventId e = 0; e < p.num_events(); ++e) {
      if (!allowed[e] || p.observable(e)) continue;
      StateId y = p.successor(x, e);
      if (y != kNoState && out.insert(y).second) stack.push_back(y);
    }
  }
  return out;
}

inline StateSet unobservable_reach(const ProductAutomaton& p, const StateSet& xs, const EventSet& allowed) {
  return unobservable_reach(p, xs, mask_of(p, allowed));
}

/// Observable successors of `ur` under the allowed events.
inline StateSet observable_successors(const ProductAutomaton& p, const StateSet& ur, const EventMask& allowed) {
  StateSet out;
  for (StateId x : ur)
    for (EventId e = 0; e < p.num_events(); ++e)
      if (allowed[e] && p.observable(e))
        if (StateId y = p.successor(x, e); y != kNoState) out.insert(y);
  return out;
}

/// γ̂_leg(x): events that are rank-decreasing at some state of the
/// unobservable reach of x.
inline EventSet gamma_leg(const ProductAutomaton& p, const RankingFunction& r, StateId x) {
  EventSet out;
  for (StateId y : unobservable_reach(p, StateSet{x}, all_events(p)))
    for (EventId e = 0; e < p.num_events(); ++e)
      if (StateId z = p.successor(y, e); z != kNoState && r[y] > r[z]) out.insert(e);
  return out;
}

inline EventSet gamma_leg(const ProductAutomaton& p, const RankingFunction& r, const StateSet& xs) {
  EventSet out;
  for (StateId x : xs) out.merge(gamma_leg(p, r, x));
  return out;
}

enum class PerMode { Algorithmic, Strict };

inline const char* to_string(PerMode m) { return m == PerMode::Algorithmic ? "algorithmic" : "strict"; }

inline PerMode parse_per_mode(std::string_view s) {
  if (s == "algorithmic") return PerMode::Algorithmic;
  if (s == "strict") return PerMode::Strict;
  throw Error("unknown mode '" + std::string(s) + "' (expected algorithmic or strict)");
}

struct SupervisorOptions {
  PerMode mode = PerMode::Algorithmic;
  /// Reject permissive events that close a cycle of unobservable transitions
  /// through non-accepting states of the estimate.
  bool forbid_unobservable_cycles = true;
};

namespace detail {

inline EventMask with_uncontrollable(const ProductAutomaton& p, EventMask m) {
  for (EventId e = 0; e < p.num_events(); ++e)
    if (!p.controllable(e)) m[e] = true;
  return m;
}

/// True iff the unobservable transitions under `allowed` among the
/// non-accepting states of the reach of xs contain a cycle.
inline bool has_unobservable_cycle(const ProductAutomaton& p, const StateSet& xs, const EventMask& allowed) {
  StateSet reach = unobservable_reach(p, xs, allowed);
  enum : std::uint8_t { White, Grey, Black };
  std::map<StateId, std::uint8_t> color;
  for (StateId x : reach) color[x] = White;
  for (StateId root : reach) {
    if (color[root] != White || p.accepting(root)) continue;
    std::vector<std::pair<StateId, EventId>> stack{{root, 0}};
    color[root] = Grey;
    while (!stack.empty()) {
      auto& [x, next] = stack.back();
      if (next == p.num_events()) {
        color[x] = Black;
        stack.pop_back();
        continue;
      }
      EventId e = next++;
      if (!allowed[e] || p.observable(e)) continue;
      StateId y = p.successor(x, e);
      if (y == kNoState || p.accepting(y)) continue;
      if (color[y] == Grey) return true;
      if (color[y] == White) {
        color[y] = Grey;
        stack.push_back({y, 0});
      }
    }
  }
  return false;
}

/// ReExpand for one candidate pattern: explores the reach of NS under
/// `allowed` and fails on the first target ranked at or above eta_k.
/// `defined` reports whether `candidate` occurs in the explored reach.
inline bool re_expand(const ProductAutomaton& p, const RankingFunction& r, const StateSet& ns, const EventMask& allowed,
                      Rank eta_k, EventId candidate, bool& defined) {
  defined = false;
  StateSet seen;
  std::vector<StateId> stack;
  for (StateId x : ns)
    if (seen.insert(x).second) stack.push_back(x);
  while (!stack.empty()) {
    StateId x = stack.back();
    stack.pop_back();
    for (EventId e = 0; e < p.num_events(); ++e) {
      if (!allowed[e]) continue;
      StateId y = p.successor(x, e);
      if (y == kNoState) continue;
      if (e == candidate) defined = true;
      if (r[y] >= eta_k) return false;
      if (!p.observable(e) && seen.insert(y).second) stack.push_back(y);
    }
  }
  return true;
}

/// Strict reading: σ is admissible at x iff every occurrence of σ in the full
/// unobservable reach of x targets a state ranked below eta_k.
inline bool strict_admissible(const ProductAutomaton& p, const RankingFunction& r, const StateSet& ns, Rank eta_k,
                              EventId sigma, bool& defined) {
  defined = false;
  const EventMask every = all_events(p);
  for (StateId x : ns)
    for (StateId y : unobservable_reach(p, StateSet{x}, every)) {
      StateId z = p.successor(y, sigma);
      if (z == kNoState) continue;
      defined = true;
      if (r[z] >= eta_k) return false;
    }
  return true;
}

}  // namespace detail

/// Issued pattern with its audit split.
struct ControlPattern {
  EventSet events;          // γ_k as issued
  EventSet legal;           // γ̂_leg(NS)
  EventSet permissive;      // accepted by the permissive pass
  EventSet illegal;         // γ̄_k: seen to reach rank α from the legal reach
  EventSet uncontrollable;  // forced uncontrollable events defined in UR
  StateSet legal_ur;        // reach of NS under γ̂_leg(NS)
  StateSet legal_ns_prime;  // observable successors of legal_ur under γ̂_leg(NS)
};

struct SupervisorState {
  StateSet ns;
  std::size_t k = 0;
  bool stopped = false;
};

struct StepResult {
  ControlPattern pattern;
  StateSet ur;
  StateSet ns_prime;
};

inline bool subset_of_accepting(const ProductAutomaton& p, const StateSet& xs) {
  return std::all_of(xs.begin(), xs.end(), [&p](StateId x) { return p.accepting(x); });
}

inline SupervisorState initial_state(const ProductAutomaton& p) {
  SupervisorState st;
  st.ns = {p.initial()};
  st.stopped = subset_of_accepting(p, st.ns);
  return st;
}

/// γ̂_per(NS, k) as computed on top of a given base pattern, in ascending
/// event-id order. Returns the accepted events.
inline EventSet gamma_per(const ProductAutomaton& p, const RankingFunction& r, const PermissivenessFunction& eta,
                          const StateSet& ns, std::size_t k, const EventSet& base, const EventSet& excluded,
                          const SupervisorOptions& opts = {}) {
  EventSet accepted;
  const Rank eta_k = eta(k);
  if (eta_k == 0) return accepted;
  EventMask current = detail::with_uncontrollable(p, mask_of(p, base));
  for (EventId sigma = 0; sigma < p.num_events(); ++sigma) {
    if (!p.controllable(sigma) || current[sigma] || excluded.contains(sigma)) continue;
    EventMask trial = current;
    trial[sigma] = true;
    bool defined = false;
    bool ok = opts.mode == PerMode::Algorithmic ? detail::re_expand(p, r, ns, trial, eta_k, sigma, defined)
                                                : detail::strict_admissible(p, r, ns, eta_k, sigma, defined);
    if (!ok || !defined) continue;
    if (opts.forbid_unobservable_cycles && detail::has_unobservable_cycle(p, ns, trial)) continue;
    current = std::move(trial);
    accepted.insert(sigma);
  }
  return accepted;
}

/// One iteration of the on-line loop: computes γ_k, UR and NS′ for st.
inline StepResult control_step(const ProductAutomaton& p, const RankingFunction& r, const PermissivenessFunction& eta,
                               const SupervisorState& st, const SupervisorOptions& opts = {}) {
  if (st.ns.empty()) throw EstimatorDivergence("empty state estimate");
  if (st.stopped) throw Error("control_step called on a stopped supervisor");
  StepResult out;
  ControlPattern& g = out.pattern;

  g.legal = gamma_leg(p, r, st.ns);
  const EventMask leg_mask = mask_of(p, g.legal);
  g.legal_ur = unobservable_reach(p, st.ns, leg_mask);
  g.legal_ns_prime = observable_successors(p, g.legal_ur, leg_mask);
  for (StateId x : g.legal_ur)
    for (EventId e = 0; e < p.num_events(); ++e)
      if (StateId y = p.successor(x, e); y != kNoState && r[x] <= r[y] && r[y] == r.alpha) g.illegal.insert(e);

  g.permissive = gamma_per(p, r, eta, st.ns, st.k, g.legal, g.illegal, opts);

  EventSet chosen = g.legal;
  chosen.insert(g.permissive.begin(), g.permissive.end());
  const EventMask allowed = detail::with_uncontrollable(p, mask_of(p, chosen));
  out.ur = unobservable_reach(p, st.ns, allowed);
  out.ns_prime = observable_successors(p, out.ur, allowed);
  for (StateId x : out.ur)
    for (EventId e = 0; e < p.num_events(); ++e)
      if (!p.controllable(e) && p.defined(x, e)) g.uncontrollable.insert(e);
  g.events = chosen;
  g.events.insert(g.uncontrollable.begin(), g.uncontrollable.end());
  return out;
}

/// NS ← {δ_P(x, σ_o) : x ∈ UR}; k ← k + 1.
inline SupervisorState observe_update(const ProductAutomaton& p, const SupervisorState& st, EventId sigma_o,
                                      const StepResult& step) {
  if (sigma_o >= p.num_events()) throw Error("event id out of range");
  if (!p.observable(sigma_o)) throw Error("'" + p.event(sigma_o).name + "' is not observable");
  if (!step.pattern.events.contains(sigma_o))
    throw EstimatorDivergence("observed '" + p.event(sigma_o).name + "', which the issued pattern disables");
  SupervisorState next;
  for (StateId x : step.ur)
    if (StateId y = p.successor(x, sigma_o); y != kNoState) next.ns.insert(y);
  if (next.ns.empty())
    throw EstimatorDivergence("observation '" + p.event(sigma_o).name + "' is inconsistent with the estimate");
  next.k = st.k + 1;
  next.stopped = subset_of_accepting(p, next.ns);
  return next;
}

/// Stateful convenience wrapper around control_step/observe_update.
class Supervisor {
 public:
  Supervisor(const ProductAutomaton& p, const RankingFunction& r, PermissivenessFunction eta,
             SupervisorOptions opts = {})
      : p_(&p), r_(&r), eta_(std::move(eta)), opts_(opts), st_(initial_state(p)) {}

  const SupervisorState& state() const noexcept { return st_; }
  bool stopped() const noexcept { return st_.stopped; }

  /// Computes γ_k for the current estimate (cached until the next observation).
  const StepResult& issue() {
    if (!step_) step_ = control_step(*p_, *r_, eta_, st_, opts_);
    return *step_;
  }

  void observe(EventId sigma_o) {
    st_ = observe_update(*p_, st_, sigma_o, issue());
    step_.reset();
  }

 private:
  const ProductAutomaton* p_;
  const RankingFunction* r_;
  PermissivenessFunction eta_;
  SupervisorOptions opts_;
  SupervisorState st_;
  std::optional<StepResult> step_;
};

inline std::vector<std::string> event_names(const ProductAutomaton& p, const EventSet& es) {
  std::vector<std::string> out;
  for (EventId e : es) out.push_back(p.event(e).name);
  return out;
}

inline std::vector<std::string> state_names(const ProductAutomaton& p, const StateSet& xs) {
  std::vector<std::string> out;
  for (StateId x : xs) out.push_back(p.state_name(x));
  return out;
}

}  // namespace supctl
