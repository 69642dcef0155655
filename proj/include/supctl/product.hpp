#pragma once

// Synchronous product of a plant with a good-prefix acceptor.

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/des.hpp"
#include "supctl/dfa.hpp"

namespace supctl {

/// Reachable part of G ⊗ A. The acceptor reads the label of every plant state
/// entered, including the initial one. State 0 is the initial state.
class ProductAutomaton {
 public:
  std::size_t num_states() const noexcept { return jg_.size(); }
  std::size_t num_events() const noexcept { return des_.num_events(); }
  StateId initial() const noexcept { return 0; }

  StateId plant_state(StateId x) const { return jg_.at(x); }
  StateId spec_state(StateId x) const { return ja_.at(x); }
  bool accepting(StateId x) const { return accepting_.at(x); }
  std::size_t num_accepting() const noexcept { return num_accepting_; }

  StateId successor(StateId x, EventId e) const { return delta_[static_cast<std::size_t>(x) * num_events() + e]; }
  bool defined(StateId x, EventId e) const { return successor(x, e) != kNoState; }

  const Event& event(EventId e) const { return des_.event(e); }
  bool controllable(EventId e) const { return des_.controllable(e); }
  bool observable(EventId e) const { return des_.observable(e); }

  const Des& des() const noexcept { return des_; }
  const Dfa& dfa() const noexcept { return dfa_; }

  /// "(plant-name,qN)".
  std::string state_name(StateId x) const {
    return "(" + des_.state(plant_state(x)).name + ",q" + std::to_string(spec_state(x)) + ")";
  }

  /// Product state for (plant state, acceptor state), or kNoState if unreachable.
  StateId find(StateId plant, StateId spec) const {
    for (StateId x = 0; x < num_states(); ++x)
      if (jg_[x] == plant && ja_[x] == spec) return x;
    return kNoState;
  }

 private:
  friend ProductAutomaton build_product(const Des&, const Dfa&);

  Des des_;
  Dfa dfa_;
  std::vector<StateId> jg_;
  std::vector<StateId> ja_;
  std::vector<bool> accepting_;
  std::size_t num_accepting_ = 0;
  std::vector<StateId> delta_;
};

/// Breadth-first construction from (x0, δ_A(q0, L(x0))); events are explored
/// in ascending id order, so state numbering is deterministic.
inline ProductAutomaton build_product(const Des& d, const Dfa& a) {
  if (!(d.ap() == a.ap)) throw Error("DES and DFA use different AP orderings");
  if (d.num_states() == 0) throw Error("DES has no states");
  ProductAutomaton p;
  p.des_ = d;
  p.dfa_ = a;
  std::unordered_map<std::uint64_t, StateId> ids;
  std::deque<StateId> queue;
  auto intern = [&](StateId g, StateId q) {
    const std::uint64_t key = (static_cast<std::uint64_t>(g) << 32) | q;
    auto [it, fresh] = ids.emplace(key, static_cast<StateId>(p.jg_.size()));
    if (fresh) {
      p.jg_.push_back(g);
      p.ja_.push_back(q);
      p.accepting_.push_back(a.is_accepting(q));
      p.delta_.resize(p.jg_.size() * d.num_events(), kNoState);
      queue.push_back(it->second);
    }
    return it->second;
  };
  intern(d.initial(), a.next(a.initial, d.label(d.initial())));
  while (!queue.empty()) {
    StateId x = queue.front();
    queue.pop_front();
    for (EventId e = 0; e < d.num_events(); ++e) {
      StateId g2 = d.successor(p.jg_[x], e);
      if (g2 == kNoState) continue;
      StateId y = intern(g2, a.next(p.ja_[x], d.label(g2)));
      p.delta_[static_cast<std::size_t>(x) * d.num_events() + e] = y;
    }
  }
  p.num_accepting_ = static_cast<std::size_t>(std::count(p.accepting_.begin(), p.accepting_.end(), true));
  return p;
}

/// Σ_P(x), ascending.
inline std::vector<EventId> enabled(const ProductAutomaton& p, StateId x) {
  std::vector<EventId> out;
  for (EventId e = 0; e < p.num_events(); ++e)
    if (p.defined(x, e)) out.push_back(e);
  return out;
}

enum class TransitionClass { Legal, Neutral, Illegal };

inline const char* to_string(TransitionClass c) {
  switch (c) {
    case TransitionClass::Legal:
      return "legal";
    case TransitionClass::Neutral:
      return "neutral";
    case TransitionClass::Illegal:
      return "illegal";
  }
  return "?";
}

/// Classification of a transition from rank `from` to rank `to` under cap
/// `alpha`.
inline TransitionClass classify_ranks(Rank from, Rank to, Rank alpha) {
  if (from > to) return TransitionClass::Legal;
  if (to >= alpha) return TransitionClass::Illegal;
  return TransitionClass::Neutral;
}

/// Exported as a DES document plus `accepting`, `jg` and `ja` arrays.
inline nlohmann::json to_json(const ProductAutomaton& p) {
  using nlohmann::json;
  json j;
  j["ap"] = p.des().ap().atoms();
  json states = json::array();
  for (StateId x = 0; x < p.num_states(); ++x)
    states.push_back({{"id", x},
                      {"name", p.state_name(x)},
                      {"label", p.des().ap().names(p.des().label(p.plant_state(x)))}});
  j["states"] = states;
  j["initial"] = p.initial();
  json events = json::array();
  for (const auto& e : p.des().events())
    events.push_back({{"name", e.name}, {"controllable", e.controllable}, {"observable", e.observable}});
  j["events"] = events;
  json trans = json::array();
  std::vector<StateId> acc, ja;
  std::vector<long long> jg;
  for (StateId x = 0; x < p.num_states(); ++x) {
    for (EventId e = 0; e < p.num_events(); ++e)
      if (p.defined(x, e)) trans.push_back({{"from", x}, {"event", p.event(e).name}, {"to", p.successor(x, e)}});
    if (p.accepting(x)) acc.push_back(x);
    jg.push_back(p.des().state(p.plant_state(x)).id);
    ja.push_back(p.spec_state(x));
  }
  j["transitions"] = trans;
  j["accepting"] = acc;
  j["jg"] = jg;
  j["ja"] = ja;
  return j;
}

}  // namespace supctl
