#pragma once

// Labeled, partially observed discrete event systems.

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"

namespace supctl {

struct Event {
  std::string name;
  bool controllable = true;
  bool observable = true;
};

struct PlantState {
  long long id = 0;  // identifier used in documents
  std::string name;
  Letter label = 0;
};

using EventSeq = std::vector<EventId>;
/// Event string restricted to observable events.
using ObsSeq = std::vector<EventId>;

/// A plant G = ((X, Σ, δ, x0), AP, L) with the controllable/observable event
/// partitions. δ is partial and deterministic.
class Des {
 public:
  Des() = default;
  explicit Des(ApOrdering ap) : ap_(std::move(ap)) {}

  StateId add_state(std::string name, Letter label, std::optional<long long> id = std::nullopt) {
    if (label >= ap_.alphabet_size()) throw LoadError("label of state '" + name + "' uses atoms outside AP");
    const auto sid = static_cast<StateId>(states_.size());
    long long ext = id.value_or(static_cast<long long>(sid));
    if (ext_index_.contains(ext)) throw LoadError("duplicate state id " + std::to_string(ext));
    ext_index_[ext] = sid;
    states_.push_back({ext, std::move(name), label});
    delta_.emplace_back(events_.size(), kNoState);
    return sid;
  }

  EventId add_event(std::string name, bool controllable, bool observable) {
    for (const auto& e : events_)
      if (e.name == name) throw LoadError("duplicate event '" + name + "'");
    events_.push_back({std::move(name), controllable, observable});
    for (auto& row : delta_) row.push_back(kNoState);
    return static_cast<EventId>(events_.size() - 1);
  }

  void add_transition(StateId from, EventId e, StateId to) {
    if (from >= states_.size() || to >= states_.size() || e >= events_.size())
      throw LoadError("transition references an unknown state or event");
    if (delta_[from][e] != kNoState)
      throw LoadError("duplicate transition from state " + std::to_string(states_[from].id) + " on '" +
                      events_[e].name + "'");
    delta_[from][e] = to;
  }

  void set_initial(StateId x) {
    if (x >= states_.size()) throw LoadError("initial state out of range");
    initial_ = x;
  }

  const ApOrdering& ap() const noexcept { return ap_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_events() const noexcept { return events_.size(); }
  StateId initial() const noexcept { return initial_; }
  const PlantState& state(StateId x) const { return states_.at(x); }
  const Event& event(EventId e) const { return events_.at(e); }
  const std::vector<Event>& events() const noexcept { return events_; }
  Letter label(StateId x) const { return states_.at(x).label; }

  bool controllable(EventId e) const { return events_.at(e).controllable; }
  bool observable(EventId e) const { return events_.at(e).observable; }

  /// Successor or kNoState when δ(x, e) is undefined.
  StateId successor(StateId x, EventId e) const { return delta_.at(x).at(e); }

  std::optional<EventId> find_event(std::string_view name) const {
    for (EventId e = 0; e < events_.size(); ++e)
      if (events_[e].name == name) return e;
    return std::nullopt;
  }

  EventId event_id(std::string_view name) const {
    if (auto e = find_event(name)) return *e;
    throw Error("unknown event '" + std::string(name) + "'");
  }

  StateId state_by_id(long long ext) const {
    auto it = ext_index_.find(ext);
    if (it == ext_index_.end()) throw LoadError("unknown state id " + std::to_string(ext));
    return it->second;
  }

  std::optional<StateId> find_state(std::string_view name) const {
    for (StateId x = 0; x < states_.size(); ++x)
      if (states_[x].name == name) return x;
    return std::nullopt;
  }

 private:
  ApOrdering ap_;
  std::vector<PlantState> states_;
  std::vector<Event> events_;
  std::vector<std::vector<StateId>> delta_;
  std::map<long long, StateId> ext_index_;
  StateId initial_ = 0;
};

/// Σ(x), ascending by event id.
inline std::vector<EventId> enabled(const Des& d, StateId x) {
  std::vector<EventId> out;
  for (EventId e = 0; e < d.num_events(); ++e)
    if (d.successor(x, e) != kNoState) out.push_back(e);
  return out;
}

inline StateId step(const Des& d, StateId x, EventId e) {
  if (x >= d.num_states() || e >= d.num_events()) throw UndefinedTransition("state or event out of range");
  StateId y = d.successor(x, e);
  if (y == kNoState)
    throw UndefinedTransition("undefined transition: state '" + d.state(x).name + "' has no '" + d.event(e).name + "'");
  return y;
}

/// δ(x0, s), or nullopt when s is not in L(G).
inline std::optional<StateId> run(const Des& d, std::span<const EventId> s) {
  StateId x = d.initial();
  for (EventId e : s) {
    if (e >= d.num_events()) throw Error("unknown event id " + std::to_string(e));
    x = d.successor(x, e);
    if (x == kNoState) return std::nullopt;
  }
  return x;
}

/// Natural projection onto the observable events.
inline ObsSeq project(const Des& d, std::span<const EventId> s) {
  ObsSeq out;
  for (EventId e : s) {
    if (e >= d.num_events()) throw Error("unknown event id " + std::to_string(e));
    if (d.observable(e)) out.push_back(e);
  }
  return out;
}

struct ValidationReport {
  StateSet reachable;
  std::vector<StateId> unreachable;  // warnings
  std::vector<StateId> deadlocks;    // reachable states without defined events
  bool deadlock_free = true;
  std::vector<std::string> warnings;

  bool ok() const { return deadlock_free; }
};

inline ValidationReport validate(const Des& d) {
  ValidationReport r;
  if (d.num_states() == 0) {
    r.deadlock_free = false;
    r.warnings.push_back("DES has no states");
    return r;
  }
  std::deque<StateId> queue{d.initial()};
  r.reachable.insert(d.initial());
  while (!queue.empty()) {
    StateId x = queue.front();
    queue.pop_front();
    bool any = false;
    for (EventId e = 0; e < d.num_events(); ++e) {
      StateId y = d.successor(x, e);
      if (y == kNoState) continue;
      any = true;
      if (r.reachable.insert(y).second) queue.push_back(y);
    }
    if (!any) r.deadlocks.push_back(x);
  }
  std::sort(r.deadlocks.begin(), r.deadlocks.end());
  r.deadlock_free = r.deadlocks.empty();
  for (StateId x = 0; x < d.num_states(); ++x)
    if (!r.reachable.contains(x)) {
      r.unreachable.push_back(x);
      r.warnings.push_back("state '" + d.state(x).name + "' is unreachable");
    }
  for (StateId x : r.deadlocks) r.warnings.push_back("deadlock at state '" + d.state(x).name + "'");
  return r;
}

inline nlohmann::json to_json(const ValidationReport& r, const Des& d) {
  nlohmann::json j;
  j["deadlock_free"] = r.deadlock_free;
  auto ids = [&d](const auto& xs) {
    std::vector<long long> out;
    for (StateId x : xs) out.push_back(d.state(x).id);
    return out;
  };
  j["deadlocks"] = ids(r.deadlocks);
  j["unreachable"] = ids(r.unreachable);
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// JSON: {ap, states:[{id,name,label}], initial, events:[{name,controllable,
// observable}], transitions:[{from,event,to}]}

inline nlohmann::json to_json(const Des& d) {
  using nlohmann::json;
  json j;
  j["ap"] = d.ap().atoms();
  json states = json::array();
  for (StateId x = 0; x < d.num_states(); ++x)
    states.push_back({{"id", d.state(x).id}, {"name", d.state(x).name}, {"label", d.ap().names(d.label(x))}});
  j["states"] = states;
  j["initial"] = d.state(d.initial()).id;
  json events = json::array();
  for (const auto& e : d.events())
    events.push_back({{"name", e.name}, {"controllable", e.controllable}, {"observable", e.observable}});
  j["events"] = events;
  json trans = json::array();
  for (StateId x = 0; x < d.num_states(); ++x)
    for (EventId e = 0; e < d.num_events(); ++e)
      if (StateId y = d.successor(x, e); y != kNoState)
        trans.push_back({{"from", d.state(x).id}, {"event", d.event(e).name}, {"to", d.state(y).id}});
  j["transitions"] = trans;
  return j;
}

inline Des des_from_json(const nlohmann::json& j) {
  try {
    Des d(ApOrdering(j.at("ap").get<std::vector<std::string>>()));
    for (const auto& s : j.at("states")) {
      if (!s.contains("label")) throw LoadError("state without a label");
      const long long id = s.at("id").get<long long>();
      std::string name = s.contains("name") ? s.at("name").get<std::string>() : std::to_string(id);
      d.add_state(std::move(name), d.ap().letter(s.at("label").get<std::vector<std::string>>()), id);
    }
    if (d.num_states() == 0) throw LoadError("DES has no states");
    for (const auto& e : j.at("events"))
      d.add_event(e.at("name").get<std::string>(), e.at("controllable").get<bool>(), e.at("observable").get<bool>());
    for (const auto& t : j.at("transitions")) {
      const std::string ev = t.at("event").get<std::string>();
      auto e = d.find_event(ev);
      if (!e) throw LoadError("transition uses undeclared event '" + ev + "'");
      d.add_transition(d.state_by_id(t.at("from").get<long long>()), *e, d.state_by_id(t.at("to").get<long long>()));
    }
    d.set_initial(d.state_by_id(j.at("initial").get<long long>()));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed DES document: ") + e.what());
  } catch (const LoadError&) {
    throw;
  } catch (const Error& e) {
    throw LoadError(e.what());
  }
}

}  // namespace supctl
