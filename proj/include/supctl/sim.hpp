#pragma once

// Closed-loop episodes: a plant policy resolves the plant's choices among the
// events the supervisor enables; the supervisor only sees observable events.

#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/dfa.hpp"
#include "supctl/formula.hpp"
#include "supctl/product.hpp"
#include "supctl/ranking.hpp"
#include "supctl/supervisor.hpp"

namespace supctl {

/// Raised when the product fails the controllability/observability guard.
class NoSupervisor : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Policies

struct PolicyContext {
  const ProductAutomaton& p;
  const RankingFunction& r;
  StateId state;
  const std::vector<EventId>& options;  // enabled ∩ γ_k, ascending
  std::size_t k;
  Rank eta_k;
};

class PlantPolicy {
 public:
  virtual ~PlantPolicy() = default;
  /// Event to execute, or nullopt when the policy has nothing left to say.
  virtual std::optional<EventId> choose(const PolicyContext& ctx) = 0;
  virtual std::string kind() const = 0;
};

class RandomPolicy : public PlantPolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::optional<EventId> choose(const PolicyContext& ctx) override {
    // Plain modulo keeps traces identical across standard library versions.
    return ctx.options[rng_() % ctx.options.size()];
  }
  std::string kind() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

/// Replays a fixed event script. An event the supervisor does not allow at
/// that point is a policy error.
class ScriptedPolicy : public PlantPolicy {
 public:
  explicit ScriptedPolicy(EventSeq script) : script_(std::move(script)) {}
  std::optional<EventId> choose(const PolicyContext& ctx) override {
    if (pos_ >= script_.size()) return std::nullopt;
    EventId e = script_[pos_++];
    if (std::find(ctx.options.begin(), ctx.options.end(), e) == ctx.options.end())
      throw PolicyError("script event '" + ctx.p.event(e).name + "' (position " + std::to_string(pos_) +
                        ") is not enabled under the issued pattern at " + ctx.p.state_name(ctx.state));
    return e;
  }
  std::string kind() const override { return "script"; }

 private:
  EventSeq script_;
  std::size_t pos_ = 0;
};

/// Prefers neutral transitions, then the highest-ranked successor; ties go to
/// the lowest event id.
class AdversarialPolicy : public PlantPolicy {
 public:
  std::optional<EventId> choose(const PolicyContext& ctx) override {
    auto score = [&](EventId e) {
      StateId y = ctx.p.successor(ctx.state, e);
      bool neutral = classify_ranks(ctx.r[ctx.state], ctx.r[y], ctx.r.alpha) == TransitionClass::Neutral;
      return std::pair<int, Rank>(neutral ? 1 : 0, ctx.r[y]);
    };
    EventId best = ctx.options.front();
    for (EventId e : ctx.options)
      if (score(e) > score(best)) best = e;
    return best;
  }
  std::string kind() const override { return "adversarial"; }
};

/// Lists the options with their classification and rank change and reads an
/// event name per step. End of input ends the episode.
class InteractivePolicy : public PlantPolicy {
 public:
  InteractivePolicy(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  std::optional<EventId> choose(const PolicyContext& ctx) override {
    for (;;) {
      out_ << "k=" << ctx.k << " eta=" << ctx.eta_k << " state=" << ctx.p.state_name(ctx.state)
           << " xi=" << ctx.r[ctx.state] << "\n";
      for (EventId e : ctx.options) {
        StateId y = ctx.p.successor(ctx.state, e);
        const long long delta = static_cast<long long>(ctx.r[y]) - static_cast<long long>(ctx.r[ctx.state]);
        out_ << "  " << ctx.p.event(e).name << (ctx.p.observable(e) ? "" : " (unobservable)") << "  "
             << to_string(classify_ranks(ctx.r[ctx.state], ctx.r[y], ctx.r.alpha)) << "  xi " << (delta >= 0 ? "+" : "")
             << delta << " -> " << ctx.p.state_name(y) << "\n";
      }
      out_ << "event> " << std::flush;
      std::string name;
      if (!(in_ >> name)) return std::nullopt;
      for (EventId e : ctx.options)
        if (ctx.p.event(e).name == name) return e;
      out_ << "'" << name << "' is not one of the listed events\n";
    }
  }
  std::string kind() const override { return "interactive"; }

 private:
  std::istream& in_;
  std::ostream& out_;
};

/// Whitespace-separated event names.
inline EventSeq parse_script(const Des& d, std::istream& in) {
  EventSeq out;
  std::string name;
  while (in >> name) {
    auto e = d.find_event(name);
    if (!e) throw LoadError("script uses unknown event '" + name + "'");
    out.push_back(*e);
  }
  return out;
}

inline EventSeq parse_script(const Des& d, const std::string& text) {
  std::istringstream in(text);
  return parse_script(d, in);
}

// ---------------------------------------------------------------------------
// Traces

enum class Outcome { Accepted, GuardTripped, EstimatorDiverged, ScriptExhausted };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Accepted:
      return "accepted";
    case Outcome::GuardTripped:
      return "guard-tripped";
    case Outcome::EstimatorDiverged:
      return "estimator-diverged";
    case Outcome::ScriptExhausted:
      return "script-exhausted";
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view s) {
  for (Outcome o : {Outcome::Accepted, Outcome::GuardTripped, Outcome::EstimatorDiverged, Outcome::ScriptExhausted})
    if (s == to_string(o)) return o;
  throw LoadError("unknown outcome '" + std::string(s) + "'");
}

struct TraceStep {
  std::size_t k = 0;
  StateId state = 0;
  EventId event = 0;
  StateId next = 0;
  bool observable = false;
  EventSet gamma;
  Rank xi_before = 0;
  Rank xi_after = 0;
  Rank eta = 0;
  TransitionClass cls = TransitionClass::Neutral;
  StateSet ns_before;
  StateSet ns_after;
};

struct Trace {
  nlohmann::json meta = nlohmann::json::object();
  StateId initial = 0;
  std::vector<TraceStep> steps;
  Outcome outcome = Outcome::GuardTripped;
  std::string reason;
  std::size_t observations = 0;

  EventSeq events() const {
    EventSeq out;
    for (const auto& s : steps) out.push_back(s.event);
    return out;
  }
};

struct EpisodeLimits {
  /// 0 selects the defaults 10·|X_P| and 100·|X_P|.
  std::size_t max_unobservable_per_epoch = 0;
  std::size_t max_steps = 0;
};

inline void require_supervisor(const ProductAutomaton& p, const RankingFunction& r) {
  if (!is_controllable(p, r)) throw NoSupervisor("product automaton is not controllable");
  if (!is_observable(p, r).observable) throw NoSupervisor("product automaton is not observable");
}

/// Runs one closed-loop episode. The supervisor issues γ_k, the policy fires
/// events from enabled ∩ γ_k one at a time, and observable events advance the
/// estimate. Terminates when the estimate is inside F_P, at a step limit, when
/// the plant is blocked, on estimator divergence, or when the policy stops.
/// Any termination after the plant has entered F_P counts as accepted.
inline Trace run_episode(const ProductAutomaton& p, const RankingFunction& r, const PermissivenessFunction& eta,
                         PlantPolicy& policy, const SupervisorOptions& opts = {}, EpisodeLimits limits = {},
                         nlohmann::json meta = nlohmann::json::object()) {
  require_supervisor(p, r);
  eta.check(r.alpha);
  if (limits.max_unobservable_per_epoch == 0) limits.max_unobservable_per_epoch = 10 * p.num_states();
  if (limits.max_steps == 0) limits.max_steps = 100 * p.num_states();

  Trace t;
  t.meta = std::move(meta);
  t.meta["eta"] = eta.to_string();
  t.meta["mode"] = to_string(opts.mode);
  t.meta["policy"] = policy.kind();
  t.meta["alpha"] = r.alpha;
  t.meta["product_states"] = p.num_states();
  t.initial = p.initial();

  Supervisor sup(p, r, eta, opts);
  StateId x = p.initial();
  std::size_t unobs = 0;
  auto finish = [&](Outcome o, std::string reason) {
    if (o != Outcome::Accepted && p.accepting(x)) {
      reason = "plant accepting; " + reason;
      o = Outcome::Accepted;
    }
    t.outcome = o;
    t.reason = std::move(reason);
    t.observations = sup.state().k;
    return t;
  };
  if (sup.stopped()) return finish(Outcome::Accepted, "estimate inside accepting set");

  for (;;) {
    const StepResult* step = nullptr;
    try {
      step = &sup.issue();
    } catch (const EstimatorDivergence& e) {
      return finish(Outcome::EstimatorDiverged, e.what());
    }
    if (!step->ur.contains(x)) return finish(Outcome::EstimatorDiverged, "true state missing from the estimate");
    std::vector<EventId> options;
    for (EventId e = 0; e < p.num_events(); ++e)
      if (p.defined(x, e) && step->pattern.events.contains(e)) options.push_back(e);
    if (options.empty()) return finish(Outcome::GuardTripped, "plant blocked under the issued pattern");

    const std::size_t k = sup.state().k;
    std::optional<EventId> choice = policy.choose({p, r, x, options, k, eta(k)});
    if (!choice) return finish(Outcome::ScriptExhausted, "policy ended the episode");
    const EventId e = *choice;
    if (std::find(options.begin(), options.end(), e) == options.end())
      throw PolicyError("policy chose '" + p.event(e).name + "', which is not enabled under the issued pattern");

    TraceStep s;
    s.k = k;
    s.state = x;
    s.event = e;
    s.next = p.successor(x, e);
    s.observable = p.observable(e);
    s.gamma = step->pattern.events;
    s.xi_before = r[x];
    s.xi_after = r[s.next];
    s.eta = eta(k);
    s.cls = classify_ranks(s.xi_before, s.xi_after, r.alpha);
    s.ns_before = sup.state().ns;
    x = s.next;
    if (s.observable) {
      unobs = 0;
      try {
        sup.observe(e);
      } catch (const EstimatorDivergence& err) {
        s.ns_after = {};
        t.steps.push_back(std::move(s));
        return finish(Outcome::EstimatorDiverged, err.what());
      }
    } else {
      ++unobs;
    }
    s.ns_after = sup.state().ns;
    t.steps.push_back(std::move(s));

    if (sup.stopped()) return finish(Outcome::Accepted, "estimate inside accepting set");
    if (unobs > limits.max_unobservable_per_epoch)
      return finish(Outcome::GuardTripped, "unobservable step limit reached within one observation epoch");
    if (t.steps.size() >= limits.max_steps) return finish(Outcome::GuardTripped, "total step limit reached");
  }
}

/// True iff the label word of the visited plant states, starting with the
/// initial state, is a good prefix of f.
inline bool check_trace(const Trace& t, const ProductAutomaton& p, const Formula& f) {
  const Des& d = p.des();
  Word w{d.label(p.plant_state(t.initial))};
  for (const auto& s : t.steps) w.push_back(d.label(p.plant_state(s.next)));
  return accepts(compile(f, d.ap()), w);
}

/// Post-hoc membership check: consecutive states are linked by δ_P, every
/// executed event was in the issued pattern, and every issued pattern
/// contains the uncontrollable events defined at the current state.
inline bool trace_consistent(const Trace& t, const ProductAutomaton& p, std::string* why = nullptr) {
  auto fail = [why](std::string m) {
    if (why) *why = std::move(m);
    return false;
  };
  StateId x = t.initial;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.state != x) return fail("step " + std::to_string(i) + " does not continue from the previous state");
    if (p.successor(x, s.event) != s.next) return fail("step " + std::to_string(i) + " is not a plant transition");
    if (!s.gamma.contains(s.event)) return fail("step " + std::to_string(i) + " executes a disabled event");
    for (EventId e = 0; e < p.num_events(); ++e)
      if (!p.controllable(e) && p.defined(x, e) && !s.gamma.contains(e))
        return fail("step " + std::to_string(i) + " disables an uncontrollable event");
    x = s.next;
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSONL

inline std::string to_jsonl(const Trace& t, const ProductAutomaton& p) {
  using nlohmann::json;
  auto ids = [](const auto& xs) { return std::vector<StateId>(xs.begin(), xs.end()); };
  std::string out;
  json meta = t.meta;
  meta["type"] = "meta";
  meta["initial"] = t.initial;
  out += meta.dump() + "\n";
  for (const auto& s : t.steps) {
    json j{{"type", "step"},
           {"k", s.k},
           {"state", s.state},
           {"state_name", p.state_name(s.state)},
           {"event", p.event(s.event).name},
           {"next", s.next},
           {"observable", s.observable},
           {"gamma", event_names(p, s.gamma)},
           {"xi_before", s.xi_before},
           {"xi_after", s.xi_after},
           {"eta", s.eta},
           {"class", to_string(s.cls)},
           {"ns_before", ids(s.ns_before)},
           {"ns_after", ids(s.ns_after)}};
    out += j.dump() + "\n";
  }
  json end{{"type", "outcome"},
           {"outcome", to_string(t.outcome)},
           {"reason", t.reason},
           {"steps", t.steps.size()},
           {"observations", t.observations}};
  out += end.dump() + "\n";
  return out;
}

inline Trace trace_from_jsonl(const std::string& text, const ProductAutomaton& p) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  bool have_meta = false, have_outcome = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "meta") {
        t.initial = j.at("initial").get<StateId>();
        j.erase("type");
        j.erase("initial");
        t.meta = j;
        have_meta = true;
      } else if (type == "step") {
        TraceStep s;
        s.k = j.at("k").get<std::size_t>();
        s.state = j.at("state").get<StateId>();
        s.event = p.des().event_id(j.at("event").get<std::string>());
        s.next = j.at("next").get<StateId>();
        s.observable = j.at("observable").get<bool>();
        for (const auto& n : j.at("gamma")) s.gamma.insert(p.des().event_id(n.get<std::string>()));
        s.xi_before = j.at("xi_before").get<Rank>();
        s.xi_after = j.at("xi_after").get<Rank>();
        s.eta = j.at("eta").get<Rank>();
        const std::string c = j.at("class").get<std::string>();
        s.cls = c == "legal" ? TransitionClass::Legal : c == "illegal" ? TransitionClass::Illegal : TransitionClass::Neutral;
        for (StateId x : j.at("ns_before").get<std::vector<StateId>>()) s.ns_before.insert(x);
        for (StateId x : j.at("ns_after").get<std::vector<StateId>>()) s.ns_after.insert(x);
        t.steps.push_back(std::move(s));
      } else if (type == "outcome") {
        t.outcome = parse_outcome(j.at("outcome").get<std::string>());
        t.reason = j.at("reason").get<std::string>();
        t.observations = j.at("observations").get<std::size_t>();
        have_outcome = true;
      } else {
        throw LoadError("unknown trace line type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed trace: ") + e.what());
  } catch (const LoadError&) {
    throw;
  } catch (const Error& e) {
    throw LoadError(e.what());
  }
  if (!have_meta || !have_outcome) throw LoadError("trace needs a meta line and an outcome line");
  return t;
}

}  // namespace supctl
