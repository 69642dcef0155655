#pragma once

// Ranking functions on product automata, ranking-based controllability and the
// pair verifier for ranking-based observability.

#include <deque>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"
#include "supctl/product.hpp"

namespace supctl {

struct RankingFunction {
  std::vector<Rank> xi;
  Rank alpha = 1;
  /// States without any defined event (diagnostic only).
  std::vector<StateId> dead_states;

  Rank operator[](StateId x) const { return xi.at(x); }
  std::size_t size() const noexcept { return xi.size(); }
  friend bool operator==(const RankingFunction& a, const RankingFunction& b) {
    return a.alpha == b.alpha && a.xi == b.xi;
  }
};

enum class WorklistOrder { Fifo, Lifo };

struct RankingOptions {
  WorklistOrder order = WorklistOrder::Fifo;
  /// Shuffles the initial worklist; the fixpoint must not depend on it.
  std::optional<std::uint64_t> shuffle_seed;
};

/// Least fixpoint of ξ(x) = up_α(ξ̂(x), x) starting from ξ ≡ 0, with
/// α = |X_P| - |F_P| + 1. ξ̂ takes the worst uncontrollable successor when one
/// is defined, otherwise the best controllable successor.
inline RankingFunction compute_ranking(const ProductAutomaton& p, const RankingOptions& opts = {}) {
  const std::size_t n = p.num_states();
  if (n == 0) throw Error("empty product automaton");
  RankingFunction r;
  r.alpha = static_cast<Rank>(n - p.num_accepting() + 1);
  r.xi.assign(n, 0);

  std::vector<std::vector<StateId>> preds(n);
  for (StateId x = 0; x < n; ++x) {
    bool any = false;
    for (EventId e = 0; e < p.num_events(); ++e)
      if (StateId y = p.successor(x, e); y != kNoState) {
        preds[y].push_back(x);
        any = true;
      }
    if (!any) r.dead_states.push_back(x);
  }

  auto estimate = [&](StateId x) -> Rank {
    bool has_uc = false, has_c = false;
    Rank worst = 0, best = r.alpha;
    for (EventId e = 0; e < p.num_events(); ++e) {
      StateId y = p.successor(x, e);
      if (y == kNoState) continue;
      if (p.controllable(e)) {
        has_c = true;
        best = std::min(best, r.xi[y]);
      } else {
        has_uc = true;
        worst = std::max(worst, r.xi[y]);
      }
    }
    if (has_uc) return worst;
    if (has_c) return best;
    // Dead state: min over the empty set. α - 1 lets up_α push it to α.
    return p.accepting(x) ? 0 : r.alpha - 1;
  };
  auto up = [&](Rank v, StateId x) -> Rank { return (!p.accepting(x) && v < r.alpha) ? v + 1 : v; };

  std::deque<StateId> work;
  std::vector<bool> queued(n, true);
  for (StateId x = 0; x < n; ++x) work.push_back(x);
  if (opts.shuffle_seed) {
    std::mt19937_64 rng(*opts.shuffle_seed);
    std::shuffle(work.begin(), work.end(), rng);
  }
  while (!work.empty()) {
    StateId x;
    if (opts.order == WorklistOrder::Fifo) {
      x = work.front();
      work.pop_front();
    } else {
      x = work.back();
      work.pop_back();
    }
    queued[x] = false;
    Rank target = up(estimate(x), x);
    if (r.xi[x] < target) {
      r.xi[x] = target;
      for (StateId w : preds[x])
        if (!queued[w]) {
          queued[w] = true;
          work.push_back(w);
        }
    }
  }
  return r;
}

inline bool is_controllable(const ProductAutomaton& p, const RankingFunction& r) { return r[p.initial()] < r.alpha; }

inline TransitionClass classify(const ProductAutomaton& p, const RankingFunction& r, StateId x, EventId e) {
  StateId y = p.successor(x, e);
  if (y == kNoState)
    throw UndefinedTransition("undefined transition: " + p.state_name(x) + " has no '" + p.event(e).name + "'");
  return classify_ranks(r[x], r[y], r.alpha);
}

// ---------------------------------------------------------------------------
// Observability

struct ObservabilityWitness {
  StateId x1 = 0;  // reached by s; sigma decreases the rank here
  StateId x2 = 0;  // reached by s_prime; sigma does not decrease the rank here
  EventId sigma = 0;
  EventSeq s;
  EventSeq s_prime;
};

struct ObservabilityVerdict {
  bool observable = true;
  std::optional<ObservabilityWitness> witness;
};

/// Explores pairs (x1, x2) of states reachable by strings with equal
/// projections: unobservable events move one side, observable events move both.
/// A reachable pair with an event that is rank-decreasing on the left but not
/// on the right refutes observability.
inline ObservabilityVerdict is_observable(const ProductAutomaton& p, const RankingFunction& r) {
  const std::size_t n = p.num_states();
  const std::size_t m = p.num_events();
  struct Parent {
    std::size_t prev;
    EventId e;
    std::uint8_t side;  // 0 left, 1 right, 2 both
  };
  constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
  std::vector<std::optional<Parent>> parent(n * n);
  std::deque<std::size_t> queue;
  const std::size_t start = static_cast<std::size_t>(p.initial()) * n + p.initial();
  parent[start] = Parent{kRoot, 0, 0};
  queue.push_back(start);

  auto witness_at = [&](StateId x1, StateId x2) -> std::optional<EventId> {
    for (EventId e = 0; e < m; ++e) {
      StateId y1 = p.successor(x1, e), y2 = p.successor(x2, e);
      if (y1 == kNoState || y2 == kNoState) continue;
      if (r[x1] > r[y1] && r[x2] <= r[y2]) return e;
    }
    return std::nullopt;
  };

  while (!queue.empty()) {
    const std::size_t key = queue.front();
    queue.pop_front();
    const auto x1 = static_cast<StateId>(key / n), x2 = static_cast<StateId>(key % n);
    if (auto sigma = witness_at(x1, x2)) {
      ObservabilityWitness w{x1, x2, *sigma, {}, {}};
      for (std::size_t k = key; parent[k]->prev != kRoot; k = parent[k]->prev) {
        const Parent& pr = *parent[k];
        if (pr.side != 1) w.s.push_back(pr.e);
        if (pr.side != 0) w.s_prime.push_back(pr.e);
      }
      std::reverse(w.s.begin(), w.s.end());
      std::reverse(w.s_prime.begin(), w.s_prime.end());
      return {false, std::move(w)};
    }
    auto push = [&](StateId y1, StateId y2, EventId e, std::uint8_t side) {
      const std::size_t k = static_cast<std::size_t>(y1) * n + y2;
      if (parent[k]) return;
      parent[k] = Parent{key, e, side};
      queue.push_back(k);
    };
    for (EventId e = 0; e < m; ++e) {
      StateId y1 = p.successor(x1, e), y2 = p.successor(x2, e);
      if (p.observable(e)) {
        if (y1 != kNoState && y2 != kNoState) push(y1, y2, e, 2);
      } else {
        if (y1 != kNoState) push(y1, x2, e, 0);
        if (y2 != kNoState) push(x1, y2, e, 1);
      }
    }
  }
  return {true, std::nullopt};
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const RankingFunction& r, const ProductAutomaton& p) {
  nlohmann::json xs = nlohmann::json::array();
  for (StateId x = 0; x < r.size(); ++x) xs.push_back({{"state", x}, {"name", p.state_name(x)}, {"xi", r[x]}});
  nlohmann::json j{{"alpha", r.alpha}, {"xi", xs}};
  std::vector<StateId> dead(r.dead_states.begin(), r.dead_states.end());
  j["dead_states"] = dead;
  return j;
}

inline RankingFunction ranking_from_json(const nlohmann::json& j) {
  try {
    RankingFunction r;
    r.alpha = j.at("alpha").get<Rank>();
    const auto& xs = j.at("xi");
    r.xi.assign(xs.size(), 0);
    std::vector<bool> seen(xs.size(), false);
    for (const auto& e : xs) {
      auto s = e.at("state").get<StateId>();
      if (s >= xs.size() || seen[s]) throw LoadError("rank entries must cover states 0..n-1 exactly once");
      seen[s] = true;
      r.xi[s] = e.at("xi").get<Rank>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed rank document: ") + e.what());
  }
}

inline nlohmann::json to_json(const ObservabilityVerdict& v, const ProductAutomaton& p) {
  nlohmann::json j{{"observable", v.observable}};
  if (v.witness) {
    auto names = [&p](const EventSeq& s) {
      std::vector<std::string> out;
      for (EventId e : s) out.push_back(p.event(e).name);
      return out;
    };
    const auto& w = *v.witness;
    j["witness"] = {{"x1", w.x1},
                    {"x1_name", p.state_name(w.x1)},
                    {"x2", w.x2},
                    {"x2_name", p.state_name(w.x2)},
                    {"sigma", p.event(w.sigma).name},
                    {"s", names(w.s)},
                    {"s_prime", names(w.s_prime)}};
  }
  return j;
}

}  // namespace supctl
