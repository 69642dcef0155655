#pragma once

// Seeded generators for formulas, plants, acceptors and product instances.

#include <random>
#include <string>
#include <vector>

#include "supctl/common.hpp"
#include "supctl/des.hpp"
#include "supctl/dfa.hpp"
#include "supctl/formula.hpp"
#include "supctl/product.hpp"

namespace supctl::gen {

/// mt19937_64 with plain modulo draws, so sequences do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  /// True with probability num/den.
  bool chance(std::size_t num, std::size_t den) { return below(den) < num; }
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline ApOrdering letters_ap(std::size_t n) {
  static const char* names[] = {"a", "b", "c", "d", "e", "f"};
  if (n > 6) throw Error("letters_ap supports at most 6 atoms");
  return ApOrdering(std::vector<std::string>(names, names + n));
}

/// Random scLTL formula of operator depth at most `depth`.
inline Formula random_formula(Rng& rng, const ApOrdering& ap, int depth) {
  auto literal = [&] {
    if (rng.chance(1, 10)) return Formula::tt();
    const std::string& a = ap[rng.below(ap.size())];
    return rng.chance(1, 3) ? Formula::neg_atom(a) : Formula::atom(a);
  };
  if (depth <= 0 || rng.chance(1, 4)) return literal();
  switch (rng.below(5)) {
    case 0:
      return Formula::conj(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1));
    case 1:
      return Formula::disj(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1));
    case 2:
      return Formula::next(random_formula(rng, ap, depth - 1));
    case 3:
      return Formula::until(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1));
    default:
      return Formula::eventually(random_formula(rng, ap, depth - 1));
  }
}

struct DesParams {
  std::size_t min_states = 2;
  std::size_t max_states = 6;
  std::size_t min_events = 1;
  std::size_t max_events = 5;
  /// Chance (in percent) that δ(x, e) is defined.
  std::size_t density = 45;
};

/// Random plant over `ap`; state 0 is initial. Partitions are random.
inline Des random_des(Rng& rng, const ApOrdering& ap, const DesParams& params = {}) {
  Des d(ap);
  const std::size_t n = rng.between(params.min_states, params.max_states);
  const std::size_t m = rng.between(params.min_events, params.max_events);
  for (std::size_t i = 0; i < n; ++i)
    d.add_state("s" + std::to_string(i), static_cast<Letter>(rng.below(ap.alphabet_size())));
  for (std::size_t e = 0; e < m; ++e) d.add_event("e" + std::to_string(e), rng.chance(2, 3), rng.chance(3, 5));
  for (StateId x = 0; x < n; ++x)
    for (EventId e = 0; e < m; ++e)
      if (rng.chance(params.density, 100)) d.add_transition(x, e, static_cast<StateId>(rng.below(n)));
  d.set_initial(0);
  return d;
}

/// Random total DFA whose accepting states are closed under transitions.
inline Dfa random_absorbing_dfa(Rng& rng, const ApOrdering& ap, std::size_t max_states = 4) {
  Dfa d;
  d.ap = ap;
  d.num_states = rng.between(2, max_states);
  d.initial = 0;
  d.accepting.assign(d.num_states, false);
  for (StateId q = 1; q < d.num_states; ++q) d.accepting[q] = rng.chance(1, 3);
  d.accepting[d.num_states - 1] = true;
  std::vector<StateId> acc;
  for (StateId q = 0; q < d.num_states; ++q)
    if (d.accepting[q]) acc.push_back(q);
  d.table.resize(d.num_states * d.alphabet_size());
  for (StateId q = 0; q < d.num_states; ++q)
    for (Letter v = 0; v < d.alphabet_size(); ++v)
      d.next(q, v) = d.accepting[q] ? acc[rng.below(acc.size())] : static_cast<StateId>(rng.below(d.num_states));
  return d;
}

struct Instance {
  std::uint64_t seed = 0;
  Des des;
  Dfa dfa;
  std::optional<Formula> formula;
  ProductAutomaton product;
};

struct InstanceParams {
  DesParams des;
  std::size_t min_atoms = 1;
  std::size_t max_atoms = 2;
  std::size_t max_product_states = 10;
  int formula_depth = 3;
  /// Products whose initial state is already accepting are trivial for the
  /// supervisor; only this percentage of them is kept.
  std::size_t keep_initially_accepting = 5;
};

/// Random reachable product with at most max_product_states states and at
/// least one accepting state. The acceptor is either compiled from a random
/// formula or drawn directly. Deterministic in `seed`.
inline Instance random_instance(std::uint64_t seed, const InstanceParams& params = {}) {
  Rng rng(seed);
  for (;;) {
    ApOrdering ap = letters_ap(rng.between(params.min_atoms, params.max_atoms));
    Instance inst;
    inst.seed = seed;
    inst.des = random_des(rng, ap, params.des);
    if (rng.chance(1, 2)) {
      Formula f = random_formula(rng, ap, params.formula_depth);
      inst.dfa = compile(f, ap);
      inst.formula = f;
    } else {
      inst.dfa = random_absorbing_dfa(rng, ap);
    }
    inst.product = build_product(inst.des, inst.dfa);
    const ProductAutomaton& p = inst.product;
    if (p.num_states() > params.max_product_states || p.num_accepting() == 0) continue;
    if (p.accepting(p.initial()) && !rng.chance(params.keep_initially_accepting, 100)) continue;
    return inst;
  }
}

}  // namespace supctl::gen
