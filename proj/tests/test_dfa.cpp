#include <catch_amalgamated.hpp>

#include "semantics.hpp"
#include "supctl/dfa.hpp"
#include "supctl/oracle.hpp"
#include "supctl/random.hpp"

using namespace supctl;
using testing::for_each_word;
using testing::for_each_word_upto;
using testing::holds;

namespace {

const ApOrdering abc({"a", "b", "c"});
const ApOrdering only_a({"a"});

bool total(const Dfa& d) {
  if (d.table.size() != d.num_states * d.alphabet_size()) return false;
  for (StateId t : d.table)
    if (t >= d.num_states) return false;
  return d.initial < d.num_states;
}

}  // namespace

TEST_CASE("compile: true is a single accepting sink") {
  Dfa d = compile(Formula::tt(), abc);
  REQUIRE(d.num_states == 1);
  CHECK(d.accepting[0]);
  for (Letter v = 0; v < d.alphabet_size(); ++v) CHECK(d.next(0, v) == 0);
}

TEST_CASE("compile: an atom is decided by the first letter") {
  Dfa d = compile(Formula::atom("a"), only_a);
  REQUIRE(d.num_states == 3);
  const Letter with_a = only_a.letter({"a"});
  StateId acc = d.next(d.initial, with_a), rej = d.next(d.initial, 0);
  CHECK(d.is_accepting(acc));
  CHECK_FALSE(d.is_accepting(rej));
  CHECK_FALSE(d.is_accepting(d.initial));
  CHECK(acc != rej);
  Word yes{with_a}, no_then_yes{0, with_a};
  CHECK(accepts(d, yes));
  CHECK_FALSE(accepts(d, no_then_yes));
}

TEST_CASE("compile: eventually-a minimizes to two states") {
  Dfa d = compile(parse("F a", only_a), only_a);
  CHECK(d.num_states == 2);
  CHECK(d.num_accepting() == 1);
}

TEST_CASE("compile: reference specification") {
  Formula phi = parse("F a & !a U b & !a U c", abc);
  Dfa d = compile(phi, abc);
  CHECK(d.num_accepting() == 1);
  CHECK(d.acceptance_absorbing());
  CHECK(total(d));
  const Letter a = abc.letter({"a"}), b = abc.letter({"b"}), c = abc.letter({"c"});
  Word bca{b, c, a}, abc_word{a, b, c};
  CHECK(accepts(d, bca));
  CHECK_FALSE(accepts(d, abc_word));
  // Every good prefix of this formula is witnessed, so acceptance coincides
  // with the derivative lower bound.
  for_each_word_upto(abc.alphabet_size(), 4, [&](const Word& w) { CHECK(accepts(d, w) == good_prefix_lb(phi, w, abc)); });
}

TEST_CASE("compile: good prefixes without a witness are accepted") {
  // X a | X !a holds on every infinite word, so even the empty word is a good
  // prefix, although no residual along the way is syntactically True.
  Formula f = parse("X a | X !a", only_a);
  CHECK_FALSE(derivative_automaton(f, only_a).dfa.is_accepting(0));
  Dfa d = compile(f, only_a);
  CHECK(d.num_states == 1);
  Word empty;
  CHECK(accepts(d, empty));
}

TEST_CASE("accepts rejects letters outside the AP ordering") {
  Dfa d = compile(Formula::atom("a"), only_a);
  Word w{4};
  CHECK_THROWS_AS(accepts(d, w), Error);
}

TEST_CASE("minimize merges bisimilar sinks and keeps the language") {
  Dfa d;
  d.ap = only_a;
  d.num_states = 4;
  d.initial = 0;
  d.accepting = {false, true, false, false};
  // 0 --a--> 1 (accepting sink), 0 --{}--> 2; 2 and 3 are rejecting sinks
  // pointing at each other.
  d.table = {2, 1, 1, 1, 3, 3, 2, 2};
  Dfa m = minimize(d);
  CHECK(m.num_states == 3);
  CHECK(oracle::dfa_equivalent(d, m));
  CHECK(minimize(m).num_states == m.num_states);
}

TEST_CASE("compile output is total, absorbing and minimal on random formulas") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gen::Rng rng(seed);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    INFO(to_string(f));
    Dfa d = compile(f, ap);
    CHECK(total(d));
    CHECK(d.acceptance_absorbing());
    CHECK(minimize(d).num_states == d.num_states);
    Dfa raw = derivative_automaton(f, ap).dfa;
    // Derivative acceptance only ever grows under the closure.
    for_each_word_upto(ap.alphabet_size(), 3, [&](const Word& w) {
      if (accepts(raw, w)) CHECK(accepts(d, w));
    });
  }
}

TEST_CASE("language sandwich between the good-prefix bounds") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gen::Rng rng(seed + 31);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    Dfa d = compile(f, ap);
    INFO(to_string(f));
    for_each_word_upto(ap.alphabet_size(), 4, [&](const Word& w) {
      const bool acc = accepts(d, w);
      if (good_prefix_lb(f, w, ap)) CHECK(acc);
      if (acc) CHECK(good_prefix_ub(f, w, ap));
    });
  }
}

TEST_CASE("accepted words are good prefixes on lasso extensions") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    gen::Rng rng(seed + 555);
    ApOrdering ap = gen::letters_ap(rng.between(1, 2));
    Formula f = gen::random_formula(rng, ap, 3);
    Dfa d = compile(f, ap);
    INFO(to_string(f));
    for_each_word_upto(ap.alphabet_size(), 3, [&](const Word& w) {
      if (!accepts(d, w)) return;
      for_each_word_upto(ap.alphabet_size(), 2, [&](const Word& mid) {
        Word u = w;
        u.insert(u.end(), mid.begin(), mid.end());
        for_each_word(ap.alphabet_size(), 1, [&](const Word& v) { CHECK(holds(f, u, v, ap)); });
      });
    });
  }
}

TEST_CASE("state cap aborts compilation") {
  CompileOptions tiny;
  tiny.state_cap = 1;
  CHECK_THROWS_AS(compile(parse("F a", only_a), only_a, tiny), StateCapExceeded);
}

TEST_CASE("DFA JSON round-trip and validation") {
  Dfa d = compile(parse("F a & !a U b & !a U c", abc), abc);
  Dfa back = dfa_from_json(to_json(d));
  CHECK(back.num_states == d.num_states);
  CHECK(back.table == d.table);
  CHECK(back.accepting == d.accepting);
  CHECK(back.ap == d.ap);

  nlohmann::json broken = to_json(compile(Formula::atom("a"), only_a));
  // Send the accepting sink back to a rejecting state.
  const StateId acc = broken["accepting"][0];
  for (auto& t : broken["transitions"][acc]) t = (acc + 1) % 3;
  CHECK_THROWS_AS(dfa_from_json(broken), LoadError);

  nlohmann::json short_row = to_json(d);
  short_row["transitions"][0].erase(0);
  CHECK_THROWS_AS(dfa_from_json(short_row), LoadError);
}
