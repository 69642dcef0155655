#include <catch_amalgamated.hpp>

#include <functional>

#include "supctl/random.hpp"
#include "support.hpp"

using namespace supctl;
using testing::Example;

TEST_CASE("single accepting self-loop") {
  Des d(ApOrdering({"a"}));
  d.add_state("s", 0);
  d.add_transition(0, d.add_event("e", true, true), 0);
  ProductAutomaton p = build_product(d, compile(Formula::tt(), d.ap()));
  CHECK(p.num_states() == 1);
  CHECK(p.accepting(0));
  CHECK(p.successor(0, 0) == 0);
}

TEST_CASE("initial state consumes the initial label") {
  Des d(ApOrdering({"a"}));
  d.add_state("s", 1);
  d.add_transition(0, d.add_event("e", true, true), 0);
  ProductAutomaton p = build_product(d, compile(Formula::atom("a"), d.ap()));
  CHECK(p.accepting(p.initial()));
}

TEST_CASE("AP mismatch is rejected") {
  Des d(ApOrdering({"b"}));
  d.add_state("s", 0);
  CHECK_THROWS_AS(build_product(d, compile(Formula::atom("a"), ApOrdering({"a"}))), Error);
}

TEST_CASE("worked example product") {
  Example ex;
  const ProductAutomaton& p = ex.product;
  CHECK(p.num_states() == 8);
  CHECK(p.num_accepting() == 1);
  CHECK(p.initial() == ex.xy(0, 0));
  CHECK(p.accepting(ex.xy(1, 1)));
  CHECK_FALSE(p.accepting(ex.xy(1, 5)));
  CHECK(p.successor(ex.xy(0, 0), ex.ev("u2")) == ex.xy(2, 3));
  CHECK(p.successor(ex.xy(2, 3), ex.ev("o2")) == ex.xy(3, 2));
  CHECK(p.successor(ex.xy(3, 2), ex.ev("o3")) == ex.xy(1, 1));
}

TEST_CASE("projection coherence and size bound on random instances") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    gen::InstanceParams params;
    params.max_product_states = 40;
    params.keep_initially_accepting = 100;
    gen::Instance inst = gen::random_instance(seed, params);
    const ProductAutomaton& p = inst.product;
    const Des& d = inst.des;
    const Dfa& a = inst.dfa;
    REQUIRE(p.num_states() <= d.num_states() * a.num_states);
    CHECK(p.num_events() == d.num_events());
    CHECK(p.plant_state(p.initial()) == d.initial());
    CHECK(p.spec_state(p.initial()) == a.next(a.initial, d.label(d.initial())));
    for (StateId x = 0; x < p.num_states(); ++x) {
      CHECK(p.accepting(x) == a.is_accepting(p.spec_state(x)));
      for (EventId e = 0; e < p.num_events(); ++e) {
        StateId g2 = d.successor(p.plant_state(x), e);
        StateId y = p.successor(x, e);
        REQUIRE((y == kNoState) == (g2 == kNoState));
        if (y == kNoState) continue;
        CHECK(p.plant_state(y) == g2);
        CHECK(p.spec_state(y) == a.next(p.spec_state(x), d.label(g2)));
      }
    }
  }
}

TEST_CASE("product acceptance matches acceptance of the label history") {
  const ApOrdering ap({"a"});
  const Dfa fa = compile(parse("F a", ap), ap);
  gen::DesParams dp;
  dp.max_states = 6;
  dp.max_events = 3;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    gen::Rng rng(seed);
    Des d = gen::random_des(rng, ap, dp);
    ProductAutomaton p = build_product(d, fa);
    // Walk plant and product together over every history of length ≤ 6.
    std::function<void(StateId, StateId, Word&, int)> walk = [&](StateId g, StateId x, Word& labels, int depth) {
      CHECK(p.accepting(x) == accepts(fa, labels));
      if (depth == 0) return;
      for (EventId e = 0; e < d.num_events(); ++e) {
        StateId g2 = d.successor(g, e);
        REQUIRE((g2 == kNoState) == (p.successor(x, e) == kNoState));
        if (g2 == kNoState) continue;
        labels.push_back(d.label(g2));
        walk(g2, p.successor(x, e), labels, depth - 1);
        labels.pop_back();
      }
    };
    Word labels{d.label(d.initial())};
    walk(d.initial(), p.initial(), labels, 6);
  }
}

TEST_CASE("classify_ranks is exhaustive and exclusive") {
  const Rank alpha = 5;
  for (Rank a = 0; a <= alpha; ++a)
    for (Rank b = 0; b <= alpha; ++b) {
      TransitionClass c = classify_ranks(a, b, alpha);
      if (a > b)
        CHECK(c == TransitionClass::Legal);
      else if (b < alpha)
        CHECK(c == TransitionClass::Neutral);
      else
        CHECK(c == TransitionClass::Illegal);
    }
}

TEST_CASE("product export carries projections") {
  Example ex;
  nlohmann::json j = to_json(ex.product);
  CHECK(j["jg"].size() == ex.product.num_states());
  CHECK(j["ja"].size() == ex.product.num_states());
  CHECK(j["accepting"].size() == 1);
  CHECK(j["transitions"].is_array());
}
