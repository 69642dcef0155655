#include <catch_amalgamated.hpp>

#include "semantics.hpp"
#include "supctl/oracle.hpp"
#include "supctl/random.hpp"
#include "support.hpp"

using namespace supctl;
using testing::Example;

TEST_CASE("tableau acceptor matches compile on reference formulas") {
  const ApOrdering abc({"a", "b", "c"});
  for (const char* text : {"true", "a", "F a", "F a & !a U b & !a U c", "X a | X !a", "a U (b & X c)", "F (a & X a)"}) {
    INFO(text);
    Formula f = parse(text, abc);
    CHECK(oracle::dfa_equivalent(compile(f, abc), oracle::tableau_dfa(f, abc)));
  }
}

TEST_CASE("tableau acceptor matches compile on random formulas") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    gen::Rng rng(seed + 20000);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    INFO(to_string(f));
    auto diff = oracle::dfa_difference(compile(f, ap), oracle::tableau_dfa(f, ap));
    CHECK_FALSE(diff.has_value());
  }
}

TEST_CASE("dfa_difference returns a shortest separating word") {
  const ApOrdering ap({"a"});
  Dfa fa = compile(parse("F a", ap), ap);
  Dfa xxa = compile(parse("X X a", ap), ap);
  auto w = oracle::dfa_difference(fa, xxa);
  REQUIRE(w);
  CHECK(w->size() == 1);
  CHECK(accepts(fa, *w) != accepts(xxa, *w));
  CHECK(oracle::dfa_equivalent(fa, fa));
  CHECK_THROWS_AS(oracle::dfa_difference(fa, compile(Formula::tt(), ApOrdering({"b"}))), Error);
}

TEST_CASE("attractor oracle on the worked example") {
  Example ex;
  CHECK(oracle::attractor_rank(ex.product) == ex.rank);
}

TEST_CASE("forged witnesses do not replay") {
  Example ex;
  ObservabilityWitness w{ex.xy(0, 0), ex.xy(0, 0), ex.ev("u2"), {}, {}};
  CHECK_FALSE(oracle::replay_witness(ex.product, ex.rank, w));
  w.x2 = ex.xy(2, 3);
  w.s_prime = {ex.ev("o1")};
  CHECK_FALSE(oracle::replay_witness(ex.product, ex.rank, w));
}

TEST_CASE("bounded observability respects the node limit") {
  Example ex;
  CHECK_THROWS_AS(oracle::bounded_observability(ex.product, ex.rank, 40, 1), oracle::InstanceTooLarge);
  CHECK_THROWS_AS(oracle::bounded_observability(ex.product, ex.rank, 0), Error);
}

TEST_CASE("exhaustive closed loop on the worked example") {
  Example ex;
  for (const char* eta : {"linear:5,1", "linear:8,1", "table:8,8,8,8", "table:"}) {
    INFO(eta);
    auto rep = oracle::exhaustive_closed_loop(ex.product, ex.rank, PermissivenessFunction::parse(eta), 100);
    CHECK(rep.verdict == oracle::Verdict::Pass);
    CHECK(rep.longest_tail_after_zero <= ex.rank.alpha);
  }
}

TEST_CASE("closed loop needs the unobservable cycle check") {
  std::size_t evaluated = 0, failures_without = 0;
  for (std::uint64_t seed = 0; seed < 1500; ++seed) {
    gen::Instance inst = gen::random_instance(seed);
    const ProductAutomaton& p = inst.product;
    RankingFunction r = compute_ranking(p);
    if (!is_controllable(p, r) || !is_observable(p, r).observable) continue;
    ++evaluated;
    const auto eta = PermissivenessFunction::linear(r.alpha, 1);
    for (PerMode mode : {PerMode::Algorithmic, PerMode::Strict}) {
      auto rep = oracle::exhaustive_closed_loop(p, r, eta, 100, {mode, true});
      INFO("seed " << seed << " mode " << to_string(mode) << ": " << rep.reason);
      CHECK(rep.verdict == oracle::Verdict::Pass);
    }
    auto loose = oracle::exhaustive_closed_loop(p, r, eta, 100, {PerMode::Algorithmic, false});
    if (loose.verdict == oracle::Verdict::Fail) ++failures_without;
  }
  CHECK(evaluated > 300);
  CHECK(failures_without > 0);
}

TEST_CASE("closed loop is not evaluated without a supervisor") {
  Des d(ApOrdering({"a"}));
  d.add_state("start", 0);
  d.add_state("trap", 0);
  d.add_transition(0, d.add_event("u", false, true), 1);
  ProductAutomaton p = build_product(d, compile(parse("F a", d.ap()), d.ap()));
  auto rep = oracle::exhaustive_closed_loop(p, compute_ranking(p), PermissivenessFunction::zero(), 10);
  CHECK(rep.verdict == oracle::Verdict::NotEvaluated);
}

TEST_CASE("report digests") {
  CHECK(oracle::digest("") == "cbf29ce484222325");
  CHECK(oracle::digest("a") == "af63dc4c8601ec8c");
  oracle::OracleReport ok{"rank", "00", true, {}, {}, {}};
  CHECK_FALSE(oracle::to_json(ok).contains("divergence"));
  oracle::OracleReport bad{"rank", "00", false, 1, 2, 3};
  CHECK(oracle::to_json(bad)["divergence"]["oracle"] == 3);
}
