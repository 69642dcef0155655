#include <catch_amalgamated.hpp>

#include <sstream>

#include "supctl/random.hpp"
#include "support.hpp"

using namespace supctl;
using testing::Example;
using testing::read_fixture;

namespace {

Trace run_script(const Example& ex, const std::string& script) {
  ScriptedPolicy policy(parse_script(ex.des, script));
  return run_episode(ex.product, ex.rank, PermissivenessFunction::linear(5, 1), policy);
}

/// Budget after the permissiveness reaches zero: only legal moves, and at
/// most α of them.
bool tail_ok(const Trace& t, Rank alpha) {
  std::size_t tail = 0;
  bool zero = false;
  for (const auto& s : t.steps) {
    zero = zero || s.eta == 0;
    if (!zero) continue;
    if (s.cls != TransitionClass::Legal) return false;
    ++tail;
  }
  return tail <= alpha;
}

}  // namespace

TEST_CASE("initially accepting product ends immediately") {
  Des d(ApOrdering({"a"}));
  d.add_state("s", 1);
  d.add_transition(0, d.add_event("e", true, true), 0);
  ProductAutomaton p = build_product(d, compile(parse("F a", d.ap()), d.ap()));
  RankingFunction r = compute_ranking(p);
  RandomPolicy policy(1);
  Trace t = run_episode(p, r, PermissivenessFunction::zero(), policy);
  CHECK(t.outcome == Outcome::Accepted);
  CHECK(t.steps.empty());
  CHECK(t.observations == 0);
}

TEST_CASE("worked example scripted run") {
  Example ex;
  Trace t = run_script(ex, read_fixture("script_ex.txt"));
  CHECK(t.outcome == Outcome::Accepted);
  REQUIRE(t.steps.size() == 5);
  CHECK(t.observations == 4);
  const EventSet wide = ex.events({"u2", "o2", "u3", "o1", "o3"}), legal = ex.events({"u2", "o2"});
  CHECK(t.steps[0].gamma == wide);
  CHECK(t.steps[1].gamma == wide);
  CHECK(t.steps[2].gamma == legal);
  CHECK(t.steps[3].gamma == legal);
  CHECK(t.steps[4].gamma == ex.events({"o3"}));
  CHECK(t.steps[1].ns_after == StateSet{ex.xy(0, 0), ex.xy(4, 0)});
  CHECK(t.steps[3].ns_after == StateSet{ex.xy(3, 2)});
  CHECK(t.steps[4].next == ex.xy(1, 1));
  CHECK_FALSE(t.steps[2].observable);
  CHECK(t.steps[2].k == 2);
  CHECK(t.steps[2].eta == 3);
  CHECK(t.steps[2].cls == TransitionClass::Legal);
  CHECK(check_trace(t, ex.product, ex.phi));
  CHECK(trace_consistent(t, ex.product));
}

TEST_CASE("scripted runs report policy errors and exhaustion") {
  Example ex;
  CHECK_THROWS_AS(run_script(ex, "u1"), PolicyError);
  Trace short_run = run_script(ex, "o1");
  CHECK(short_run.outcome == Outcome::ScriptExhausted);
  CHECK_FALSE(check_trace(short_run, ex.product, ex.phi));
  CHECK_THROWS_AS(parse_script(ex.des, "o1 nope"), LoadError);
}

TEST_CASE("refuses products without a supervisor") {
  Des d(ApOrdering({"a"}));
  d.add_state("start", 0);
  d.add_state("goal", 1);
  d.add_state("trap", 0);
  EventId c = d.add_event("c", true, true), u = d.add_event("u", false, true);
  d.add_transition(0, c, 1);
  d.add_transition(0, u, 2);
  d.add_transition(2, c, 2);
  ProductAutomaton p = build_product(d, compile(parse("F a", d.ap()), d.ap()));
  RankingFunction r = compute_ranking(p);
  RandomPolicy policy(0);
  CHECK_THROWS_AS(run_episode(p, r, PermissivenessFunction::zero(), policy), NoSupervisor);
}

TEST_CASE("permissiveness above the cap is rejected") {
  Example ex;
  RandomPolicy policy(0);
  CHECK_THROWS_AS(run_episode(ex.product, ex.rank, PermissivenessFunction::linear(9, 1), policy), Error);
}

TEST_CASE("traces are reproducible and round-trip through JSONL") {
  Example ex;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomPolicy a(seed), b(seed);
    const auto eta = PermissivenessFunction::linear(8, 1);
    Trace ta = run_episode(ex.product, ex.rank, eta, a, {}, {}, {{"seed", seed}});
    Trace tb = run_episode(ex.product, ex.rank, eta, b, {}, {}, {{"seed", seed}});
    const std::string text = to_jsonl(ta, ex.product);
    CHECK(text == to_jsonl(tb, ex.product));
    Trace back = trace_from_jsonl(text, ex.product);
    CHECK(to_jsonl(back, ex.product) == text);
    CHECK(back.events() == ta.events());
  }
  CHECK_THROWS_AS(trace_from_jsonl("{\"type\":\"step\"}\n", ex.product), LoadError);
  CHECK_THROWS_AS(trace_from_jsonl("not json\n", ex.product), LoadError);
}

TEST_CASE("adversarial and interactive policies") {
  Example ex;
  AdversarialPolicy adv;
  Trace t = run_episode(ex.product, ex.rank, PermissivenessFunction::linear(8, 2), adv);
  CHECK(t.outcome == Outcome::Accepted);
  CHECK(tail_ok(t, ex.rank.alpha));

  std::istringstream in("bogus u2 o2 o3");
  std::ostringstream out;
  InteractivePolicy inter(in, out);
  Trace ti = run_episode(ex.product, ex.rank, PermissivenessFunction::zero(), inter);
  CHECK(ti.outcome == Outcome::Accepted);
  CHECK(ti.steps.size() == 3);
  CHECK(out.str().find("'bogus' is not one of the listed events") != std::string::npos);
  CHECK(out.str().find("u2 (unobservable)  legal") != std::string::npos);
}

TEST_CASE("random policies reach acceptance on controllable and observable instances") {
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 400 && instances < 120; ++seed) {
    gen::Instance inst = gen::random_instance(seed);
    const ProductAutomaton& p = inst.product;
    RankingFunction r = compute_ranking(p);
    if (!is_controllable(p, r) || !is_observable(p, r).observable) continue;
    ++instances;
    const auto eta = PermissivenessFunction::linear(r.alpha, 1);
    for (std::uint64_t run = 0; run < 100; ++run) {
      RandomPolicy policy(run);
      Trace t = run_episode(p, r, eta, policy);
      INFO("seed " << seed << " run " << run << " reason " << t.reason);
      CHECK(t.outcome == Outcome::Accepted);
      CHECK(trace_consistent(t, p));
      CHECK(tail_ok(t, r.alpha));
      for (const auto& s : t.steps) CHECK(s.cls != TransitionClass::Illegal);
      if (inst.formula) CHECK(check_trace(t, p, *inst.formula));
    }
  }
  CHECK(instances >= 100);
}
