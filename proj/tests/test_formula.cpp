#include <catch_amalgamated.hpp>

#include "semantics.hpp"
#include "supctl/formula.hpp"
#include "supctl/random.hpp"

using namespace supctl;
using testing::for_each_word;
using testing::for_each_word_upto;
using testing::holds;

namespace {

const ApOrdering abc({"a", "b", "c"});

Formula A(const char* n) { return Formula::atom(n); }
Formula NA(const char* n) { return Formula::neg_atom(n); }

Letter L(std::initializer_list<std::string> atoms) { return abc.letter(std::vector<std::string>(atoms)); }

}  // namespace

TEST_CASE("parse: eventually desugars to true-until") {
  CHECK(parse("F a", abc) == Formula::until(Formula::tt(), A("a")));
  CHECK(parse("true", abc).is_true());
}

TEST_CASE("parse: conjunction of untils from the reference specification") {
  Formula expected = Formula::conj(Formula::conj(Formula::until(Formula::tt(), A("a")), Formula::until(NA("a"), A("b"))),
                                   Formula::until(NA("a"), A("c")));
  CHECK(parse("F a & !a U b & !a U c", abc) == expected);
}

TEST_CASE("parse: precedence and associativity") {
  CHECK(parse("a | b & c", abc) == Formula::disj(A("a"), Formula::conj(A("b"), A("c"))));
  CHECK(parse("a U b U c", abc) == Formula::until(A("a"), Formula::until(A("b"), A("c"))));
  CHECK(parse("X a U b", abc) == Formula::until(Formula::next(A("a")), A("b")));
  CHECK(parse("a & b | c", abc) == Formula::disj(Formula::conj(A("a"), A("b")), A("c")));
  CHECK(parse("(a | b) & c", abc) == Formula::conj(Formula::disj(A("a"), A("b")), A("c")));
  CHECK(parse("F X !c", abc) == Formula::eventually(Formula::next(NA("c"))));
  CHECK(parse("!(a)", abc) == NA("a"));
}

TEST_CASE("parse: errors carry byte offsets") {
  auto offset_of = [](const char* text) -> std::optional<std::size_t> {
    try {
      (void)parse(text, abc);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return std::nullopt;
  };
  CHECK(offset_of("a &") == 3u);
  CHECK(offset_of("a b").has_value());
  CHECK(offset_of("!X a") == 0u);
  CHECK(offset_of("!(a | b)") == 0u);
  CHECK(offset_of("false").has_value());
  CHECK(offset_of("(a | b").has_value());
  CHECK(offset_of("a & d") == 4u);  // undeclared atom
  CHECK(offset_of("a $ b") == 2u);
}

TEST_CASE("parse_inferring_ap orders atoms by first use") {
  auto [f, ap] = parse_inferring_ap("F q & !p U q");
  CHECK(ap.atoms() == std::vector<std::string>{"q", "p"});
  CHECK(atoms_of(f) == std::vector<std::string>{"q", "p"});
}

TEST_CASE("printer round-trip on generated formulas") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    gen::Rng rng(seed);
    Formula f = gen::random_formula(rng, abc, 4);
    const std::string once = to_string(f);
    Formula g = parse(once, abc);
    INFO(once);
    CHECK(g == f);
    CHECK(to_string(g) == once);
  }
}

TEST_CASE("derivative examples") {
  CHECK(derivative(A("a"), L({"a"}), abc).is_true());
  CHECK(derivative(A("a"), L({}), abc).is_false());
  CHECK(derivative(NA("a"), L({}), abc).is_true());
  Formula fa = Formula::eventually(A("a"));
  CHECK(derivative(fa, L({}), abc) == fa);
  CHECK(derivative(Formula::next(A("b")), L({"a"}), abc) == A("b"));
  // (!a U b) & c on {b,c}: the Until's right side holds now and so does c.
  Formula f = Formula::conj(Formula::until(NA("a"), A("b")), A("c"));
  CHECK(derivative(f, L({"b", "c"}), abc).is_true());
  // On {c} alone the Until must continue: !a holds, so the residual is the Until.
  CHECK(derivative(f, L({"c"}), abc) == Formula::until(NA("a"), A("b")));
}

TEST_CASE("simplify examples") {
  CHECK(simplify(Formula::disj(A("a"), NA("a"))).is_true());
  CHECK(simplify(Formula::conj(A("a"), NA("a"))).is_false());
  CHECK(simplify(Formula::until(A("a"), Formula::tt())).is_true());
  CHECK(simplify(Formula::until(A("a"), Formula::ff())).is_false());
  CHECK(simplify(Formula::until(Formula::ff(), A("b"))) == A("b"));
  CHECK(simplify(Formula::next(Formula::tt())).is_true());
  CHECK(simplify(Formula::next(Formula::ff())).is_false());
  Formula fa = Formula::eventually(A("a"));
  CHECK(simplify(Formula::disj(fa, Formula::conj(Formula::tt(), fa))) == fa);
  // Argument order does not matter after canonicalization.
  CHECK(simplify(Formula::conj(A("b"), A("a"))) == simplify(Formula::conj(A("a"), A("b"))));
}

TEST_CASE("simplify preserves semantics on lasso words") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    gen::Rng rng(seed);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    Formula s = simplify(f);
    INFO(to_string(f) << "  ~>  " << to_string(s));
    for_each_word_upto(ap.alphabet_size(), 2, [&](const Word& u) {
      for_each_word(ap.alphabet_size(), 1, [&](const Word& v) { CHECK(holds(f, u, v, ap) == holds(s, u, v, ap)); });
      for_each_word(ap.alphabet_size(), 2, [&](const Word& v) { CHECK(holds(f, u, v, ap) == holds(s, u, v, ap)); });
    });
  }
}

TEST_CASE("derivative agrees with the satisfaction relation") {
  // u·v^ω ⊨ f  iff  tail(u)·v^ω ⊨ derivative(f, u[0]).
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    gen::Rng rng(seed + 1000);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    INFO(to_string(f));
    for_each_word_upto(ap.alphabet_size(), 2, [&](const Word& tail) {
      for (Letter first = 0; first < ap.alphabet_size(); ++first)
        for_each_word(ap.alphabet_size(), 1, [&](const Word& v) {
          Word u{first};
          u.insert(u.end(), tail.begin(), tail.end());
          CHECK(holds(f, u, v, ap) == holds(derivative(f, first, ap), tail, v, ap));
        });
    });
  }
}

TEST_CASE("good-prefix bounds: examples") {
  Word a{L({"a"})}, none{L({})};
  CHECK(good_prefix_lb(A("a"), a, abc));
  CHECK(good_prefix_ub(A("a"), a, abc));
  CHECK_FALSE(good_prefix_lb(A("a"), none, abc));
  CHECK_FALSE(good_prefix_ub(A("a"), none, abc));
  Formula phi = parse("F a & !a U b & !a U c", abc);
  Word w{L({}), L({"b"}), L({"c"}), L({"a"})};
  CHECK(good_prefix_lb(phi, w, abc));
  Word early_a{L({"a"})};
  CHECK_FALSE(good_prefix_ub(phi, early_a, abc));
}

TEST_CASE("good-prefix bounds are sound on lasso extensions") {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    gen::Rng rng(seed + 7);
    ApOrdering ap = gen::letters_ap(rng.between(1, 2));
    Formula f = gen::random_formula(rng, ap, 3);
    INFO(to_string(f));
    for_each_word_upto(ap.alphabet_size(), 3, [&](const Word& w) {
      const bool lb = good_prefix_lb(f, w, ap), ub = good_prefix_ub(f, w, ap);
      CHECK((!lb || ub));
      for_each_word_upto(ap.alphabet_size(), 1, [&](const Word& mid) {
        Word u = w;
        u.insert(u.end(), mid.begin(), mid.end());
        for_each_word(ap.alphabet_size(), 1, [&](const Word& v) {
          const bool sat = holds(f, u, v, ap);
          if (lb) CHECK(sat);
          if (!ub) CHECK_FALSE(sat);
        });
      });
    });
  }
}

TEST_CASE("good-prefix lower bound is extension-closed") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gen::Rng rng(seed + 99);
    ApOrdering ap = gen::letters_ap(rng.between(1, 3));
    Formula f = gen::random_formula(rng, ap, 3);
    for_each_word_upto(ap.alphabet_size(), 3, [&](const Word& w) {
      if (!good_prefix_lb(f, w, ap)) return;
      for (Letter v = 0; v < ap.alphabet_size(); ++v) {
        Word wv = w;
        wv.push_back(v);
        CHECK(good_prefix_lb(f, wv, ap));
      }
    });
  }
}

TEST_CASE("formula JSON round-trip") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    gen::Rng rng(seed);
    Formula f = gen::random_formula(rng, abc, 3);
    CHECK(formula_from_json(to_json(f)) == f);
  }
  CHECK(formula_from_json(to_json(Formula::ff())).is_false());
  CHECK_THROWS_AS(formula_from_json(nlohmann::json{{"op", "not"}}), LoadError);
}
