#pragma once

// Shared helpers for the test suites.

#include <fstream>
#include <sstream>
#include <string>

#include "supctl/supctl.hpp"

namespace testing {

using namespace supctl;

inline std::string fixture_path(const std::string& name) { return std::string(SUPCTL_FIXTURES) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name));
  if (!in) throw Error("missing fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Des load_des_fixture(const std::string& name) { return des_from_json(nlohmann::json::parse(read_fixture(name))); }

/// The worked example: plant, formula, acceptor, product and ranks.
struct Example {
  Des des;
  Formula phi = Formula::tt();
  Dfa dfa;
  ProductAutomaton product;
  RankingFunction rank;

  Example() {
    des = load_des_fixture("g_ex.json");
    phi = parse(read_fixture("phi_ex.ltl"), des.ap());
    dfa = compile(phi, des.ap());
    product = build_product(des, dfa);
    rank = compute_ranking(product);
  }

  Letter letter(std::initializer_list<std::string> atoms) const {
    return des.ap().letter(std::vector<std::string>(atoms));
  }

  /// Acceptor states under the example's names y0..y5, identified by a word
  /// leading to them from the initial state.
  StateId y(int i) const {
    const Letter a = letter({"a"}), b = letter({"b"}), c = letter({"c"});
    switch (i) {
      case 0:
        return dfa.initial;
      case 1: {
        Word w{b, c, a};
        return dfa.run(dfa.initial, w);
      }
      case 2: {
        Word w{b, c};
        return dfa.run(dfa.initial, w);
      }
      case 3: {
        Word w{b};
        return dfa.run(dfa.initial, w);
      }
      case 4: {
        Word w{c};
        return dfa.run(dfa.initial, w);
      }
      case 5: {
        Word w{a};
        return dfa.run(dfa.initial, w);
      }
    }
    throw Error("no such acceptor state");
  }

  /// Product state (x<i>, y<j>).
  StateId xy(int i, int j) const {
    auto g = des.find_state("x" + std::to_string(i));
    if (!g) throw Error("no plant state x" + std::to_string(i));
    StateId s = product.find(*g, y(j));
    if (s == kNoState) throw Error("product state not reachable");
    return s;
  }

  EventId ev(const std::string& name) const { return des.event_id(name); }

  EventSet events(std::initializer_list<std::string> names) const {
    EventSet out;
    for (const auto& n : names) out.insert(ev(n));
    return out;
  }
};

}  // namespace testing
