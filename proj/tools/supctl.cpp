// supctl: compile scLTL formulas, rank products, simulate the on-line
// supervisor and cross-check against the brute-force oracles.
//
// Exit codes: 0 success; 1 usage/load error or oracle disagreement;
// 2 formula parse error; 3 state cap exceeded; 4 no supervisor exists
// (product not controllable or not observable).

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "supctl/oracle.hpp"
#include "supctl/random.hpp"
#include "supctl/supctl.hpp"

using namespace supctl;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitCap = 3;
constexpr int kExitNoSupervisor = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw LoadError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

/// Plant plus specification, given as formula text, formula file or DFA file.
struct Bundle {
  std::string des_path;
  std::string formula;
  std::string formula_path;
  std::string dfa_path;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--des", des_path, "plant DES JSON file")->required()->check(CLI::ExistingFile);
    auto* f = cmd->add_option("--formula", formula, "scLTL formula text");
    auto* ff = cmd->add_option("--formula-file", formula_path, "file holding the scLTL formula")->check(CLI::ExistingFile);
    auto* d = cmd->add_option("--dfa", dfa_path, "good-prefix DFA JSON file (instead of a formula)")
                  ->check(CLI::ExistingFile);
    f->excludes(ff)->excludes(d);
    ff->excludes(d);
  }

  std::string formula_text() const {
    if (!formula_path.empty()) return read_file(formula_path);
    return formula;
  }

  bool has_formula() const { return !formula.empty() || !formula_path.empty(); }

  Des load_des() const { return des_from_json(read_json(des_path)); }

  std::optional<Formula> load_formula(const Des& d) const {
    if (!has_formula()) return std::nullopt;
    return parse(formula_text(), d.ap());
  }

  Dfa load_dfa(const Des& d, const std::optional<Formula>& f) const {
    if (f) return compile(*f, d.ap());
    if (dfa_path.empty()) throw Error("one of --formula, --formula-file or --dfa is required");
    return dfa_from_json(read_json(dfa_path));
  }
};

// ---------------------------------------------------------------------------

int cmd_compile(const std::string& text, const std::string& ap_list, std::size_t cap, const std::string& out) {
  Formula f = Formula::tt();
  ApOrdering ap;
  if (ap_list.empty()) {
    std::tie(f, ap) = parse_inferring_ap(text);
  } else {
    std::vector<std::string> names;
    std::stringstream ss(ap_list);
    for (std::string a; std::getline(ss, a, ',');)
      if (!a.empty()) names.push_back(a);
    ap = ApOrdering(names);
    f = parse(text, ap);
  }
  CompileOptions opts;
  opts.state_cap = cap;
  write_output(out, to_json(compile(f, ap, opts)).dump(2) + "\n");
  return 0;
}

int cmd_rank(const Bundle& b, const std::string& out) {
  Des d = b.load_des();
  Dfa a = b.load_dfa(d, b.load_formula(d));
  ProductAutomaton p = build_product(d, a);
  RankingFunction r = compute_ranking(p);
  ObservabilityVerdict ov = is_observable(p, r);
  const bool controllable = is_controllable(p, r);
  json j = to_json(r, p);
  j["product_states"] = p.num_states();
  j["controllable"] = controllable;
  j["observability"] = to_json(ov, p);
  j["observable"] = ov.observable;
  write_output(out, j.dump(2) + "\n");
  return controllable && ov.observable ? 0 : kExitNoSupervisor;
}

struct SimulateArgs {
  std::string policy = "random";
  std::uint64_t seed = 0;
  std::string script;
  std::string eta;
  std::string mode = "algorithmic";
  std::size_t max_steps = 0;
  std::size_t max_unobservable = 0;
  bool allow_cycles = false;
  std::string out;
};

int cmd_simulate(const Bundle& b, const SimulateArgs& s) {
  Des d = b.load_des();
  std::optional<Formula> f = b.load_formula(d);
  Dfa a = b.load_dfa(d, f);
  ProductAutomaton p = build_product(d, a);
  RankingFunction r = compute_ranking(p);
  if (!is_controllable(p, r) || !is_observable(p, r).observable) {
    std::cerr << "There is no supervisor for the plant that guarantees the specification under partial observation "
                 "(product is "
              << (is_controllable(p, r) ? "not observable" : "not controllable") << ")\n";
    return kExitNoSupervisor;
  }
  PermissivenessFunction eta =
      s.eta.empty() ? PermissivenessFunction::linear(r.alpha, 1) : PermissivenessFunction::parse(s.eta);
  SupervisorOptions opts;
  opts.mode = parse_per_mode(s.mode);
  opts.forbid_unobservable_cycles = !s.allow_cycles;

  std::unique_ptr<PlantPolicy> policy;
  if (s.policy == "random") {
    policy = std::make_unique<RandomPolicy>(s.seed);
  } else if (s.policy == "script") {
    if (s.script.empty()) throw Error("--policy script requires --script FILE");
    policy = std::make_unique<ScriptedPolicy>(parse_script(d, read_file(s.script)));
  } else if (s.policy == "adversarial") {
    policy = std::make_unique<AdversarialPolicy>();
  } else {
    policy = std::make_unique<InteractivePolicy>(std::cin, std::cerr);
  }

  json meta{{"des", b.des_path}, {"seed", s.seed}};
  if (f) meta["formula"] = to_string(*f);
  if (!b.dfa_path.empty()) meta["dfa"] = b.dfa_path;
  if (!s.script.empty()) meta["script"] = s.script;
  EpisodeLimits limits{s.max_unobservable, s.max_steps};
  Trace t = run_episode(p, r, eta, *policy, opts, limits, meta);
  write_output(s.out, to_jsonl(t, p));
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite = "all";
  std::size_t random = 0;
  std::uint64_t seed = 1;
  std::string rank_path;
  std::string eta;
  std::size_t depth = 100;
  std::string out;
};

oracle::OracleReport rank_report(const ProductAutomaton& p, const std::string& instance,
                                 const std::optional<RankingFunction>& supplied) {
  oracle::OracleReport rep;
  rep.component = "rank";
  rep.digest = oracle::digest(instance);
  RankingFunction main = supplied ? *supplied : compute_ranking(p);
  RankingFunction ref = oracle::attractor_rank(p);
  rep.agree = main == ref;
  if (!rep.agree) {
    for (StateId x = 0; x < std::max(main.size(), ref.size()); ++x) {
      const bool differs = x >= main.size() || x >= ref.size() || main.xi[x] != ref.xi[x];
      if (differs) {
        rep.input = {{"state", x}};
        rep.main_value = x < main.size() ? json(main.xi[x]) : json(nullptr);
        rep.oracle_value = x < ref.size() ? json(ref.xi[x]) : json(nullptr);
        break;
      }
    }
    if (rep.input.is_null()) {
      rep.input = "alpha";
      rep.main_value = main.alpha;
      rep.oracle_value = ref.alpha;
    }
  }
  return rep;
}

oracle::OracleReport obs_report(const ProductAutomaton& p, const std::string& instance) {
  oracle::OracleReport rep;
  rep.component = "obs";
  rep.digest = oracle::digest(instance);
  RankingFunction r = compute_ranking(p);
  ObservabilityVerdict v = is_observable(p, r);
  oracle::BoundedObservability b = oracle::bounded_observability(p, r, 2 * p.num_states());
  rep.agree = v.observable == b.observable && (!v.witness || oracle::replay_witness(p, r, *v.witness));
  if (!rep.agree) {
    rep.input = "observability verdict";
    rep.main_value = to_json(v, p);
    rep.oracle_value = {{"observable", b.observable}};
  }
  return rep;
}

oracle::OracleReport dfa_report(const Formula& f, const ApOrdering& ap) {
  oracle::OracleReport rep;
  rep.component = "dfa";
  rep.digest = oracle::digest(to_string(f));
  auto diff = oracle::dfa_difference(compile(f, ap), oracle::tableau_dfa(f, ap));
  rep.agree = !diff;
  if (diff) {
    json word = json::array();
    for (Letter v : *diff) word.push_back(ap.names(v));
    rep.input = {{"formula", to_string(f)}, {"word", word}};
    rep.main_value = accepts(compile(f, ap), *diff);
    rep.oracle_value = !accepts(compile(f, ap), *diff);
  }
  return rep;
}

oracle::OracleReport closed_loop_report(const ProductAutomaton& p, const std::string& instance,
                                        const std::string& eta_spec, std::size_t depth) {
  oracle::OracleReport rep;
  rep.component = "closedloop";
  rep.digest = oracle::digest(instance);
  RankingFunction r = compute_ranking(p);
  PermissivenessFunction eta =
      eta_spec.empty() ? PermissivenessFunction::linear(r.alpha, 1) : PermissivenessFunction::parse(eta_spec);
  oracle::ClosedLoopReport cl = oracle::exhaustive_closed_loop(p, r, eta, depth);
  rep.agree = cl.verdict != oracle::Verdict::Fail;
  if (!rep.agree || cl.verdict != oracle::Verdict::Pass) {
    json ce = json::array();
    for (EventId e : cl.counterexample) ce.push_back(p.event(e).name);
    rep.input = {{"eta", eta.to_string()}, {"depth", depth}};
    rep.main_value = "supervisor guarantees the specification";
    rep.oracle_value = {{"verdict", oracle::to_string(cl.verdict)}, {"reason", cl.reason}, {"counterexample", ce}};
  }
  return rep;
}

int cmd_verify(const Bundle& b, const VerifyArgs& v) {
  const bool all = v.suite == "all";
  std::vector<oracle::OracleReport> reports;
  auto run_product = [&](const ProductAutomaton& p, const std::string& instance,
                         const std::optional<RankingFunction>& supplied) {
    if (all || v.suite == "rank") reports.push_back(rank_report(p, instance, supplied));
    if (all || v.suite == "obs") reports.push_back(obs_report(p, instance));
    if (all || v.suite == "closedloop") {
      RankingFunction r = compute_ranking(p);
      if (is_controllable(p, r) && is_observable(p, r).observable)
        reports.push_back(closed_loop_report(p, instance, v.eta, v.depth));
    }
  };

  if (v.random > 0) {
    if (!v.rank_path.empty()) throw Error("--rank applies to a single instance, not to --random");
    gen::Rng seeds(v.seed);
    for (std::size_t i = 0; i < v.random; ++i) {
      const std::uint64_t s = seeds.raw();
      gen::Instance inst = gen::random_instance(s);
      const std::string instance = to_json(inst.des).dump() + to_json(inst.dfa).dump();
      run_product(inst.product, instance, std::nullopt);
      if (all || v.suite == "dfa") {
        gen::Rng frng(s);
        ApOrdering ap = gen::letters_ap(frng.between(1, 3));
        reports.push_back(dfa_report(gen::random_formula(frng, ap, 3), ap));
      }
    }
  } else {
    if (b.des_path.empty()) throw Error("verify needs --des with a formula/DFA, or --random N");
    Des d = b.load_des();
    std::optional<Formula> f = b.load_formula(d);
    Dfa a = b.load_dfa(d, f);
    ProductAutomaton p = build_product(d, a);
    std::optional<RankingFunction> supplied;
    if (!v.rank_path.empty()) supplied = ranking_from_json(read_json(v.rank_path));
    run_product(p, read_file(b.des_path) + to_json(a).dump(), supplied);
    if ((all || v.suite == "dfa") && f) reports.push_back(dfa_report(*f, d.ap()));
  }

  bool agree = true;
  json arr = json::array();
  for (const auto& r : reports) {
    agree = agree && r.agree;
    arr.push_back(oracle::to_json(r));
  }
  json j{{"agree", agree}, {"checks", reports.size()}, {"reports", arr}};
  write_output(v.out, j.dump(2) + "\n");
  return agree ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "supctl: on-line permissive supervisory control of partially observed discrete event systems under scLTL "
      "specifications.\n\n"
      "Formula grammar (precedence low to high): f | f, f & f, f U f (right-assoc), X f, F f, !atom, true, atom, "
      "(f).\n"
      "DES JSON: {ap, states:[{id,name,label}], initial, events:[{name,controllable,observable}], "
      "transitions:[{from,event,to}]}\n"
      "DFA JSON: {ap, states, initial, accepting:[ids], transitions:[[target per letter]]}, letters indexed by the "
      "bitset of true atoms in AP order.\n"
      "Exit codes: 0 ok, 1 error/disagreement, 2 parse error, 3 state cap exceeded, 4 no supervisor."};
  app.require_subcommand(1);

  // compile
  std::string c_formula, c_ap, c_out;
  std::size_t c_cap = 100000;
  auto* compile_cmd = app.add_subcommand("compile", "Compile an scLTL formula to a minimal good-prefix DFA (JSON)");
  compile_cmd->add_option("formula", c_formula, "formula text")->required();
  compile_cmd->add_option("--ap", c_ap, "comma-separated AP ordering (default: atoms in order of appearance)");
  compile_cmd->add_option("--cap", c_cap, "derivative automaton state cap");
  compile_cmd->add_option("-o,--out", c_out, "output file (default stdout)");

  // rank
  Bundle rank_bundle;
  std::string r_out;
  auto* rank_cmd = app.add_subcommand("rank", "Compute the ranking function and check controllability/observability");
  rank_bundle.add_options(rank_cmd);
  rank_cmd->add_option("-o,--out", r_out, "output file (default stdout)");

  // simulate
  Bundle sim_bundle;
  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one closed-loop episode and write its JSONL trace");
  sim_bundle.add_options(sim_cmd);
  sim_cmd->add_option("--policy", sim.policy, "plant policy")
      ->check(CLI::IsMember({"random", "script", "adversarial", "interactive"}));
  sim_cmd->add_option("--seed", sim.seed, "seed for the random policy");
  sim_cmd->add_option("--script", sim.script, "whitespace-separated event names for --policy script")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--eta", sim.eta, "permissiveness 'linear:a,b' or 'table:v0,v1,...' (default linear:alpha,1)");
  sim_cmd->add_option("--mode", sim.mode, "permissive pass")->check(CLI::IsMember({"algorithmic", "strict"}));
  sim_cmd->add_option("--max-steps", sim.max_steps, "total step limit (default 100*|X_P|)");
  sim_cmd->add_option("--max-unobservable", sim.max_unobservable,
                      "unobservable steps per observation epoch (default 10*|X_P|)");
  sim_cmd->add_flag("--allow-unobservable-cycles", sim.allow_cycles,
                    "do not reject permissive events that close unobservable cycles");
  sim_cmd->add_option("-o,--out", sim.out, "trace file (default stdout)");

  // verify
  Bundle ver_bundle;
  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Cross-check core computations against brute-force oracles");
  ver_cmd->add_option("--des", ver_bundle.des_path, "plant DES JSON file")->check(CLI::ExistingFile);
  auto* vf = ver_cmd->add_option("--formula", ver_bundle.formula, "scLTL formula text");
  auto* vff = ver_cmd->add_option("--formula-file", ver_bundle.formula_path, "file holding the formula")
                  ->check(CLI::ExistingFile);
  auto* vd = ver_cmd->add_option("--dfa", ver_bundle.dfa_path, "DFA JSON file")->check(CLI::ExistingFile);
  vf->excludes(vff)->excludes(vd);
  vff->excludes(vd);
  ver_cmd->add_option("--suite", ver.suite, "which checks to run")
      ->check(CLI::IsMember({"rank", "obs", "dfa", "closedloop", "all"}));
  ver_cmd->add_option("--random", ver.random, "check N seeded random instances instead of one bundle");
  ver_cmd->add_option("--seed", ver.seed, "seed for --random");
  ver_cmd->add_option("--rank", ver.rank_path, "rank JSON to check instead of recomputing it")
      ->check(CLI::ExistingFile);
  ver_cmd->add_option("--eta", ver.eta, "permissiveness for the closed-loop suite (default linear:alpha,1)");
  ver_cmd->add_option("--depth", ver.depth, "closed-loop depth limit");
  ver_cmd->add_option("-o,--out", ver.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (compile_cmd->parsed()) return cmd_compile(c_formula, c_ap, c_cap, c_out);
    if (rank_cmd->parsed()) return cmd_rank(rank_bundle, r_out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_bundle, sim);
    if (ver_cmd->parsed()) return cmd_verify(ver_bundle, ver);
  } catch (const ParseError& e) {
    std::cerr << "parse error at offset " << e.offset() << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const StateCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCap;
  } catch (const NoSupervisor& e) {
    std::cerr << "There is no supervisor that guarantees the specification: " << e.what() << "\n";
    return kExitNoSupervisor;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
