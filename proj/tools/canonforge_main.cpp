#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "canonforge/automata.hpp"
#include "canonforge/domain.hpp"
#include "canonforge/errors.hpp"
#include "canonforge/json_io.hpp"
#include "canonforge/parallel.hpp"
#include "canonforge/pipeline.hpp"

using namespace canonforge;

namespace {

std::optional<std::uint64_t> env_u64(const char* name) {
  const char* raw = std::getenv(name);
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(raw, &end, 10);
  if (end == raw || *end) return std::nullopt;
  return v;
}

struct ModeSpec {
  Method method = Method::Iterate;
  std::uint64_t generate_n = 0;
};

ModeSpec parse_mode(const std::string& mode) {
  if (mode == "iterate") return {Method::Iterate, 0};
  if (mode == "cnfs") return {Method::Cnfs, 0};
  if (mode.rfind("generate:", 0) == 0)
    return {Method::Generate, std::stoull(mode.substr(9))};
  throw EngineError("unreachable: mode was validated at parse time");
}

const CLI::Validator mode_check(
    [](std::string& s) -> std::string {
      if (s == "iterate" || s == "cnfs") return {};
      if (s.rfind("generate:", 0) == 0 && s.size() > 9 &&
          s.find_first_not_of("0123456789", 9) == std::string::npos)
        return {};
      return "expected iterate, cnfs or generate:K";
    },
    "MODE");

/// Shared execution knobs; --workers beats CANONFORGE_WORKERS, unset or 0
/// means serial. CANONFORGE_SEED seeds generate draws.
struct ExecFlags {
  std::int64_t workers = -1;  // -1: not given on the command line
  std::uint32_t target_job_ms = 100;

  std::optional<PoolOptions> pool_options() const {
    std::uint64_t w = 0;
    if (workers >= 0)
      w = static_cast<std::uint64_t>(workers);
    else if (auto env = env_u64("CANONFORGE_WORKERS"))
      w = *env;
    if (w == 0) return std::nullopt;
    PoolOptions o;
    o.workers = static_cast<std::uint32_t>(w);
    o.target_job_ms = target_job_ms;
    return o;
  }
};

void add_exec_flags(CLI::App* cmd, ExecFlags& flags) {
  cmd->add_option("--workers", flags.workers,
                  "parallel worker count (0 = serial; default: "
                  "CANONFORGE_WORKERS or serial)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--target-job-ms", flags.target_job_ms,
                  "planner target per parallel job, milliseconds")
      ->check(CLI::PositiveNumber);
}

Pipeline make_pipeline(const Domain& d, const ModeSpec& mode) {
  Pipeline p = mode.method == Method::Iterate ? d.iterate()
               : mode.method == Method::Cnfs  ? d.cnfs()
                                              : d.generate(mode.generate_n);
  if (auto seed = env_u64("CANONFORGE_SEED")) p = p.seeded(*seed);
  return p;
}

struct RunReport {
  std::uint64_t count = 0;
  double wall_ms = 0.0;
};

/// Runs the pipeline (in a pool when asked), streams list-like results as
/// JSON lines, and reports count and wall time. Timing covers the run only,
/// never domain or pipeline construction.
RunReport run_and_emit(const Pipeline& p, const ExecFlags& flags,
                       std::ostream* lines) {
  const auto opts = flags.pool_options();
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result = [&] {
    if (opts) {
      PoolContext pool(*opts);
      return p.run(pool);
    }
    return p.run();
  }();
  RunReport report;
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();

  if (const auto* list = std::get_if<ValueList>(&result)) {
    report.count = list->size();
    if (lines)
      for (const Value& v : *list) *lines << value_to_json(v).dump() << "\n";
  } else if (const auto* n = std::get_if<std::uint64_t>(&result)) {
    report.count = *n;
  } else if (const auto* first = std::get_if<std::optional<Value>>(&result)) {
    report.count = first->has_value() ? 1 : 0;
    if (lines && first->has_value())
      *lines << value_to_json(**first).dump() << "\n";
  } else {
    report.count = 1;
    if (lines) *lines << value_to_json(std::get<Value>(result)).dump() << "\n";
  }
  return report;
}

int cmd_digraphs(std::int64_t nodes, const std::string& mode_text,
                 bool no_loops, const std::string& out_path,
                 const ExecFlags& flags) {
  Uset node_names(static_cast<std::uint32_t>(nodes), "n");
  Domain node = uset_domain(node_names);
  Domain graphs = subsets(node * node);
  if (no_loops)
    graphs = filter_domain(
        graphs,
        [](const Value& g) {
          for (const Value& e : g.items())
            if (e.items()[0] == e.items()[1]) return false;
          return true;
        },
        "no_loops");

  std::ofstream file;
  std::ostream* lines = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw EngineError("cannot open output file " + out_path);
    lines = &file;
  }

  Pipeline p = make_pipeline(graphs, parse_mode(mode_text));
  const RunReport r = run_and_emit(p, flags, lines);
  std::cerr << "count=" << r.count << " wall_ms=" << r.wall_ms << "\n";
  return 0;
}

int cmd_resetwords(std::int64_t states, std::int64_t symbols,
                   const std::string& mode_text, bool distinguish_trivial,
                   const ExecFlags& flags) {
  AutomatonFamily fam = automaton_family(static_cast<std::uint32_t>(states),
                                         static_cast<std::uint32_t>(symbols));
  auto check_fn = [fam](const Value& v) {
    return Value::integer(check_table_value(fam, v));
  };

  const ModeSpec mode = parse_mode(mode_text);
  Pipeline p = (mode.method == Method::Cnfs ? fam.tables.cnfs()
                                            : fam.tables.iterate())
                   .map(check_fn, "check_automaton")
                   .max_size(1);

  const auto opts = flags.pool_options();
  const auto t0 = std::chrono::steady_clock::now();
  ValueList best = [&] {
    if (opts) {
      PoolContext pool(*opts);
      return p.run_list(pool);
    }
    return p.run_list();
  }();
  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  if (best.empty()) throw EngineError("no automata were enumerated");
  std::cout << "The maximal length of a minimal reset word for an automaton with "
            << states << " states and " << symbols << " symbols is "
            << best[0].as_int() << ".\n";
  if (distinguish_trivial && states == 1)
    std::cout << "(A single-state automaton is already synchronized: this 0 "
                 "is the empty word, not a missing reset word.)\n";
  std::cerr << "wall_ms=" << wall_ms << "\n";
  return 0;
}

int cmd_run(const std::string& spec_path, const std::string& mode_text,
            const std::string& action, std::int64_t take,
            const std::string& out_path, const ExecFlags& flags) {
  std::ifstream in(spec_path);
  if (!in) throw EngineError("cannot read spec file " + spec_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  DomainSpec spec = domain_from_json_text(buffer.str());

  Pipeline p = make_pipeline(spec.domain, parse_mode(mode_text));
  if (take >= 0) p = p.take(static_cast<std::uint64_t>(take));
  if (action == "count")
    p = p.count();
  else if (action == "first")
    p = p.first();

  std::ofstream file;
  std::ostream* lines = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw EngineError("cannot open output file " + out_path);
    lines = &file;
  }

  const RunReport r = run_and_emit(p, flags, lines);
  std::cerr << "count=" << r.count << " wall_ms=" << r.wall_ms << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"enumerate discrete structures up to isomorphism"};
  app.require_subcommand(1);

  // digraphs
  std::int64_t nodes = 2;
  std::string dg_mode = "cnfs";
  bool no_loops = false;
  std::string dg_out;
  ExecFlags dg_flags;
  CLI::App* digraphs = app.add_subcommand(
      "digraphs", "enumerate directed graphs on n freely-named nodes");
  digraphs->add_option("--nodes", nodes, "number of nodes")
      ->required()
      ->check(CLI::PositiveNumber);
  digraphs->add_option("--mode", dg_mode, "iterate, cnfs or generate:K")
      ->check(mode_check);
  digraphs->add_flag("--no-loops", no_loops, "drop graphs with self-loops");
  digraphs->add_option("--out", dg_out, "write JSON lines here instead of stdout");
  add_exec_flags(digraphs, dg_flags);

  // resetwords
  std::int64_t states = 2;
  std::int64_t symbols = 2;
  std::string rw_mode = "cnfs";
  bool distinguish_trivial = false;
  ExecFlags rw_flags;
  CLI::App* resetwords = app.add_subcommand(
      "resetwords",
      "maximal minimal reset-word length over all automata of a given size");
  resetwords->add_option("--states", states, "number of states")
      ->required()
      ->check(CLI::PositiveNumber);
  resetwords->add_option("--symbols", symbols, "alphabet size")
      ->required()
      ->check(CLI::PositiveNumber);
  resetwords->add_option("--mode", rw_mode, "cnfs or iterate")
      ->check(CLI::IsMember({"cnfs", "iterate"}));
  resetwords->add_flag("--distinguish-trivial", distinguish_trivial,
                       "note when 0 means 'already synchronized' (one state)");
  add_exec_flags(resetwords, rw_flags);

  // run
  std::string spec_path;
  std::string run_mode = "iterate";
  std::string run_action = "collect";
  std::int64_t run_take = -1;
  std::string run_out;
  ExecFlags run_flags;
  CLI::App* run = app.add_subcommand(
      "run", "run a pipeline over a domain declared in a JSON spec");
  run->add_option("--spec", spec_path, "domain spec (JSON file)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--mode", run_mode, "iterate, cnfs or generate:K")
      ->check(mode_check);
  run->add_option("--action", run_action, "collect, count or first")
      ->check(CLI::IsMember({"collect", "count", "first"}));
  run->add_option("--take", run_take, "stop after this many elements")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_out, "write JSON lines here instead of stdout");
  add_exec_flags(run, run_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (digraphs->parsed())
      return cmd_digraphs(nodes, dg_mode, no_loops, dg_out, dg_flags);
    if (resetwords->parsed())
      return cmd_resetwords(states, symbols, rw_mode, distinguish_trivial,
                            rw_flags);
    return cmd_run(spec_path, run_mode, run_action, run_take, run_out,
                   run_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
