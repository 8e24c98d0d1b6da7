#pragma once

#include <sys/resource.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provdl/api.hpp"
#include "provdl/engine.hpp"
#include "provdl/explorer.hpp"
#include "provdl/oracle.hpp"
#include "provdl/parser.hpp"
#include "provdl/render.hpp"
#include "provdl/repl.hpp"

namespace provdl {

struct CliOptions {
  std::string program;
  std::optional<std::string> facts_dir;
  std::string output_dir = ".";
  unsigned jobs = 1;
  bool no_provenance = false;
  bool stats = false;
  bool explain = false;
  bool oracle = false;
  std::optional<int> serve_port;
  bool dump_strata = false;
  bool dump_instrumented = false;
};

inline long peak_rss_kb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_maxrss;
}

namespace detail {

/// Input facts from `<dir>/<relation>.facts`. Missing files are skipped
/// unless the directory was given explicitly.
inline std::vector<Fact> load_inputs(const Program& p, const std::filesystem::path& dir, bool required) {
  std::vector<Fact> out;
  for (const auto& decl : p.relations()) {
    if (!decl.is_input) continue;
    auto file = dir / (decl.name + ".facts");
    if (!std::filesystem::exists(file)) {
      if (required) throw Error("missing fact file " + file.string());
      continue;
    }
    auto facts = load_fact_file(file, decl);
    out.insert(out.end(), facts.begin(), facts.end());
  }
  return out;
}

/// Rows sorted by their text so output is independent of interning order.
template <bool Annotated>
void write_outputs(const BasicDatabase<Annotated>& db, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (RelationId id = 0; id < db.relation_count(); ++id) {
    const auto& decl = db.program().relation(id);
    if (!decl.is_output) continue;
    std::vector<std::string> rows;
    db.relation(id).for_each([&](const auto& e) {
      std::string row;
      for (std::size_t i = 0; i < e.first.size(); ++i) {
        if (i) row += '\t';
        Term t = db.decode(id, i, e.first[i]);
        row += t.kind == Term::Kind::Number ? std::to_string(t.number) : t.text;
      }
      if constexpr (Annotated) {
        auto a = BasicRelation<true>::annotation(e);
        row += '\t' + std::to_string(a.rule) + '\t' + std::to_string(a.height);
      }
      rows.push_back(std::move(row));
    });
    std::sort(rows.begin(), rows.end());
    auto path = dir / (decl.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : rows) out << r << '\n';
  }
}

template <bool Annotated>
void print_stats(std::ostream& out, const EvalStats& s, double seconds, unsigned jobs) {
  Json j = to_json(s);
  j["provenance"] = Annotated;
  j["jobs"] = jobs;
  j["eval_seconds"] = seconds;
  j["peak_rss_kb"] = peak_rss_kb();
  out << j.dump() << "\n";
}

}  // namespace detail

/// Evaluates with the parsed options. Exit codes: 0 ok, 1 user error,
/// 2 internal error.
inline int run(const CliOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    Program program = parse_program_file(o.program);
    if (o.dump_strata) {
      out << dump_strata(stratify(program), program);
      return 0;
    }
    if (o.dump_instrumented) {
      for (const auto& line : instrument_rules(program)) out << line << "\n";
      return 0;
    }
    if (o.no_provenance && (o.explain || o.serve_port))
      throw Error("--explain and --serve need provenance annotations");

    auto dir = o.facts_dir ? std::filesystem::path(*o.facts_dir)
                           : std::filesystem::path(o.program).parent_path();
    auto inputs = detail::load_inputs(program, dir.empty() ? "." : dir, o.facts_dir.has_value());
    EvalOptions eo;
    eo.jobs = std::max(1u, o.jobs);

    auto evaluate_in = [&](auto& db) {
      for (const auto& f : inputs) db.add_fact(f);
      auto start = std::chrono::steady_clock::now();
      EvalStats s = evaluate(db, eo);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return std::pair{s, secs};
    };

    if (o.no_provenance) {
      PlainDatabase db(program);
      auto [s, secs] = evaluate_in(db);
      if (o.oracle && oracle::naive_fixpoint(program, inputs) != tuples_of(db.export_instance()))
        throw InternalError("oracle mismatch: tuple sets differ");
      detail::write_outputs(db, o.output_dir);
      if (o.stats) detail::print_stats<false>(out, s, secs, eo.jobs);
      return 0;
    }

    Database db(program);
    auto [s, secs] = evaluate_in(db);
    if (o.oracle) {
      if (oracle::minimal_heights(program, inputs) != db.export_instance())
        throw InternalError("oracle mismatch: tuples or heights differ");
      err << "oracle: ok\n";
    }
    detail::write_outputs(db, o.output_dir);
    if (o.stats) detail::print_stats<true>(out, s, secs, eo.jobs);
    if (o.explain || o.serve_port) {
      Explorer ex(db);
      if (o.explain) Repl(ex, in, out, !isatty(STDIN_FILENO) || &in != &std::cin).run();
      if (o.serve_port) {
        ExplorerApi api(ex, s);
        err << "serving on http://127.0.0.1:" << *o.serve_port << "\n";
        if (!serve(api, "127.0.0.1", *o.serve_port)) throw Error("cannot listen on port " + std::to_string(*o.serve_port));
      }
    }
    return 0;
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, const char* const* argv, std::istream& in = std::cin, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Datalog engine with minimal proof-tree annotations and a proof explorer"};
  CliOptions o;
  int port = 0;
  std::string facts;
  app.add_option("program", o.program, "Datalog program (.dl)")->required();
  auto* facts_opt = app.add_option("-F,--facts", facts, "directory with <relation>.facts input files");
  app.add_option("-D,--output", o.output_dir, "directory for <relation>.csv outputs")->capture_default_str();
  app.add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--no-provenance", o.no_provenance, "plain semi-naive evaluation, no annotations");
  app.add_flag("--stats", o.stats, "print evaluation statistics as JSON");
  app.add_flag("--explain", o.explain, "enter the explain shell after evaluation");
  app.add_flag("--oracle", o.oracle, "cross-check against the reference evaluator (small inputs)");
  auto* serve_opt = app.add_option("--serve", port, "serve the explorer HTTP API on 127.0.0.1:PORT")
                        ->check(CLI::Range(1, 65535));
  app.add_flag("--dump-strata", o.dump_strata, "print the strata, one per line, and exit");
  app.add_flag("--dump-instrumented", o.dump_instrumented, "print the annotated rules and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  if (*serve_opt) o.serve_port = port;
  if (*facts_opt) o.facts_dir = facts;
  return run(o, in, out, err);
}

}  // namespace provdl
