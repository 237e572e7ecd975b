#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slan/slan.hpp"

namespace slan::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kUsage = 2, kResource = 3 };

struct GlobalOptions {
  std::string confirm_channel = "own";
  std::size_t queue_cap = 0;  // 0 = derived from max
};

inline Config make_config(unsigned max, const GlobalOptions& g) {
  Config cfg = Config::with_max(max);
  cfg.confirm_channel = g.confirm_channel == "literal"
                            ? ConfirmChannel::LiteralFrom
                            : ConfirmChannel::OwnOutgoing;
  if (g.queue_cap) cfg.queue_cap = g.queue_cap;
  return cfg;
}

inline nlohmann::json stats_json(std::optional<unsigned> max,
                                 const ExplorationStats& s) {
  nlohmann::json j;
  j["max"] = max ? nlohmann::json(*max) : nlohmann::json(nullptr);
  j["states"] = s.states;
  j["transitions"] = s.transitions;
  j["max_queue_len"] = s.max_queue();
  j["wall_time_s"] = s.wall_time_s;
  return j;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_output(const std::string& path, const std::string& text,
                         std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

inline std::string render_trace(const std::vector<ActionLabel>& trace) {
  std::string s;
  for (std::size_t i = 0; i < trace.size(); ++i)
    s += (i ? ", " : "") + to_string(trace[i]);
  return s;
}

struct ExploreArgs {
  unsigned max = 1;
  std::string out;
  std::string format = "aut";
  bool stats_json = false;
};

inline int cmd_explore(const ExploreArgs& a, const GlobalOptions& g,
                       std::ostream& out) {
  Config cfg = make_config(a.max, g);
  Exploration ex = explore(cfg);
  if (!a.out.empty())
    write_output(a.out, a.format == "dot" ? export_dot(ex.lts)
                                          : export_aut(ex.lts),
                 out);
  if (a.stats_json) {
    out << stats_json(a.max, ex.stats).dump() << "\n";
  } else if (a.out.empty()) {
    out << "states " << ex.stats.states << "\ntransitions "
        << ex.stats.transitions << "\nmax_queue_len " << ex.stats.max_queue()
        << "\n";
  }
  return kOk;
}

struct ReduceArgs {
  std::string in;
  unsigned max = 0;
  std::string equiv = "dpbb";
  std::string hide;
  std::string out;
  bool stats_json = false;
};

inline int cmd_reduce(const ReduceArgs& a, const GlobalOptions& g,
                      std::ostream& out, std::ostream& err) {
  if (a.in.empty() == (a.max == 0)) {
    err << "reduce: give exactly one of --in or --max\n";
    return kUsage;
  }
  Lts lts;
  ExplorationStats stats;
  std::optional<unsigned> max;
  if (!a.in.empty()) {
    lts = import_aut(read_file(a.in));
    stats.states = lts.num_states();
    stats.transitions = lts.num_transitions();
  } else {
    Exploration ex = explore(make_config(a.max, g));
    lts = std::move(ex.lts);
    stats = ex.stats;
    max = a.max;
  }
  Lts hidden = hide(lts, HideSet::parse(a.hide));
  ReducedLts red = a.equiv == "weak-trace" ? minimize_weak_trace(hidden)
                                           : minimize_dpbb(hidden);
  if (!a.out.empty()) write_output(a.out, export_aut(red.lts), out);
  if (a.stats_json) {
    auto j = stats_json(max, stats);
    j["reduced"] = {{"equiv", a.equiv},
                    {"states", red.lts.num_states()},
                    {"transitions", red.lts.num_transitions()},
                    {"tau_transitions", red.lts.count(ActionKind::Tau)}};
    out << j.dump() << "\n";
  } else if (a.out.empty()) {
    out << export_aut(red.lts);
  }
  return kOk;
}

struct CheckArgs {
  unsigned max = 1;
  std::string property = "all";
  std::string party;
  bool json = false;
};

inline int cmd_check(const CheckArgs& a, const GlobalOptions& g,
                     std::ostream& out, std::ostream& err) {
  std::optional<PartyId> party;
  if (!a.party.empty()) party = parse_party(a.party);
  std::optional<Property> only;
  if (a.property != "all") only = parse_property(a.property);
  if (party && only && *only != Property::I && *only != Property::II) {
    err << "check: --party applies to properties I and II only\n";
    return kUsage;
  }
  Config cfg = make_config(a.max, g);
  Exploration ex = explore(cfg);
  std::vector<PropertyReport> reports;
  if (only) {
    reports.push_back(check_property(ex.lts, cfg, *only, party));
  } else {
    for (Property p : {Property::I, Property::II, Property::III, Property::IV,
                       Property::Deadlock, Property::ValidLevels}) {
      bool per_party = p == Property::I || p == Property::II;
      reports.push_back(
          check_property(ex.lts, cfg, p, per_party ? party : std::nullopt));
    }
  }
  bool all_hold = true;
  for (const auto& r : reports) {
    all_hold = all_hold && r.result.holds;
    if (a.json) {
      out << to_json(r, cfg).dump() << "\n";
      continue;
    }
    out << to_string(r.property);
    if (r.party) out << " (" << to_string(*r.party) << ")";
    if (r.result.holds) {
      out << ": holds\n";
    } else {
      out << ": violated";
      if (!r.result.detail.empty()) out << " (" << r.result.detail << ")";
      out << "\n  counterexample: " << render_trace(*r.result.counterexample)
          << "\n";
    }
  }
  return all_hold ? kOk : kViolation;
}

struct ReplayArgs {
  std::string path;
  bool json = false;
};

inline int cmd_replay(const ReplayArgs& a, const GlobalOptions& g,
                      std::ostream& out) {
  Scenario sc = parse_scenario(read_file(a.path));
  ReplayResult r = replay(sc.steps, make_config(sc.max, g));
  if (a.json) {
    out << to_json(r).dump() << "\n";
  } else {
    for (const auto& e : r.log) out << e.step << " " << e.outcome << "\n";
    out << (r.ok() ? "replay ok" : "replay failed") << ", max queue "
        << r.max_queue_seen << "\n";
  }
  return r.ok() ? kOk : kViolation;
}

/// Text loop: a number fires that menu entry, `u` undoes, `q` quits.
inline int cmd_step(unsigned max, const GlobalOptions& g, std::istream& in,
                    std::ostream& out) {
  Stepper stepper(make_config(max, g));
  auto show = [&] {
    out << describe(stepper.current(), stepper.config());
    auto menu = stepper.menu();
    for (std::size_t i = 0; i < menu.size(); ++i)
      out << "  " << i << ") " << to_string(menu[i]) << "\n";
    out << "> " << std::flush;
  };
  show();
  std::string line;
  while (std::getline(in, line)) {
    if (line == "q") break;
    if (line == "u") {
      if (!stepper.undo()) out << "nothing to undo\n";
    } else {
      std::size_t index = 0;
      auto [ptr, ec] =
          std::from_chars(line.data(), line.data() + line.size(), index);
      if (ec != std::errc{} || ptr != line.data() + line.size() ||
          !stepper.choose(index))
        out << "invalid choice\n";
    }
    show();
  }
  out << "\n";
  return kOk;
}

inline int run(int argc, const char* const* argv, std::istream& in,
               std::ostream& out, std::ostream& err) {
  CLI::App app{"Explore and verify the service level agreement negotiation protocol",
               "slan"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--confirm-channel", g.confirm_channel,
                 "Channel receiving a decide confirmation")
      ->check(CLI::IsMember({"own", "literal"}))
      ->capture_default_str();
  app.add_option("--queue-cap", g.queue_cap,
                 "Maximum messages per channel (default 3*max+2)")
      ->check(CLI::PositiveNumber);

  auto max_check = CLI::Range(1u, unsigned(kMaxLevels));

  ExploreArgs ex;
  auto* explore_cmd = app.add_subcommand("explore", "Build the state space");
  explore_cmd->fallthrough();
  explore_cmd->add_option("--max", ex.max, "Number of service levels")
      ->required()
      ->check(max_check);
  explore_cmd->add_option("--out", ex.out, "Write the LTS here ('-' = stdout)");
  explore_cmd->add_option("--format", ex.format)
      ->check(CLI::IsMember({"aut", "dot"}))
      ->capture_default_str();
  explore_cmd->add_flag("--stats-json", ex.stats_json);

  ReduceArgs rd;
  auto* reduce_cmd = app.add_subcommand("reduce", "Hide actions and minimise");
  reduce_cmd->fallthrough();
  reduce_cmd->add_option("--in", rd.in, "Input .aut file");
  reduce_cmd->add_option("--max", rd.max, "Explore this instance instead")
      ->check(max_check);
  reduce_cmd->add_option("--equiv", rd.equiv)
      ->check(CLI::IsMember({"dpbb", "weak-trace"}))
      ->capture_default_str();
  reduce_cmd->add_option(
      "--hide", rd.hide,
      "Comma list of in_q, out_q, propose:id1, propose:id2, agreed:id1, "
      "agreed:id2");
  reduce_cmd->add_option("--out", rd.out, "Output .aut file");
  reduce_cmd->add_flag("--stats-json", rd.stats_json);

  CheckArgs ck;
  auto* check_cmd = app.add_subcommand("check", "Verify requirements");
  check_cmd->fallthrough();
  check_cmd->add_option("--max", ck.max)->required()->check(max_check);
  check_cmd->add_option("--property", ck.property)
      ->check(CLI::IsMember(
          {"I", "II", "III", "IV", "deadlock", "valid-levels", "all"}))
      ->capture_default_str();
  check_cmd->add_option("--party", ck.party)
      ->check(CLI::IsMember({"id1", "id2"}));
  check_cmd->add_flag("--json", ck.json);

  ReplayArgs rp;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a scenario file");
  replay_cmd->fallthrough();
  replay_cmd->add_option("scenario", rp.path)->required();
  replay_cmd->add_flag("--json", rp.json);

  unsigned step_max = 1;
  auto* step_cmd = app.add_subcommand("step", "Step through the model");
  step_cmd->fallthrough();
  step_cmd->add_option("--max", step_max)->required()->check(max_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*explore_cmd) return cmd_explore(ex, g, out);
    if (*reduce_cmd) return cmd_reduce(rd, g, out, err);
    if (*check_cmd) return cmd_check(ck, g, out, err);
    if (*replay_cmd) return cmd_replay(rp, g, out);
    if (*step_cmd) return cmd_step(step_max, g, in, out);
  } catch (const QueueCapExceeded& e) {
    err << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const SubsetBlowup& e) {
    err << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const ResourceExhausted& e) {
    err << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const std::bad_alloc&) {
    err << "resource limit: out of memory\n";
    return kResource;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace slan::cli
