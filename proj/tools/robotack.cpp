// robotack: simulate, run campaigns, train safety-hijacker networks,
// characterize detector logs and rebuild reports.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robotack/harness.hpp"
#include "robotack/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace robotack;
using nlohmann::json;

namespace {

// Everything a subcommand may need. The --config file is read first; flags
// given on the command line override it.
struct Options {
  std::string scenario = "DS1";
  std::string scenario_file;
  std::string mode = "robotack";
  std::string vector = "auto";
  int runs = 100;
  std::uint64_t seed = 1;
  std::optional<double> gamma;
  std::optional<int> kmax_ped;
  std::optional<int> kmax_veh;
  std::string out;
  std::string config;
  std::string registry = "sh_registry";
  unsigned threads = 0;
  int epochs = 500;
  std::vector<std::string> inputs;
};

void apply_config_file(Options& o, const CLI::App& app) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw ConfigError("cannot open config file " + o.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + o.config + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + o.config + ": expected a JSON object");
  const auto given = [&](const char* flag) { return app.count(flag) > 0; };
  try {
    if (j.contains("scenario") && !given("--scenario")) {
      if (j["scenario"].is_object()) o.scenario_file = o.config;  // inline scenario: see load_scenario below
      else o.scenario = j["scenario"].get<std::string>();
    }
    if (j.contains("scenario_file") && !given("--scenario")) {
      fs::path p = j["scenario_file"].get<std::string>();
      if (p.is_relative()) p = fs::path(o.config).parent_path() / p;
      o.scenario_file = p.string();
    }
    if (j.contains("mode") && !given("--mode")) o.mode = j["mode"].get<std::string>();
    if (j.contains("vector") && !given("--vector")) o.vector = j["vector"].get<std::string>();
    if (j.contains("runs") && !given("--runs")) o.runs = j["runs"].get<int>();
    if (j.contains("seed") && !given("--seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("gamma") && !given("--gamma")) o.gamma = j["gamma"].get<double>();
    if (j.contains("kmax_ped") && !given("--kmax-ped")) o.kmax_ped = j["kmax_ped"].get<int>();
    if (j.contains("kmax_veh") && !given("--kmax-veh")) o.kmax_veh = j["kmax_veh"].get<int>();
    if (j.contains("out") && !given("--out")) o.out = j["out"].get<std::string>();
    if (j.contains("registry") && !given("--registry")) o.registry = j["registry"].get<std::string>();
    if (j.contains("threads") && !given("--threads")) o.threads = j["threads"].get<unsigned>();
    if (j.contains("epochs") && !given("--epochs")) o.epochs = j["epochs"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError("config file " + o.config + ": " + e.what());
  }
}

world::ScenarioConfig load_scenario(const Options& o) {
  if (o.scenario_file.empty()) {
    world::ScenarioConfig c;
    c.scenario_id = parse_scenario_id(o.scenario);
    return c;
  }
  if (o.scenario_file == o.config) {
    std::ifstream in(o.config);
    const auto j = json::parse(in);
    return world::scenario_config_from_json(j["scenario"].dump());
  }
  return world::load_scenario_config(o.scenario_file);
}

std::optional<AttackVector> parse_vector(const std::string& s) {
  if (s == "auto" || s == "Auto" || s.empty()) return std::nullopt;
  return parse_attack_vector(s);
}

sim::SimConfig make_sim_config(const Options& o) {
  sim::SimConfig c;
  c.scenario = load_scenario(o);
  c.attacker.mode = attack::parse_mode(o.mode);
  c.attacker.forced_vector = parse_vector(o.vector);
  if (o.gamma) {
    if (!(*o.gamma > 0.0)) throw ConfigError("--gamma must be positive");
    c.attacker.sh.gamma = *o.gamma;
  }
  if (o.kmax_ped) {
    if (*o.kmax_ped < 1) throw ConfigError("--kmax-ped must be >= 1");
    c.attacker.sh.k_max_pedestrian = *o.kmax_ped;
  }
  if (o.kmax_veh) {
    if (*o.kmax_veh < 1) throw ConfigError("--kmax-veh must be >= 1");
    c.attacker.sh.k_max_vehicle = *o.kmax_veh;
  }
  return c;
}

// With --vector auto the matcher may ask for any vector, so every network
// must be present.
attack::PredictorRegistry predictors_for(const sim::SimConfig& c, const Options& o) {
  if (c.attacker.mode != attack::Mode::RoboTack) return {};
  auto reg = harness::load_registry(o.registry);
  std::vector<AttackVector> needed{AttackVector::MoveOut, AttackVector::MoveIn, AttackVector::Disappear};
  if (c.attacker.forced_vector) needed = {*c.attacker.forced_vector};
  for (auto v : needed)
    for (auto cls : {ObjectClass::Vehicle, ObjectClass::Pedestrian})
      if (!reg.count({v, cls}))
        throw ConfigError("registry " + o.registry + " has no " + std::string(to_string(v)) + "/" +
                          std::string(to_string(cls)) + " network (run train-sh)");
  return reg;
}

fs::path out_dir(const Options& o, const char* fallback) {
  fs::path p = o.out.empty() ? fs::path(fallback) : fs::path(o.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + p.string() + ": " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw RuntimeFailure("cannot write " + p.string());
  return f;
}

int cmd_simulate(const Options& o) {
  const auto cfg = make_sim_config(o);
  const auto preds = predictors_for(cfg, o);
  const auto dir = out_dir(o, "sim_out");
  auto world_f = open_out(dir / "world.csv");
  auto tracks_f = open_out(dir / "tracks.csv");
  auto attack_f = open_out(dir / "attack.csv");
  auto det_f = open_out(dir / "detections.csv");
  world_f.precision(10);
  tracks_f.precision(10);
  attack_f.precision(10);
  sim::SimLogs logs{&world_f, &tracks_f, &attack_f, &det_f};
  const auto r = sim::run_simulation(cfg, preds, o.seed, &logs);

  json j;
  j["scenario"] = std::string(to_string(cfg.scenario.scenario_id));
  j["mode"] = std::string(attack::to_string(cfg.attacker.mode));
  j["seed"] = o.seed;
  j["valid"] = r.valid;
  if (!r.valid) j["invalid_reason"] = r.invalid_reason;
  j["frames"] = r.frames;
  j["eb_occurred"] = r.eb_occurred;
  j["crash_occurred"] = r.crash_occurred;
  j["min_delta"] = r.min_delta;
  j["attacked"] = r.attack.start_frame >= 0 && r.attack.K_total > 0;
  if (j["attacked"]) {
    j["attack_vector"] = std::string(to_string(r.attack.vector));
    j["target_class"] = std::string(to_string(r.attack.target_class));
    j["attack_start"] = r.attack.start_frame;
    j["K"] = r.attack.K_total;
    j["K_prime"] = r.attack.K_prime_used;
  }
  open_out(dir / "result.json") << j.dump(2) << '\n';
  std::cout << j.dump() << '\n';
  return r.valid ? 0 : 2;
}

int cmd_campaign(const Options& o) {
  if (o.runs < 1) throw ConfigError("--runs must be >= 1");
  const auto sc = make_sim_config(o);
  const auto preds = predictors_for(sc, o);
  harness::CampaignConfig c;
  c.scenario = sc.scenario.scenario_id;
  c.mode = sc.attacker.mode;
  c.vector = sc.attacker.forced_vector;
  c.runs = o.runs;
  c.base_seed = o.seed;
  c.sim = sc;
  c.threads = o.threads;
  const auto res = harness::run_campaign(c, preds);
  harness::write_report(out_dir(o, "campaign_out"), {res});
  std::cout << harness::summary_row(res) << '\n';
  return 0;
}

int cmd_train_sh(const Options& o) {
  const sim::SimConfig base = make_sim_config(o);
  const auto vec = parse_vector(o.vector);
  nn::TrainConfig t;
  t.epochs = o.epochs;
  t.seed = o.seed;
  const auto dir = out_dir(o, o.registry.c_str());
  std::vector<harness::TrainedNetwork> nets;
  for (const auto& spec : harness::default_sh_networks()) {
    if (vec && spec.vector != *vec) continue;
    auto collect = harness::default_collect_config(spec, base, o.seed);
    collect.threads = o.threads;
    auto net = harness::train_sh_network(spec, collect, t);
    const std::string stem = std::string(to_string(spec.vector)) + "_" + std::string(to_string(spec.cls));
    nn::write_dataset(dir / ("dataset_" + stem + ".csv"), net.data);
    std::cout << stem << ": rows " << net.data.rows.size() << ", skipped " << net.data.skipped << ", val MAE "
              << net.result.val_mae << " m, best epoch " << net.result.best_epoch << ", monotone columns "
              << net.audit.non_increasing << "/" << net.audit.columns << '\n';
    nets.push_back(std::move(net));
  }
  if (nets.empty()) throw ConfigError("no safety-hijacker network matches --vector " + o.vector);
  harness::save_registry(dir, nets);
  return 0;
}

int cmd_characterize(const Options& o) {
  if (o.inputs.size() != 1) throw ConfigError("characterize takes exactly one detector log");
  if (!fs::exists(o.inputs[0])) throw ConfigError("no such file: " + o.inputs[0]);
  const auto report = harness::characterize(o.inputs[0]);
  if (o.out.empty()) {
    std::cout << report << '\n';
  } else {
    const fs::path p = o.out;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    open_out(p) << report << '\n';
  }
  return 0;
}

int cmd_report(const Options& o) {
  if (o.inputs.empty()) throw ConfigError("report needs at least one runs.csv");
  std::vector<harness::CampaignResult> all;
  for (const auto& in_path : o.inputs) {
    std::ifstream in(in_path);
    if (!in) throw ConfigError("cannot open " + in_path);
    auto part = harness::read_runs_csv(in);
    for (auto& c : part) all.push_back(std::move(c));
  }
  harness::write_report(out_dir(o, "report_out"), all);
  for (const auto& c : all) std::cout << harness::summary_row(c) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop tracker-hijacking simulator and campaign runner"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "JSON config file; flags override it");
    s->add_option("--scenario", o.scenario, "DS1..DS5");
    s->add_option("--seed", o.seed, "base seed");
    s->add_option("--gamma", o.gamma, "safety-hijacker crash goal, m");
    s->add_option("--kmax-ped", o.kmax_ped, "attack horizon ceiling, pedestrians (frames)");
    s->add_option("--kmax-veh", o.kmax_veh, "attack horizon ceiling, vehicles (frames)");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--registry", o.registry, "safety-hijacker network directory");
    s->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  };

  auto* simulate = app.add_subcommand("simulate", "one run with full logs");
  common(simulate);
  simulate->add_option("--mode", o.mode, "none | robotack | no_sh | random");
  simulate->add_option("--vector", o.vector, "MoveOut | MoveIn | Disappear | auto");

  auto* campaign = app.add_subcommand("campaign", "a seeded batch of runs");
  common(campaign);
  campaign->add_option("--mode", o.mode, "none | robotack | no_sh | random");
  campaign->add_option("--vector", o.vector, "MoveOut | MoveIn | Disappear | auto");
  campaign->add_option("--runs", o.runs, "number of runs");

  auto* train = app.add_subcommand("train-sh", "collect data and train the safety-hijacker networks");
  common(train);
  train->add_option("--vector", o.vector, "train only this vector's networks");
  train->add_option("--epochs", o.epochs, "training epochs");

  auto* characterize = app.add_subcommand("characterize", "fit noise models to a detector log");
  characterize->add_option("log", o.inputs, "detector log CSV")->required();
  characterize->add_option("--out", o.out, "report JSON path (stdout when omitted)");
  characterize->add_option("--config", o.config, "ignored; accepted for uniformity");

  auto* report = app.add_subcommand("report", "rebuild summary tables from runs.csv files");
  report->add_option("runs_csv", o.inputs, "runs.csv files")->required();
  report->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (auto* s : {simulate, campaign, train})
      if (s->parsed()) apply_config_file(o, *s);
    if (simulate->parsed()) return cmd_simulate(o);
    if (campaign->parsed()) return cmd_campaign(o);
    if (train->parsed()) return cmd_train_sh(o);
    if (characterize->parsed()) return cmd_characterize(o);
    return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
