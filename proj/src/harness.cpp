#include "robotack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "robotack/detection_log.hpp"
#include "robotack/stats.hpp"

namespace robotack::harness {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::string campaign_id(ScenarioId s, attack::Mode m, std::optional<AttackVector> v) {
  std::string id = "DS-" + std::to_string(static_cast<int>(s) + 1) + "-";
  switch (m) {
    case attack::Mode::None: return id + "Golden";
    case attack::Mode::Random: return id + (v ? std::string(to_string(*v)) + "-" : "Baseline-") + "Random";
    case attack::Mode::RoboTack: return id + (v ? std::string(to_string(*v)) : "Auto") + "-R";
    case attack::Mode::NoSh: return id + (v ? std::string(to_string(*v)) : "Auto") + "-RwoSH";
  }
  return id;
}

RunRecord record_from_result(const sim::SimResult& r, const sim::SimConfig& cfg, int run_index,
                             std::uint64_t seed) {
  RunRecord rec;
  rec.run_index = run_index;
  rec.seed = seed;
  rec.valid = r.valid;
  rec.invalid_reason = r.invalid_reason;
  rec.eb_occurred = r.eb_occurred;
  rec.crash_occurred = r.crash_occurred;
  rec.min_delta = r.min_delta;
  rec.frames = r.frames;
  rec.attacked = r.attack.start_frame >= 0 && r.attack.K_total > 0;
  rec.min_delta_after_attack = r.min_delta;
  if (rec.attacked) {
    rec.vector = r.attack.vector;
    rec.target_class = r.attack.target_class;
    rec.attack_start = r.attack.start_frame;
    rec.K_used = r.attack.K_total;
    rec.K_prime_used = r.attack.K_prime_used;
    rec.min_delta_after_attack = world::kEnvelopeHorizon;
    for (const auto& f : r.frame_log)
      if (f.frame >= rec.attack_start) rec.min_delta_after_attack = std::min(rec.min_delta_after_attack, f.delta_truth);
  }

  const auto& budget = cfg.attacker.budget(r.attack.target_class);
  int run = 0;
  for (const auto& row : r.attack_log) {
    if (row.vector == AttackVector::Disappear) {
      rec.max_suppression_run = std::max(rec.max_suppression_run, ++run);
      continue;
    }
    run = 0;
    if (row.box_width <= 0.0) continue;  // target not detected this frame; nothing emitted
    const double wn = row.omega_applied / row.box_width;
    if (wn < budget.lo() - 1e-9 || wn > budget.hi() + 1e-9) ++rec.budget_violations;
    if (row.assoc_cost > budget.lambda_assoc + 1e-9) ++rec.assoc_violations;
  }
  return rec;
}

CampaignSummary summarize(const std::vector<RunRecord>& records) {
  CampaignSummary s;
  s.runs = static_cast<int>(records.size());
  std::vector<double> ks, deltas;
  for (const auto& r : records) {
    if (!r.valid) continue;
    ++s.valid;
    s.eb += r.eb_occurred;
    s.crashes += r.crash_occurred;
    deltas.push_back(r.min_delta);
    if (r.attacked) {
      ++s.attacked;
      ks.push_back(r.K_used);
    }
  }
  if (s.valid > 0) {
    s.eb_rate = static_cast<double>(s.eb) / s.valid;
    s.crash_rate = static_cast<double>(s.crashes) / s.valid;
    s.min_delta_quartiles = {stats::percentile(deltas, 25), stats::percentile(deltas, 50),
                             stats::percentile(deltas, 75)};
  }
  if (!ks.empty()) s.median_K = stats::percentile(ks, 50);
  return s;
}

CampaignResult run_campaign(const CampaignConfig& cfg, const attack::PredictorRegistry& predictors) {
  if (cfg.runs < 1) throw ConfigError("campaign: runs must be >= 1");
  CampaignResult out;
  out.id = campaign_id(cfg.scenario, cfg.mode, cfg.vector);
  out.config = cfg;
  sim::SimConfig sc = cfg.sim;
  sc.scenario.scenario_id = cfg.scenario;
  sc.attacker.mode = cfg.mode;
  sc.attacker.forced_vector = cfg.vector;
  sc.attacker.injection.reset();

  out.records.resize(static_cast<std::size_t>(cfg.runs));
  parallel_for(
      out.records.size(),
      [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(cfg.base_seed, i);
        const auto r = sim::run_simulation(sc, predictors, seed);
        out.records[i] = record_from_result(r, sc, static_cast<int>(i), seed);
      },
      cfg.threads);
  out.summary = summarize(out.records);
  return out;
}

namespace {

Rate make_rate(const std::vector<RunRecord>& records, bool crash) {
  Rate r;
  for (const auto& rec : records) {
    if (!rec.valid) continue;
    ++r.n;
    r.k += crash ? rec.crash_occurred : rec.eb_occurred;
  }
  if (r.n > 0) {
    r.rate = static_cast<double>(r.k) / r.n;
    const auto ci = stats::wilson_interval(r.k, r.n);
    r.lo = ci.lo;
    r.hi = ci.hi;
  }
  return r;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

Rate eb_rate(const std::vector<RunRecord>& records) { return make_rate(records, false); }
Rate crash_rate(const std::vector<RunRecord>& records) { return make_rate(records, true); }

Multiplier multiplier(const Rate& num, const Rate& den) {
  Multiplier m;
  if (den.n == 0) {
    m.lower_bound = true;
    m.hi = std::numeric_limits<double>::infinity();
    return m;
  }
  const double den_rate = den.k > 0 ? den.rate : 0.5 / den.n;
  m.lower_bound = den.k == 0;
  m.value = num.rate / den_rate;
  m.lo = den.hi > 0.0 ? num.lo / den.hi : 0.0;
  m.hi = den.lo > 0.0 ? num.hi / den.lo : std::numeric_limits<double>::infinity();
  return m;
}

std::string Multiplier::text() const {
  std::string out = (lower_bound ? ">=" : "") + fixed(value, 1) + "x [" + fixed(lo, 2) + ", ";
  out += std::isinf(hi) ? std::string("inf") : fixed(hi, 2);
  return out + "]";
}

AblationReport compare_ablation(const std::vector<RunRecord>& robotack, const std::vector<RunRecord>& no_sh,
                                const std::vector<RunRecord>& random) {
  AblationReport a;
  a.r_eb = eb_rate(robotack);
  a.r_crash = crash_rate(robotack);
  a.no_sh_eb = eb_rate(no_sh);
  a.no_sh_crash = crash_rate(no_sh);
  a.random_eb = eb_rate(random);
  a.random_crash = crash_rate(random);
  a.eb_vs_no_sh = multiplier(a.r_eb, a.no_sh_eb);
  a.crash_vs_no_sh = multiplier(a.r_crash, a.no_sh_crash);
  a.eb_vs_random = multiplier(a.r_eb, a.random_eb);
  a.crash_vs_random = multiplier(a.r_crash, a.random_crash);
  return a;
}

void write_ablation_report(std::ostream& out, const AblationReport& a) {
  const auto rate = [](const Rate& r) {
    return std::to_string(r.k) + "/" + std::to_string(r.n) + " (" + fixed(100.0 * r.rate, 1) + "%, 95% CI " +
           fixed(100.0 * r.lo, 1) + "-" + fixed(100.0 * r.hi, 1) + "%)";
  };
  out << "arm,eb,crash\n"
      << "R," << rate(a.r_eb) << ',' << rate(a.r_crash) << '\n'
      << "RwoSH," << rate(a.no_sh_eb) << ',' << rate(a.no_sh_crash) << '\n'
      << "Random," << rate(a.random_eb) << ',' << rate(a.random_crash) << '\n'
      << "R/RwoSH," << a.eb_vs_no_sh.text() << ',' << a.crash_vs_no_sh.text() << '\n'
      << "R/Random," << a.eb_vs_random.text() << ',' << a.crash_vs_random.text() << '\n';
}

nn::ShDataset collect_training_data(const CollectConfig& cfg, MonotonicityAudit* audit) {
  struct Job {
    std::size_t delta_idx, seed_idx;
    int k;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < cfg.delta_grid.size(); ++d)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      for (int k : cfg.k_grid) {
        if (k < 0) throw ConfigError("collect: k must be >= 0");
        jobs.push_back({d, s, k});
      }

  sim::SimConfig base = cfg.sim;
  base.scenario.scenario_id = cfg.scenario;
  base.attacker.mode = attack::Mode::RoboTack;
  base.attacker.forced_vector = cfg.vector;
  base.stop_after_label = 0;

  std::vector<std::optional<nn::ShRow>> rows(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t i) {
        const auto& job = jobs[i];
        sim::SimConfig sc = base;
        sc.attacker.injection = attack::Injection{cfg.delta_grid[job.delta_idx], job.k};
        const auto r = sim::run_simulation(sc, {}, cfg.seeds[job.seed_idx]);
        if (!r.valid || !r.label) return;
        rows[i] = nn::ShRow{r.attack.trigger_delta, r.attack.trigger_v_rel, r.attack.trigger_a_rel, job.k, *r.label};
      },
      cfg.threads);

  nn::ShDataset ds;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<nn::ShRow>> columns;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!rows[i]) {
      ++ds.skipped;
      continue;
    }
    ds.rows.push_back(*rows[i]);
    columns[{jobs[i].delta_idx, jobs[i].seed_idx}].push_back(*rows[i]);
  }
  if (audit) {
    *audit = {};
    for (auto& [key, col] : columns) {
      if (col.size() < 2 || col.front().a_rel > 0.0) continue;
      std::sort(col.begin(), col.end(), [](const nn::ShRow& a, const nn::ShRow& b) { return a.k < b.k; });
      ++audit->columns;
      bool ok = true;
      for (std::size_t j = 1; j < col.size(); ++j)
        if (col[j].label > col[j - 1].label + 1e-9) ok = false;
      audit->non_increasing += ok;
    }
  }
  return ds;
}

std::vector<ShNetworkSpec> default_sh_networks() {
  return {
      {AttackVector::MoveOut, ObjectClass::Vehicle, ScenarioId::DS1},
      {AttackVector::Disappear, ObjectClass::Vehicle, ScenarioId::DS1},
      {AttackVector::MoveOut, ObjectClass::Pedestrian, ScenarioId::DS2},
      {AttackVector::Disappear, ObjectClass::Pedestrian, ScenarioId::DS2},
      {AttackVector::MoveIn, ObjectClass::Vehicle, ScenarioId::DS3},
      {AttackVector::MoveIn, ObjectClass::Pedestrian, ScenarioId::DS4},
  };
}

CollectConfig default_collect_config(const ShNetworkSpec& spec, const sim::SimConfig& base, std::uint64_t seed) {
  CollectConfig c;
  c.scenario = spec.scenario;
  c.vector = spec.vector;
  c.sim = base;
  for (double d = 10.0; d <= 50.0 + 1e-9; d += 5.0) c.delta_grid.push_back(d);
  const int k_max = base.attacker.sh.k_max(spec.cls);
  for (int k = 0; k <= k_max; k += 2) c.k_grid.push_back(k);
  if (c.k_grid.back() != k_max) c.k_grid.push_back(k_max);
  for (std::uint64_t i = 0; i < 8; ++i) c.seeds.push_back(derive_seed(seed, 1000 + i));
  return c;
}

TrainedNetwork train_sh_network(const ShNetworkSpec& spec, const CollectConfig& collect, const nn::TrainConfig& tcfg) {
  TrainedNetwork net;
  net.spec = spec;
  net.data = collect_training_data(collect, &net.audit);
  if (net.data.rows.empty())
    throw RuntimeFailure("train-sh: no training rows for " + std::string(to_string(spec.vector)) + "/" +
                         std::string(to_string(spec.cls)) + " (" + std::to_string(net.data.skipped) + " skipped)");
  net.result = nn::train(net.data, tcfg, spec.vector, spec.cls);
  return net;
}

attack::SafetyPredictor make_predictor(std::shared_ptr<const nn::Mlp> mlp) {
  return [mlp](double v_rel, double a_rel, double delta_t, int k) {
    return nn::forward(*mlp, {delta_t, v_rel, a_rel, static_cast<double>(k)});
  };
}

attack::PredictorRegistry make_registry(const std::vector<TrainedNetwork>& nets) {
  attack::PredictorRegistry reg;
  for (const auto& n : nets)
    reg[{n.spec.vector, n.spec.cls}] = make_predictor(std::make_shared<const nn::Mlp>(n.result.mlp));
  return reg;
}

namespace {

std::string weights_file_name(AttackVector v, ObjectClass c) {
  std::string name = "sh_" + std::string(to_string(v)) + "_" + std::string(to_string(c)) + ".json";
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return name;
}

}  // namespace

void save_registry(const std::filesystem::path& dir, const std::vector<TrainedNetwork>& nets) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  nlohmann::json reg;
  reg["schema"] = nn::kWeightsSchema;
  reg["networks"] = nlohmann::json::array();
  for (const auto& n : nets) {
    const auto file = weights_file_name(n.spec.vector, n.spec.cls);
    nn::save_weights(n.result.mlp, dir / file);
    reg["networks"].push_back({{"attack_vector", std::string(to_string(n.spec.vector))},
                               {"target_class", std::string(to_string(n.spec.cls))},
                               {"scenario", std::string(to_string(n.spec.scenario))},
                               {"file", file},
                               {"rows", n.data.rows.size()},
                               {"skipped", n.data.skipped},
                               {"val_mae", n.result.val_mae},
                               {"best_epoch", n.result.best_epoch}});
  }
  std::ofstream out(dir / "registry.json");
  if (!out) throw RuntimeFailure("cannot write registry: " + (dir / "registry.json").string());
  out << reg.dump(2) << '\n';
}

attack::PredictorRegistry load_registry(const std::filesystem::path& dir) {
  std::ifstream in(dir / "registry.json");
  if (!in) throw ConfigError("no SH registry at " + (dir / "registry.json").string() + " (run train-sh first)");
  nlohmann::json reg;
  try {
    reg = nlohmann::json::parse(in);
    if (reg.at("schema").get<int>() != nn::kWeightsSchema) throw ConfigError("registry: unsupported schema");
    attack::PredictorRegistry out;
    for (const auto& e : reg.at("networks")) {
      const auto v = parse_attack_vector(e.at("attack_vector").get<std::string>());
      const auto c = parse_object_class(e.at("target_class").get<std::string>());
      auto mlp = std::make_shared<nn::Mlp>(nn::load_weights(dir / e.at("file").get<std::string>()));
      if (mlp->attack_vector != v || mlp->target_class != c)
        throw ConfigError("registry: weights file tag does not match its entry");
      out[{v, c}] = make_predictor(std::move(mlp));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("registry: corrupt file: ") + e.what());
  }
}

std::string characterize(const std::filesystem::path& log_path, const sensing::NoiseFitConfig& cfg) {
  const auto log = sensing::read_detection_log(log_path);
  return sensing::characterization_report_json(sensing::fit_noise_models(log, cfg));
}

std::string summary_row(const CampaignResult& c) {
  const auto& s = c.summary;
  const double k = s.median_K;
  const std::string kstr = s.attacked == 0 ? "-" : (k == std::floor(k) ? fixed(k, 0) : fixed(k, 1));
  const auto count = [&](int n) {
    return std::to_string(n) + " (" + fixed(s.valid ? 100.0 * n / s.valid : 0.0, 1) + "%)";
  };
  const bool move_in = c.config.vector == AttackVector::MoveIn;
  return c.id + ", " + kstr + ", " + std::to_string(s.valid) + ", " + count(s.eb) + ", " +
         (move_in ? std::string("-") : count(s.crashes));
}

void write_summary_csv(std::ostream& out, const std::vector<CampaignResult>& results) {
  out << "ID, K, runs, EB (%), crashes (%)\n";
  for (const auto& c : results) out << summary_row(c) << '\n';
}

namespace {

constexpr const char* kRunsHeader =
    "campaign,scenario,mode,vector,run,seed,valid,eb,crash,min_delta,min_delta_after_attack,frames,attacked,"
    "attack_vector,target_class,attack_start,K,K_prime,budget_violations,assoc_violations,max_suppression_run";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_runs_csv(std::ostream& out, const std::vector<CampaignResult>& results) {
  out << kRunsHeader << '\n' << std::setprecision(17);
  for (const auto& c : results) {
    for (const auto& r : c.records) {
      out << c.id << ',' << to_string(c.config.scenario) << ',' << attack::to_string(c.config.mode) << ','
          << (c.config.vector ? to_string(*c.config.vector) : "") << ',' << r.run_index << ',' << r.seed << ','
          << r.valid << ',' << r.eb_occurred << ',' << r.crash_occurred << ',' << r.min_delta << ','
          << r.min_delta_after_attack << ',' << r.frames << ',' << r.attacked << ','
          << (r.vector ? to_string(*r.vector) : "") << ',' << to_string(r.target_class) << ',' << r.attack_start
          << ',' << r.K_used << ',' << r.K_prime_used << ',' << r.budget_violations << ',' << r.assoc_violations
          << ',' << r.max_suppression_run << '\n';
    }
  }
}

std::vector<CampaignResult> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) throw ConfigError("runs.csv: unexpected header");
  std::vector<CampaignResult> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 21) throw ConfigError("runs.csv: bad row: " + line);
    try {
      auto [it, fresh] = index.emplace(f[0], out.size());
      if (fresh) {
        CampaignResult c;
        c.id = f[0];
        c.config.scenario = parse_scenario_id(f[1]);
        c.config.mode = attack::parse_mode(f[2]);
        if (!f[3].empty()) c.config.vector = parse_attack_vector(f[3]);
        out.push_back(std::move(c));
      }
      RunRecord r;
      r.run_index = std::stoi(f[4]);
      r.seed = std::stoull(f[5]);
      r.valid = f[6] == "1";
      r.eb_occurred = f[7] == "1";
      r.crash_occurred = f[8] == "1";
      r.min_delta = std::stod(f[9]);
      r.min_delta_after_attack = std::stod(f[10]);
      r.frames = std::stoll(f[11]);
      r.attacked = f[12] == "1";
      if (!f[13].empty()) r.vector = parse_attack_vector(f[13]);
      r.target_class = parse_object_class(f[14]);
      r.attack_start = std::stoll(f[15]);
      r.K_used = std::stoi(f[16]);
      r.K_prime_used = std::stoi(f[17]);
      r.budget_violations = std::stoi(f[18]);
      r.assoc_violations = std::stoi(f[19]);
      r.max_suppression_run = std::stoi(f[20]);
      out[it->second].records.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("runs.csv: bad row: " + line);
    }
  }
  for (auto& c : out) {
    c.config.runs = static_cast<int>(c.records.size());
    c.summary = summarize(c.records);
  }
  return out;
}

void write_min_delta_csv(std::ostream& out, const std::vector<CampaignResult>& results) {
  out << "campaign,run,min_delta,min_delta_after_attack\n" << std::setprecision(17);
  for (const auto& c : results)
    for (const auto& r : c.records)
      if (r.valid) out << c.id << ',' << r.run_index << ',' << r.min_delta << ',' << r.min_delta_after_attack << '\n';
}

void write_report(const std::filesystem::path& dir, const std::vector<CampaignResult>& results) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw RuntimeFailure("cannot write report file: " + (dir / name).string());
    return f;
  };
  auto runs = open("runs.csv");
  write_runs_csv(runs, results);
  auto summary = open("summary.csv");
  write_summary_csv(summary, results);
  auto deltas = open("min_delta.csv");
  write_min_delta_csv(deltas, results);
}

}  // namespace robotack::harness
