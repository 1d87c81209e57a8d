#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robotack/attack.hpp"
#include "robotack/nn.hpp"
#include "robotack/noise_fit.hpp"
#include "robotack/sim.hpp"

namespace robotack::harness {

// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

struct CampaignConfig {
  ScenarioId scenario = ScenarioId::DS1;
  attack::Mode mode = attack::Mode::RoboTack;
  std::optional<AttackVector> vector;  // unset: the scenario matcher decides
  int runs = 100;
  std::uint64_t base_seed = 1;
  sim::SimConfig sim;  // scenario id, mode and vector are taken from the fields above
  unsigned threads = 0;
};

struct RunRecord {
  int run_index = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string invalid_reason;
  bool eb_occurred = false;
  bool crash_occurred = false;
  double min_delta = 0.0;
  std::int64_t frames = 0;
  bool attacked = false;
  std::optional<AttackVector> vector;
  ObjectClass target_class = ObjectClass::Vehicle;
  std::int64_t attack_start = -1;
  int K_used = 0;
  int K_prime_used = 0;
  double min_delta_after_attack = 0.0;  // from the attack start on; whole run otherwise
  // Stealth audit over the run's attack log.
  int budget_violations = 0;
  int assoc_violations = 0;
  int max_suppression_run = 0;
};

struct CampaignSummary {
  int runs = 0;
  int valid = 0;
  int attacked = 0;
  int eb = 0;
  int crashes = 0;
  double eb_rate = 0.0;  // over valid runs
  double crash_rate = 0.0;
  double median_K = 0.0;  // over attacked runs
  std::array<double, 3> min_delta_quartiles{0, 0, 0};
};

struct CampaignResult {
  std::string id;
  CampaignConfig config;
  std::vector<RunRecord> records;
  CampaignSummary summary;
};

// "DS-2-Disappear-R", "DS-1-MoveOut-RwoSH", "DS-5-Baseline-Random", "DS-1-Golden".
std::string campaign_id(ScenarioId s, attack::Mode m, std::optional<AttackVector> v);

RunRecord record_from_result(const sim::SimResult& r, const sim::SimConfig& cfg, int run_index,
                             std::uint64_t seed);
CampaignSummary summarize(const std::vector<RunRecord>& records);
// Runs are independent; records come back ordered by run index.
CampaignResult run_campaign(const CampaignConfig& cfg, const attack::PredictorRegistry& predictors);

struct Rate {
  int k = 0;
  int n = 0;
  double rate = 0.0;
  double lo = 0.0;  // Wilson 95%
  double hi = 0.0;
};
Rate eb_rate(const std::vector<RunRecord>& records);
Rate crash_rate(const std::vector<RunRecord>& records);

// num/den rate ratio. A zero denominator is replaced by the continuity
// corrected 0.5/n and the value reported as a lower bound.
struct Multiplier {
  double value = 0.0;
  bool lower_bound = false;
  double lo = 0.0;  // from the Wilson bounds; hi is infinite when den.lo == 0
  double hi = 0.0;
  std::string text() const;
};
Multiplier multiplier(const Rate& num, const Rate& den);

struct AblationReport {
  Rate r_eb, r_crash, no_sh_eb, no_sh_crash, random_eb, random_crash;
  Multiplier eb_vs_no_sh, crash_vs_no_sh, eb_vs_random, crash_vs_random;
};
AblationReport compare_ablation(const std::vector<RunRecord>& robotack, const std::vector<RunRecord>& no_sh,
                                const std::vector<RunRecord>& random);
void write_ablation_report(std::ostream& out, const AblationReport& a);

// Safety-hijacker training data.
struct CollectConfig {
  ScenarioId scenario = ScenarioId::DS1;
  AttackVector vector = AttackVector::MoveOut;
  std::vector<double> delta_grid;  // delta_inject values, m
  std::vector<int> k_grid;
  std::vector<std::uint64_t> seeds;
  sim::SimConfig sim;
  unsigned threads = 0;
};

struct MonotonicityAudit {
  int columns = 0;         // (delta_inject, seed) pairs with a_rel <= 0 and >= 2 rows
  int non_increasing = 0;  // columns whose labels never increase with k
  double fraction() const { return columns ? static_cast<double>(non_increasing) / columns : 1.0; }
};

nn::ShDataset collect_training_data(const CollectConfig& cfg, MonotonicityAudit* audit = nullptr);

struct ShNetworkSpec {
  AttackVector vector = AttackVector::MoveOut;
  ObjectClass cls = ObjectClass::Vehicle;
  ScenarioId scenario = ScenarioId::DS1;
};
// One network per (vector, class) the campaigns can ask for.
std::vector<ShNetworkSpec> default_sh_networks();
CollectConfig default_collect_config(const ShNetworkSpec& spec, const sim::SimConfig& base, std::uint64_t seed);

struct TrainedNetwork {
  ShNetworkSpec spec;
  nn::ShDataset data;
  MonotonicityAudit audit;
  nn::TrainResult result;
};
TrainedNetwork train_sh_network(const ShNetworkSpec& spec, const CollectConfig& collect, const nn::TrainConfig& tcfg);

attack::SafetyPredictor make_predictor(std::shared_ptr<const nn::Mlp> mlp);
attack::PredictorRegistry make_registry(const std::vector<TrainedNetwork>& nets);

// Directory layout: registry.json plus one weights file per network.
void save_registry(const std::filesystem::path& dir, const std::vector<TrainedNetwork>& nets);
attack::PredictorRegistry load_registry(const std::filesystem::path& dir);

// Fits the noise models to a detector log and returns the JSON report.
std::string characterize(const std::filesystem::path& log_path, const sensing::NoiseFitConfig& cfg = {});

// Table row: "DS-2-Disappear-R, 14, 144, 136 (94.4%), 119 (82.6%)".
std::string summary_row(const CampaignResult& c);
void write_runs_csv(std::ostream& out, const std::vector<CampaignResult>& results);
void write_summary_csv(std::ostream& out, const std::vector<CampaignResult>& results);
void write_min_delta_csv(std::ostream& out, const std::vector<CampaignResult>& results);
// runs.csv, summary.csv, min_delta.csv under dir. Throws RuntimeFailure when unwritable.
void write_report(const std::filesystem::path& dir, const std::vector<CampaignResult>& results);
std::vector<CampaignResult> read_runs_csv(std::istream& in);

}  // namespace robotack::harness
