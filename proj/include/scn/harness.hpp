#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "scn/baselines.hpp"
#include "scn/datasets.hpp"
#include "scn/matching.hpp"
#include "scn/phy.hpp"
#include "scn/social.hpp"

namespace scn::harness {

enum class Algorithm { Sara, ContextUnaware, CentralAware, CentralUnaware };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Where the tie matrix comes from.
enum class SocialSource {
  Zero,       // all-zero ties sized to the scenario
  Matrix,     // load a saved tie-matrix CSV
  Dataset,    // SNAP ego files -> pair samples -> MAP inference
  Synthetic,  // generated ego network -> same inference pipeline
};

struct ScenarioConfig {
  std::string name = "scenario";
  Algorithm algorithm = Algorithm::Sara;

  int num_scbs = 7;
  int num_ues = 30;
  int num_sues = 4;
  double area_side_m = 2000.0;

  phy::SpectrumPlan plan{5, 3, 5, 180e3};
  phy::ChannelParams channel{};
  matching::GameConfig game{};    // social weights + loop limits
  double rho = 0.5;               // offload steepness

  std::uint64_t base_seed = 1;
  int num_runs = 20;
  std::vector<std::uint64_t> seeds;  // non-empty list overrides base_seed/num_runs

  SocialSource social_source = SocialSource::Zero;
  std::string z_path;                     // Matrix
  std::string dataset_dir;                // Dataset
  long long dataset_ego = 0;              // Dataset
  int dataset_users = 0;                  // Dataset: 0 = all members
  datasets::EgoSynthConfig synth{};       // Synthetic
  std::uint64_t synth_seed = 2026;        // Synthetic
  social::InferenceOptions hyper{};       // Dataset/Synthetic inference

  std::vector<std::uint64_t> run_seeds() const;
};

// Strict parsing: unknown keys, wrong types, or unrepresentable values throw
// with the offending key path in the message.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

// Applies environment overrides of the form <prefix><SECTION>__<KEY>=value
// (e.g. SARASIM_TOPOLOGY__NUM_UES=50) to a raw config object.  Only keys
// already present in the document can be overridden.
void apply_env_overrides(nlohmann::json& j, const std::string& prefix = "SARASIM_");

// Tie matrix shared by every run of a scenario.
struct SocialPool {
  social::SocialTieMatrix ties;
  bool inference_converged = true;
};
SocialPool build_social_pool(const ScenarioConfig& cfg);

struct RunMetrics {
  double avg_cluster_tie = 0.0;   // mean tie toward the head over non-empty clusters
  double sum_rate_bps = 0.0;      // over all matched links
  double avg_utility = 0.0;       // mean player utility over all users
  double expected_offload = 0.0;  // expected number of D2D-served UEs
  double iterations = 0.0;        // proposal rounds summed over stages
  double proposals = 0.0;
  double rounds = 0.0;            // game rounds (1 for single-pass schemes)
  double clustered_ues = 0.0;
  bool converged = true;
  bool stability_checked = false;  // exhaustive verification applies to the
                                   // distributed schemes only
  bool stability_ok = true;
  long blocking_pairs = 0;
  bool s_stable = true;
};

// Names and values in the fixed CSV column order.
std::vector<std::string> metric_names();
std::vector<double> metric_values(const RunMetrics& m);

struct RunOutput {
  std::uint64_t seed = 0;
  RunMetrics metrics;
  matching::SaraResult result;
  phy::Topology topo;
  std::vector<int> pool_subset;   // pool indices of the drawn users
  Eigen::MatrixXd z_sub;          // ties restricted to the drawn users
};

// Offload probability of one cluster: logistic in rho times the cluster's
// mean tie toward its head; rho = 0 always gives 1/2.
double offload_probability(double zbar, double rho);

// Mean tie toward the head over a cluster's UE members (0 for an empty
// cluster, which contributes nothing to the metrics).
double cluster_mean_tie(const std::vector<int>& members, int head,
                        const Eigen::MatrixXd& z);

// Sum over clustered UEs of their cluster's offload probability.
double expected_offload(const std::vector<std::vector<int>>& clusters,
                        const std::vector<int>& sue_ids, const Eigen::MatrixXd& z,
                        double rho);

// Mean of cluster_mean_tie over clusters with at least one member.
double cluster_avg_tie(const std::vector<std::vector<int>>& clusters,
                       const std::vector<int>& sue_ids, const Eigen::MatrixXd& z);

// One full simulated drop: positions, user draw from the pool, channels,
// the configured algorithm, metrics, and stability verification.
RunOutput run_scenario(const ScenarioConfig& cfg, const SocialPool& pool, std::uint64_t seed);

struct Aggregate {
  std::vector<std::uint64_t> seeds;
  std::vector<RunMetrics> per_run;       // ordered by seed index
  std::vector<double> mean;              // metric_names() order
  std::vector<double> ci_half;           // 95% normal-approximation half-widths
  int runs = 0;
  int non_converged = 0;
  int unstable = 0;                      // checked runs with blocking pairs
};

// Runs every seed (optionally on a thread pool) and reduces in seed order,
// so the aggregate is independent of scheduling.  When `keep_outputs` is
// non-null the full per-run outputs are stored there, ordered by seed index.
Aggregate monte_carlo(const ScenarioConfig& cfg, const SocialPool& pool, int threads = 0,
                      std::vector<RunOutput>* keep_outputs = nullptr);

// Single aggregate row: scenario parameters, metric means, CI half-widths.
void emit_csv_header(std::ostream& out);
void emit_csv_row(const ScenarioConfig& cfg, const Aggregate& agg, std::ostream& out);

// Per-run rows for one scenario.
void emit_runs_csv(const ScenarioConfig& cfg, const Aggregate& agg, std::ostream& out);

// Long-format plot data: series label, x value, y value, y half-width.
struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
  double ci_half = 0.0;
};
void emit_plot_data(const std::vector<PlotPoint>& points, std::ostream& out);

// Deterministic full-precision number formatting shared by all emitters.
std::string format_number(double v);

}  // namespace scn::harness
