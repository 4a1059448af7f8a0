#include "scn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "scn/rng.hpp"

namespace scn::harness {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sara: return "sara";
    case Algorithm::ContextUnaware: return "context_unaware";
    case Algorithm::CentralAware: return "central_aware";
    case Algorithm::CentralUnaware: return "central_unaware";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sara") return Algorithm::Sara;
  if (name == "context_unaware") return Algorithm::ContextUnaware;
  if (name == "central_aware") return Algorithm::CentralAware;
  if (name == "central_unaware") return Algorithm::CentralUnaware;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected sara, context_unaware, central_aware or central_unaware)");
}

std::vector<std::uint64_t> ScenarioConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(num_runs));
  for (int i = 0; i < num_runs; ++i) out[static_cast<std::size_t>(i)] = base_seed + static_cast<std::uint64_t>(i);
  return out;
}

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config error at '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      config_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) config_error(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) config_error(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    config_error(path + "." + key, "expected a non-negative integer");
  const auto signed_v = v.get<long long>();
  if (v.is_number_integer() && signed_v < 0)
    config_error(path + "." + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) config_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
  check_keys(j, "", {"name", "algorithm", "topology", "spectrum", "channel", "weights", "game",
                     "offload", "runs", "social"});
  ScenarioConfig cfg;
  cfg.name = get_string(j, "", "name", cfg.name);
  if (cfg.name.find(',') != std::string::npos || cfg.name.find('\n') != std::string::npos)
    config_error("name", "must not contain commas or newlines");
  cfg.algorithm = algorithm_from_name(get_string(j, "", "algorithm", "sara"));

  if (j.contains("topology")) {
    const json& t = j.at("topology");
    check_keys(t, "topology", {"num_scbs", "num_ues", "num_sues", "area_side_m"});
    cfg.num_scbs = get_int(t, "topology", "num_scbs", cfg.num_scbs);
    cfg.num_ues = get_int(t, "topology", "num_ues", cfg.num_ues);
    cfg.num_sues = get_int(t, "topology", "num_sues", cfg.num_sues);
    cfg.area_side_m = get_number(t, "topology", "area_side_m", cfg.area_side_m);
    if (cfg.num_scbs <= 0) config_error("topology.num_scbs", "must be positive");
    if (cfg.num_ues < 0 || cfg.num_sues < 0)
      config_error("topology.num_ues", "user counts must be non-negative");
  }
  if (j.contains("spectrum")) {
    const json& s = j.at("spectrum");
    check_keys(s, "spectrum", {"n1", "n2", "n3", "rb_bandwidth_hz"});
    cfg.plan.n1 = get_int(s, "spectrum", "n1", cfg.plan.n1);
    cfg.plan.n2 = get_int(s, "spectrum", "n2", cfg.plan.n2);
    cfg.plan.n3 = get_int(s, "spectrum", "n3", cfg.plan.n3);
    cfg.plan.rb_bandwidth_hz = get_number(s, "spectrum", "rb_bandwidth_hz", cfg.plan.rb_bandwidth_hz);
  }
  if (j.contains("channel")) {
    const json& c = j.at("channel");
    check_keys(c, "channel",
               {"scbs_power_w", "sue_power_w", "noise_w", "pathloss_exponent", "min_distance_m"});
    cfg.channel.scbs_power_w = get_number(c, "channel", "scbs_power_w", cfg.channel.scbs_power_w);
    cfg.channel.sue_power_w = get_number(c, "channel", "sue_power_w", cfg.channel.sue_power_w);
    cfg.channel.noise_w = get_number(c, "channel", "noise_w", cfg.channel.noise_w);
    cfg.channel.pathloss_exponent =
        get_number(c, "channel", "pathloss_exponent", cfg.channel.pathloss_exponent);
    cfg.channel.min_distance_m =
        get_number(c, "channel", "min_distance_m", cfg.channel.min_distance_m);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    check_keys(w, "weights", {"alpha", "beta", "nu", "kappa"});
    cfg.game.alpha = get_number(w, "weights", "alpha", cfg.game.alpha);
    cfg.game.beta = get_number(w, "weights", "beta", cfg.game.beta);
    cfg.game.nu = get_number(w, "weights", "nu", cfg.game.nu);
    cfg.game.kappa = get_number(w, "weights", "kappa", cfg.game.kappa);
    if (cfg.game.alpha < 0 || cfg.game.beta < 0 || cfg.game.nu < 0 || cfg.game.kappa < 0)
      config_error("weights", "social weights must be non-negative");
  }
  if (j.contains("game")) {
    const json& g = j.at("game");
    check_keys(g, "game", {"max_rounds", "interference"});
    cfg.game.max_rounds = get_int(g, "game", "max_rounds", cfg.game.max_rounds);
    const std::string mode = get_string(g, "game", "interference", "always_on");
    if (mode == "always_on") cfg.game.assigned_only_interference = false;
    else if (mode == "assigned_only") cfg.game.assigned_only_interference = true;
    else config_error("game.interference", "expected 'always_on' or 'assigned_only'");
  }
  if (j.contains("offload")) {
    const json& o = j.at("offload");
    check_keys(o, "offload", {"rho"});
    cfg.rho = get_number(o, "offload", "rho", cfg.rho);
  }
  if (j.contains("runs")) {
    const json& r = j.at("runs");
    check_keys(r, "runs", {"base_seed", "num_runs", "seeds"});
    cfg.base_seed = get_u64(r, "runs", "base_seed", cfg.base_seed);
    cfg.num_runs = get_int(r, "runs", "num_runs", cfg.num_runs);
    if (cfg.num_runs <= 0) config_error("runs.num_runs", "must be positive");
    if (r.contains("seeds")) {
      const json& s = r.at("seeds");
      if (!s.is_array()) config_error("runs.seeds", "expected an array");
      for (const json& v : s) {
        if (!v.is_number_unsigned() && !v.is_number_integer())
          config_error("runs.seeds", "expected integers");
        cfg.seeds.push_back(v.get<std::uint64_t>());
      }
      if (cfg.seeds.empty()) config_error("runs.seeds", "must not be empty");
    }
  }
  if (j.contains("social")) {
    const json& s = j.at("social");
    check_keys(s, "social",
               {"source", "path", "dir", "ego", "users", "seed", "members", "attributes",
                "circles", "hyper"});
    const std::string source = get_string(s, "social", "source", "zero");
    if (source == "zero") cfg.social_source = SocialSource::Zero;
    else if (source == "matrix") cfg.social_source = SocialSource::Matrix;
    else if (source == "dataset") cfg.social_source = SocialSource::Dataset;
    else if (source == "synthetic") cfg.social_source = SocialSource::Synthetic;
    else config_error("social.source", "expected zero, matrix, dataset or synthetic");
    cfg.z_path = get_string(s, "social", "path", "");
    cfg.dataset_dir = get_string(s, "social", "dir", "");
    cfg.dataset_ego = get_int(s, "social", "ego", 0);
    cfg.dataset_users = get_int(s, "social", "users", 0);
    cfg.synth_seed = get_u64(s, "social", "seed", cfg.synth_seed);
    cfg.synth.members = get_int(s, "social", "members", cfg.synth.members);
    cfg.synth.attributes = get_int(s, "social", "attributes", cfg.synth.attributes);
    cfg.synth.circles = get_int(s, "social", "circles", cfg.synth.circles);
    if (cfg.social_source == SocialSource::Matrix && cfg.z_path.empty())
      config_error("social.path", "required when source is 'matrix'");
    if (cfg.social_source == SocialSource::Dataset && cfg.dataset_dir.empty())
      config_error("social.dir", "required when source is 'dataset'");
    if (s.contains("hyper")) {
      const json& h = s.at("hyper");
      check_keys(h, "social.hyper", {"upsilon", "lambda_w", "lambda_rho", "max_iters", "tol_obj"});
      cfg.hyper.upsilon = get_number(h, "social.hyper", "upsilon", cfg.hyper.upsilon);
      cfg.hyper.lambda_w = get_number(h, "social.hyper", "lambda_w", cfg.hyper.lambda_w);
      cfg.hyper.lambda_rho = get_number(h, "social.hyper", "lambda_rho", cfg.hyper.lambda_rho);
      cfg.hyper.max_iters = get_int(h, "social.hyper", "max_iters", cfg.hyper.max_iters);
      cfg.hyper.tol_obj = get_number(h, "social.hyper", "tol_obj", cfg.hyper.tol_obj);
    }
  }
  return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["topology"] = {{"num_scbs", cfg.num_scbs},
                   {"num_ues", cfg.num_ues},
                   {"num_sues", cfg.num_sues},
                   {"area_side_m", cfg.area_side_m}};
  j["spectrum"] = {{"n1", cfg.plan.n1},
                   {"n2", cfg.plan.n2},
                   {"n3", cfg.plan.n3},
                   {"rb_bandwidth_hz", cfg.plan.rb_bandwidth_hz}};
  j["channel"] = {{"scbs_power_w", cfg.channel.scbs_power_w},
                  {"sue_power_w", cfg.channel.sue_power_w},
                  {"noise_w", cfg.channel.noise_w},
                  {"pathloss_exponent", cfg.channel.pathloss_exponent},
                  {"min_distance_m", cfg.channel.min_distance_m}};
  j["weights"] = {{"alpha", cfg.game.alpha},
                  {"beta", cfg.game.beta},
                  {"nu", cfg.game.nu},
                  {"kappa", cfg.game.kappa}};
  j["game"] = {{"max_rounds", cfg.game.max_rounds},
               {"interference", cfg.game.assigned_only_interference ? "assigned_only" : "always_on"}};
  j["offload"] = {{"rho", cfg.rho}};
  j["runs"] = {{"base_seed", cfg.base_seed}, {"num_runs", cfg.num_runs}};
  if (!cfg.seeds.empty()) j["runs"]["seeds"] = cfg.seeds;
  json s;
  switch (cfg.social_source) {
    case SocialSource::Zero: s["source"] = "zero"; break;
    case SocialSource::Matrix: s["source"] = "matrix"; s["path"] = cfg.z_path; break;
    case SocialSource::Dataset:
      s["source"] = "dataset";
      s["dir"] = cfg.dataset_dir;
      s["ego"] = cfg.dataset_ego;
      s["users"] = cfg.dataset_users;
      break;
    case SocialSource::Synthetic:
      s["source"] = "synthetic";
      s["seed"] = cfg.synth_seed;
      s["members"] = cfg.synth.members;
      s["attributes"] = cfg.synth.attributes;
      s["circles"] = cfg.synth.circles;
      s["users"] = cfg.dataset_users;
      break;
  }
  s["hyper"] = {{"upsilon", cfg.hyper.upsilon},
                {"lambda_w", cfg.hyper.lambda_w},
                {"lambda_rho", cfg.hyper.lambda_rho},
                {"max_iters", cfg.hyper.max_iters},
                {"tol_obj", cfg.hyper.tol_obj}};
  j["social"] = s;
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  apply_env_overrides(j);
  try {
    return scenario_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(e.what()) + " (in " + path + ")");
  }
}

namespace {

void apply_env_recursive(json& node, const std::string& env_path) {
  if (node.is_object()) {
    for (auto& [key, value] : node.items()) {
      std::string upper = key;
      std::transform(upper.begin(), upper.end(), upper.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      apply_env_recursive(value, env_path + (env_path.back() == '_' ? "" : "__") + upper);
    }
    return;
  }
  const char* raw = std::getenv(env_path.c_str());
  if (raw == nullptr) return;
  json parsed = json::parse(raw, nullptr, false);
  node = parsed.is_discarded() ? json(std::string(raw)) : parsed;
}

}  // namespace

void apply_env_overrides(json& j, const std::string& prefix) {
  if (!j.is_object()) return;
  for (auto& [key, value] : j.items()) {
    std::string upper = key;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    apply_env_recursive(value, prefix + upper);
  }
}

SocialPool build_social_pool(const ScenarioConfig& cfg) {
  SocialPool pool;
  switch (cfg.social_source) {
    case SocialSource::Zero: {
      const int M = cfg.num_ues + cfg.num_sues;
      pool.ties.user_ids.resize(static_cast<std::size_t>(M));
      for (int i = 0; i < M; ++i) pool.ties.user_ids[static_cast<std::size_t>(i)] = i;
      pool.ties.z = Eigen::MatrixXd::Zero(M, M);
      return pool;
    }
    case SocialSource::Matrix:
      pool.ties = social::load_tie_matrix(cfg.z_path);
      return pool;
    case SocialSource::Dataset:
    case SocialSource::Synthetic: {
      datasets::EgoNetwork net =
          cfg.social_source == SocialSource::Dataset
              ? datasets::load_ego_facebook(cfg.dataset_dir, cfg.dataset_ego)
              : datasets::synth_ego_network(cfg.synth, cfg.synth_seed);
      std::vector<int> subset;
      if (cfg.dataset_users > 0)
        subset = datasets::select_subset_by_degree(net, cfg.dataset_users);
      else {
        subset.resize(static_cast<std::size_t>(net.num_members()));
        for (int m = 0; m < net.num_members(); ++m) subset[static_cast<std::size_t>(m)] = m;
      }
      const datasets::PairSet ps = datasets::build_pair_samples(net, subset);
      const social::InferenceResult inf =
          social::infer_ties(ps.samples, ps.user_ids, cfg.hyper);
      pool.ties = inf.ties;
      pool.inference_converged = inf.converged;
      return pool;
    }
  }
  throw std::logic_error("build_social_pool: bad source");
}

double offload_probability(double zbar, double rho) {
  if (rho < 0.0) throw std::invalid_argument("offload_probability: rho must be non-negative");
  const double t = rho * zbar;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double cluster_mean_tie(const std::vector<int>& members, int head, const Eigen::MatrixXd& z) {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (int m : members) sum += z(m, head);
  return sum / static_cast<double>(members.size());
}

double expected_offload(const std::vector<std::vector<int>>& clusters,
                        const std::vector<int>& sue_ids, const Eigen::MatrixXd& z, double rho) {
  double total = 0.0;
  for (std::size_t s = 0; s < clusters.size(); ++s) {
    if (clusters[s].empty()) continue;
    const double zbar = cluster_mean_tie(clusters[s], sue_ids[s], z);
    total += static_cast<double>(clusters[s].size()) * offload_probability(zbar, rho);
  }
  return total;
}

double cluster_avg_tie(const std::vector<std::vector<int>>& clusters,
                       const std::vector<int>& sue_ids, const Eigen::MatrixXd& z) {
  double sum = 0.0;
  int nonempty = 0;
  for (std::size_t s = 0; s < clusters.size(); ++s) {
    if (clusters[s].empty()) continue;
    sum += cluster_mean_tie(clusters[s], sue_ids[s], z);
    ++nonempty;
  }
  return nonempty == 0 ? 0.0 : sum / nonempty;
}

std::vector<std::string> metric_names() {
  return {"avg_cluster_tie", "sum_rate_bps", "avg_utility", "expected_offload",
          "iterations",      "proposals",    "rounds",      "clustered_ues",
          "converged",       "stability_checked", "stability_ok", "s_stable",
          "blocking_pairs"};
}

std::vector<double> metric_values(const RunMetrics& m) {
  return {m.avg_cluster_tie,
          m.sum_rate_bps,
          m.avg_utility,
          m.expected_offload,
          m.iterations,
          m.proposals,
          m.rounds,
          m.clustered_ues,
          m.converged ? 1.0 : 0.0,
          m.stability_checked ? 1.0 : 0.0,
          m.stability_ok ? 1.0 : 0.0,
          m.s_stable ? 1.0 : 0.0,
          static_cast<double>(m.blocking_pairs)};
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return Rng::child(seed, salt).next_u64();
}

matching::SaraResult wrap_centralized(const baselines::CentralizedResult& c,
                                      const phy::Topology& topo,
                                      const phy::RBlockTable& blocks) {
  matching::SaraResult res;
  res.state.current = c.matching;
  res.state.previous = c.matching;
  res.state.clusters = matching::derive_clusters(topo, blocks, c.matching);
  res.state.coeffs = matching::make_coeffs(topo, blocks, c.matching, c.matching);
  res.state.rounds = c.iterations;
  res.state.converged = c.reached_fixed_point;
  res.total_iterations = c.iterations;
  matching::RoundRecord rec;
  rec.round = 0;
  rec.matching = c.matching;
  rec.clusters = res.state.clusters;
  res.trace.push_back(std::move(rec));
  return res;
}

}  // namespace

RunOutput run_scenario(const ScenarioConfig& cfg, const SocialPool& pool, std::uint64_t seed) {
  const int M = cfg.num_ues + cfg.num_sues;
  const int pool_size = pool.ties.size();
  if (pool_size < M)
    throw std::invalid_argument("run_scenario: social pool has " + std::to_string(pool_size) +
                                " users but the scenario needs " + std::to_string(M));

  RunOutput out;
  out.seed = seed;

  // The D2D transmitters are the globally most influential pool users; the
  // plain UEs are a per-run draw from the rest.
  const std::vector<int> sue_pool = social::select_sues(pool.ties, cfg.num_sues);
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i)
    if (!std::binary_search(sue_pool.begin(), sue_pool.end(), i)) rest.push_back(i);
  Rng draw(derive_seed(seed, 1));
  for (int k = 0; k < cfg.num_ues; ++k) {
    const std::size_t pick = static_cast<std::size_t>(k) +
                             static_cast<std::size_t>(draw.uniform_int(rest.size() - static_cast<std::size_t>(k)));
    std::swap(rest[static_cast<std::size_t>(k)], rest[pick]);
  }
  out.pool_subset = sue_pool;
  out.pool_subset.insert(out.pool_subset.end(), rest.begin(),
                         rest.begin() + cfg.num_ues);
  std::sort(out.pool_subset.begin(), out.pool_subset.end());

  out.z_sub.resize(M, M);
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b)
      out.z_sub(a, b) = pool.ties.z(out.pool_subset[static_cast<std::size_t>(a)],
                                    out.pool_subset[static_cast<std::size_t>(b)]);

  Rng pos(derive_seed(seed, 0));
  out.topo.area_side_m = cfg.area_side_m;
  for (int l = 0; l < cfg.num_scbs; ++l)
    out.topo.scbs.push_back({pos.uniform(0.0, cfg.area_side_m), pos.uniform(0.0, cfg.area_side_m)});
  for (int m = 0; m < M; ++m)
    out.topo.users.push_back({pos.uniform(0.0, cfg.area_side_m), pos.uniform(0.0, cfg.area_side_m)});
  for (int a = 0; a < M; ++a)
    if (std::binary_search(sue_pool.begin(), sue_pool.end(),
                           out.pool_subset[static_cast<std::size_t>(a)]))
      out.topo.sue_ids.push_back(a);

  const phy::RBlockTable blocks = phy::RBlockTable::build(out.topo, cfg.plan);
  const phy::ChannelRealization ch =
      phy::sample_channels(out.topo, cfg.plan, cfg.channel, derive_seed(seed, 2));

  matching::GameConfig zero_weights = cfg.game;
  zero_weights.alpha = zero_weights.beta = zero_weights.nu = zero_weights.kappa = 0.0;

  switch (cfg.algorithm) {
    case Algorithm::Sara:
      out.result = matching::run_sara(out.topo, cfg.plan, ch, out.z_sub, cfg.game);
      break;
    case Algorithm::ContextUnaware:
      out.result = baselines::context_unaware_matching(out.topo, cfg.plan, ch);
      break;
    case Algorithm::CentralUnaware:
      out.result = wrap_centralized(baselines::centralized_context_unaware(out.topo, cfg.plan, ch),
                                    out.topo, blocks);
      break;
    case Algorithm::CentralAware:
      out.result = wrap_centralized(
          baselines::centralized_context_aware(out.topo, cfg.plan, ch, out.z_sub, cfg.game),
          out.topo, blocks);
      break;
  }

  // Frozen evaluation context for metrics and verification: the algorithm's
  // own weights (zero for the context-unaware schemes) and the coefficients
  // of the final state.
  const bool social_weights =
      cfg.algorithm == Algorithm::Sara || cfg.algorithm == Algorithm::CentralAware;
  const matching::GameConfig eval_cfg = social_weights ? cfg.game : zero_weights;
  std::vector<std::vector<double>> rates;
  if (cfg.game.assigned_only_interference) {
    const phy::ActiveSet active = matching::active_set_from(out.result.state.current, blocks);
    rates = matching::compute_rate_table(ch, out.topo, blocks, &active);
  } else {
    rates = matching::compute_rate_table(ch, out.topo, blocks);
  }
  const matching::EvalContext ctx =
      matching::make_eval_context(out.topo, blocks, out.z_sub, eval_cfg, std::move(rates),
                                  out.result.state.current, out.result.state.previous);

  RunMetrics& m = out.metrics;
  const matching::Matching& final_m = out.result.state.current;
  for (int user = 0; user < M; ++user) {
    const int rb = final_m.rb_of_user[static_cast<std::size_t>(user)];
    if (rb == -1) continue;
    m.sum_rate_bps += ctx.rate[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)];
    m.avg_utility += matching::player_utility(ctx, user, rb);
  }
  m.avg_utility /= M;
  const auto& clusters = out.result.state.clusters;
  m.avg_cluster_tie = cluster_avg_tie(clusters, out.topo.sue_ids, out.z_sub);
  m.expected_offload = expected_offload(clusters, out.topo.sue_ids, out.z_sub, cfg.rho);
  for (const auto& c : clusters) m.clustered_ues += static_cast<double>(c.size());
  m.iterations = static_cast<double>(out.result.total_iterations);
  m.proposals = static_cast<double>(out.result.total_proposals);
  m.rounds = static_cast<double>(out.result.state.rounds);
  m.converged = out.result.state.converged;

  // The exhaustive stability scan is the contract of the distributed game
  // schemes; centralized allocations are not game outcomes.
  if (cfg.algorithm == Algorithm::Sara || cfg.algorithm == Algorithm::ContextUnaware) {
    m.stability_checked = true;
    const matching::StabilityReport rep = matching::verify_two_sided_stability(ctx, final_m);
    m.blocking_pairs = rep.total();
    m.stability_ok = rep.stable();
    m.s_stable = matching::verify_s_stability(ctx, final_m).all_stable;
  }
  return out;
}

Aggregate monte_carlo(const ScenarioConfig& cfg, const SocialPool& pool, int threads,
                      std::vector<RunOutput>* keep_outputs) {
  Aggregate agg;
  agg.seeds = cfg.run_seeds();
  const int n = static_cast<int>(agg.seeds.size());
  agg.runs = n;
  std::vector<RunOutput> outputs(static_cast<std::size_t>(n));

  if (threads <= 0)
    threads = static_cast<int>(std::min<unsigned>(std::thread::hardware_concurrency(),
                                                  static_cast<unsigned>(n)));
  threads = std::max(1, std::min(threads, n));

  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        outputs[static_cast<std::size_t>(i)] =
            run_scenario(cfg, pool, agg.seeds[static_cast<std::size_t>(i)]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    pool_threads.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (std::thread& t : pool_threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Reduce strictly in seed order: the aggregate never depends on thread
  // scheduling.
  const std::size_t k = metric_names().size();
  std::vector<double> sum(k, 0.0), sum_sq(k, 0.0);
  for (int i = 0; i < n; ++i) {
    const RunMetrics& met = outputs[static_cast<std::size_t>(i)].metrics;
    agg.per_run.push_back(met);
    if (!met.converged) ++agg.non_converged;
    if (met.stability_checked && !met.stability_ok) ++agg.unstable;
    const std::vector<double> vals = metric_values(met);
    for (std::size_t c = 0; c < k; ++c) {
      sum[c] += vals[c];
      sum_sq[c] += vals[c] * vals[c];
    }
  }
  agg.mean.resize(k);
  agg.ci_half.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    agg.mean[c] = sum[c] / n;
    double var = 0.0;
    if (n > 1) var = std::max(0.0, (sum_sq[c] - n * agg.mean[c] * agg.mean[c]) / (n - 1));
    agg.ci_half[c] = 1.96 * std::sqrt(var / n);
  }
  if (keep_outputs != nullptr) *keep_outputs = std::move(outputs);
  return agg;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

const char* source_name(SocialSource s) {
  switch (s) {
    case SocialSource::Zero: return "zero";
    case SocialSource::Matrix: return "matrix";
    case SocialSource::Dataset: return "dataset";
    case SocialSource::Synthetic: return "synthetic";
  }
  return "?";
}

void emit_params(const ScenarioConfig& cfg, std::ostream& out) {
  out << cfg.name << ',' << algorithm_name(cfg.algorithm) << ',' << cfg.num_scbs << ','
      << cfg.num_ues << ',' << cfg.num_sues << ',' << cfg.plan.n1 << ',' << cfg.plan.n2 << ','
      << cfg.plan.n3 << ',' << format_number(cfg.plan.rb_bandwidth_hz) << ','
      << format_number(cfg.channel.scbs_power_w) << ',' << format_number(cfg.channel.sue_power_w)
      << ',' << format_number(cfg.channel.noise_w) << ','
      << format_number(cfg.channel.pathloss_exponent) << ','
      << format_number(cfg.game.alpha) << ',' << format_number(cfg.game.beta) << ','
      << format_number(cfg.game.nu) << ',' << format_number(cfg.game.kappa) << ','
      << format_number(cfg.rho) << ','
      << (cfg.game.assigned_only_interference ? "assigned_only" : "always_on") << ','
      << source_name(cfg.social_source);
}

constexpr const char* kParamHeader =
    "scenario,algorithm,num_scbs,num_ues,num_sues,n1,n2,n3,rb_bandwidth_hz,scbs_power_w,"
    "sue_power_w,noise_w,pathloss_exponent,alpha,beta,nu,kappa,rho,interference,social_source";

}  // namespace

void emit_csv_header(std::ostream& out) {
  out << kParamHeader << ",runs";
  for (const std::string& name : metric_names()) out << ',' << name;
  for (const std::string& name : metric_names()) out << ",ci_" << name;
  out << '\n';
}

void emit_csv_row(const ScenarioConfig& cfg, const Aggregate& agg, std::ostream& out) {
  emit_params(cfg, out);
  out << ',' << agg.runs;
  for (double v : agg.mean) out << ',' << format_number(v);
  for (double v : agg.ci_half) out << ',' << format_number(v);
  out << '\n';
}

void emit_runs_csv(const ScenarioConfig& cfg, const Aggregate& agg, std::ostream& out) {
  out << "seed";
  for (const std::string& name : metric_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < agg.per_run.size(); ++i) {
    out << agg.seeds[i];
    for (double v : metric_values(agg.per_run[i])) out << ',' << format_number(v);
    out << '\n';
  }
  (void)cfg;
}

void emit_plot_data(const std::vector<PlotPoint>& points, std::ostream& out) {
  out << "series,x,y,ci_half\n";
  for (const PlotPoint& p : points)
    out << p.series << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
        << format_number(p.ci_half) << '\n';
}

}  // namespace scn::harness
