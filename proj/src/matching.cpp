#include "scn/matching.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace scn::matching {

using phy::Band;
using phy::RBlock;

std::vector<std::vector<double>> compute_rate_table(const phy::ChannelRealization& ch,
                                                    const phy::Topology& topo,
                                                    const phy::RBlockTable& blocks,
                                                    const phy::ActiveSet* active) {
  const int M = topo.num_users();
  const int R = blocks.size();
  std::vector<std::vector<double>> rate(static_cast<std::size_t>(M),
                                        std::vector<double>(static_cast<std::size_t>(R), 0.0));
  for (int m = 0; m < M; ++m) {
    for (int r = 0; r < R; ++r) {
      if (!blocks.compatible(r, m, topo)) continue;
      const RBlock& b = blocks[r];
      const double sinr =
          b.band == Band::N3
              ? phy::sinr_d2d(ch, blocks.plan, b.owner - blocks.num_scbs, b.index, m, active)
              : phy::sinr_cellular(ch, blocks.plan, b.owner, b.band, b.index, m, active);
      rate[static_cast<std::size_t>(m)][static_cast<std::size_t>(r)] =
          phy::achievable_rate(blocks.plan.rb_bandwidth_hz, sinr);
    }
  }
  return rate;
}

phy::ActiveSet active_set_from(const Matching& m, const phy::RBlockTable& blocks) {
  const int nodes = blocks.num_scbs + blocks.num_sues;
  phy::ActiveSet active(static_cast<std::size_t>(nodes) * blocks.plan.num_slots(), 0);
  for (int r = 0; r < blocks.size(); ++r) {
    if (m.user_of_rb[static_cast<std::size_t>(r)] == -1) continue;
    active[static_cast<std::size_t>(blocks[r].owner) * blocks.plan.num_slots() +
           blocks.slot_of(r)] = 1;
  }
  return active;
}

std::vector<std::vector<int>> derive_clusters(const phy::Topology& topo,
                                              const phy::RBlockTable& blocks,
                                              const Matching& m) {
  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(topo.num_sues()));
  for (int r = 0; r < blocks.size(); ++r) {
    if (blocks[r].band != Band::N3) continue;
    const int user = m.user_of_rb[static_cast<std::size_t>(r)];
    if (user == -1) continue;
    clusters[static_cast<std::size_t>(blocks[r].owner - blocks.num_scbs)].push_back(user);
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  return clusters;
}

SocialCoeffs make_coeffs(const phy::Topology& topo, const phy::RBlockTable& blocks,
                         const Matching& current, const Matching& previous) {
  const int M = topo.num_users();
  SocialCoeffs coeffs;
  coeffs.member_of.assign(static_cast<std::size_t>(M), -1);
  coeffs.joint_member_of.assign(static_cast<std::size_t>(M), -1);
  auto membership = [&](const Matching& m, int user) {
    const int rb = m.rb_of_user.empty() ? -1 : m.rb_of_user[static_cast<std::size_t>(user)];
    if (rb == -1 || blocks[rb].band != Band::N3) return -1;
    return blocks[rb].owner - blocks.num_scbs;
  };
  for (int m = 0; m < M; ++m) {
    const int cur = membership(current, m);
    coeffs.member_of[static_cast<std::size_t>(m)] = cur;
    if (cur != -1 && membership(previous, m) == cur)
      coeffs.joint_member_of[static_cast<std::size_t>(m)] = cur;
  }
  return coeffs;
}

EvalContext make_eval_context(const phy::Topology& topo, const phy::RBlockTable& blocks,
                              const Eigen::MatrixXd& z, const GameConfig& cfg,
                              std::vector<std::vector<double>> rate,
                              const Matching& current, const Matching& previous) {
  EvalContext ctx;
  ctx.topo = &topo;
  ctx.blocks = &blocks;
  ctx.z = &z;
  ctx.cfg = cfg;
  ctx.rate = std::move(rate);
  ctx.coeffs = make_coeffs(topo, blocks, current, previous);
  ctx.cluster_tie_mass.assign(static_cast<std::size_t>(topo.num_sues()), 0.0);
  for (int m = 0; m < topo.num_users(); ++m) {
    const int s = ctx.coeffs.member_of[static_cast<std::size_t>(m)];
    if (s != -1)
      ctx.cluster_tie_mass[static_cast<std::size_t>(s)] += z(m, topo.sue_ids[static_cast<std::size_t>(s)]);
  }
  return ctx;
}

double utility_ue_cellular(const EvalContext& ctx, int user, int rb) {
  return ctx.rate[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)];
}

double utility_sue_cellular(const EvalContext& ctx, int sue, int rb) {
  return ctx.rate[static_cast<std::size_t>(sue)][static_cast<std::size_t>(rb)];
}

double utility_ue_d2d(const EvalContext& ctx, int user, int rb) {
  const RBlock& b = (*ctx.blocks)[rb];
  const int ord = b.owner - ctx.blocks->num_scbs;
  const int head = ctx.topo->sue_ids[static_cast<std::size_t>(ord)];
  // Tie to the cluster head plus ties to peers that stayed in this cluster
  // across the two most recent matchings (one round of membership is not yet
  // credible, so fresh joiners do not count).
  double social = (*ctx.z)(user, head);
  for (int j = 0; j < ctx.topo->num_users(); ++j)
    if (j != user && ctx.coeffs.joint_member_of[static_cast<std::size_t>(j)] == ord)
      social += (*ctx.z)(user, j);
  return ctx.rate[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)] +
         ctx.cfg.alpha * social;
}

double utility_rb_n1(const EvalContext& ctx, int rb, int user) {
  // Users tightly tied to the D2D transmitters are better served on the D2D
  // band, so a cellular block discounts them.
  double sue_ties = 0.0;
  for (int s : ctx.topo->sue_ids) sue_ties += (*ctx.z)(user, s);
  return ctx.rate[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)] -
         ctx.cfg.beta * sue_ties;
}

double utility_rb_n2(const EvalContext& ctx, int rb, int sue) {
  // Reward SUEs whose current cluster carries more total tie strength: their
  // backhaul feeds more valuable D2D traffic.
  const int ord = ctx.topo->sue_ordinal(sue);
  return ctx.rate[static_cast<std::size_t>(sue)][static_cast<std::size_t>(rb)] +
         ctx.cfg.nu * ctx.cluster_tie_mass[static_cast<std::size_t>(ord)];
}

double utility_rb_n3(const EvalContext& ctx, int rb, int user) {
  const RBlock& b = (*ctx.blocks)[rb];
  const int head = ctx.topo->sue_ids[static_cast<std::size_t>(b.owner - ctx.blocks->num_scbs)];
  return ctx.rate[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)] +
         ctx.cfg.kappa * (*ctx.z)(user, head);
}

double player_utility(const EvalContext& ctx, int user, int rb) {
  switch ((*ctx.blocks)[rb].band) {
    case Band::N1: return utility_ue_cellular(ctx, user, rb);
    case Band::N2: return utility_sue_cellular(ctx, user, rb);
    case Band::N3: return utility_ue_d2d(ctx, user, rb);
  }
  throw std::logic_error("player_utility: bad band");
}

double rb_utility(const EvalContext& ctx, int rb, int user) {
  switch ((*ctx.blocks)[rb].band) {
    case Band::N1: return utility_rb_n1(ctx, rb, user);
    case Band::N2: return utility_rb_n2(ctx, rb, user);
    case Band::N3: return utility_rb_n3(ctx, rb, user);
  }
  throw std::logic_error("rb_utility: bad band");
}

long DaResult::acceptances() const {
  long n = 0;
  for (int a : acceptor_of_proposer)
    if (a != -1) ++n;
  return n;
}

DaResult deferred_acceptance(const std::vector<std::vector<int>>& proposer_prefs,
                             int num_acceptors,
                             const std::function<double(int, int)>& acceptor_utility) {
  const int P = static_cast<int>(proposer_prefs.size());
  DaResult res;
  res.acceptor_of_proposer.assign(static_cast<std::size_t>(P), -1);
  res.proposer_of_acceptor.assign(static_cast<std::size_t>(num_acceptors), -1);
  std::vector<double> held_util(static_cast<std::size_t>(num_acceptors), 0.0);
  std::vector<std::size_t> cursor(static_cast<std::size_t>(P), 0);

  std::vector<std::pair<int, int>> batch;  // (proposer, acceptor)
  while (true) {
    batch.clear();
    for (int p = 0; p < P; ++p) {
      if (res.acceptor_of_proposer[static_cast<std::size_t>(p)] != -1) continue;
      auto& cur = cursor[static_cast<std::size_t>(p)];
      if (cur >= proposer_prefs[static_cast<std::size_t>(p)].size()) continue;
      batch.emplace_back(p, proposer_prefs[static_cast<std::size_t>(p)][cur++]);
    }
    if (batch.empty()) break;
    ++res.iterations;
    res.proposals_per_iteration.push_back(static_cast<long>(batch.size()));
    res.proposals += static_cast<long>(batch.size());
    // Ascending proposer order: combined with the strictly-better-or-equal-
    // and-lower-id rule this realizes the (utility desc, id asc) tie-break.
    for (auto [p, a] : batch) {
      const double u = acceptor_utility(a, p);
      const int incumbent = res.proposer_of_acceptor[static_cast<std::size_t>(a)];
      const bool accept =
          incumbent == -1 || u > held_util[static_cast<std::size_t>(a)] ||
          (u == held_util[static_cast<std::size_t>(a)] && p < incumbent);
      res.events.push_back({res.iterations, p, a, accept, accept && incumbent != -1});
      if (!accept) continue;
      if (incumbent != -1) res.acceptor_of_proposer[static_cast<std::size_t>(incumbent)] = -1;
      res.proposer_of_acceptor[static_cast<std::size_t>(a)] = p;
      res.acceptor_of_proposer[static_cast<std::size_t>(p)] = a;
      held_util[static_cast<std::size_t>(a)] = u;
    }
  }
  return res;
}

long long uniform_preference_proposal_count(long long num_proposers, long long num_rbs) {
  if (num_proposers < 0 || num_rbs < 0)
    throw std::invalid_argument("uniform_preference_proposal_count: negative size");
  if (num_proposers <= num_rbs) return num_proposers * (num_proposers + 1) / 2;
  return (num_proposers + 1) * num_rbs - num_rbs * (num_rbs + 1) / 2;
}

namespace {

// Preference list of one player: compatible blocks by utility, ties broken
// by the global block order (band, owner, index).
std::vector<int> build_prefs(const EvalContext& ctx, int user, const std::vector<int>& candidate_rbs) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidate_rbs.size());
  for (int rb : candidate_rbs)
    if (ctx.blocks->compatible(rb, user, *ctx.topo))
      scored.emplace_back(player_utility(ctx, user, rb), rb);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> prefs;
  prefs.reserve(scored.size());
  for (const auto& [u, rb] : scored) prefs.push_back(rb);
  return prefs;
}

StageLog log_from(const DaResult& da, int round, int stage) {
  StageLog log;
  log.round = round;
  log.stage = stage;
  log.iterations = da.iterations;
  log.proposals = da.proposals;
  log.acceptances = da.acceptances();
  log.rejections = da.rejections();
  return log;
}

// Remap DA-local proposer/acceptor indices to user ids and global block ids.
std::vector<ProposalEvent> remap_events(const DaResult& da, const std::vector<int>& players,
                                        const std::vector<int>& rbs) {
  std::vector<ProposalEvent> events = da.events;
  for (ProposalEvent& e : events) {
    e.proposer = players[static_cast<std::size_t>(e.proposer)];
    e.acceptor = rbs[static_cast<std::size_t>(e.acceptor)];
  }
  return events;
}

}  // namespace

StagePair run_stages(const EvalContext& ctx) {
  const phy::Topology& topo = *ctx.topo;
  const phy::RBlockTable& blocks = *ctx.blocks;
  StagePair out;
  out.matching = Matching::empty(topo.num_users(), blocks.size());

  auto run_side = [&](const std::vector<int>& players, const std::vector<int>& rbs) {
    std::vector<std::vector<int>> prefs;
    prefs.reserve(players.size());
    std::vector<int> rb_local(static_cast<std::size_t>(blocks.size()), -1);
    for (std::size_t i = 0; i < rbs.size(); ++i) rb_local[static_cast<std::size_t>(rbs[i])] = static_cast<int>(i);
    for (int user : players) {
      std::vector<int> p = build_prefs(ctx, user, rbs);
      for (int& rb : p) rb = rb_local[static_cast<std::size_t>(rb)];
      prefs.push_back(std::move(p));
    }
    DaResult da = deferred_acceptance(
        prefs, static_cast<int>(rbs.size()), [&](int a_local, int p_local) {
          return rb_utility(ctx, rbs[static_cast<std::size_t>(a_local)],
                            players[static_cast<std::size_t>(p_local)]);
        });
    for (std::size_t p = 0; p < players.size(); ++p) {
      const int a = da.acceptor_of_proposer[p];
      if (a == -1) continue;
      out.matching.rb_of_user[static_cast<std::size_t>(players[p])] = rbs[static_cast<std::size_t>(a)];
      out.matching.user_of_rb[static_cast<std::size_t>(rbs[static_cast<std::size_t>(a)])] = players[p];
    }
    return da;
  };

  // Stage 1: SUEs compete for the dedicated cellular band.
  std::vector<int> sues = topo.sue_ids;
  DaResult da1 = run_side(sues, blocks.sue_side_ids());
  out.stage1 = log_from(da1, 0, 1);
  out.stage1_events = remap_events(da1, sues, blocks.sue_side_ids());

  // Stage 2: plain UEs compete for the cellular and D2D bands together.
  std::vector<int> ues;
  for (int m = 0; m < topo.num_users(); ++m)
    if (!topo.is_sue(m)) ues.push_back(m);
  DaResult da2 = run_side(ues, blocks.ue_side_ids());
  out.stage2 = log_from(da2, 0, 2);
  out.stage2_events = remap_events(da2, ues, blocks.ue_side_ids());
  return out;
}

SaraResult run_sara(const phy::Topology& topo, const phy::SpectrumPlan& plan,
                    const phy::ChannelRealization& ch, const Eigen::MatrixXd& z,
                    const GameConfig& cfg) {
  phy::validate_topology(topo);
  if (z.rows() != topo.num_users() || z.cols() != topo.num_users())
    throw std::invalid_argument("run_sara: tie matrix size does not match user count");
  const phy::RBlockTable blocks = phy::RBlockTable::build(topo, plan);
  const int max_rounds = cfg.max_rounds > 0
                             ? cfg.max_rounds
                             : 10 * (topo.num_users() + blocks.size());

  std::vector<std::vector<double>> static_rates;
  if (!cfg.assigned_only_interference) static_rates = compute_rate_table(ch, topo, blocks);

  SaraResult res;
  Matching prev1 = Matching::empty(topo.num_users(), blocks.size());
  Matching prev2 = prev1;

  for (int round = 0; round < max_rounds; ++round) {
    std::vector<std::vector<double>> rates;
    if (cfg.assigned_only_interference) {
      const phy::ActiveSet active = active_set_from(prev1, blocks);
      rates = compute_rate_table(ch, topo, blocks, &active);
    } else {
      rates = static_rates;
    }
    EvalContext ctx = make_eval_context(topo, blocks, z, cfg, std::move(rates), prev1, prev2);
    StagePair sp = run_stages(ctx);

    RoundRecord rec;
    rec.round = round;
    rec.stage1 = sp.stage1;
    rec.stage1.round = round;
    rec.stage2 = sp.stage2;
    rec.stage2.round = round;
    rec.matching = sp.matching;
    rec.clusters = derive_clusters(topo, blocks, sp.matching);
    rec.stage1_events = std::move(sp.stage1_events);
    rec.stage2_events = std::move(sp.stage2_events);
    res.total_iterations += sp.stage1.iterations + sp.stage2.iterations;
    res.total_proposals += sp.stage1.proposals + sp.stage2.proposals;

    // Fixpoint test: the coefficients the next round would run under must
    // equal the ones this round just used.  Coefficient equality implies the
    // cluster sets were unchanged across the last two matchings, and it
    // guarantees a replay would reproduce this exact matching, so the final
    // matching is deferred-acceptance stable under the frozen coefficients.
    const SocialCoeffs next = make_coeffs(topo, blocks, sp.matching, prev1);
    bool converged = next == ctx.coeffs;
    // Under assigned-only interference the rates themselves depend on the
    // previous matching, so the matching must also reproduce itself.
    if (cfg.assigned_only_interference) converged = converged && sp.matching == prev1;

    prev2 = prev1;
    prev1 = sp.matching;
    res.trace.push_back(std::move(rec));
    res.state.rounds = round + 1;
    if (converged) {
      res.state.converged = true;
      break;
    }
  }

  res.state.current = prev1;
  res.state.previous = prev2;
  res.state.clusters = derive_clusters(topo, blocks, prev1);
  res.state.coeffs = make_coeffs(topo, blocks, prev1, prev2);
  return res;
}

bool is_blocking_pair(const EvalContext& ctx, const Matching& m, int player, int rb) {
  if (!ctx.blocks->compatible(rb, player, *ctx.topo)) return false;
  const int current = m.rb_of_user[static_cast<std::size_t>(player)];
  if (current == rb) return false;
  // An unmatched player strictly prefers any compatible block; a matched one
  // must strictly gain.
  if (current != -1 &&
      !(player_utility(ctx, player, rb) > player_utility(ctx, player, current)))
    return false;
  const int holder = m.user_of_rb[static_cast<std::size_t>(rb)];
  if (holder != -1 && !(rb_utility(ctx, rb, player) > rb_utility(ctx, rb, holder))) return false;
  return true;
}

StabilityReport verify_two_sided_stability(const EvalContext& ctx, const Matching& m) {
  StabilityReport report;
  const phy::Topology& topo = *ctx.topo;
  for (int player = 0; player < topo.num_users(); ++player) {
    for (int rb = 0; rb < ctx.blocks->size(); ++rb) {
      if (!ctx.blocks->compatible(rb, player, topo)) continue;
      if (m.rb_of_user[static_cast<std::size_t>(player)] == rb) continue;
      ++report.pairs_checked;
      if (!is_blocking_pair(ctx, m, player, rb)) continue;
      report.blocking.emplace_back(player, rb);
      const int cur = m.rb_of_user[static_cast<std::size_t>(player)];
      if (topo.is_sue(player)) ++report.sue_n2;
      else if (cur == -1) ++report.from_unmatched;
      else if ((*ctx.blocks)[cur].band == Band::N3) ++report.from_n3;
      else ++report.from_n1;
    }
  }
  return report;
}

ClusterStabilityReport verify_s_stability(const EvalContext& ctx, const Matching& m) {
  const phy::Topology& topo = *ctx.topo;
  const phy::RBlockTable& blocks = *ctx.blocks;
  const auto clusters = derive_clusters(topo, blocks, m);
  ClusterStabilityReport report;
  report.cluster_stable.assign(clusters.size(), 1);

  for (std::size_t s = 0; s < clusters.size(); ++s) {
    const auto& members = clusters[s];
    auto in_cluster = [&](int user) {
      return std::binary_search(members.begin(), members.end(), user);
    };
    bool stable = true;
    for (int rb = 0; rb < blocks.size() && stable; ++rb) {
      const RBlock& b = blocks[rb];
      const bool own_n3 = b.band == Band::N3 &&
                          b.owner - blocks.num_scbs == static_cast<int>(s);
      if (own_n3) {
        // Nobody outside the cluster may block with one of its D2D blocks.
        for (int user = 0; user < topo.num_users() && stable; ++user)
          if (!topo.is_sue(user) && !in_cluster(user) && is_blocking_pair(ctx, m, user, rb))
            stable = false;
      } else if (b.band != Band::N2) {
        // No member may block with a cellular or foreign D2D block.
        for (int user : members) {
          if (is_blocking_pair(ctx, m, user, rb)) {
            stable = false;
            break;
          }
        }
      }
    }
    report.cluster_stable[s] = stable ? 1 : 0;
    report.all_stable = report.all_stable && stable;
  }
  return report;
}

void write_trace(const SaraResult& result, std::ostream& out) {
  for (const RoundRecord& rec : result.trace) {
    nlohmann::json j;
    j["round"] = rec.round;
    for (const StageLog* log : {&rec.stage1, &rec.stage2}) {
      nlohmann::json s;
      s["iterations"] = log->iterations;
      s["proposals"] = log->proposals;
      s["acceptances"] = log->acceptances;
      s["rejections"] = log->rejections;
      j[log->stage == 1 ? "stage1" : "stage2"] = s;
    }
    nlohmann::json matches = nlohmann::json::array();
    for (std::size_t rb = 0; rb < rec.matching.user_of_rb.size(); ++rb)
      if (rec.matching.user_of_rb[rb] != -1)
        matches.push_back({static_cast<int>(rb), rec.matching.user_of_rb[rb]});
    j["matches"] = matches;
    j["clusters"] = rec.clusters;
    out << j.dump() << '\n';
  }
  nlohmann::json summary;
  summary["summary"] = {{"rounds", result.state.rounds},
                        {"converged", result.state.converged},
                        {"iterations", result.total_iterations},
                        {"proposals", result.total_proposals}};
  out << summary.dump() << '\n';
}

}  // namespace scn::matching
