#include "scn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scn::baselines {

using matching::Matching;

matching::SaraResult context_unaware_matching(const phy::Topology& topo,
                                              const phy::SpectrumPlan& plan,
                                              const phy::ChannelRealization& ch) {
  const phy::RBlockTable blocks = phy::RBlockTable::build(topo, plan);
  matching::GameConfig cfg;
  cfg.alpha = cfg.beta = cfg.nu = cfg.kappa = 0.0;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(topo.num_users(), topo.num_users());
  const Matching empty = Matching::empty(topo.num_users(), blocks.size());
  matching::EvalContext ctx = matching::make_eval_context(
      topo, blocks, zero, cfg, matching::compute_rate_table(ch, topo, blocks), empty, empty);
  matching::StagePair sp = matching::run_stages(ctx);

  matching::SaraResult res;
  matching::RoundRecord rec;
  rec.round = 0;
  rec.stage1 = sp.stage1;
  rec.stage2 = sp.stage2;
  rec.matching = sp.matching;
  rec.clusters = matching::derive_clusters(topo, blocks, sp.matching);
  rec.stage1_events = std::move(sp.stage1_events);
  rec.stage2_events = std::move(sp.stage2_events);
  res.total_iterations = sp.stage1.iterations + sp.stage2.iterations;
  res.total_proposals = sp.stage1.proposals + sp.stage2.proposals;
  res.state.current = sp.matching;
  res.state.previous = empty;
  res.state.clusters = rec.clusters;
  res.state.coeffs = matching::make_coeffs(topo, blocks, sp.matching, empty);
  res.state.rounds = 1;
  res.state.converged = true;
  res.trace.push_back(std::move(rec));
  return res;
}

AssignmentResult assignment_solve(const std::vector<std::vector<double>>& utility) {
  const int P = static_cast<int>(utility.size());
  const int R = P == 0 ? 0 : static_cast<int>(utility.front().size());
  for (const auto& row : utility) {
    if (static_cast<int>(row.size()) != R)
      throw std::invalid_argument("assignment_solve: ragged utility matrix");
    for (double u : row)
      if (!std::isfinite(u)) throw std::invalid_argument("assignment_solve: non-finite utility");
  }
  AssignmentResult res;
  res.rb_of_player.assign(static_cast<std::size_t>(P), -1);
  if (P == 0 || R == 0) return res;

  // Square minimization problem: pad to n x n and negate the clamped
  // utilities.  Clamping at zero is exact because leaving a pair unmatched
  // is always at least as good as using a non-positive edge.
  const int n = std::max(P, R);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < R; ++j)
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          -std::max(utility[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0);

  // Kuhn-Munkres with row/column potentials, 1-indexed internals.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pu(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> pv(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           pu[static_cast<std::size_t>(i0)] - pv[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          pu[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          pv[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= P && j <= R) {
      const double u = utility[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      if (u > 0.0) {
        res.rb_of_player[static_cast<std::size_t>(i - 1)] = j - 1;
        res.objective += u;
      }
    }
  }
  return res;
}

namespace {

void brute_force_rec(const std::vector<std::vector<double>>& utility, int player,
                     std::vector<char>& rb_used, std::vector<int>& current, double value,
                     AssignmentResult& best, std::vector<int>& best_assign) {
  const int P = static_cast<int>(utility.size());
  if (player == P) {
    if (value > best.objective) {
      best.objective = value;
      best_assign = current;
    }
    return;
  }
  current[static_cast<std::size_t>(player)] = -1;  // leave unmatched
  brute_force_rec(utility, player + 1, rb_used, current, value, best, best_assign);
  const int R = static_cast<int>(utility[static_cast<std::size_t>(player)].size());
  for (int rb = 0; rb < R; ++rb) {
    if (rb_used[static_cast<std::size_t>(rb)]) continue;
    rb_used[static_cast<std::size_t>(rb)] = 1;
    current[static_cast<std::size_t>(player)] = rb;
    brute_force_rec(utility, player + 1, rb_used, current,
                    value + utility[static_cast<std::size_t>(player)][static_cast<std::size_t>(rb)],
                    best, best_assign);
    rb_used[static_cast<std::size_t>(rb)] = 0;
  }
  current[static_cast<std::size_t>(player)] = -1;
}

}  // namespace

AssignmentResult brute_force_optimal(const std::vector<std::vector<double>>& utility) {
  const int P = static_cast<int>(utility.size());
  const int R = P == 0 ? 0 : static_cast<int>(utility.front().size());
  if (P > 8 || R > 8)
    throw std::invalid_argument("brute_force_optimal: instance larger than 8x8");
  AssignmentResult best;
  best.rb_of_player.assign(static_cast<std::size_t>(P), -1);
  best.objective = 0.0;
  std::vector<char> rb_used(static_cast<std::size_t>(R), 0);
  std::vector<int> current(static_cast<std::size_t>(P), -1);
  std::vector<int> best_assign(static_cast<std::size_t>(P), -1);
  brute_force_rec(utility, 0, rb_used, current, 0.0, best, best_assign);
  best.rb_of_player = best_assign;
  return best;
}

namespace {

Matching matching_from_assignment(const AssignmentResult& a, const phy::Topology& topo,
                                  const phy::RBlockTable& blocks) {
  Matching m = Matching::empty(topo.num_users(), blocks.size());
  for (int user = 0; user < static_cast<int>(a.rb_of_player.size()); ++user) {
    const int rb = a.rb_of_player[static_cast<std::size_t>(user)];
    if (rb == -1) continue;
    if (!blocks.compatible(rb, user, topo))
      throw std::logic_error("centralized assignment produced an incompatible pair");
    m.rb_of_user[static_cast<std::size_t>(user)] = rb;
    m.user_of_rb[static_cast<std::size_t>(rb)] = user;
  }
  return m;
}

}  // namespace

CentralizedResult centralized_context_unaware(const phy::Topology& topo,
                                              const phy::SpectrumPlan& plan,
                                              const phy::ChannelRealization& ch) {
  const phy::RBlockTable blocks = phy::RBlockTable::build(topo, plan);
  // One block-structured assignment over every (user, block) pair; rates are
  // positive and incompatible pairs stay at zero, so the solver never uses
  // them.
  const auto rate = matching::compute_rate_table(ch, topo, blocks);
  const AssignmentResult a = assignment_solve(rate);
  CentralizedResult res;
  res.matching = matching_from_assignment(a, topo, blocks);
  res.objective = a.objective;
  return res;
}

CentralizedResult centralized_context_aware(const phy::Topology& topo,
                                            const phy::SpectrumPlan& plan,
                                            const phy::ChannelRealization& ch,
                                            const Eigen::MatrixXd& z,
                                            const matching::GameConfig& cfg) {
  const phy::RBlockTable blocks = phy::RBlockTable::build(topo, plan);
  if (z.rows() != topo.num_users() || z.cols() != topo.num_users())
    throw std::invalid_argument("centralized_context_aware: tie matrix size mismatch");
  const auto rate = matching::compute_rate_table(ch, topo, blocks);
  constexpr int kMaxIters = 50;

  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(topo.num_sues()));
  std::vector<std::vector<std::vector<int>>> seen;
  CentralizedResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  CentralizedResult last;

  for (int iter = 0; iter < kMaxIters; ++iter) {
    // Value of each link given the previous iterate's cluster membership.
    std::vector<std::vector<double>> value = rate;
    for (int user = 0; user < topo.num_users(); ++user) {
      if (topo.is_sue(user)) continue;
      for (int rb = 0; rb < blocks.size(); ++rb) {
        if (blocks[rb].band != phy::Band::N3) continue;
        if (!blocks.compatible(rb, user, topo)) continue;
        const int ord = blocks[rb].owner - blocks.num_scbs;
        const int head = topo.sue_ids[static_cast<std::size_t>(ord)];
        double social = z(user, head);
        for (int j : clusters[static_cast<std::size_t>(ord)])
          if (j != user) social += z(user, j);
        value[static_cast<std::size_t>(user)][static_cast<std::size_t>(rb)] +=
            cfg.alpha * social;
      }
    }
    const AssignmentResult a = assignment_solve(value);
    last.matching = matching_from_assignment(a, topo, blocks);
    last.objective = a.objective;
    last.iterations = iter + 1;
    if (a.objective > best.objective) best = last;

    const auto next = matching::derive_clusters(topo, blocks, last.matching);
    if (next == clusters) {
      last.reached_fixed_point = true;
      best.reached_fixed_point = true;
      best.iterations = iter + 1;
      // The fixed-point iterate is the consistent solution even if an
      // earlier iterate scored higher against stale clusters.
      return last;
    }
    if (std::find(seen.begin(), seen.end(), next) != seen.end()) {
      best.reached_fixed_point = false;  // cycle without a fixed point
      best.iterations = iter + 1;
      return best;
    }
    seen.push_back(next);
    clusters = next;
  }
  best.reached_fixed_point = false;
  best.iterations = kMaxIters;
  return best;
}

}  // namespace scn::baselines
