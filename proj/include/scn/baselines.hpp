#pragma once

#include <vector>

#include "scn/matching.hpp"
#include "scn/phy.hpp"

namespace scn::baselines {

// Single-pass two-stage deferred acceptance in which both sides rank purely
// by achievable rate (all social weights zero).  Packaged as a one-round
// SaraResult so downstream metric/verification code treats it uniformly.
matching::SaraResult context_unaware_matching(const phy::Topology& topo,
                                              const phy::SpectrumPlan& plan,
                                              const phy::ChannelRealization& ch);

struct AssignmentResult {
  std::vector<int> rb_of_player;  // -1 = left unmatched
  double objective = 0.0;         // sum of utilities over matched pairs
};

// Exact maximum-weight one-to-one assignment (Kuhn-Munkres with potentials,
// O(n^3)).  Rectangular inputs are fine; players may stay unmatched at
// utility 0, so entries <= 0 never appear in a solution.  Callers encode
// forbidden pairs as any non-positive value.
AssignmentResult assignment_solve(const std::vector<std::vector<double>>& utility);

// Exhaustive search over all partial injective assignments; test oracle for
// assignment_solve, limited to 8x8.
AssignmentResult brute_force_optimal(const std::vector<std::vector<double>>& utility);

struct CentralizedResult {
  matching::Matching matching;
  double objective = 0.0;       // sum of per-link values under the final clusters
  int iterations = 1;
  bool reached_fixed_point = true;
};

// One-shot optimal assignment of all users to all blocks on pure rate.
CentralizedResult centralized_context_unaware(const phy::Topology& topo,
                                              const phy::SpectrumPlan& plan,
                                              const phy::ChannelRealization& ch);

// Centralized scheme with social value on D2D links: each iterate solves the
// optimal assignment where a D2D link is worth
//   rate + alpha * (tie to head + ties to the previous iterate's cluster),
// then recomputes the clusters, until membership reaches a fixed point or
// the iteration cap.  If the sequence cycles, the best-objective iterate is
// returned with reached_fixed_point = false.
CentralizedResult centralized_context_aware(const phy::Topology& topo,
                                            const phy::SpectrumPlan& plan,
                                            const phy::ChannelRealization& ch,
                                            const Eigen::MatrixXd& z,
                                            const matching::GameConfig& cfg);

}  // namespace scn::baselines
