#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "scn/phy.hpp"
#include "scn/social.hpp"

namespace scn::matching {

// ---------------------------------------------------------------------------
// Two-sided matching game between users and resource blocks with peer
// effects: a user's value for a D2D block depends on who else currently sits
// in that transmitter's cluster, so the game is solved round by round.  Each
// round replays two deferred-acceptance stages (SUEs onto the N2 band, then
// plain UEs onto N1 and N3) under social coefficients frozen from the
// previous rounds, and terminates once those coefficients reach a fixpoint.
// ---------------------------------------------------------------------------

// Partial one-to-one assignment between users and RBs (-1 = unmatched).
struct Matching {
  std::vector<int> rb_of_user;
  std::vector<int> user_of_rb;

  static Matching empty(int num_users, int num_rbs) {
    return {std::vector<int>(static_cast<std::size_t>(num_users), -1),
            std::vector<int>(static_cast<std::size_t>(num_rbs), -1)};
  }
  bool operator==(const Matching&) const = default;
};

// Social preference weights (bit/s per unit tie) and loop limits.
struct GameConfig {
  double alpha = 90000.0;  // UE-side pull toward socially close D2D clusters
  double beta = 90000.0;   // N1-side penalty on users with strong SUE ties
  double nu = 90000.0;     // N2-side reward for influential cluster heads
  double kappa = 90000.0;  // N3-side reward for socially close applicants
  int max_rounds = 0;      // 0 = auto (generous multiple of the problem size)
  bool assigned_only_interference = false;  // rebuild rates from the previous
                                            // round's active transmitters
};

// Cluster-membership coefficients that enter the utilities.
//   member_of[m]       - SUE ordinal whose cluster holds m in the current
//                        matching (-1 when m is not on a D2D block),
//   joint_member_of[m] - same, but only when m sat in that SUE's cluster in
//                        both of the two most recent matchings.
struct SocialCoeffs {
  std::vector<int> member_of;
  std::vector<int> joint_member_of;

  bool operator==(const SocialCoeffs&) const = default;
};

// Everything needed to evaluate both sides' utilities for one round: static
// link rates plus the frozen social coefficients.
struct EvalContext {
  const phy::Topology* topo = nullptr;
  const phy::RBlockTable* blocks = nullptr;
  const Eigen::MatrixXd* z = nullptr;        // symmetric normalized ties
  GameConfig cfg;
  std::vector<std::vector<double>> rate;     // [user][rb], 0 when incompatible
  SocialCoeffs coeffs;
  std::vector<double> cluster_tie_mass;      // per SUE ordinal: sum of member ties
};

// rate[user][rb] for every compatible pair under the given interference gate.
std::vector<std::vector<double>> compute_rate_table(const phy::ChannelRealization& ch,
                                                    const phy::Topology& topo,
                                                    const phy::RBlockTable& blocks,
                                                    const phy::ActiveSet* active = nullptr);

// Marks each serving node active on the slots where it holds a matched RB.
phy::ActiveSet active_set_from(const Matching& m, const phy::RBlockTable& blocks);

SocialCoeffs make_coeffs(const phy::Topology& topo, const phy::RBlockTable& blocks,
                         const Matching& current, const Matching& previous);

EvalContext make_eval_context(const phy::Topology& topo, const phy::RBlockTable& blocks,
                              const Eigen::MatrixXd& z, const GameConfig& cfg,
                              std::vector<std::vector<double>> rate,
                              const Matching& current, const Matching& previous);

// Player-side utilities.
double utility_ue_cellular(const EvalContext& ctx, int user, int rb);  // N1: rate
double utility_sue_cellular(const EvalContext& ctx, int sue, int rb);  // N2: rate
double utility_ue_d2d(const EvalContext& ctx, int user, int rb);       // N3: rate +
                                                                       //  alpha * (tie to head + ties to stable peers)
// RB-side utilities.
double utility_rb_n1(const EvalContext& ctx, int rb, int user);  // rate - beta * sum of SUE ties
double utility_rb_n2(const EvalContext& ctx, int rb, int sue);   // rate + nu * cluster tie mass
double utility_rb_n3(const EvalContext& ctx, int rb, int user);  // rate + kappa * tie to head

// Dispatch on the block's band; `user` must be compatible with `rb`.
double player_utility(const EvalContext& ctx, int user, int rb);
double rb_utility(const EvalContext& ctx, int rb, int user);

// --- Deferred acceptance -------------------------------------------------

struct ProposalEvent {
  int iteration = 0;
  int proposer = 0;
  int acceptor = 0;
  bool accepted = false;      // held when processed (may be displaced later)
  bool displaced = false;     // this acceptance bumped a previous holder
};

struct DaResult {
  std::vector<int> acceptor_of_proposer;
  std::vector<int> proposer_of_acceptor;
  int iterations = 0;                       // synchronous proposal rounds
  long proposals = 0;
  std::vector<long> proposals_per_iteration;
  std::vector<ProposalEvent> events;

  long acceptances() const;                 // proposers matched at the end
  long rejections() const { return proposals - acceptances(); }
};

// Proposer-optimal deferred acceptance.  Proposers walk down their strict
// preference lists one entry per iteration; every unmatched proposer with
// list entries left proposes each iteration, and an acceptor keeps the best
// applicant seen so far (ties toward the lowest proposer id).  Acceptors
// prefer any applicant to staying vacant.
DaResult deferred_acceptance(const std::vector<std::vector<int>>& proposer_prefs,
                             int num_acceptors,
                             const std::function<double(int acceptor, int proposer)>& acceptor_utility);

// Worst-case proposal count when every proposer ranks the RBs identically:
// M(M+1)/2 for M <= N, and (M+1)N - N(N+1)/2 otherwise.
long long uniform_preference_proposal_count(long long num_proposers, long long num_rbs);

// --- Round-based game ----------------------------------------------------

struct StageLog {
  int round = 0;
  int stage = 0;                // 1 = SUEs onto N2, 2 = UEs onto N1/N3
  int iterations = 0;
  long proposals = 0;
  long acceptances = 0;
  long rejections = 0;          // proposals == acceptances + rejections
};

struct RoundRecord {
  int round = 0;
  StageLog stage1, stage2;
  Matching matching;                          // state after this round
  std::vector<std::vector<int>> clusters;     // per SUE ordinal, sorted UE ids
  std::vector<ProposalEvent> stage1_events;
  std::vector<ProposalEvent> stage2_events;
};

struct MatchState {
  Matching current, previous;
  std::vector<std::vector<int>> clusters;     // of `current`
  SocialCoeffs coeffs;                        // frozen final coefficients
  int rounds = 0;
  bool converged = false;
};

struct SaraResult {
  MatchState state;
  std::vector<RoundRecord> trace;
  long total_iterations = 0;   // DA iterations summed over stages and rounds
  long total_proposals = 0;
};

// One full round of the two matching stages under the given context.
// Returns the assembled matching and per-stage logs/events.
struct StagePair {
  Matching matching;
  StageLog stage1, stage2;
  std::vector<ProposalEvent> stage1_events;
  std::vector<ProposalEvent> stage2_events;
};
StagePair run_stages(const EvalContext& ctx);

// Iterates the two-stage game until the social coefficients that would feed
// the next round equal the ones just used (which implies the cluster sets
// stayed unchanged across the last two matchings), or until max_rounds.
// Non-convergence is flagged on the result, never thrown.
SaraResult run_sara(const phy::Topology& topo, const phy::SpectrumPlan& plan,
                    const phy::ChannelRealization& ch, const Eigen::MatrixXd& z,
                    const GameConfig& cfg);

// Derived clusters of a matching: UEs riding each SUE's N3 blocks.
std::vector<std::vector<int>> derive_clusters(const phy::Topology& topo,
                                              const phy::RBlockTable& blocks,
                                              const Matching& m);

// --- Stability -----------------------------------------------------------

// True when `player` and `rb` are compatible, not matched together, and both
// strictly gain by pairing up (an unmatched player strictly prefers any
// compatible block; a vacant block strictly prefers any compatible player).
bool is_blocking_pair(const EvalContext& ctx, const Matching& m, int player, int rb);

struct StabilityReport {
  long pairs_checked = 0;
  long sue_n2 = 0;        // blocking (SUE, N2) pairs
  long from_n3 = 0;       // blocking pairs of UEs currently on a D2D block
  long from_n1 = 0;       // blocking pairs of UEs currently on a cellular block
  long from_unmatched = 0;
  std::vector<std::pair<int, int>> blocking;  // (player, rb)

  long total() const { return sue_n2 + from_n3 + from_n1 + from_unmatched; }
  bool stable() const { return total() == 0; }
};

// Exhaustive scan of every non-matched (player, compatible RB) pair under
// the frozen coefficients in `ctx`.
StabilityReport verify_two_sided_stability(const EvalContext& ctx, const Matching& m);

struct ClusterStabilityReport {
  std::vector<std::uint8_t> cluster_stable;   // per SUE ordinal
  bool all_stable = true;
};

// Cluster-level stability: nobody outside a cluster can block with one of
// its D2D blocks, and no member wants to leave for a cellular or foreign
// D2D block it can block with.
ClusterStabilityReport verify_s_stability(const EvalContext& ctx, const Matching& m);

// Line-delimited trace (one JSON object per round plus a summary line) for
// golden-file comparisons and the `verify` tool.
void write_trace(const SaraResult& result, std::ostream& out);

}  // namespace scn::matching
