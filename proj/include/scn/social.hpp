#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scn::social {

// ---------------------------------------------------------------------------
// Latent social-tie model.
//
// For an ordered user pair (i, j) we observe
//   - an attribute-similarity vector  zeta_ij  (shared-attribute indicators
//     plus a trailing bias term), and
//   - F binary interaction indicators y_ij,f with per-interaction covariates
//     e_ij,f (e.g. the poster's friend count for a wall-post interaction).
// The latent tie strength z_ij has a Gaussian prior N(w' zeta_ij, upsilon)
// and drives each interaction through a logistic link on u = [e_ij,f; z_ij].
// MAP inference of (w, rho_f, z) maximizes the ridge-regularized log
// posterior, which is concave in each coordinate block.
// ---------------------------------------------------------------------------

using AttributeVector = std::vector<std::uint8_t>;

// One ordered pair (i, j) with its similarity features and interactions.
struct PairSample {
  int i = 0;
  int j = 0;
  Eigen::VectorXd zeta;               // similarity features incl. bias
  std::vector<std::uint8_t> y;        // F interaction outcomes in {0,1}
  std::vector<Eigen::VectorXd> e;     // F covariate vectors (same length each)
};

struct TieModelParams {
  Eigen::VectorXd w;                  // prior regression weights
  std::vector<Eigen::VectorXd> rho;   // per-interaction logistic weights,
                                      // length = covariate dim + 1 (tie coef last)
  double upsilon = 1.0;               // prior variance of z
  double lambda_w = 0.5;              // ridge penalty on w
  double lambda_rho = 0.5;            // ridge penalty on each rho_f
};

struct InferenceOptions {
  int max_iters = 500;
  double tol_obj = 1e-8;              // absolute objective improvement
  double upsilon = 1.0;
  double lambda_w = 0.5;
  double lambda_rho = 0.5;
};

// Symmetric tie matrix with zero diagonal; entries live in [0, 1] after the
// min-max normalization applied by infer_ties.
struct SocialTieMatrix {
  std::vector<long long> user_ids;    // external ids, column/row order
  Eigen::MatrixXd z;

  int size() const { return static_cast<int>(z.rows()); }
};

struct InferenceResult {
  TieModelParams params;
  SocialTieMatrix ties;               // normalized, symmetrized
  std::vector<double> z_raw;          // per-sample MAP estimates, sample order
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;
};

// Shared-attribute indicator features: element k is 1 when both users have
// attribute k set, plus a trailing constant-1 bias.  Lengths must agree.
Eigen::VectorXd similarity_vector(const AttributeVector& xi, const AttributeVector& xj);

// Numerically safe logistic P(y = 1 | u) = 1 / (1 + exp(-rho' u)).
double interaction_probability(const Eigen::VectorXd& rho, const Eigen::VectorXd& u);

// Log posterior of (params, z) given the samples, up to an additive constant:
//   sum_D -(w'zeta - z)^2 / (2 upsilon)
// + sum_D sum_f [ -(1 - y) rho'u - log(1 + exp(-rho'u)) ]
// - lambda_w/2 |w|^2 - sum_f lambda_rho/2 |rho_f|^2.
double log_posterior(const TieModelParams& params, const std::vector<double>& z,
                     const std::vector<PairSample>& data);

// Analytic gradient in the packed order (w, z_1..z_D, rho_1..rho_F); exposed
// so tests can check it against central finite differences.
Eigen::VectorXd log_posterior_gradient(const TieModelParams& params, const std::vector<double>& z,
                                       const std::vector<PairSample>& data);

// Block-coordinate MAP ascent: exact ridge solve for w, damped Newton steps
// for each z_ij and each rho_f.  Every accepted step is monotone in the
// objective; hitting max_iters flags the result instead of throwing.
// `user_ids` labels the matrix rows (dense index -> external id).
InferenceResult infer_ties(const std::vector<PairSample>& data,
                           const std::vector<long long>& user_ids,
                           const InferenceOptions& opts, std::uint64_t seed = 0);

// Weighted degree of every user (row sums of the tie matrix).
std::vector<double> influence_scores(const SocialTieMatrix& ties);

// Indices of the `count` highest-influence users, ties broken by lowest
// index; result is sorted ascending.
std::vector<int> select_sues(const SocialTieMatrix& ties, int count);

// CSV round-trip for the tie matrix: one header row of user ids, then an
// MxM full-precision matrix.  Values survive the round trip exactly.
void save_tie_matrix(const SocialTieMatrix& ties, const std::string& path);
SocialTieMatrix load_tie_matrix(const std::string& path);

// Flat "key value..." text round-trip for the learned parameters.
void save_params(const TieModelParams& params, const std::string& path);
TieModelParams load_params(const std::string& path);

}  // namespace scn::social
