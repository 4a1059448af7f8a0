#include "scn/social.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace scn::social {

namespace {

// log(1 + exp(x)) without overflow for large |x|.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Logistic log-likelihood term of one interaction: -(1-y) t - log(1+e^-t).
double logistic_term(double t, int y) {
  return y ? -softplus(-t) : -softplus(t);
}

void check_data(const TieModelParams& params, const std::vector<double>& z,
                const std::vector<PairSample>& data) {
  if (z.size() != data.size())
    throw std::invalid_argument("social: z and sample counts differ");
  const auto S = params.w.size();
  const auto F = params.rho.size();
  for (const PairSample& s : data) {
    if (s.zeta.size() != S) throw std::invalid_argument("social: similarity length mismatch");
    if (s.y.size() != F || s.e.size() != F)
      throw std::invalid_argument("social: interaction count mismatch");
    for (std::size_t f = 0; f < F; ++f)
      if (s.e[f].size() + 1 != params.rho[f].size())
        throw std::invalid_argument("social: covariate length mismatch");
  }
}

// rho' [e; z] without materializing the concatenated vector.
double link_argument(const Eigen::VectorXd& rho, const Eigen::VectorXd& e, double z) {
  const auto d = e.size();
  return rho.head(d).dot(e) + rho[d] * z;
}

}  // namespace

Eigen::VectorXd similarity_vector(const AttributeVector& xi, const AttributeVector& xj) {
  if (xi.size() != xj.size())
    throw std::invalid_argument("similarity_vector: attribute lengths differ");
  Eigen::VectorXd zeta(xi.size() + 1);
  for (std::size_t k = 0; k < xi.size(); ++k)
    zeta[static_cast<Eigen::Index>(k)] = (xi[k] != 0 && xj[k] != 0) ? 1.0 : 0.0;
  zeta[static_cast<Eigen::Index>(xi.size())] = 1.0;  // bias
  return zeta;
}

double interaction_probability(const Eigen::VectorXd& rho, const Eigen::VectorXd& u) {
  if (rho.size() != u.size())
    throw std::invalid_argument("interaction_probability: dimension mismatch");
  return sigmoid(rho.dot(u));
}

double log_posterior(const TieModelParams& params, const std::vector<double>& z,
                     const std::vector<PairSample>& data) {
  check_data(params, z, data);
  if (!(params.upsilon > 0.0)) throw std::invalid_argument("social: upsilon must be positive");
  double obj = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const PairSample& d = data[s];
    const double resid = params.w.dot(d.zeta) - z[s];
    obj -= resid * resid / (2.0 * params.upsilon);
    for (std::size_t f = 0; f < params.rho.size(); ++f)
      obj += logistic_term(link_argument(params.rho[f], d.e[f], z[s]), d.y[f]);
  }
  obj -= 0.5 * params.lambda_w * params.w.squaredNorm();
  for (const Eigen::VectorXd& r : params.rho) obj -= 0.5 * params.lambda_rho * r.squaredNorm();
  return obj;
}

Eigen::VectorXd log_posterior_gradient(const TieModelParams& params, const std::vector<double>& z,
                                       const std::vector<PairSample>& data) {
  check_data(params, z, data);
  const auto S = params.w.size();
  const auto F = static_cast<Eigen::Index>(params.rho.size());
  Eigen::Index rho_dim = 0;
  for (const Eigen::VectorXd& r : params.rho) rho_dim += r.size();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(S + static_cast<Eigen::Index>(data.size()) + rho_dim);

  auto gw = grad.head(S);
  gw = -params.lambda_w * params.w;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const PairSample& d = data[s];
    const double resid = params.w.dot(d.zeta) - z[s];
    gw -= (resid / params.upsilon) * d.zeta;
    double& gz = grad[S + static_cast<Eigen::Index>(s)];
    gz = resid / params.upsilon;
    Eigen::Index off = S + static_cast<Eigen::Index>(data.size());
    for (Eigen::Index f = 0; f < F; ++f) {
      const Eigen::VectorXd& rho = params.rho[static_cast<std::size_t>(f)];
      const Eigen::VectorXd& e = d.e[static_cast<std::size_t>(f)];
      const double t = link_argument(rho, e, z[s]);
      const double err = static_cast<double>(d.y[static_cast<std::size_t>(f)]) - sigmoid(t);
      gz += err * rho[rho.size() - 1];
      auto gr = grad.segment(off, rho.size());
      gr.head(e.size()) += err * e;
      gr[rho.size() - 1] += err * z[s];
      off += rho.size();
    }
  }
  Eigen::Index off = S + static_cast<Eigen::Index>(data.size());
  for (Eigen::Index f = 0; f < F; ++f) {
    const Eigen::VectorXd& rho = params.rho[static_cast<std::size_t>(f)];
    grad.segment(off, rho.size()) -= params.lambda_rho * rho;
    off += rho.size();
  }
  return grad;
}

namespace {

// Objective terms that involve z_s only; enough for the per-pair line search.
double pair_objective(const TieModelParams& p, const PairSample& d, double wz, double z) {
  const double resid = wz - z;
  double obj = -resid * resid / (2.0 * p.upsilon);
  for (std::size_t f = 0; f < p.rho.size(); ++f)
    obj += logistic_term(link_argument(p.rho[f], d.e[f], z), d.y[f]);
  return obj;
}

// Objective terms that involve rho_f only.
double rho_objective(const TieModelParams& p, const std::vector<PairSample>& data,
                     const std::vector<double>& z, std::size_t f, const Eigen::VectorXd& rho) {
  double obj = -0.5 * p.lambda_rho * rho.squaredNorm();
  for (std::size_t s = 0; s < data.size(); ++s)
    obj += logistic_term(link_argument(rho, data[s].e[f], z[s]), data[s].y[f]);
  return obj;
}

}  // namespace

InferenceResult infer_ties(const std::vector<PairSample>& data,
                           const std::vector<long long>& user_ids,
                           const InferenceOptions& opts, std::uint64_t /*seed*/) {
  if (data.empty()) throw std::invalid_argument("infer_ties: no samples");
  if (!(opts.upsilon > 0.0)) throw std::invalid_argument("infer_ties: upsilon must be positive");
  if (opts.lambda_w < 0.0 || opts.lambda_rho < 0.0)
    throw std::invalid_argument("infer_ties: ridge penalties must be non-negative");
  const int M = static_cast<int>(user_ids.size());
  for (const PairSample& d : data)
    if (d.i < 0 || d.i >= M || d.j < 0 || d.j >= M || d.i == d.j)
      throw std::invalid_argument("infer_ties: pair index out of range");

  const Eigen::Index S = data.front().zeta.size();
  const std::size_t F = data.front().y.size();
  const std::size_t D = data.size();

  InferenceResult res;
  res.params.upsilon = opts.upsilon;
  res.params.lambda_w = opts.lambda_w;
  res.params.lambda_rho = opts.lambda_rho;
  res.params.w = Eigen::VectorXd::Zero(S);
  res.params.rho.resize(F);
  for (std::size_t f = 0; f < F; ++f) {
    // Deterministic init: covariate weights 0, tie coefficient +1.  The +1
    // anchors the latent scale (stronger tie -> more likely interaction) and
    // breaks the z <-> -z sign symmetry.
    res.params.rho[f] = Eigen::VectorXd::Zero(data.front().e[f].size() + 1);
    res.params.rho[f][res.params.rho[f].size() - 1] = 1.0;
  }
  // Start each tie at the pair's empirical interaction rate (within [0,1]).
  res.z_raw.resize(D);
  for (std::size_t s = 0; s < D; ++s) {
    double m = 0.0;
    for (std::uint8_t yy : data[s].y) m += yy;
    res.z_raw[s] = F > 0 ? m / static_cast<double>(F) : 0.0;
  }
  check_data(res.params, res.z_raw, data);

  // zeta'zeta is constant, so the normal-equation factorization for the w
  // update is built once.  The exact ridge maximizer of the posterior given
  // z solves (zeta'zeta + upsilon*lambda_w I) w = zeta'z.
  Eigen::MatrixXd zeta_mat(static_cast<Eigen::Index>(D), S);
  for (std::size_t s = 0; s < D; ++s) zeta_mat.row(static_cast<Eigen::Index>(s)) = data[s].zeta;
  Eigen::MatrixXd normal = zeta_mat.transpose() * zeta_mat;
  normal.diagonal().array() += opts.upsilon * opts.lambda_w;
  Eigen::LDLT<Eigen::MatrixXd> w_solver(normal);
  if (w_solver.info() != Eigen::Success)
    throw std::runtime_error("infer_ties: ridge system not factorizable");

  Eigen::VectorXd zvec = Eigen::Map<Eigen::VectorXd>(res.z_raw.data(), static_cast<Eigen::Index>(D));
  double obj = log_posterior(res.params, res.z_raw, data);
  res.objective_trace.push_back(obj);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // (a) exact ridge update for w.
    res.params.w = w_solver.solve(zeta_mat.transpose() * zvec);
    Eigen::VectorXd wz = zeta_mat * res.params.w;

    // (b) damped Newton step per latent tie.
    for (std::size_t s = 0; s < D; ++s) {
      const PairSample& d = data[s];
      double z = res.z_raw[s];
      double g = (wz[static_cast<Eigen::Index>(s)] - z) / opts.upsilon;
      double h = -1.0 / opts.upsilon;
      for (std::size_t f = 0; f < F; ++f) {
        const Eigen::VectorXd& rho = res.params.rho[f];
        const double rz = rho[rho.size() - 1];
        const double t = link_argument(rho, d.e[f], z);
        const double sig = sigmoid(t);
        g += (static_cast<double>(d.y[f]) - sig) * rz;
        h -= rz * rz * sig * (1.0 - sig);
      }
      const double base = pair_objective(res.params, d, wz[static_cast<Eigen::Index>(s)], z);
      double step = -g / h;  // h < -1/upsilon, always well defined
      for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
        const double cand = z + step;
        if (pair_objective(res.params, d, wz[static_cast<Eigen::Index>(s)], cand) >= base) {
          res.z_raw[s] = cand;
          break;
        }
      }
      zvec[static_cast<Eigen::Index>(s)] = res.z_raw[s];
    }

    // (c) damped Newton step per interaction-type weight vector.
    for (std::size_t f = 0; f < F; ++f) {
      Eigen::VectorXd& rho = res.params.rho[f];
      const Eigen::Index R = rho.size();
      Eigen::VectorXd g = -opts.lambda_rho * rho;
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(R, R);
      H.diagonal().array() -= opts.lambda_rho;
      Eigen::VectorXd u(R);
      for (std::size_t s = 0; s < D; ++s) {
        const PairSample& d = data[s];
        u.head(R - 1) = d.e[f];
        u[R - 1] = res.z_raw[s];
        const double t = rho.dot(u);
        const double sig = sigmoid(t);
        g += (static_cast<double>(d.y[f]) - sig) * u;
        H -= sig * (1.0 - sig) * u * u.transpose();
      }
      const double base = rho_objective(res.params, data, res.z_raw, f, rho);
      Eigen::VectorXd step = (-H).ldlt().solve(g);
      for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
        const Eigen::VectorXd cand = rho + step;
        if (rho_objective(res.params, data, res.z_raw, f, cand) >= base) {
          rho = cand;
          break;
        }
      }
    }

    const double new_obj = log_posterior(res.params, res.z_raw, data);
    res.objective_trace.push_back(new_obj);
    res.iterations = iter + 1;
    if (std::abs(new_obj - obj) < opts.tol_obj) {
      res.converged = true;
      break;
    }
    obj = new_obj;
  }

  // Fold the directed estimates into a symmetric matrix, then min-max
  // normalize the observed off-diagonal entries to [0, 1].  Unobserved pairs
  // keep tie 0.  A degenerate spread (all raw ties equal) maps to all-zero.
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(M, M);
  Eigen::MatrixXi cnt = Eigen::MatrixXi::Zero(M, M);
  for (std::size_t s = 0; s < D; ++s) {
    const int i = data[s].i, j = data[s].j;
    sum(i, j) += res.z_raw[s];
    sum(j, i) += res.z_raw[s];
    cnt(i, j) += 1;
    cnt(j, i) += 1;
  }
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(M, M);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (i != j && cnt(i, j) > 0) {
        raw(i, j) = sum(i, j) / cnt(i, j);
        lo = std::min(lo, raw(i, j));
        hi = std::max(hi, raw(i, j));
      }
  res.ties.user_ids = user_ids;
  res.ties.z = Eigen::MatrixXd::Zero(M, M);
  if (hi > lo) {
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (i != j && cnt(i, j) > 0) res.ties.z(i, j) = (raw(i, j) - lo) / (hi - lo);
  }
  return res;
}

std::vector<double> influence_scores(const SocialTieMatrix& ties) {
  const int M = ties.size();
  std::vector<double> scores(static_cast<std::size_t>(M), 0.0);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (i != j) scores[static_cast<std::size_t>(i)] += ties.z(i, j);
  return scores;
}

std::vector<int> select_sues(const SocialTieMatrix& ties, int count) {
  const int M = ties.size();
  if (count < 0 || count > M)
    throw std::invalid_argument("select_sues: count must be in [0, num_users]");
  const std::vector<double> scores = influence_scores(ties);
  std::vector<int> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    return a < b;  // equal influence: lowest index wins
  });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_tie_matrix(const SocialTieMatrix& ties, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_tie_matrix: cannot open " + path);
  const int M = ties.size();
  if (static_cast<int>(ties.user_ids.size()) != M)
    throw std::invalid_argument("save_tie_matrix: id count does not match matrix size");
  for (int i = 0; i < M; ++i) out << (i ? "," : "") << ties.user_ids[static_cast<std::size_t>(i)];
  out << '\n';
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) out << (j ? "," : "") << format_full(ties.z(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_tie_matrix: write failed for " + path);
}

SocialTieMatrix load_tie_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tie_matrix: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_tie_matrix: empty file " + path);
  SocialTieMatrix ties;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) ties.user_ids.push_back(std::stoll(tok));
  }
  const int M = static_cast<int>(ties.user_ids.size());
  ties.z = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("load_tie_matrix: truncated matrix in " + path);
    std::stringstream ss(line);
    std::string tok;
    for (int j = 0; j < M; ++j) {
      if (!std::getline(ss, tok, ','))
        throw std::runtime_error("load_tie_matrix: short row " + std::to_string(i + 2) + " in " + path);
      ties.z(i, j) = std::stod(tok);
      if (!std::isfinite(ties.z(i, j)))
        throw std::runtime_error("load_tie_matrix: non-finite entry in " + path);
    }
  }
  for (int i = 0; i < M; ++i) {
    if (ties.z(i, i) != 0.0)
      throw std::runtime_error("load_tie_matrix: non-zero diagonal in " + path);
    for (int j = 0; j < M; ++j) {
      if (ties.z(i, j) < 0.0) throw std::runtime_error("load_tie_matrix: negative tie in " + path);
      if (std::abs(ties.z(i, j) - ties.z(j, i)) > 1e-9)
        throw std::runtime_error("load_tie_matrix: matrix not symmetric in " + path);
    }
  }
  return ties;
}

void save_params(const TieModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_params: cannot open " + path);
  out << "upsilon " << format_full(params.upsilon) << '\n';
  out << "lambda_w " << format_full(params.lambda_w) << '\n';
  out << "lambda_rho " << format_full(params.lambda_rho) << '\n';
  out << "w " << params.w.size();
  for (Eigen::Index k = 0; k < params.w.size(); ++k) out << ' ' << format_full(params.w[k]);
  out << '\n';
  out << "num_interactions " << params.rho.size() << '\n';
  for (std::size_t f = 0; f < params.rho.size(); ++f) {
    out << "rho_" << f << ' ' << params.rho[f].size();
    for (Eigen::Index k = 0; k < params.rho[f].size(); ++k)
      out << ' ' << format_full(params.rho[f][k]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

TieModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_params: cannot open " + path);
  TieModelParams params;
  std::string key;
  auto read_vec = [&](std::istream& is) {
    Eigen::Index n;
    if (!(is >> n) || n < 0) throw std::runtime_error("load_params: bad vector length in " + path);
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k)
      if (!(is >> v[k])) throw std::runtime_error("load_params: truncated vector in " + path);
    return v;
  };
  std::size_t expected_rho = 0;
  while (in >> key) {
    if (key == "upsilon") in >> params.upsilon;
    else if (key == "lambda_w") in >> params.lambda_w;
    else if (key == "lambda_rho") in >> params.lambda_rho;
    else if (key == "w") params.w = read_vec(in);
    else if (key == "num_interactions") in >> expected_rho;
    else if (key.rfind("rho_", 0) == 0) params.rho.push_back(read_vec(in));
    else throw std::runtime_error("load_params: unknown key '" + key + "' in " + path);
    if (!in) throw std::runtime_error("load_params: malformed value for '" + key + "' in " + path);
  }
  if (params.rho.size() != expected_rho)
    throw std::runtime_error("load_params: interaction count mismatch in " + path);
  return params;
}

}  // namespace scn::social
