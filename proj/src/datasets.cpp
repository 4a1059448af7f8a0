#include "scn/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "scn/rng.hpp"

namespace scn::datasets {

int EgoNetwork::dense_index(long long original_id) const {
  auto it = std::lower_bound(member_ids.begin(), member_ids.end(), original_id);
  if (it == member_ids.end() || *it != original_id) return -1;
  return static_cast<int>(it - member_ids.begin());
}

std::vector<int> EgoNetwork::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(num_members()), 0);
  for (const auto& [a, b] : edges) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  }
  return deg;
}

bool EgoNetwork::share_circle(int a, int b) const {
  for (const Circle& c : circles) {
    const bool has_a = std::binary_search(c.members.begin(), c.members.end(), a);
    if (has_a && std::binary_search(c.members.begin(), c.members.end(), b)) return true;
  }
  return false;
}

namespace {

[[noreturn]] void malformed(const std::string& path, int line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset file missing or unreadable: " + path);
  return in;
}

}  // namespace

EgoNetwork load_ego_facebook(const std::string& dir, long long ego_id) {
  const std::string stem = dir + "/" + std::to_string(ego_id);
  EgoNetwork net;
  net.ego_id = ego_id;

  // <ego>.feat defines the member set and the feature dimension.
  std::vector<std::pair<long long, social::AttributeVector>> rows;
  {
    const std::string path = stem + ".feat";
    std::ifstream in = open_or_throw(path);
    std::string line;
    int line_no = 0;
    long long feat_dim = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long long id;
      if (!(ss >> id)) malformed(path, line_no, "expected a member id");
      social::AttributeVector feats;
      int bit;
      while (ss >> bit) {
        if (bit != 0 && bit != 1) malformed(path, line_no, "feature values must be 0 or 1");
        feats.push_back(static_cast<std::uint8_t>(bit));
      }
      if (!ss.eof()) malformed(path, line_no, "non-numeric feature value");
      if (feat_dim == -1) feat_dim = static_cast<long long>(feats.size());
      if (static_cast<long long>(feats.size()) != feat_dim)
        malformed(path, line_no, "feature vector length differs from previous rows");
      if (id == ego_id) malformed(path, line_no, "the ego node must not appear as a member");
      rows.emplace_back(id, std::move(feats));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no member rows");
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (rows[k].first == rows[k - 1].first)
        throw std::runtime_error(path + ": duplicate member id " + std::to_string(rows[k].first));
    for (auto& [id, feats] : rows) {
      net.member_ids.push_back(id);
      net.features.push_back(std::move(feats));
    }
  }
  const std::size_t feat_dim = net.features.front().size();

  {
    const std::string path = stem + ".egofeat";
    std::ifstream in = open_or_throw(path);
    int bit;
    while (in >> bit) {
      if (bit != 0 && bit != 1) malformed(path, 1, "feature values must be 0 or 1");
      net.ego_features.push_back(static_cast<std::uint8_t>(bit));
    }
    if (!in.eof()) malformed(path, 1, "non-numeric feature value");
    if (net.ego_features.size() != feat_dim)
      throw std::runtime_error(path + ": ego feature length " +
                               std::to_string(net.ego_features.size()) +
                               " does not match member feature length " +
                               std::to_string(feat_dim));
  }

  {
    const std::string path = stem + ".featnames";
    std::ifstream in = open_or_throw(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long long idx;
      if (!(ss >> idx)) malformed(path, line_no, "expected a feature index");
      if (idx != static_cast<long long>(net.feature_names.size()))
        malformed(path, line_no, "feature indices must be consecutive from 0");
      std::string rest;
      std::getline(ss, rest);
      const std::size_t start = rest.find_first_not_of(" \t");
      net.feature_names.push_back(start == std::string::npos ? "" : rest.substr(start));
    }
    if (net.feature_names.size() != feat_dim)
      throw std::runtime_error(path + ": " + std::to_string(net.feature_names.size()) +
                               " names for " + std::to_string(feat_dim) + " features");
  }

  {
    const std::string path = stem + ".circles";
    std::ifstream in = open_or_throw(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      EgoNetwork::Circle circle;
      if (!(ss >> circle.name)) malformed(path, line_no, "expected a circle name");
      long long id;
      while (ss >> id) {
        if (id == ego_id) continue;  // the ego belongs to all of its circles
        const int dense = net.dense_index(id);
        if (dense == -1)
          malformed(path, line_no, "circle references unknown member " + std::to_string(id));
        circle.members.push_back(dense);
      }
      if (!ss.eof()) malformed(path, line_no, "non-numeric member id");
      std::sort(circle.members.begin(), circle.members.end());
      circle.members.erase(std::unique(circle.members.begin(), circle.members.end()),
                           circle.members.end());
      net.circles.push_back(std::move(circle));
    }
  }

  {
    const std::string path = stem + ".edges";
    std::ifstream in = open_or_throw(path);
    std::set<std::pair<int, int>> edge_set;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      long long a, b;
      if (!(ss >> a >> b)) malformed(path, line_no, "expected two member ids");
      std::string extra;
      if (ss >> extra) malformed(path, line_no, "trailing tokens after the id pair");
      if (a == ego_id || b == ego_id) continue;  // implicit ego edges are dropped
      const int da = net.dense_index(a), db = net.dense_index(b);
      if (da == -1)
        malformed(path, line_no, "edge references unknown member " + std::to_string(a));
      if (db == -1)
        malformed(path, line_no, "edge references unknown member " + std::to_string(b));
      if (da == db) malformed(path, line_no, "self-loop on member " + std::to_string(a));
      edge_set.emplace(std::min(da, db), std::max(da, db));
    }
    net.edges.assign(edge_set.begin(), edge_set.end());
  }

  return net;
}

void write_snap(const EgoNetwork& net, const std::string& dir) {
  const std::string stem = dir + "/" + std::to_string(net.ego_id);
  auto open_out = [](const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    return out;
  };
  {
    std::ofstream out = open_out(stem + ".feat");
    for (int m = 0; m < net.num_members(); ++m) {
      out << net.member_ids[static_cast<std::size_t>(m)];
      for (std::uint8_t bit : net.features[static_cast<std::size_t>(m)])
        out << ' ' << static_cast<int>(bit);
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out(stem + ".egofeat");
    for (std::size_t k = 0; k < net.ego_features.size(); ++k)
      out << (k ? " " : "") << static_cast<int>(net.ego_features[k]);
    out << '\n';
  }
  {
    std::ofstream out = open_out(stem + ".featnames");
    for (std::size_t k = 0; k < net.feature_names.size(); ++k)
      out << k << ' ' << net.feature_names[k] << '\n';
  }
  {
    std::ofstream out = open_out(stem + ".circles");
    for (const auto& circle : net.circles) {
      out << circle.name;
      for (int m : circle.members) out << '\t' << net.member_ids[static_cast<std::size_t>(m)];
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out(stem + ".edges");
    for (const auto& [a, b] : net.edges)
      out << net.member_ids[static_cast<std::size_t>(a)] << ' '
          << net.member_ids[static_cast<std::size_t>(b)] << '\n';
  }
}

std::vector<int> select_subset_by_degree(const EgoNetwork& net, int count) {
  if (count < 0 || count > net.num_members())
    throw std::invalid_argument("select_subset_by_degree: count must be in [0, members]");
  const std::vector<int> deg = net.degrees();
  std::vector<int> order(static_cast<std::size_t>(net.num_members()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (deg[static_cast<std::size_t>(a)] != deg[static_cast<std::size_t>(b)])
      return deg[static_cast<std::size_t>(a)] > deg[static_cast<std::size_t>(b)];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

PairSet build_pair_samples(const EgoNetwork& net, const std::vector<int>& subset) {
  for (int m : subset)
    if (m < 0 || m >= net.num_members())
      throw std::invalid_argument("build_pair_samples: subset index out of range");
  const std::vector<int> deg = net.degrees();
  PairSet out;
  out.user_ids.reserve(subset.size());
  for (int m : subset) out.user_ids.push_back(net.member_ids[static_cast<std::size_t>(m)]);

  const int M = static_cast<int>(subset.size());
  out.samples.reserve(static_cast<std::size_t>(M) * (M - 1));
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      if (i == j) continue;
      const int mi = subset[static_cast<std::size_t>(i)];
      const int mj = subset[static_cast<std::size_t>(j)];
      social::PairSample s;
      s.i = i;
      s.j = j;
      s.zeta = social::similarity_vector(net.features[static_cast<std::size_t>(mi)],
                                         net.features[static_cast<std::size_t>(mj)]);
      s.y.push_back(net.share_circle(mi, mj) ? 1 : 0);
      Eigen::VectorXd e(1);
      e[0] = static_cast<double>(deg[static_cast<std::size_t>(mi)]);
      s.e.push_back(e);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

SynthSocial synth_social(int num_users, double density, std::uint64_t seed) {
  if (num_users < 2) throw std::invalid_argument("synth_social: need at least two users");
  if (!(density > 0.0) || !(density < 1.0))
    throw std::invalid_argument("synth_social: density must be in (0, 1)");
  constexpr int kAttrs = 12;
  Rng rng(seed);

  std::vector<social::AttributeVector> attrs(static_cast<std::size_t>(num_users));
  for (auto& a : attrs) {
    a.resize(kAttrs);
    for (auto& bit : a) bit = rng.bernoulli(density) ? 1 : 0;
  }
  // Positive prior weights make shared attributes raise the planted tie.
  Eigen::VectorXd w_true(kAttrs + 1);
  for (int k = 0; k <= kAttrs; ++k) w_true[k] = std::abs(1.0 + 0.3 * rng.normal());
  w_true[kAttrs] = 0.1;  // small bias

  SynthSocial out;
  out.planted = Eigen::MatrixXd::Zero(num_users, num_users);
  out.user_ids.resize(static_cast<std::size_t>(num_users));
  std::iota(out.user_ids.begin(), out.user_ids.end(), 0);

  // Plant one latent tie per unordered pair: prior mean plus a little noise.
  for (int i = 0; i < num_users; ++i) {
    for (int j = i + 1; j < num_users; ++j) {
      const Eigen::VectorXd zeta =
          social::similarity_vector(attrs[static_cast<std::size_t>(i)],
                                    attrs[static_cast<std::size_t>(j)]);
      const double z = std::max(0.0, w_true.dot(zeta) + 0.05 * rng.normal());
      out.planted(i, j) = z;
      out.planted(j, i) = z;
    }
  }

  // Interaction outcomes: stronger ties interact more, busier users less.
  const double rho_e = -0.5, rho_z = 2.0;
  for (int i = 0; i < num_users; ++i) {
    for (int j = 0; j < num_users; ++j) {
      if (i == j) continue;
      social::PairSample s;
      s.i = i;
      s.j = j;
      s.zeta = social::similarity_vector(attrs[static_cast<std::size_t>(i)],
                                         attrs[static_cast<std::size_t>(j)]);
      Eigen::VectorXd e(1);
      e[0] = rng.uniform(0.0, 2.0);
      const double t = rho_e * e[0] + rho_z * out.planted(i, j);
      s.y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-t))) ? 1 : 0);
      s.e.push_back(e);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

EgoNetwork synth_ego_network(const EgoSynthConfig& config, std::uint64_t seed) {
  if (config.members < 2 || config.attributes < 1 || config.circles < 1)
    throw std::invalid_argument("synth_ego_network: degenerate configuration");
  Rng rng(seed);
  EgoNetwork net;
  net.ego_id = config.ego_id;
  for (int m = 0; m < config.members; ++m)
    net.member_ids.push_back(config.ego_id + 1 + m);

  // Circle membership: everyone gets a primary circle, some join one or two
  // more, giving overlapping communities of uneven size.
  std::vector<std::vector<int>> circles_of(static_cast<std::size_t>(config.members));
  for (int m = 0; m < config.members; ++m) {
    auto& mine = circles_of[static_cast<std::size_t>(m)];
    mine.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.circles))));
    if (rng.bernoulli(config.second_circle_prob))
      mine.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.circles))));
    if (rng.bernoulli(config.third_circle_prob))
      mine.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.circles))));
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
  }
  net.circles.resize(static_cast<std::size_t>(config.circles));
  for (int c = 0; c < config.circles; ++c)
    net.circles[static_cast<std::size_t>(c)].name = "circle" + std::to_string(c);
  for (int m = 0; m < config.members; ++m)
    for (int c : circles_of[static_cast<std::size_t>(m)])
      net.circles[static_cast<std::size_t>(c)].members.push_back(m);
  // Drop empty circles so every circle in the output is meaningful.
  net.circles.erase(std::remove_if(net.circles.begin(), net.circles.end(),
                                   [](const auto& c) { return c.members.empty(); }),
                    net.circles.end());

  // Per-circle attribute prototypes; members inherit most prototype bits.
  const int proto_bits = std::max(3, config.attributes / config.circles * 2);
  std::vector<std::vector<int>> prototype(static_cast<std::size_t>(config.circles));
  for (int c = 0; c < config.circles; ++c) {
    std::set<int> bits;
    while (static_cast<int>(bits.size()) < std::min(proto_bits, config.attributes))
      bits.insert(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.attributes))));
    prototype[static_cast<std::size_t>(c)].assign(bits.begin(), bits.end());
  }
  net.features.assign(static_cast<std::size_t>(config.members),
                      social::AttributeVector(static_cast<std::size_t>(config.attributes), 0));
  for (int m = 0; m < config.members; ++m) {
    auto& feats = net.features[static_cast<std::size_t>(m)];
    for (int c : circles_of[static_cast<std::size_t>(m)])
      for (int bit : prototype[static_cast<std::size_t>(c)])
        if (rng.bernoulli(config.prototype_keep_prob)) feats[static_cast<std::size_t>(bit)] = 1;
    for (int a = 0; a < config.attributes; ++a)
      if (feats[static_cast<std::size_t>(a)] == 0 && rng.bernoulli(config.noise_attr_prob))
        feats[static_cast<std::size_t>(a)] = 1;
  }
  net.ego_features.assign(static_cast<std::size_t>(config.attributes), 0);
  for (int a = 0; a < config.attributes; ++a)
    if (rng.bernoulli(0.2)) net.ego_features[static_cast<std::size_t>(a)] = 1;
  for (int a = 0; a < config.attributes; ++a)
    net.feature_names.push_back("attr;" + std::to_string(a) + ";anonymized");

  std::set<std::pair<int, int>> edge_set;
  for (int a = 0; a < config.members; ++a) {
    for (int b = a + 1; b < config.members; ++b) {
      const bool together = [&] {
        for (int c : circles_of[static_cast<std::size_t>(a)])
          for (int d : circles_of[static_cast<std::size_t>(b)])
            if (c == d) return true;
        return false;
      }();
      const double p = together ? config.in_circle_edge_prob : config.cross_edge_prob;
      if (rng.bernoulli(p)) edge_set.emplace(a, b);
    }
  }
  net.edges.assign(edge_set.begin(), edge_set.end());
  return net;
}

}  // namespace scn::datasets
