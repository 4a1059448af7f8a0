#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scn/social.hpp"

namespace scn::datasets {

// One ego network in the SNAP ego-Facebook layout: the ego's alters with
// their anonymized binary feature vectors, the ego's labelled friend
// circles, and the alter-alter friendship edges.  The ego node itself is not
// a member; it is implicitly adjacent to everyone.
struct EgoNetwork {
  long long ego_id = 0;
  std::vector<long long> member_ids;                 // ascending original ids
  std::vector<social::AttributeVector> features;     // per member, equal length
  social::AttributeVector ego_features;
  std::vector<std::string> feature_names;
  struct Circle {
    std::string name;
    std::vector<int> members;                        // dense indices, ascending
  };
  std::vector<Circle> circles;
  std::vector<std::pair<int, int>> edges;            // dense, first < second, deduplicated

  int num_members() const { return static_cast<int>(member_ids.size()); }
  int num_features() const { return static_cast<int>(feature_names.size()); }
  int dense_index(long long original_id) const;      // -1 when unknown
  std::vector<int> degrees() const;                  // friend counts per member
  bool share_circle(int a, int b) const;
};

// Reads <ego>.edges / .circles / .feat / .egofeat / .featnames from `dir`.
// Missing files, malformed lines (reported with file and line number),
// feature-length mismatches, and references to unknown members are errors;
// duplicate edges collapse and mentions of the ego in circles or edges are
// dropped (the ego is implicitly everywhere).
EgoNetwork load_ego_facebook(const std::string& dir, long long ego_id);

// Writes the network back in the same five-file layout, canonically sorted;
// loading the output reproduces the network exactly.
void write_snap(const EgoNetwork& net, const std::string& dir);

// Dense indices of the `count` best-connected members (degree descending,
// lowest index on ties), returned ascending.
std::vector<int> select_subset_by_degree(const EgoNetwork& net, int count);

struct PairSet {
  std::vector<social::PairSample> samples;   // all ordered pairs of the subset
  std::vector<long long> user_ids;           // original ids, sample index space
};

// Interaction samples for every ordered pair (i, j) of `subset`: similarity
// from both members' attributes, one interaction type whose outcome is
// "i and j share a circle" and whose covariate is i's friend count.
PairSet build_pair_samples(const EgoNetwork& net, const std::vector<int>& subset);

struct SynthSocial {
  std::vector<social::PairSample> samples;
  std::vector<long long> user_ids;
  Eigen::MatrixXd planted;                   // symmetric ground-truth ties
};

// Forward-model generator for recovery tests: plants latent ties from random
// attributes, then draws interaction outcomes through the logistic link.
// `density` is the per-attribute activation probability.
SynthSocial synth_social(int num_users, double density, std::uint64_t seed);

struct EgoSynthConfig {
  long long ego_id = 0;
  int members = 80;
  int attributes = 224;
  int circles = 32;
  double second_circle_prob = 0.35;   // members may sit in up to three circles
  double third_circle_prob = 0.10;
  double prototype_keep_prob = 0.85;  // circle attribute bits a member inherits
  double noise_attr_prob = 0.03;
  double in_circle_edge_prob = 0.70;
  double cross_edge_prob = 0.03;
};

// Deterministic community-structured ego network in the same shape as the
// SNAP data; used for fixtures and full-pipeline runs where the real
// download is unavailable.
EgoNetwork synth_ego_network(const EgoSynthConfig& config, std::uint64_t seed);

}  // namespace scn::datasets
