#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scn::phy {

// ---------------------------------------------------------------------------
// Network geometry and spectrum layout.
//
// The system is an OFDMA small-cell downlink with an underlaid D2D tier.
// Three orthogonal sub-bands partition the resource blocks (RBs):
//   N1 - cellular downlink RBs, one copy per small-cell base station (SCBS),
//        serving ordinary user equipments (UEs),
//   N2 - cellular downlink RBs reserved for the serving UEs (SUEs) that act
//        as D2D transmitters, again one copy per SCBS,
//   N3 - D2D RBs, one copy per SUE, carrying SUE->UE direct links.
// RBs in different sub-bands are orthogonal; RBs on the same frequency slot
// owned by different nodes interfere with each other.
// ---------------------------------------------------------------------------

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Position& a, const Position& b);

// Static snapshot of one network drop.  `users` holds every user (plain UEs
// and SUEs); `sue_ids` lists which user indices act as D2D transmitters.
struct Topology {
  std::vector<Position> scbs;
  std::vector<Position> users;
  std::vector<int> sue_ids;    // strictly increasing user indices
  double area_side_m = 0.0;

  int num_scbs() const { return static_cast<int>(scbs.size()); }
  int num_users() const { return static_cast<int>(users.size()); }
  int num_sues() const { return static_cast<int>(sue_ids.size()); }
  bool is_sue(int user) const;
  // Ordinal of `user` within sue_ids, or -1 if it is a plain UE.
  int sue_ordinal(int user) const;
};

// Throws std::invalid_argument describing the first violated constraint
// (coordinates outside the area, duplicate/out-of-range SUE ids, ...).
void validate_topology(const Topology& topo);

// Number of RBs per sub-band and the bandwidth of one RB.
struct SpectrumPlan {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;
  double rb_bandwidth_hz = 0.0;

  int num_slots() const { return n1 + n2 + n3; }
};

void validate_plan(const SpectrumPlan& plan);

enum class Band : std::uint8_t { N1 = 0, N2 = 1, N3 = 2 };

const char* band_name(Band b);

// One allocable resource block.  `owner` is a serving-node id: values in
// [0, L) are SCBSs, values in [L, L + num_sues) are SUEs (by ordinal).
// `index` is the frequency slot inside the band; equal (band, index) pairs
// with different owners share the spectrum and interfere.
struct RBlock {
  Band band = Band::N1;
  int owner = 0;
  int index = 0;
};

// Flattened table of every RB in the network with a stable global id.
// Order is lexicographic (band, owner, index), which doubles as the
// deterministic tie-break order for preference lists.
struct RBlockTable {
  std::vector<RBlock> blocks;
  int num_scbs = 0;
  int num_sues = 0;
  SpectrumPlan plan;

  static RBlockTable build(const Topology& topo, const SpectrumPlan& plan);

  int size() const { return static_cast<int>(blocks.size()); }
  const RBlock& operator[](int id) const { return blocks[id]; }
  // Global frequency slot of an RB: N1 slots come first, then N2, then N3.
  int slot_of(int id) const;
  // True when `user` may hold this RB (N1/N3 serve plain UEs, N2 serves SUEs).
  bool compatible(int id, int user, const Topology& topo) const;
  std::vector<int> ue_side_ids() const;   // all N1 and N3 blocks
  std::vector<int> sue_side_ids() const;  // all N2 blocks
};

// Transmit powers, noise and propagation constants for one drop.
struct ChannelParams {
  double scbs_power_w = 2.0;
  double sue_power_w = 0.01;
  double noise_w = 1e-12;          // thermal noise per RB (-90 dBm default)
  double pathloss_exponent = 3.0;
  double min_distance_m = 1.0;     // pathloss clamp; <= 0 disables clamping
};

// Distance-based average gain d^-eta with the near-field clamp applied.
// With the clamp disabled a zero distance is rejected.
double pathloss_gain(double distance_m, double exponent, double min_distance_m);

// Link gains for one drop: gains[(node, slot, user)] = pathloss * fading,
// where the fading power is unit-mean exponential (Rayleigh envelope) and is
// frozen for the lifetime of the realization.  Serving nodes are indexed
// like RBlock::owner (SCBSs first, then SUEs).
struct ChannelRealization {
  int num_scbs = 0;
  int num_nodes = 0;   // SCBSs followed by SUEs
  int num_slots = 0;
  int num_users = 0;
  std::vector<double> gains;
  ChannelParams params;

  double gain(int node, int slot, int user) const {
    return gains[(static_cast<std::size_t>(node) * num_slots + slot) * num_users + user];
  }
};

// Draws the fading for every (serving node, slot, user) triple.  The draw
// order is fixed, so equal (topology, plan, params, seed) inputs give
// bit-identical gains on any platform.
ChannelRealization sample_channels(const Topology& topo, const SpectrumPlan& plan,
                                   const ChannelParams& params, std::uint64_t seed);

// Optional interference gate for the "assigned-only" accounting mode:
// active[node * num_slots + slot] says whether that node currently transmits
// on that slot.  When null, every co-channel node is treated as always on
// (worst case), which keeps rates independent of the matching.
using ActiveSet = std::vector<std::uint8_t>;

// SINR of SCBS `l` serving `user` on cellular block (band, index);
// band must be N1 or N2.  Interference comes from other SCBSs only, since
// the three sub-bands are mutually orthogonal.
double sinr_cellular(const ChannelRealization& ch, const SpectrumPlan& plan, int l,
                     Band band, int index, int user, const ActiveSet* active = nullptr);

// SINR of the D2D link SUE `sue_ordinal` -> `user` on N3 block `index`;
// interference comes from the other SUEs transmitting on the same slot.
double sinr_d2d(const ChannelRealization& ch, const SpectrumPlan& plan, int sue_ordinal,
                int index, int user, const ActiveSet* active = nullptr);

// Shannon rate of one RB: bandwidth_hz * log2(1 + sinr) [bit/s].
double achievable_rate(double bandwidth_hz, double sinr);

}  // namespace scn::phy
