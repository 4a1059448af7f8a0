#include "scn/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scn/rng.hpp"

namespace scn::phy {

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool Topology::is_sue(int user) const {
  return std::binary_search(sue_ids.begin(), sue_ids.end(), user);
}

int Topology::sue_ordinal(int user) const {
  auto it = std::lower_bound(sue_ids.begin(), sue_ids.end(), user);
  if (it == sue_ids.end() || *it != user) return -1;
  return static_cast<int>(it - sue_ids.begin());
}

void validate_topology(const Topology& topo) {
  if (topo.scbs.empty()) throw std::invalid_argument("topology: at least one SCBS required");
  if (topo.users.empty()) throw std::invalid_argument("topology: at least one user required");
  if (!(topo.area_side_m > 0.0)) throw std::invalid_argument("topology: area side must be positive");
  auto inside = [&](const Position& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 &&
           p.x <= topo.area_side_m && p.y <= topo.area_side_m;
  };
  for (const Position& p : topo.scbs)
    if (!inside(p)) throw std::invalid_argument("topology: SCBS position outside deployment area");
  for (const Position& p : topo.users)
    if (!inside(p)) throw std::invalid_argument("topology: user position outside deployment area");
  int prev = -1;
  for (int id : topo.sue_ids) {
    if (id < 0 || id >= topo.num_users())
      throw std::invalid_argument("topology: SUE id out of range");
    if (id <= prev)
      throw std::invalid_argument("topology: SUE ids must be strictly increasing (no duplicates)");
    prev = id;
  }
}

void validate_plan(const SpectrumPlan& plan) {
  if (plan.n1 < 0 || plan.n2 < 0 || plan.n3 < 0)
    throw std::invalid_argument("spectrum plan: band sizes must be non-negative");
  if (plan.num_slots() == 0)
    throw std::invalid_argument("spectrum plan: at least one RB required");
  if (!(plan.rb_bandwidth_hz > 0.0))
    throw std::invalid_argument("spectrum plan: RB bandwidth must be positive");
}

const char* band_name(Band b) {
  switch (b) {
    case Band::N1: return "N1";
    case Band::N2: return "N2";
    case Band::N3: return "N3";
  }
  return "?";
}

RBlockTable RBlockTable::build(const Topology& topo, const SpectrumPlan& plan) {
  validate_topology(topo);
  validate_plan(plan);
  RBlockTable table;
  table.num_scbs = topo.num_scbs();
  table.num_sues = topo.num_sues();
  table.plan = plan;
  // Lexicographic (band, owner, index): this order is also the deterministic
  // tie-break used when two RBs give a player equal utility.
  for (int l = 0; l < table.num_scbs; ++l)
    for (int i = 0; i < plan.n1; ++i) table.blocks.push_back({Band::N1, l, i});
  for (int l = 0; l < table.num_scbs; ++l)
    for (int i = 0; i < plan.n2; ++i) table.blocks.push_back({Band::N2, l, i});
  for (int s = 0; s < table.num_sues; ++s)
    for (int i = 0; i < plan.n3; ++i)
      table.blocks.push_back({Band::N3, table.num_scbs + s, i});
  return table;
}

int RBlockTable::slot_of(int id) const {
  const RBlock& rb = blocks[id];
  switch (rb.band) {
    case Band::N1: return rb.index;
    case Band::N2: return plan.n1 + rb.index;
    case Band::N3: return plan.n1 + plan.n2 + rb.index;
  }
  throw std::logic_error("slot_of: bad band");
}

bool RBlockTable::compatible(int id, int user, const Topology& topo) const {
  const bool sue = topo.is_sue(user);
  const Band band = blocks[id].band;
  if (band == Band::N2) return sue;
  // A D2D block never serves its own transmitter.
  if (band == Band::N3 && blocks[id].owner - num_scbs == topo.sue_ordinal(user)) return false;
  return !sue;
}

std::vector<int> RBlockTable::ue_side_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < size(); ++i)
    if (blocks[i].band != Band::N2) ids.push_back(i);
  return ids;
}

std::vector<int> RBlockTable::sue_side_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < size(); ++i)
    if (blocks[i].band == Band::N2) ids.push_back(i);
  return ids;
}

double pathloss_gain(double distance_m, double exponent, double min_distance_m) {
  if (!(exponent > 0.0)) throw std::invalid_argument("pathloss: exponent must be positive");
  if (min_distance_m > 0.0) distance_m = std::max(distance_m, min_distance_m);
  if (!(distance_m > 0.0))
    throw std::invalid_argument("pathloss: zero distance with the near-field clamp disabled");
  return std::pow(distance_m, -exponent);
}

ChannelRealization sample_channels(const Topology& topo, const SpectrumPlan& plan,
                                   const ChannelParams& params, std::uint64_t seed) {
  validate_topology(topo);
  validate_plan(plan);
  if (!(params.scbs_power_w > 0.0) || !(params.sue_power_w > 0.0))
    throw std::invalid_argument("channel: transmit powers must be positive");
  if (!(params.noise_w > 0.0)) throw std::invalid_argument("channel: noise power must be positive");

  ChannelRealization ch;
  ch.num_scbs = topo.num_scbs();
  ch.num_nodes = topo.num_scbs() + topo.num_sues();
  ch.num_slots = plan.num_slots();
  ch.num_users = topo.num_users();
  ch.params = params;
  ch.gains.resize(static_cast<std::size_t>(ch.num_nodes) * ch.num_slots * ch.num_users);

  Rng rng(seed);
  auto node_pos = [&](int k) -> const Position& {
    return k < topo.num_scbs() ? topo.scbs[k] : topo.users[topo.sue_ids[k - topo.num_scbs()]];
  };
  std::size_t idx = 0;
  for (int k = 0; k < ch.num_nodes; ++k) {
    for (int slot = 0; slot < ch.num_slots; ++slot) {
      for (int m = 0; m < ch.num_users; ++m) {
        const double pl = pathloss_gain(distance(node_pos(k), topo.users[m]),
                                        params.pathloss_exponent, params.min_distance_m);
        ch.gains[idx++] = pl * rng.exponential();
      }
    }
  }
  return ch;
}

namespace {

bool node_active(const ActiveSet* active, int num_slots, int node, int slot) {
  if (active == nullptr) return true;  // worst case: everyone transmits
  return (*active)[static_cast<std::size_t>(node) * num_slots + slot] != 0;
}

}  // namespace

double sinr_cellular(const ChannelRealization& ch, const SpectrumPlan& plan, int l,
                     Band band, int index, int user, const ActiveSet* active) {
  if (band == Band::N3)
    throw std::invalid_argument("sinr_cellular: N3 blocks are D2D, use sinr_d2d");
  if (l < 0 || l >= ch.num_scbs) throw std::invalid_argument("sinr_cellular: SCBS id out of range");
  if (index < 0 || (band == Band::N1 ? index >= plan.n1 : index >= plan.n2))
    throw std::invalid_argument("sinr_cellular: block index outside band");
  const int slot = band == Band::N1 ? index : plan.n1 + index;
  double interference = 0.0;
  for (int lp = 0; lp < ch.num_scbs; ++lp) {
    if (lp == l) continue;
    if (!node_active(active, ch.num_slots, lp, slot)) continue;
    interference += ch.params.scbs_power_w * ch.gain(lp, slot, user);
  }
  const double signal = ch.params.scbs_power_w * ch.gain(l, slot, user);
  return signal / (interference + ch.params.noise_w);
}

double sinr_d2d(const ChannelRealization& ch, const SpectrumPlan& plan, int sue_ordinal,
                int index, int user, const ActiveSet* active) {
  if (sue_ordinal < 0 || ch.num_scbs + sue_ordinal >= ch.num_nodes)
    throw std::invalid_argument("sinr_d2d: SUE ordinal out of range");
  if (index < 0 || index >= plan.n3)
    throw std::invalid_argument("sinr_d2d: block index outside band");
  const int slot = plan.n1 + plan.n2 + index;
  double interference = 0.0;
  for (int s = ch.num_scbs; s < ch.num_nodes; ++s) {
    if (s - ch.num_scbs == sue_ordinal) continue;
    if (!node_active(active, ch.num_slots, s, slot)) continue;
    interference += ch.params.sue_power_w * ch.gain(s, slot, user);
  }
  const double signal = ch.params.sue_power_w * ch.gain(ch.num_scbs + sue_ordinal, slot, user);
  return signal / (interference + ch.params.noise_w);
}

double achievable_rate(double bandwidth_hz, double sinr) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("rate: bandwidth must be positive");
  if (sinr < 0.0) throw std::invalid_argument("rate: SINR must be non-negative");
  return bandwidth_hz * std::log2(1.0 + sinr);
}

}  // namespace scn::phy
