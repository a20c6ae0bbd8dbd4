#pragma once

// Channel plans and the DOWN-NIC channel choice: every candidate channel of
// the band opposite to the parent link starts at weight 1 and is scaled by
// d_k / d_hops for each time it appears in the parent's upstream channel
// list. The highest remaining weight wins.

#include <wifixdr/common.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace wifixdr {

class AssignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelPlan {
  std::vector<Channel> band_24{1, 6, 11};
  std::vector<Channel> band_5{36, 40, 44, 48};

  const std::vector<Channel>& channels(Band b) const noexcept {
    return b == Band::ghz24 ? band_24 : band_5;
  }

  std::optional<Band> band_of(Channel ch) const noexcept {
    if (std::find(band_24.begin(), band_24.end(), ch) != band_24.end()) return Band::ghz24;
    if (std::find(band_5.begin(), band_5.end(), ch) != band_5.end()) return Band::ghz5;
    return std::nullopt;
  }

  bool contains(Channel ch) const noexcept { return band_of(ch).has_value(); }

  // Throws ConfigError when a band is empty, has duplicates, holds an
  // out-of-range value, or shares a channel with the other band.
  void validate() const {
    std::set<Channel> seen;
    for (Band b : {Band::ghz24, Band::ghz5}) {
      const auto& list = channels(b);
      if (list.empty()) {
        throw ConfigError("channel plan: band " + std::string(to_string(b)) + " GHz is empty");
      }
      for (Channel ch : list) {
        if (ch < 1 || ch > 255) {
          throw ConfigError("channel plan: channel " + std::to_string(ch) + " outside 1..255");
        }
        if (!seen.insert(ch).second) {
          throw ConfigError("channel plan: channel " + std::to_string(ch) + " listed twice");
        }
      }
    }
  }

  friend bool operator==(const ChannelPlan&, const ChannelPlan&) = default;
};

inline std::vector<Channel> candidate_channels(Band parent_link_band, const ChannelPlan& plan) {
  return plan.channels(opposite(parent_link_band));
}

// One multiplicative step applied while walking the parent's channel list.
struct WeightReduction {
  int list_index = 0;  // 1-based position in the parent's list
  Channel channel = 0;
  int d_k = 0;         // hops from the joining MAP to the link using `channel`
  double factor = 1.0;
};

struct WeightTable {
  int d_hops = 0;
  std::map<Channel, double> weights;
  std::vector<WeightReduction> reductions;

  double weight(Channel ch) const {
    auto it = weights.find(ch);
    if (it == weights.end()) {
      throw ContractViolation("weight table has no entry for channel " + std::to_string(ch));
    }
    return it->second;
  }
};

inline constexpr double kWeightTieTolerance = 1e-12;

// d_hops is the joining MAP's depth, so the parent's list carries exactly
// d_hops - 1 entries. Entry i (1-based) is used d_hops - i hops away.
// List channels outside `candidates` are skipped; repeated entries compound.
inline WeightTable apply_weight_reduction(int d_hops, std::span<const Channel> candidates,
                                          std::span<const Channel> parent_channel_list) {
  if (d_hops < 1) {
    throw ContractViolation("apply_weight_reduction: d_hops must be >= 1, got " + std::to_string(d_hops));
  }
  if (parent_channel_list.size() != static_cast<std::size_t>(d_hops - 1)) {
    throw ContractViolation("apply_weight_reduction: parent list has " +
                            std::to_string(parent_channel_list.size()) + " entries, expected d_hops-1 = " +
                            std::to_string(d_hops - 1));
  }
  WeightTable table;
  table.d_hops = d_hops;
  for (Channel ch : candidates) table.weights[ch] = 1.0;

  for (std::size_t idx = 0; idx < parent_channel_list.size(); ++idx) {
    const Channel k = parent_channel_list[idx];
    auto it = table.weights.find(k);
    if (it == table.weights.end()) continue;
    const int list_index = static_cast<int>(idx) + 1;
    const int d_k = d_hops - list_index;
    if (d_k < 1) {
      throw ContractViolation("apply_weight_reduction: computed d_k < 1 at list index " +
                              std::to_string(list_index));
    }
    const double factor = static_cast<double>(d_k) / static_cast<double>(d_hops);
    it->second *= factor;
    table.reductions.push_back({list_index, k, d_k, factor});
  }
  return table;
}

// Argmax of weight; equal weights (within 1e-12) go to the lower channel.
inline Channel assign_channel(const WeightTable& weights, std::span<const Channel> candidates) {
  if (candidates.empty()) throw AssignmentError("assign_channel: empty candidate set");
  std::optional<Channel> best;
  double best_w = 0.0;
  for (Channel ch : candidates) {
    const double w = weights.weight(ch);
    if (!best || w > best_w + kWeightTieTolerance ||
        (std::abs(w - best_w) <= kWeightTieTolerance && ch < *best)) {
      best = ch;
      best_w = w;
    }
  }
  return *best;
}

// Deterministic stand-in for hostapd's ACS on the single-NIC gateway: an
// explicit channel wins, otherwise the least-occupied channel of `band`.
inline Channel gw_select_channel(const ChannelPlan& plan, Band band, std::optional<Channel> configured,
                                 const std::map<Channel, int>& occupancy = {}) {
  if (configured) {
    if (!plan.contains(*configured)) {
      throw ConfigError("gateway channel " + std::to_string(*configured) + " is not in the channel plan");
    }
    return *configured;
  }
  const auto& list = plan.channels(band);
  if (list.empty()) throw ConfigError("gateway band has no channels");
  Channel best = list.front();
  int best_count = -1;
  for (Channel ch : list) {
    auto it = occupancy.find(ch);
    const int count = it == occupancy.end() ? 0 : it->second;
    if (best_count < 0 || count < best_count || (count == best_count && ch < best)) {
      best = ch;
      best_count = count;
    }
  }
  return best;
}

}  // namespace wifixdr
