#pragma once

// UWB medium: rotating-initiator two-way-ranging schedule, range
// measurements and position-beacon broadcasts.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

namespace nanoswarm {

struct RangeMeasurement {
  int initiator = 0;
  int responder = 0;
  double range = 0.0;
  double time = 0.0;
  bool operator==(const RangeMeasurement&) const = default;
};

struct PositionBeacon {
  int sender = 0;
  Vec2 estimated_position;
  double time = 0.0;
  bool operator==(const PositionBeacon&) const = default;
};

struct UwbChannelParams {
  double range_noise_sigma = 0.10;
  double loss_probability = 0.05;

  void validate() const {
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
      throw DomainError("loss probability must lie in [0, 1]");
    if (!(range_noise_sigma >= 0.0)) throw DomainError("range noise must be non-negative");
  }
};

struct RangingPair {
  int initiator = 0;
  int responder = 0;
  bool operator==(const RangingPair&) const = default;
};

// One initiator ranges with every other agent in turn, then hands the role
// to the next agent in `order`.
class RangingSchedule {
 public:
  explicit RangingSchedule(std::vector<int> order, double slot_period = 0.05)
      : order_(std::move(order)), slot_period_(slot_period) {
    if (order_.size() < 2) throw DomainError("ranging schedule needs at least two agents");
    responder_ = 1;
  }

  // Pair for the current slot; the schedule then moves to the next slot.
  // `round_completed` reports whether that slot closed the initiator's round.
  RangingPair advance(bool* round_completed = nullptr) {
    const RangingPair pair{order_[initiator_], order_[responder_]};
    std::size_t next = responder_ + 1;
    if (next == initiator_) ++next;
    bool done = false;
    if (next >= order_.size()) {
      done = true;
      initiator_ = (initiator_ + 1) % order_.size();
      responder_ = initiator_ == 0 ? 1 : 0;
    } else {
      responder_ = next;
    }
    if (round_completed) *round_completed = done;
    ++slot_;
    return pair;
  }

  int current_initiator() const { return order_[initiator_]; }
  std::size_t initiator_index() const { return initiator_; }
  std::size_t responder_index() const { return responder_; }
  std::size_t swarm_size() const { return order_.size(); }
  std::size_t cycle_length() const { return order_.size() * (order_.size() - 1); }
  std::uint64_t slot() const { return slot_; }
  double slot_period() const { return slot_period_; }
  const std::vector<int>& order() const { return order_; }

  // Equality over protocol state only; the slot counter is bookkeeping.
  bool same_state(const RangingSchedule& o) const {
    return order_ == o.order_ && initiator_ == o.initiator_ && responder_ == o.responder_;
  }

 private:
  std::vector<int> order_;
  std::size_t initiator_ = 0;
  std::size_t responder_ = 1;
  double slot_period_;
  std::uint64_t slot_ = 0;
};

// Two-way ranging between the pair. nullopt means the exchange was lost.
inline std::optional<RangeMeasurement> perform_ranging(RangingPair pair, Vec2 initiator_position,
                                                       Vec2 responder_position, const UwbChannelParams& channel,
                                                       Rng& rng, double time = 0.0) {
  if (rng.bernoulli(channel.loss_probability)) return std::nullopt;
  const double truth = distance(initiator_position, responder_position);
  const double r = std::max(0.01, truth + rng.normal(0.0, channel.range_noise_sigma));
  return RangeMeasurement{pair.initiator, pair.responder, r, time};
}

// Latest beacon per peer, as held by one agent.
using BeaconTable = std::map<int, PositionBeacon>;

// Every agent broadcasts its estimate; each (sender, receiver) link is
// delivered independently. Delivery order is by sender id then receiver id.
// Returns the deliveries made so callers can log them.
inline std::vector<std::pair<int, PositionBeacon>> broadcast_beacons(std::span<const PositionBeacon> estimates,
                                                                     std::span<BeaconTable> tables,
                                                                     const UwbChannelParams& channel, Rng& rng) {
  std::vector<std::pair<int, PositionBeacon>> delivered;
  for (const auto& beacon : estimates) {
    for (std::size_t receiver = 0; receiver < tables.size(); ++receiver) {
      if (static_cast<int>(receiver) == beacon.sender) continue;
      if (rng.bernoulli(channel.loss_probability)) continue;
      tables[receiver][beacon.sender] = beacon;
      delivered.emplace_back(static_cast<int>(receiver), beacon);
    }
  }
  return delivered;
}

}  // namespace nanoswarm
