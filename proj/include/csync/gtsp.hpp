#pragma once

// Gradient time synchronization baseline: periodic beacons, neighbour
// averaging of rate and offset, radio never sleeps.

#include <map>
#include <random>

#include "csync/protocol.hpp"

namespace csync {

struct GtspConfig {
  double beacon_period = 30e6;  ///< us
  double jitter = 0.1;          ///< beacon period spread, fraction of the period
  /// A neighbour ahead by more than this is adopted outright instead of averaged.
  double jump_threshold = 2560.0;
  /// Measurement window start, us of simulated time.
  double warmup = 600e6;

  void validate() const;
  friend bool operator==(const GtspConfig&, const GtspConfig&) = default;
};

class GtspNode {
 public:
  GtspNode(Address addr, GtspConfig cfg, HardwareClock hw, RadioConfig radio, std::uint64_t seed);

  Effects step(SimTime now, const NodeEvent& ev);
  void stamp(SimTime now, Message& msg);
  void advance_to(SimTime now);

  double logical_time() const { return lc_.now(hw_.micros()); }
  const LogicalClock& logical_clock() const { return lc_; }
  const HardwareClock& hardware_clock() const { return hw_; }
  Address addr() const { return addr_; }
  bool booted() const { return booted_; }
  std::size_t neighbor_count() const { return nbrs_.size(); }
  std::uint64_t updates() const { return updates_; }

 private:
  struct Neighbor {
    double time = 0.0;  ///< sender L at reception, airtime compensated
    double rate = 1.0;
    std::int64_t hw = -1;
    double rx_hw = 0.0;
    double rho = 1.0;
    bool rho_valid = false;
    bool fresh = false;
  };

  void on_beacon(Effects& fx);
  void on_frame(const Message& msg);

  Address addr_;
  GtspConfig cfg_;
  RadioConfig radio_;
  HardwareClock hw_;
  LogicalClock lc_;
  std::mt19937_64 rng_;
  SimTime last_advance_ = 0.0;
  bool booted_ = false;
  std::map<Address, Neighbor> nbrs_;
  std::uint64_t updates_ = 0;
};

class GtspAgent : public NodeAgent {
 public:
  GtspAgent(std::size_t index, GtspNode node) : index_(index), node_(std::move(node)) {}
  void on_boot(Simulator& sim) override;
  void on_timer(Simulator& sim, std::uint64_t tag) override;
  void on_frame(Simulator& sim, const Message& msg) override;
  void stamp(Simulator& sim, Message& msg) override { node_.stamp(sim.now(), msg); }
  void sync_clock(SimTime now) override { node_.advance_to(now); }
  GtspNode& node() { return node_; }
  const GtspNode& node() const { return node_; }

 private:
  void apply(Simulator& sim, const Effects& fx);
  std::size_t index_;
  GtspNode node_;
};

}  // namespace csync
