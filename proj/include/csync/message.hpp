#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "csync/types.hpp"

namespace csync {

enum class MsgType : std::uint8_t {
  Discovery,
  Election,
  Connection,
  SlotClaim,
  SlotAck,
  Sync,
  ByzConsensus,
};

std::string_view to_string(MsgType t);

/// Election status carried in declaration frames.
enum class Status : std::uint8_t { Undecided, Head, Member };

/// A convergence-phase slot claim, relayed by bridges.
struct SlotClaim {
  Address ch;
  int slot = 0;
  int ch_degree = 0;
  friend bool operator==(const SlotClaim&, const SlotClaim&) = default;
};

/// CH-declared bridge head for one CH pair (pair stored low, high).
struct BridgeChoice {
  Address low;
  Address high;
  Address cbh;
  friend bool operator==(const BridgeChoice&, const BridgeChoice&) = default;
};

/// Radio frame payload. Which optional parts are meaningful depends on
/// `type` and the sender's protocol state.
struct Message {
  Address src;
  MsgType type = MsgType::Discovery;
  int degree = 0;
  double logical_time = 0.0;       ///< MAC timestamp, filled at transmission
  double rate = 1.0;
  std::int64_t hardware_ticks = 0;  ///< sender h(t) at transmission
  int slot = 0;
  std::optional<Address> reference;
  std::optional<std::uint64_t> auth_token;

  // per-state metadata
  Status status = Status::Undecided;
  Address ch;                       ///< associated CH, suspect, or target CH
  std::vector<Address> addrs;       ///< heard list / CH list / member list
  std::vector<std::uint64_t> tokens;
  std::vector<SlotClaim> claims;
  std::vector<BridgeChoice> bridges;
  std::optional<double> transition_at;
  Address transition_origin;        ///< node that first announced transition_at
  int hops = 0;
  Address lc;
  int round = 0;
  double epoch_start = 0.0;
  double correct_rate = 1.0;        ///< byzantine messages: endorsed rate
};

}  // namespace csync
