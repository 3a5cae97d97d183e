#pragma once

// Fault injection and the in-cluster byzantine agreement used to detect and
// correct faulty cluster heads.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "csync/engine.hpp"

namespace csync {

enum class FaultKind : std::uint8_t {
  FailStop,
  Spike,
  Outlier,
  Intermittent,
  SelectiveForward,
  DiscoveryFlood,
  AlteredTime,
};
inline constexpr int kFaultKinds = 7;

std::string_view to_string(FaultKind k);
/// Throws ConfigError for an unknown name.
FaultKind fault_kind_from_string(std::string_view s);

struct FaultSpec {
  Address target;
  FaultKind kind = FaultKind::FailStop;
  SimTime start = 0.0;
  SimTime end = std::numeric_limits<double>::infinity();
  /// us for time faults, probability for INTERMITTENT/SELECTIVE_FORWARD,
  /// range multiplier for DISCOVERY_FLOOD. Unused by FAIL_STOP.
  double magnitude = 0.0;
  std::vector<Address> colluders;

  bool active(SimTime t) const { return t >= start && t < end; }
  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

/// Checks that `magnitude` makes sense for `kind`; throws ConfigError.
void validate(const FaultSpec& f, double byz_threshold_us);

/// Per-frame facts the pure fault function needs.
struct FaultContext {
  MsgType type = MsgType::Discovery;
  bool first_in_window = true;  ///< no earlier frame of this node hit this spec
  double draw = 1.0;            ///< U[0,1) for probabilistic kinds
};

/// Pure transformation of the node's transmit behaviour.
TxBehavior apply_fault(const FaultSpec& spec, TxBehavior in, const FaultContext& ctx);

/// TxFilter applying every active FaultSpec of the transmitting node.
class FaultInjector : public TxFilter {
 public:
  FaultInjector(std::vector<FaultSpec> faults, std::uint64_t seed);
  TxBehavior on_transmit(Simulator& sim, std::size_t node, const Message& msg) override;
  const std::vector<FaultSpec>& faults() const { return faults_; }
  /// Frames affected per fault index.
  const std::vector<std::uint64_t>& hits() const { return hits_; }

 private:
  std::vector<FaultSpec> faults_;
  std::vector<std::uint64_t> hits_;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------- CB tokens

/// Key material a CH hands out in its own declaration frame.
std::uint64_t ch_key_share(std::uint64_t network_secret, Address ch);
/// Token proving a CB directly heard both CHs of the pair. Order-insensitive.
std::uint64_t make_cb_token(std::uint64_t share_a, std::uint64_t share_b);
/// True iff `token` is the keyed digest of exactly the pair (a, b).
bool verify_cb_token(std::uint64_t network_secret, std::uint64_t token, Address a, Address b);

// ---------------------------------------------------------------- agreement

struct ByzantineMsg {
  Address initiator;
  Address reference;  ///< CB whose observation triggered the round
  double correct_time = 0.0;
  double correct_rate = 1.0;
  Address suspect;
  friend bool operator==(const ByzantineMsg&, const ByzantineMsg&) = default;
};

/// Distinct endorsed messages one node received for one suspect.
class ConsensusTally {
 public:
  explicit ConsensusTally(int n_i = 0) : n_i_(n_i) {}
  int n_i() const { return n_i_; }
  int quorum() const { return n_i_ / 2 + 1; }
  /// Records an endorsed message; duplicates from the same sender are ignored.
  /// Returns true when this sender was new.
  bool add(Address sender, double offset);
  int count() const { return static_cast<int>(offsets_.size()); }
  bool reached() const { return n_i_ > 0 && count() >= quorum(); }
  /// Median of the endorsed offsets (lower median for even counts).
  double median_offset() const;

 private:
  int n_i_;
  std::map<Address, double> offsets_;
};

/// What a cluster member knows about the cluster of a suspect CH.
struct ClusterView {
  Address ch;
  std::set<Address> legit_cbs;
};

/// Monitor decision at the deadline: fire unless an in-slot SYNC arrived
/// within `threshold` of the monitor's own clock, with `misses` consecutive
/// violations required before firing.
bool monitor(std::optional<double> observed_error, double threshold, int& consecutive,
             int required = 1);

struct ByzDecision {
  bool endorse = false;     ///< counts towards the tally and is re-broadcast
  bool retransmit = false;  ///< this node relays (first endorsement only)
  bool agreed = false;      ///< quorum reached by this message
  std::string reason;
};

/// Handles one received byzantine message at a correct cluster member.
/// `own_time` is the member's pre-update clock at reception,
/// `sender_time` the (airtime-compensated) value in the message.
ByzDecision handle_byzantine(ConsensusTally& tally, bool& relayed, const ByzantineMsg& msg,
                             Address sender, const ClusterView& view, double sender_time,
                             double own_time, bool saw_good_sync, double threshold);

// ---------------------------------------------------------------- assumptions

/// Faulty-neighbour check for one node: at least floor(n_i/2)+1 of its
/// `n_i` in-cluster neighbours must be fault-free.
bool quorum_assumption_holds(int n_i, int faulty_neighbors);

// ---------------------------------------------------------------- desk check

/// Exhaustive agreement check on a complete cluster of n_i+1 nodes:
/// node 0 is the CH, nodes 1..ceil(n_i/2) are CBs, the rest CMs.
struct DeskCase {
  int n_i = 4;
  std::vector<int> faulty;            ///< node indices
  std::vector<FaultKind> kinds;       ///< per faulty node
  bool colluding = false;
  double fault_value = 10000.0;       ///< us, >= threshold
};

struct DeskOutcome {
  bool assumption_violated = false;  ///< static quorum check
  bool triggered = false;            ///< a correct CB started a round
  bool all_correct_ok = false;       ///< every correct node within threshold of truth
  bool agreement = false;            ///< every correct node reached quorum (when triggered)
  bool faulty_agreement = false;     ///< some correct node agreed on a faulty value
  int messages = 0;
};

DeskOutcome run_desk_case(const DeskCase& c, double threshold = 500.0);

struct DeskSummary {
  std::uint64_t cases = 0;
  std::uint64_t below_bound_cases = 0;
  std::uint64_t below_bound_failures = 0;
  std::uint64_t above_bound_cases = 0;
  std::uint64_t above_bound_unreported = 0;  ///< missing assumption report
  std::uint64_t above_bound_faulty_agreement = 0;
};

/// Every placement of k < n_i/2 faults with every kind combination (both
/// colluding and independent), plus every placement of k >= ceil(n_i/2)
/// faults with uniform kinds.
DeskSummary enumerate_desk(int n_i, double threshold = 500.0);

}  // namespace csync
