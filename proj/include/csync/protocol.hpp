#pragma once

// C-sync node: clustering (discovery, election, connection) followed by the
// slotted consensus phase that distributes local-center time.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "csync/clock.hpp"
#include "csync/engine.hpp"
#include "csync/resilience.hpp"

namespace csync {

enum class Role : std::uint8_t { CM, CH, CB, CBH };
std::string_view to_string(Role r);

enum class Phase : std::uint8_t {
  Discovery,
  ElectionRevelation,
  ElectionDeclaration,
  ConnectionRevelation,
  ConnectionDeclaration,
  ConsensusConvergence,
  ConsensusSynchronization,
  Idle,
};
std::string_view to_string(Phase p);

struct ProtocolConfig {
  double st_interval = 5e6;       ///< us
  double sync_threshold = 2560.0;  ///< us, discovery gate
  int max_slots = 10;
  int max_count = 10;
  double slot_duration = 300e3;  ///< us
  int idle_slots = 10;
  int discovery_min_rounds = 5;
  int beacons_per_st = 5;
  /// Transition is announced this many ST after the next ST boundary.
  int transition_lead = 2;
  double byz_threshold = 500.0;
  int byz_required_misses = 1;
  /// Sync cycles per epoch before CB monitoring starts.
  int byz_warmup_cycles = 1;
  /// Keep CMs of a bridgeless cluster awake so they can still flood consensus.
  bool single_cluster_flood = false;
  std::uint64_t network_secret = 0xc5ac3d1f0b7e2a49ull;
  int rate_history = 8;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  double cycle_us() const { return (max_slots + idle_slots) * slot_duration; }
  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

/// Election rank: degree first, address breaks ties.
struct Rank {
  int degree = 0;
  Address addr;
  friend auto operator<=>(const Rank&, const Rank&) = default;
};

/// CH iff `own` outranks every rival; empty rivals make a cluster of one.
Role elect_ch(Rank own, std::span<const Rank> rivals);
/// CB iff at least two distinct CH neighbours.
Role elect_cb(std::span<const Address> ch_neighbors);
/// Highest-ranked candidate; nullopt for an empty set.
std::optional<Address> elect_cbh(std::span<const Rank> candidates);

/// Slot a CH claims at convergence slot `slot` (1-based) given the neighbour
/// claims heard before that slot, or nullopt to keep waiting.
std::optional<int> slot_decision(int slot, int ch_degree, std::span<const SlotClaim> heard,
                                 int max_slots);
/// Final slot once every neighbour claim is known.
int assign_slot(int ch_degree, std::span<const SlotClaim> neighbor_claims, int max_slots);
/// Slot a CB acknowledges among its CHs' claims (the highest).
int ack_slot(std::span<const SlotClaim> claims);
/// LC iff no neighbouring CH holds a later convergence slot.
bool elect_local_center(int own_slot, std::span<const SlotClaim> peer_claims);
/// Synchronization-window slot of a CH with convergence slot `slot`.
int mirror_slot(int slot, int max_slots);

/// LC-referenced rate after a SYNC reception: the correction factor
/// l_rs / l_r (sender progress per own hardware unit over the current rate)
/// applied on top of the current rate.
double lc_rate_update(double current_rate, TimePair now, TimePair base);

// ---------------------------------------------------------------- node

struct NeighborInfo {
  Address addr;
  // discovery samples
  double last_time = 0.0;  ///< sender L at reception (airtime compensated)
  double last_rate = 1.0;
  std::int64_t last_hw = 0;   ///< sender hardware ticks
  double last_rx_hw = 0.0;    ///< own hardware us at reception
  std::int64_t base_hw = -1;  ///< first sender ticks this epoch
  double base_rx_hw = 0.0;
  double rho = 1.0;  ///< sender hardware per own hardware
  std::optional<double> transition;
  Address transition_origin;
  bool fresh = false;
  bool hears_me = false;
  int degree = 0;
  // election
  int frozen_degree = -1;
  Status status = Status::Undecided;
  Address ch;
  std::vector<Address> ch_list;
  std::optional<std::uint64_t> key_share;
  bool cb_claim = false;
  int cb_degree = 0;
};

/// Externally visible snapshot used by metrics and the oracle tests.
struct NodeView {
  Address addr;
  Phase phase = Phase::Discovery;
  Role role = Role::CM;
  bool is_local_center = false;
  bool booted = false;
  int degree = 0;
  Address ch;
  std::vector<Address> ch_list;
  std::vector<BridgeChoice> bridges;  ///< CBH pairs this node heads
  int slot = 0;
  int ch_degree = 0;
  int hops = -1;
  Address lc;
  int epoch = 0;
  int consensus_count = 0;
  bool synced_this_epoch = false;
  std::set<Address> blacklist;
};

/// Side effects of one step, returned as data.
struct Effects {
  struct Timer {
    SimTime at;
    std::uint64_t tag;
  };
  struct Note {
    std::string kind;
    std::string detail;
  };
  std::vector<Message> out;
  std::vector<Timer> timers;
  std::vector<RadioState> radio;
  std::vector<Note> notes;
};

struct BootEvent {};
struct TimerEvent {
  std::uint64_t tag;
};
using NodeEvent = std::variant<BootEvent, TimerEvent, Message>;

class CsyncNode {
 public:
  CsyncNode(Address addr, ProtocolConfig cfg, HardwareClock hw, RadioConfig radio,
            std::uint64_t seed, std::set<Address> blacklist = {});

  /// Advances the clocks to `now`, then handles `ev`.
  Effects step(SimTime now, const NodeEvent& ev);
  /// Fills the MAC timestamp fields of an outgoing frame at `now`.
  void stamp(SimTime now, Message& msg);
  void advance_to(SimTime now);

  double logical_time() const;  ///< at the last advance
  double logical_time_at(SimTime t) const;
  const LogicalClock& logical_clock() const { return lc_; }
  const HardwareClock& hardware_clock() const { return hw_; }
  Address addr() const { return addr_; }
  Phase phase() const { return phase_; }
  NodeView view() const;
  const std::map<Address, NeighborInfo>& neighbors() const { return nbrs_; }
  const ProtocolConfig& config() const { return cfg_; }
  /// Sim time at which the node first entered IDLE (negative if never).
  SimTime first_idle() const { return first_idle_; }
  SimTime clustered_at() const { return clustered_at_; }
  bool assumption_violated() const { return assumption_violated_; }

 private:
  enum class Act : std::uint8_t {
    Beacon,
    Average,
    Phase,
    ElectionTx,
    ConnectionTx,
    ConvergenceSlot,
    ClaimTx,
    AckTx,
    SyncWindow,
    SlotStart,
    LcTx,
    ChDeadline,
    RelayTx,
    MonitorDeadline,
    ByzTx,
    Sleep,
    Wake,
    IdleStart,
  };
  struct Pending {
    double target;  ///< logical us
    Act act;
    std::int64_t arg;
  };
  struct Upstream {
    Address sender;
    double time;  ///< sender time minus own time at reception
    double rate_candidate;
    int hops;
    Address lc;
  };
  struct ByzRound {
    ConsensusTally tally;
    bool relayed = false;
    bool agreed = false;
    bool saw_good = false;
    bool initiated = false;
    Address reference;  ///< carried by our one transmission
  };

  // context for the step in progress
  Effects* fx_ = nullptr;
  SimTime now_ = 0.0;

  void handle_timer(std::uint64_t tag);
  void handle_frame(const Message& msg);
  void run(Act act, std::int64_t arg);

  void plan(double logical_target, Act act, std::int64_t arg = 0);
  void replan_all();
  SimTime sim_time_for(double logical_target) const;
  void send(Message m);
  void note(std::string kind, std::string detail);
  void radio(RadioState s);
  double jitter(double lo, double hi);
  double hw_us() const { return hw_.micros(); }
  double now_l() const { return lc_.now(hw_us()); }
  void jump_to(double target);

  // discovery
  void start_discovery();
  void on_discovery(const Message& msg);
  void average_round();
  void adopt_transition(double t, Address origin, const Message* from);
  int confirmed_degree() const;
  std::vector<NeighborSample> fresh_samples();
  void update_neighbor_timing(NeighborInfo& n, const Message& msg);

  // clustering
  void enter_phase(Phase p);
  void on_election(const Message& msg);
  void on_connection(const Message& msg);
  void try_decide();
  bool is_neighbor(Address a) const;
  Rank rank_of(const NeighborInfo& n) const;
  Rank my_rank() const { return {frozen_degree_, addr_}; }
  void decide_bridges();

  // convergence
  void convergence_slot(int s);
  void on_claim(const Message& msg);
  void finish_convergence();

  // synchronization
  double window_start(int cycle) const;
  double sync_slot_start(int cycle, int m) const;
  /// `junior`: a local center that first takes time from a tied peer with a
  /// higher address, one transmission after that peer.
  double ch_tx_deadline(int cycle, int ch_degree, int ch_slot, bool junior = false) const;
  bool tied_junior(Address ch) const;  ///< CB view: a listed CH has a same-slot peer above it
  void start_cycle(int cycle);
  void on_sync(const Message& msg);
  void apply_upstream(const std::vector<Upstream>& ups);
  double rate_candidate(Address sender, double sender_time);
  void transmit_sync();
  void stay_awake_until(double logical);
  void sleep_if_idle();
  void monitor_deadline(std::int64_t ch_index);
  void schedule_byzantine(Address suspect);
  void on_byzantine(const Message& msg);
  int cluster_degree(Address ch) const;
  void finish_epoch();
  bool in_consensus() const {
    return phase_ == Phase::ConsensusSynchronization || phase_ == Phase::Idle;
  }
  Address source_ch() const;  ///< CB: CH it takes time from

  // identity and config
  Address addr_;
  ProtocolConfig cfg_;
  RadioConfig radio_cfg_;
  HardwareClock hw_;
  LogicalClock lc_;
  std::mt19937_64 rng_;
  SimTime last_advance_ = 0.0;
  SimTime boot_time_ = -1.0;

  // timers
  std::map<std::uint64_t, Pending> pending_;
  std::uint64_t next_tag_ = 1;

  // protocol state
  Phase phase_ = Phase::Discovery;
  int epoch_ = 0;
  std::map<Address, NeighborInfo> nbrs_;
  std::set<Address> blacklist_;
  int rounds_ = 0;
  bool synced_ = false;
  std::optional<double> transition_;  ///< logical start of election revelation
  Address transition_origin_;
  int frozen_degree_ = 0;
  Status status_ = Status::Undecided;
  Role role_ = Role::CM;
  Address ch_;
  std::vector<Address> ch_list_;
  std::map<std::pair<Address, Address>, Address> cbh_of_;  ///< per CH pair, as declared
  std::set<Address> verified_cbs_;                         ///< CH: bridges it accepted
  std::map<Address, std::vector<Address>> ch_neighbors_of_;  ///< CH -> its CH neighbours
  std::map<Address, std::set<Address>> legit_cbs_of_;        ///< CH -> declared CBs
  std::vector<Address> my_ch_neighbors_;
  std::map<std::pair<Address, Address>, std::set<Rank>> bridge_claims_;  ///< CH: verified
  std::set<Address> rejected_;
  // convergence
  std::optional<int> slot_;
  std::map<Address, SlotClaim> claims_;  ///< CH -> latest claim heard (direct or relayed)
  bool is_lc_ = false;
  int ch_degree_ = 0;
  // sync
  int cycle_ = -1;
  int consensus_count_ = 0;
  int hops_ = -1;
  Address lc_addr_;
  std::optional<double> epoch_start_;  ///< logical start of the first sync window
  std::optional<int> ch_slot_;         ///< CM: slot of its CH, learned from SYNC
  int ch_degree_of_ch_ = 0;
  bool cm_flood_ = false;
  std::map<std::int64_t, double> pending_wake_until_;
  bool synced_epoch_ = false;
  bool synced_cycle_ = false;
  std::map<Address, std::deque<TimePair>> history_;
  std::vector<Upstream> upstream_;
  int expected_up_ = 0;
  bool sync_sent_ = false;
  double awake_until_ = 0.0;  ///< logical
  bool awake_ = true;
  // pre-update state for byzantine correction
  std::optional<LogicalClock> pre_clock_;
  Address pre_sender_;
  std::map<Address, double> observed_;  ///< CH -> error seen this cycle
  std::map<Address, int> misses_;
  std::map<Address, ByzRound> byz_;
  // bookkeeping
  SimTime first_idle_ = -1.0;
  SimTime clustered_at_ = -1.0;
  bool assumption_violated_ = false;
};

/// NodeAgent adapter applying CsyncNode effects to the simulator.
class CsyncAgent : public NodeAgent {
 public:
  CsyncAgent(std::size_t index, CsyncNode node) : index_(index), node_(std::move(node)) {}
  void on_boot(Simulator& sim) override;
  void on_timer(Simulator& sim, std::uint64_t tag) override;
  void on_frame(Simulator& sim, const Message& msg) override;
  void stamp(Simulator& sim, Message& msg) override;
  void sync_clock(SimTime now) override { node_.advance_to(now); }
  CsyncNode& node() { return node_; }
  const CsyncNode& node() const { return node_; }

 private:
  void apply(Simulator& sim, Effects fx);
  std::size_t index_;
  CsyncNode node_;
};

}  // namespace csync
