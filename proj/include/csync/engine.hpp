#pragma once

// Deterministic discrete-event core: event queue, shared broadcast channel with
// a CSMA-CA abstraction and collisions, per-node radio power accounting.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "csync/message.hpp"
#include "csync/types.hpp"

namespace csync {

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

/// Node set with either geometric (position + range) or explicit links.
class TopologyGraph {
 public:
  explicit TopologyGraph(double comm_range = 30.0) : comm_range_(comm_range) {}

  std::size_t add_node(Address addr, std::optional<Position> pos = std::nullopt);
  /// Explicit bidirectional link. Graphs with explicit links ignore positions
  /// for reachability.
  void add_link(std::size_t a, std::size_t b);
  /// Directed link override (fault injection only).
  void set_link_up(std::size_t from, std::size_t to, bool up);

  std::size_t size() const { return addrs_.size(); }
  Address address(std::size_t i) const { return addrs_.at(i); }
  std::optional<std::size_t> index_of(Address a) const;
  const std::optional<Position>& position(std::size_t i) const { return pos_.at(i); }
  double comm_range() const { return comm_range_; }
  bool explicit_links() const { return explicit_; }

  /// Receivers of a transmission from `src`, with propagation distance in m
  /// (0 for explicit graphs). `power_mult` scales range; on explicit graphs it
  /// extends reach to floor(power_mult) hops.
  std::vector<std::pair<std::size_t, double>> reach(std::size_t src, double power_mult) const;
  /// Direct (power 1) neighbor indices.
  std::vector<std::size_t> neighbors(std::size_t i) const;
  bool linked(std::size_t a, std::size_t b) const;

 private:
  bool link_down(std::size_t from, std::size_t to) const;

  double comm_range_;
  bool explicit_ = false;
  std::vector<Address> addrs_;
  std::vector<std::optional<Position>> pos_;
  std::vector<std::vector<std::size_t>> adj_;
  std::unordered_map<Address, std::size_t> index_;
  std::map<std::pair<std::size_t, std::size_t>, bool> overrides_;
  mutable std::vector<std::optional<std::vector<std::pair<std::size_t, double>>>> cache_;
};

enum class EventKind : std::uint8_t {
  FrameDelivery,
  Timer,
  FaultActivation,
  ScenarioControl,
  CsmaAttempt,
  TxEnd,
  Boot,
};

struct SimEvent {
  SimTime fire_time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Timer;
  std::size_t node = 0;
  std::uint64_t payload = 0;  ///< timer tag, frame id or control id
};

/// Min-queue over (fire_time, seq).
class EventQueue {
 public:
  /// Assigns the sequence number. Throws InvariantViolation for past events.
  void schedule(SimEvent ev);
  bool empty() const { return heap_.empty(); }
  const SimEvent& top() const { return heap_.top(); }
  SimEvent pop();
  SimTime now() const { return now_; }
  /// Moves the clock forward without an event (end of a run window).
  void advance_to(SimTime t);
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  SimTime now_ = 0.0;
};

enum class RadioState : std::uint8_t { Tx, Rx, IdleListen, Sleep };
inline constexpr std::size_t kRadioStates = 4;
std::string_view to_string(RadioState s);

struct RadioConfig {
  double tx_mw = 52.2;
  double rx_mw = 56.4;
  double listen_mw = 56.4;
  double sleep_mw = 0.003;
  int frame_bytes = 64;
  double bitrate_bps = 250000.0;
  double backoff_unit_us = 320.0;
  int initial_backoff_slots = 8;  ///< first attempt delayed by U{0..n-1} units
  int max_backoff_slots = 8;      ///< retry backoff U{1..n} units
  int max_retries = 5;
  double propagation_us_per_m = 0.3 / 100.0;
  double fixed_propagation_us = 0.3;

  double airtime_us() const { return frame_bytes * 8.0 / bitrate_bps * 1e6; }
  double power_mw(RadioState s) const;
  /// Airtime plus worst-case CSMA backoff.
  double transmission_time_us() const {
    return airtime_us() + max_backoff_slots * backoff_unit_us;
  }
  friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

/// Per-node accumulated radio time and energy.
struct PowerLedger {
  std::array<double, kRadioStates> duration_us{};
  std::array<double, kRadioStates> energy_uj{};

  /// Adds `dt` us in `state` at `mw` milliwatts.
  void accrue(RadioState state, double dt, double mw);
  double total_us() const;
  double total_uj() const;
  double mean_power_mw() const;
  double radio_on_fraction() const;
  double tx_uj() const { return energy_uj[0]; }
  double rx_uj() const { return energy_uj[1]; }
  double idle_listen_uj() const { return energy_uj[2]; }
  double sleep_uj() const { return energy_uj[3]; }
};

/// Append-only `t_us,node,event_kind,detail` record stream.
class Trace {
 public:
  explicit Trace(std::ostream* out = nullptr) : out_(out) {}
  void record(SimTime t, Address node, std::string_view kind, std::string_view detail);
  std::size_t lines() const { return lines_; }
  /// FNV-1a digest of every emitted byte (maintained even without a sink).
  std::uint64_t digest() const { return digest_; }
  static constexpr std::string_view kHeader = "t_us,node,event_kind,detail";

 private:
  std::ostream* out_;
  std::size_t lines_ = 0;
  std::uint64_t digest_ = 1469598103934665603ull;
};

class Simulator;

/// Protocol endpoint hosted by the simulator.
class NodeAgent {
 public:
  virtual ~NodeAgent() = default;
  virtual void on_boot(Simulator& sim) = 0;
  virtual void on_timer(Simulator& sim, std::uint64_t tag) = 0;
  virtual void on_frame(Simulator& sim, const Message& msg) = 0;
  /// MAC-layer timestamping at the instant the frame leaves the radio.
  virtual void stamp(Simulator& sim, Message& msg) = 0;
  /// Brings local clocks to the current simulation time.
  virtual void sync_clock(SimTime now) = 0;
};

/// Outgoing-frame adjustments computed by fault injection.
struct TxBehavior {
  bool drop = false;
  double time_bias_us = 0.0;
  double power_mult = 1.0;
};

/// Hook consulted for every transmission (resilience module installs one).
class TxFilter {
 public:
  virtual ~TxFilter() = default;
  virtual TxBehavior on_transmit(Simulator& sim, std::size_t node, const Message& msg) = 0;
};

class Simulator {
 public:
  Simulator(TopologyGraph topo, RadioConfig radio, std::uint64_t seed, Trace* trace = nullptr);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Takes ownership; `boot_at` is the node's power-on time.
  void attach(std::size_t node, std::unique_ptr<NodeAgent> agent, SimTime boot_at);
  void set_tx_filter(TxFilter* filter) { filter_ = filter; }

  void schedule(SimEvent ev) { queue_.schedule(ev); }
  void set_timer(std::size_t node, SimTime at, std::uint64_t tag);
  void schedule_control(SimTime at, std::uint64_t id, std::size_t node = 0);

  /// Queues a broadcast subject to CSMA-CA. Unacknowledged.
  void broadcast(std::size_t node, Message msg);
  void set_radio_state(std::size_t node, RadioState state);
  RadioState radio_state(std::size_t node) const;

  /// Processes events up to and including `t_end`, then closes the ledgers.
  void run_until(SimTime t_end);
  /// Processes a single event; false once the queue is empty.
  bool step();

  SimTime now() const { return queue_.now(); }
  const TopologyGraph& topology() const { return topo_; }
  const RadioConfig& radio() const { return radio_; }
  NodeAgent* agent(std::size_t node) { return nodes_.at(node).agent.get(); }
  const NodeAgent* agent(std::size_t node) const { return nodes_.at(node).agent.get(); }
  const PowerLedger& ledger(std::size_t node) const { return nodes_.at(node).ledger; }
  /// Resets every node's ledger from now on (measurement window start).
  void reset_ledgers();
  /// Accrues every ledger up to now.
  void flush_ledgers();
  std::mt19937_64& rng(std::size_t node) { return nodes_.at(node).rng; }
  void trace(std::size_t node, std::string_view kind, std::string_view detail);
  Trace* tracer() { return trace_; }

  using ControlHandler = std::function<void(Simulator&, std::uint64_t id, std::size_t node)>;
  void on_control(ControlHandler h) { control_ = std::move(h); }
  using Observer = std::function<void(Simulator&)>;
  /// Called after every processed event.
  void set_observer(Observer o) { observer_ = std::move(o); }

  struct Stats {
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t collisions = 0;
    std::uint64_t csma_drops = 0;
    std::uint64_t filtered = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  struct Reception {
    std::uint64_t frame = 0;
    SimTime start = 0.0;
    SimTime end = 0.0;
    bool corrupted = false;
  };
  struct NodeSlot {
    std::unique_ptr<NodeAgent> agent;
    bool booted = false;
    RadioState base = RadioState::Sleep;  ///< Sleep or IdleListen
    SimTime tx_until = -1.0;
    RadioState effective = RadioState::Sleep;
    SimTime since = 0.0;
    PowerLedger ledger;
    std::vector<Reception> incoming;
    std::mt19937_64 rng;
  };
  struct Pending {
    std::size_t node = 0;
    Message msg;
    int retries = 0;
    std::size_t refs = 0;  ///< outstanding deliveries once on air
    double power_mult = 1.0;
  };

  void dispatch(const SimEvent& ev);
  void attempt(std::uint64_t frame_id);
  void transmit(std::uint64_t frame_id);
  void deliver(std::size_t node, std::uint64_t frame_id);
  bool channel_busy(std::size_t node) const;
  void refresh(std::size_t node);
  void corrupt_incoming(std::size_t node);

  TopologyGraph topo_;
  RadioConfig radio_;
  Trace* trace_;
  TxFilter* filter_ = nullptr;
  EventQueue queue_;
  std::vector<NodeSlot> nodes_;
  std::unordered_map<std::uint64_t, Pending> frames_;
  std::uint64_t next_frame_ = 1;
  std::mt19937_64 channel_rng_;
  ControlHandler control_;
  Observer observer_;
  Stats stats_;
};

}  // namespace csync
