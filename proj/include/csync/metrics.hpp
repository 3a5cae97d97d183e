#pragma once

// Synchronization error sampling, the hop-count error bound, power summaries
// and CSV output.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csync/engine.hpp"

namespace csync {

enum class Relation : std::uint8_t { Neighbor, ToLc };
std::string_view to_string(Relation r);

struct ErrorSample {
  SimTime t = 0.0;
  Address node_a;
  Address node_b;
  double signed_error = 0.0;  ///< L_a - L_b
  Relation relation = Relation::Neighbor;
  int hops = 0;
};

struct BoundParams {
  int eta = 0;         ///< hops to the LC
  int tau = 0;         ///< slots between successive sync messages at a node
  double delta = 0.0;  ///< per-hop error, us
};

/// eta * tau * delta. Throws ConfigError unless every parameter is positive.
double hop_error_bound(const BoundParams& p);
/// Slots between syncs: idle slots plus the slots a message needs to cross
/// `max_hops` hops.
int sync_period_slots(int idle_slots, int max_hops);

/// What sampling needs from one node.
struct NodeSnapshot {
  Address addr;
  double logical = 0.0;
  bool measurable = false;  ///< node is in a phase where errors are meaningful
  std::optional<std::size_t> lc;
  int hops = -1;
};

/// Neighbor errors in both directions for every measurable link, plus the
/// error of each measurable node to its LC.
std::vector<ErrorSample> sample_errors(SimTime t, std::span<const NodeSnapshot> nodes,
                                       const TopologyGraph& topo);

/// Running mean, deviation and extremes.
class RunningStats {
 public:
  void add(double x);
  std::uint64_t count() const { return n_; }
  double mean() const { return n_ ? sum_ / static_cast<double>(n_) : 0.0; }
  double mean_abs() const { return n_ ? abs_ / static_cast<double>(n_) : 0.0; }
  /// Population standard deviation.
  double sd() const;
  double max_abs() const { return max_abs_; }

 private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0, sumsq_ = 0.0, abs_ = 0.0, max_abs_ = 0.0;
};

/// Streams samples into per-node and network statistics.
class ErrorAccumulator {
 public:
  ErrorAccumulator(const TopologyGraph& topo, int tau, double delta);
  void add(std::span<const ErrorSample> samples);
  void add(const ErrorSample& s);

  const RunningStats& neighbor(std::size_t i) const { return nbr_.at(i); }
  const RunningStats& to_lc(std::size_t i) const { return lc_.at(i); }
  const RunningStats& network() const { return net_; }
  int max_hops(std::size_t i) const { return hops_.at(i); }
  /// Samples whose |error to LC| exceeded the bound for their hop count.
  std::uint64_t bound_violations() const { return violations_; }
  std::uint64_t samples() const { return samples_; }
  int tau() const { return tau_; }
  double delta() const { return delta_; }

 private:
  const TopologyGraph* topo_;
  int tau_;
  double delta_;
  std::vector<RunningStats> nbr_, lc_;
  std::vector<int> hops_;
  RunningStats net_;
  std::uint64_t violations_ = 0;
  std::uint64_t samples_ = 0;
};

struct NodeRow {
  Address node;
  std::string role;
  double mean_error = 0.0;      ///< signed, over this node's neighbor samples
  double sd_error = 0.0;
  double mean_abs_error = 0.0;
  double max_abs_to_lc = 0.0;
  int hops = -1;
  double bound = 0.0;           ///< error bound for the node's max hop count
  double mean_power_mw = 0.0;
  double radio_on_fraction = 0.0;
};

struct Report {
  std::string protocol;
  std::string topology;
  std::uint64_t seed = 0;
  bool valid = false;
  SimTime window_start = 0.0;
  SimTime window_end = 0.0;
  std::vector<NodeRow> rows;
  // aggregate
  double mean_error = 0.0;
  double sd_error = 0.0;       ///< pooled over every sample
  double sd_node_means = 0.0;  ///< spread of per-node mean |error|
  double mean_abs_error = 0.0;
  double mean_power_mw = 0.0;
  double radio_on_fraction = 0.0;
  std::uint64_t bound_violations = 0;
  std::uint64_t samples = 0;
};

/// Window power of one node: energy accrued between `start` and `end` ledgers.
struct WindowPower {
  double mean_mw = 0.0;
  double on_fraction = 0.0;
};
WindowPower window_power(const PowerLedger& start, const PowerLedger& end);

/// Builds the report. `start_ledgers` are snapshots at window start, `roles`
/// one label per node.
Report summarize(const std::string& protocol, const std::string& topology, std::uint64_t seed,
                 SimTime window_start, SimTime window_end, const TopologyGraph& topo,
                 const ErrorAccumulator& acc, std::span<const PowerLedger> start_ledgers,
                 std::span<const PowerLedger> end_ledgers, std::span<const std::string> roles);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);
inline constexpr std::string_view kReportHeader =
    "protocol,topology,seed,node,role,mean_error_us,sd_error_us,mean_abs_error_us,"
    "max_abs_to_lc_us,hops,bound_us,mean_power_mW,radio_on_fraction";
/// Header, one row per node, then an aggregate row with node `*`.
void write_csv(std::ostream& out, const Report& r, bool header = true);
/// Aggregate row only (sweep files).
void write_aggregate_row(std::ostream& out, const Report& r);

}  // namespace csync
