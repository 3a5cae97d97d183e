#pragma once

// Scenario files, canonical topologies and run orchestration.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csync/gtsp.hpp"
#include "csync/metrics.hpp"
#include "csync/protocol.hpp"
#include "csync/resilience.hpp"

namespace csync {

struct ClockConfig {
  double drift_min = 0.9;  ///< DCO base factor drawn from [drift_min, drift_max]
  double drift_max = 1.1;
  double ppm = 40.0;  ///< crystal error drawn from [-ppm, ppm]
  double drift_amplitude = 0.0;
  double drift_period = 600e6;
  friend bool operator==(const ClockConfig&, const ClockConfig&) = default;
};

/// Fault entry as written in the file; the target may be a topology label
/// ("CH2") or a hex address.
struct FaultEntry {
  std::string target;
  FaultKind kind = FaultKind::FailStop;
  double start = 0.0;
  double end = std::numeric_limits<double>::infinity();
  double magnitude = 0.0;
  std::vector<std::string> colluders;
  friend bool operator==(const FaultEntry&, const FaultEntry&) = default;
};

struct Scenario {
  std::string name = "scenario";
  std::string topology = "dense";  ///< dense|sparse|full|chain13|three_cluster|file:<path>
  int nodes = 0;                   ///< 0 = generator default
  std::string protocol = "csync";  ///< csync|gtsp
  double duration = 1800e6;
  std::uint64_t seed = 1;
  double boot_spread = 1e6;
  double comm_range = 30.0;
  double sample_interval = 200e3;
  bool trace = true;
  std::string output_dir = "out";
  ClockConfig clock;
  ProtocolConfig protocol_config;
  GtspConfig gtsp;
  RadioConfig radio;
  std::vector<FaultEntry> faults;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline constexpr std::string_view kScenarioHeader = "csync-scenario 1";

/// Throws ConfigError with the offending line and field.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string serialize(const Scenario& s);
/// `key=value` with a dotted key, as on the command line.
void apply_override(Scenario& s, std::string_view assignment);
/// Every top-level dotted key, in file order.
std::vector<std::string> scenario_keys();

struct GeneratedTopology {
  TopologyGraph graph;
  std::map<std::string, std::size_t> labels;
};

/// Throws ConfigError for an unknown kind or node count outside [2, 200].
GeneratedTopology generate_topology(const std::string& kind, int n, std::uint64_t seed,
                                    double comm_range = 30.0);
/// `node <addr> [x y] [label]`, `link <a> <b>`, `range <m>` lines; addresses are
/// decimal or 0x-prefixed hex.
GeneratedTopology load_topology_file(const std::string& path, double comm_range);
bool connected(const TopologyGraph& g);

/// Resolves a label or hex address against the topology.
Address resolve_target(const GeneratedTopology& t, const std::string& target);
std::vector<FaultSpec> resolve_faults(const Scenario& s, const GeneratedTopology& t);

/// Full config check, including topology generation and fault targets.
void validate(const Scenario& s);

/// One deterministic simulation of a scenario.
class ScenarioRun {
 public:
  ScenarioRun(const Scenario& s, std::ostream* trace_out = nullptr,
              std::optional<GeneratedTopology> topo = std::nullopt);
  ~ScenarioRun();
  ScenarioRun(const ScenarioRun&) = delete;
  ScenarioRun& operator=(const ScenarioRun&) = delete;

  void run() { run_until(scenario_.duration); }
  void run_until(SimTime t);

  const Scenario& scenario() const { return scenario_; }
  const GeneratedTopology& topology() const { return topo_; }
  Simulator& sim() { return *sim_; }
  const Trace& trace() const { return trace_; }
  std::size_t size() const { return topo_.graph.size(); }
  bool is_csync() const { return scenario_.protocol == "csync"; }
  CsyncNode& csync(std::size_t i);
  GtspNode& gtsp(std::size_t i);
  double logical(std::size_t i);
  std::vector<NodeSnapshot> snapshot();
  /// Called at every sampling instant, inside or outside the window.
  void on_sample(std::function<void(SimTime, std::span<const NodeSnapshot>)> f) {
    hook_ = std::move(f);
  }

  std::optional<SimTime> window_start() const { return window_start_; }
  const ErrorAccumulator& errors() const { return *acc_; }
  Report report() const;
  std::string role_label(std::size_t i);
  const FaultInjector* injector() const { return injector_.get(); }
  bool assumption_violated() const { return !assumption_issue_.empty(); }
  const std::string& assumption_issue() const { return assumption_issue_; }
  /// Latest first-CC entry over all nodes, or nullopt if some node never clustered.
  std::optional<SimTime> clustering_complete() const;

 private:
  void sample();
  void start_window();
  void check_assumptions();

  Scenario scenario_;
  GeneratedTopology topo_;
  Trace trace_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<FaultInjector> injector_;
  std::unique_ptr<ErrorAccumulator> acc_;
  std::vector<FaultSpec> faults_;
  std::vector<PowerLedger> start_ledgers_;
  std::optional<SimTime> window_start_;
  std::vector<SimTime> first_clustered_;
  std::vector<std::string> last_roles_;  ///< role seen in the latest consensus phase
  std::function<void(SimTime, std::span<const NodeSnapshot>)> hook_;
  std::string assumption_issue_;
  bool checked_ = false;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInvariant = 3, kExitAssumption = 4 };

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  Report report;
  std::uint64_t trace_digest = 0;
  std::size_t trace_lines = 0;
  std::string trace_path;
  std::string report_path;
};

/// Output directory: CSYNC_OUTPUT_DIR if set, else the scenario's.
std::string output_dir(const Scenario& s);
/// Runs and writes trace and report files when `write_files`.
RunResult run_scenario(const Scenario& s, bool write_files = true);
/// Seeds seed..seed+n-1 over `parallel` threads; writes `<name>_sweep.csv`.
std::vector<RunResult> sweep(const Scenario& s, int seeds, int parallel, bool write_files = true);

}  // namespace csync
