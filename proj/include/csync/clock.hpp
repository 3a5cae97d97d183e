#pragma once

// Hardware oscillator model (32 kHz crystal divided to 512 Hz, DCO divided to
// 524288 Hz) and the logical clock built on top of it.

#include <cstdint>
#include <span>
#include <vector>

#include "csync/types.hpp"

namespace csync {

inline constexpr double kCrystalHz = 512.0;
inline constexpr double kDcoHz = 524288.0;
/// DCO ticks expected per crystal calibration window (4 timer-A ticks).
inline constexpr std::int64_t kCalibrationTicks = 4096;
inline constexpr std::int64_t kCalibrationCrystalTicks = 4;
/// Resolution of one disciplined hardware tick, about 1.9 us.
inline constexpr double kTickMicros = 1e6 / kDcoHz;

/// Multiplicative DCO frequency error as a function of true time.
/// Constant by default; the optional sinusoid stands in for temperature swings.
struct DcoDriftModel {
  double base = 1.0;
  double amplitude = 0.0;
  double period_us = 0.0;
  double phase = 0.0;

  /// Clamped to the +-20% band the DCO is specified for.
  double at(SimTime t) const;
};

/// Timer-B drift factor: estimated over actual DCO ticks in a calibration
/// window. Throws InvariantViolation when the DCO produced no ticks.
double dco_drift_factor(std::int64_t tb_estimated, std::int64_t tb_actual);

class HardwareClock {
 public:
  HardwareClock() = default;
  HardwareClock(double crystal_ppm, DcoDriftModel drift);

  /// Advances by `sim_dt` us of true time; returns the raw DCO ticks elapsed.
  std::int64_t advance(SimTime sim_dt);

  std::int64_t dco_ticks() const { return dco_ticks_; }
  std::int64_t crystal_ticks() const { return crystal_ticks_; }
  /// DCO ticks disciplined by the crystal (the node's h(t)).
  std::int64_t ticks() const { return ticks_; }
  /// h(t) expressed in microseconds of nominal tick length.
  double micros() const { return static_cast<double>(ticks_) * kTickMicros; }
  double drift_factor() const { return factor_; }
  double crystal_ppm() const { return crystal_ppm_; }
  const DcoDriftModel& drift_model() const { return drift_; }
  /// True time consumed since power-on.
  SimTime elapsed() const { return elapsed_; }
  /// Disciplined ticks per microsecond of true time (for timer planning).
  double nominal_rate() const { return kDcoHz / 1e6 * (1.0 + crystal_ppm_ * 1e-6); }

 private:
  void step(SimTime dt);

  double crystal_ppm_ = 0.0;
  DcoDriftModel drift_;
  SimTime elapsed_ = 0.0;
  double dco_exact_ = 0.0;
  double crystal_exact_ = 0.0;
  std::int64_t dco_ticks_ = 0;
  std::int64_t crystal_ticks_ = 0;
  // calibration window state
  std::int64_t window_index_ = 0;
  double window_dco_start_ = 0.0;
  std::int64_t window_base_ = 0;
  double factor_ = 1.0;
  std::int64_t ticks_ = 0;
};

/// Logical clock: L = integral of rate over hardware time, plus offset.
/// Hardware time is passed in microseconds (ticks * kTickMicros).
class LogicalClock {
 public:
  LogicalClock() = default;
  LogicalClock(double rate, double offset) : rate_(rate), offset_(offset) {}

  double rate() const { return rate_; }
  double offset() const { return offset_; }
  /// Rate-only part of L at the last accumulation point.
  double integrated() const { return integrated_; }
  double last_hw() const { return last_hw_; }

  /// L at hardware time `hw_us` (must not precede the last accumulation).
  double now(double hw_us) const;
  /// Rate-only progress at `hw_us` (L without offset).
  double integrated_at(double hw_us) const;

  /// Folds elapsed hardware time into the integral.
  void accumulate(double hw_us);
  /// New rate takes effect from `hw_us` onwards.
  void set_rate(double rate, double hw_us);
  void adjust_offset(double delta) { offset_ += delta; }
  /// Shifts the offset so that now(hw_us) == target.
  void step_to(double target, double hw_us);

  friend bool operator==(const LogicalClock&, const LogicalClock&) = default;

 private:
  double rate_ = 1.0;
  double offset_ = 0.0;
  double integrated_ = 0.0;
  double last_hw_ = 0.0;
};

/// L at hardware time `hw_us` under piecewise-constant rate.
double logical_now(const LogicalClock& lc, double hw_us);

struct NeighborSample {
  Address neighbor_id;
  double neighbor_logical = 0.0;  ///< L_j, aligned to the update instant
  double neighbor_rate = 1.0;     ///< l_j expressed in the owner's hardware units
  double rx_hw_time = 0.0;        ///< owner's hardware time at reception, us
};

/// Neighbor averaging of rate and offset over distinct neighbors.
/// `own_logical` is L_i at the update instant `hw_us`.
LogicalClock average_update(LogicalClock lc, double own_logical,
                            std::span<const NeighborSample> samples, double hw_us);

/// One (sender logical, receiver hardware) observation of a time message.
struct TimePair {
  double sender_logical = 0.0;
  double receiver_hw = 0.0;
};

/// Sender logical progress per receiver hardware unit between two receptions.
/// Throws InvariantViolation when both receptions share a hardware timestamp.
double relative_rate(TimePair current, TimePair previous);

/// Rate correction relative to the local center: l_rs / l_r.
double lc_referenced_rate(double l_rs, double l_r);

}  // namespace csync
