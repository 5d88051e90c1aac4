#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "wadc/rng.hpp"

namespace wadc {

/// Generator label, 1-based as in single-line diagrams.
using MachineId = int;

/// Immutable snapshot of per-machine speed-deviation samples.
/// Rows are time (oldest first), columns are machines; entries are
/// speed deviations from rated, in per unit.
struct MeasurementWindow {
  double ts = 0.01;           // sample period (s)
  double start_time = 0.0;    // time of the first row (s)
  Eigen::MatrixXd samples;    // n_samples x n_machines

  int length() const { return static_cast<int>(samples.rows()); }
  int machines() const { return static_cast<int>(samples.cols()); }
};

/// Control-input record for one machine, sampled on the same clock as the
/// paired MeasurementWindow.
struct ProbeSignal {
  MachineId machine = 1;
  Eigen::VectorXd values;  // per-unit control input, one entry per sample
};

struct DisturbanceEvent {
  double time = 0.0;       // seconds
  double magnitude = 0.0;  // max-over-machines windowed RMS (pu)
  std::string kind;        // fault / load-drop / probe-start
};

/// Fixed-capacity ring buffer of measurement rows. Single writer; extracted
/// windows are value copies and never alias the buffer.
class SampleStream {
 public:
  explicit SampleStream(int machines, double ts = 0.01, int capacity = 6000,
                        double start_time = 0.0);

  /// Appends rows (one per sample) and evicts the oldest beyond capacity.
  void append(const Eigen::MatrixXd& new_rows);

  /// Most recent n rows as an immutable snapshot.
  MeasurementWindow window(int n) const;

  int size() const { return count_; }
  int capacity() const { return capacity_; }
  int machines() const { return machines_; }
  double ts() const { return ts_; }
  /// Time of the most recent row.
  double latest_time() const;

 private:
  int machines_;
  double ts_;
  int capacity_;
  double start_time_;
  long long total_rows_ = 0;  // rows ever appended, for timestamps
  int count_ = 0;
  int head_ = 0;  // index of the oldest stored row
  Eigen::MatrixXd buffer_;
};

/// Fires iff max over machines of windowed RMS exceeds the threshold.
/// Magnitude is that RMS; time is the window end.
std::optional<DisturbanceEvent> detect_disturbance(const MeasurementWindow& window,
                                                   double threshold);

/// Pseudo-random binary excitation: +/- amplitude held for chip_period
/// seconds, seeded. Length in samples at period ts.
Eigen::VectorXd prbs(int n_samples, double ts, double amplitude, double chip_period,
                     std::uint64_t seed);

/// CSV with header time,gen1,...,genm. Probe variant uses u1,...,up.
void write_window_csv(const std::string& path, const MeasurementWindow& window);
MeasurementWindow read_window_csv(const std::string& path);
void write_probe_csv(const std::string& path, const std::vector<ProbeSignal>& probes,
                     double ts, double start_time = 0.0);
std::vector<ProbeSignal> read_probe_csv(const std::string& path);

}  // namespace wadc
