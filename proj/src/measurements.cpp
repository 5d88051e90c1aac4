#include "wadc/measurements.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wadc {

SampleStream::SampleStream(int machines, double ts, int capacity, double start_time)
    : machines_(machines), ts_(ts), capacity_(capacity), start_time_(start_time) {
  if (machines < 1) throw std::invalid_argument("SampleStream: machines must be >= 1");
  if (capacity < 1) throw std::invalid_argument("SampleStream: capacity must be >= 1");
  if (ts <= 0.0) throw std::invalid_argument("SampleStream: ts must be > 0");
  buffer_.setZero(capacity_, machines_);
}

void SampleStream::append(const Eigen::MatrixXd& new_rows) {
  if (new_rows.cols() != machines_)
    throw std::invalid_argument("SampleStream::append: column count mismatch");
  if (!new_rows.allFinite())
    throw std::invalid_argument("SampleStream::append: non-finite sample");
  for (Eigen::Index r = 0; r < new_rows.rows(); ++r) {
    const int slot = (head_ + count_) % capacity_;
    buffer_.row(slot) = new_rows.row(r);
    if (count_ < capacity_)
      ++count_;
    else
      head_ = (head_ + 1) % capacity_;  // overwrote the oldest row
  }
  total_rows_ += new_rows.rows();
}

MeasurementWindow SampleStream::window(int n) const {
  if (n < 1 || n > count_)
    throw std::out_of_range("SampleStream::window: insufficient history");
  MeasurementWindow w;
  w.ts = ts_;
  w.samples.resize(n, machines_);
  // Last n rows, oldest first.
  for (int i = 0; i < n; ++i) {
    const int slot = (head_ + count_ - n + i) % capacity_;
    w.samples.row(i) = buffer_.row(slot);
  }
  w.start_time = start_time_ + static_cast<double>(total_rows_ - n) * ts_;
  return w;
}

double SampleStream::latest_time() const {
  return start_time_ + static_cast<double>(total_rows_ - 1) * ts_;
}

std::optional<DisturbanceEvent> detect_disturbance(const MeasurementWindow& window,
                                                   double threshold) {
  if (threshold <= 0.0)
    throw std::invalid_argument("detect_disturbance: threshold must be > 0");
  const double n = static_cast<double>(window.length());
  double worst = 0.0;
  for (int c = 0; c < window.machines(); ++c) {
    const double rms = std::sqrt(window.samples.col(c).squaredNorm() / n);
    if (rms > worst) worst = rms;
  }
  if (worst <= threshold) return std::nullopt;
  DisturbanceEvent ev;
  ev.time = window.start_time + (n - 1.0) * window.ts;
  ev.magnitude = worst;
  ev.kind = "threshold";
  return ev;
}

Eigen::VectorXd prbs(int n_samples, double ts, double amplitude, double chip_period,
                     std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("prbs: n_samples must be >= 1");
  if (ts <= 0.0 || chip_period <= 0.0)
    throw std::invalid_argument("prbs: periods must be > 0");
  Rng rng(seed);
  const int chip_samples = std::max(1, static_cast<int>(std::lround(chip_period / ts)));
  Eigen::VectorXd u(n_samples);
  double level = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    if (i % chip_samples == 0) level = rng.bit() ? amplitude : -amplitude;
    u[i] = level;
  }
  return u;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void write_window_csv(const std::string& path, const MeasurementWindow& window) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "time";
  for (int c = 1; c <= window.machines(); ++c) f << ",gen" << c;
  f << "\n";
  f.precision(17);
  for (int r = 0; r < window.length(); ++r) {
    f << window.start_time + r * window.ts;
    for (int c = 0; c < window.machines(); ++c) f << "," << window.samples(r, c);
    f << "\n";
  }
}

MeasurementWindow read_window_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time")
    throw std::runtime_error("bad CSV header (want time,gen1,...): " + path);
  const int m = static_cast<int>(header.size()) - 1;

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != m + 1)
      throw std::runtime_error("ragged CSV row in " + path);
    times.push_back(std::stod(cells[0]));
    for (int c = 1; c <= m; ++c) values.push_back(std::stod(cells[c]));
  }
  const int n = static_cast<int>(times.size());
  if (n < 2) throw std::runtime_error("CSV needs at least 2 samples: " + path);

  MeasurementWindow w;
  w.start_time = times[0];
  w.ts = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  w.samples.resize(n, m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) w.samples(r, c) = values[static_cast<size_t>(r) * m + c];
  return w;
}

void write_probe_csv(const std::string& path, const std::vector<ProbeSignal>& probes,
                     double ts, double start_time) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "time";
  for (const auto& p : probes) f << ",u" << p.machine;
  f << "\n";
  f.precision(17);
  const int n = probes.empty() ? 0 : static_cast<int>(probes.front().values.size());
  for (const auto& p : probes)
    if (p.values.size() != n) throw std::runtime_error("probe length mismatch");
  for (int r = 0; r < n; ++r) {
    f << start_time + r * ts;
    for (const auto& p : probes) f << "," << p.values[r];
    f << "\n";
  }
}

std::vector<ProbeSignal> read_probe_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time")
    throw std::runtime_error("bad probe CSV header (want time,u1,...): " + path);
  std::vector<ProbeSignal> probes(header.size() - 1);
  for (size_t c = 1; c < header.size(); ++c) {
    if (header[c].size() < 2 || header[c][0] != 'u')
      throw std::runtime_error("bad probe column name: " + header[c]);
    probes[c - 1].machine = std::stoi(header[c].substr(1));
  }
  std::vector<std::vector<double>> cols(probes.size());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::runtime_error("ragged CSV row in " + path);
    for (size_t c = 1; c < cells.size(); ++c) cols[c - 1].push_back(std::stod(cells[c]));
  }
  for (size_t c = 0; c < probes.size(); ++c)
    probes[c].values = Eigen::Map<Eigen::VectorXd>(cols[c].data(),
                                                   static_cast<Eigen::Index>(cols[c].size()));
  return probes;
}

}  // namespace wadc
