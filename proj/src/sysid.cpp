#include "wadc/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "wadc/polynomial.hpp"

namespace wadc {

namespace {

constexpr double kRidge = 1e-8;  // fallback regularization on rank deficiency

/// Least squares via column-pivoted QR; ridge-regularized normal equations
/// when the matrix is rank deficient.
Eigen::VectorXd solve_ls(const Eigen::MatrixXd& x, const Eigen::VectorXd& rhs) {
  if (x.cols() == 0) return Eigen::VectorXd(0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() == x.cols()) return qr.solve(rhs);
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += kRidge;
  return gram.ldlt().solve(x.transpose() * rhs);
}

/// Predicted numerator contribution for one output: sum_p X_num[p] * b^{mp}.
Eigen::VectorXd num_contribution(const RegressorSet& r, int out_idx,
                                 const std::vector<Eigen::VectorXd>& nums) {
  const int q = static_cast<int>(r.inputs.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(r.window_n);
  for (int p = 0; p < q; ++p)
    acc += r.x_num_basis[p] * nums[static_cast<size_t>(out_idx) * q + p];
  return acc;
}

Eigen::VectorXd solve_denominator_multi(const std::vector<RegressorSet>& regs,
                                        const std::vector<Eigen::VectorXd>& nums) {
  const int k = regs.front().order_k;
  int rows = 0;
  for (const auto& r : regs) rows += r.window_n * static_cast<int>(r.outputs.size());
  Eigen::MatrixXd x(rows, k);
  Eigen::VectorXd rhs(rows);
  int at = 0;
  for (const auto& r : regs) {
    for (size_t m = 0; m < r.outputs.size(); ++m) {
      x.middleRows(at, r.window_n) = r.x_den_basis[m];
      rhs.segment(at, r.window_n) =
          num_contribution(r, static_cast<int>(m), nums) - r.x_his[m];
      at += r.window_n;
    }
  }
  return solve_ls(x, rhs);
}

std::vector<Eigen::VectorXd> solve_numerators_multi(const std::vector<RegressorSet>& regs,
                                                    const Eigen::VectorXd& den) {
  const auto& r0 = regs.front();
  const int k = r0.order_k;
  const int q = static_cast<int>(r0.inputs.size());
  const int n_out = static_cast<int>(r0.outputs.size());
  std::vector<Eigen::VectorXd> nums(static_cast<size_t>(n_out) * q);
  for (int m = 0; m < n_out; ++m) {
    int rows = 0;
    for (const auto& r : regs) rows += r.window_n;
    Eigen::MatrixXd x(rows, q * (k + 1));
    Eigen::VectorXd rhs(rows);
    int at = 0;
    for (const auto& r : regs) {
      for (int p = 0; p < q; ++p)
        x.block(at, p * (k + 1), r.window_n, k + 1) = r.x_num_basis[p];
      rhs.segment(at, r.window_n) = r.x_his[m] + r.x_den_basis[m] * den;
      at += r.window_n;
    }
    const Eigen::VectorXd sol = solve_ls(x, rhs);
    for (int p = 0; p < q; ++p)
      nums[static_cast<size_t>(m) * q + p] = sol.segment(p * (k + 1), k + 1);
  }
  return nums;
}

double stacked_residual(const std::vector<RegressorSet>& regs, const Eigen::VectorXd& den,
                        const std::vector<Eigen::VectorXd>& nums) {
  double ss = 0.0;
  for (const auto& r : regs)
    for (size_t m = 0; m < r.outputs.size(); ++m)
      ss += (r.x_his[m] + r.x_den_basis[m] * den -
             num_contribution(r, static_cast<int>(m), nums))
                .squaredNorm();
  return std::sqrt(ss);
}

}  // namespace

int ArxCommonDen::pair_index(MachineId output, MachineId input) const {
  for (size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].first == output && pairs[i].second == input) return static_cast<int>(i);
  return -1;
}

const Eigen::VectorXd& ArxCommonDen::numerator(MachineId output, MachineId input) const {
  const int i = pair_index(output, input);
  if (i < 0) throw std::out_of_range("ArxCommonDen: no such pair");
  return num[static_cast<size_t>(i)];
}

RegressorSet build_regressors(const MeasurementWindow& outputs,
                              const std::vector<ProbeSignal>& inputs, int order_k, int N) {
  const int t = outputs.length();
  const int k = order_k;
  if (k < 1) throw std::invalid_argument("build_regressors: order_k must be >= 1");
  if (N < 1) throw std::invalid_argument("build_regressors: N must be >= 1");
  if (t < N + k + 1)
    throw std::invalid_argument("build_regressors: window shorter than N + order_k + 1");
  for (const auto& p : inputs)
    if (p.values.size() != t)
      throw std::invalid_argument("build_regressors: probe length != window length");

  RegressorSet r;
  r.window_n = N;
  r.order_k = k;
  r.sample_j = t - 1;
  r.ts = outputs.ts;
  for (int c = 0; c < outputs.machines(); ++c) r.outputs.push_back(c + 1);

  // Row rr targets y[t-1-rr]; lags walk backwards from one sample earlier.
  for (int c = 0; c < outputs.machines(); ++c) {
    Eigen::VectorXd his(N);
    Eigen::MatrixXd den_lags(N, k);
    for (int rr = 0; rr < N; ++rr) {
      his[rr] = outputs.samples(t - 1 - rr, c);
      for (int i = 0; i < k; ++i) den_lags(rr, i) = outputs.samples(t - 2 - rr - i, c);
    }
    r.x_his.push_back(std::move(his));
    r.x_den_basis.push_back(std::move(den_lags));
  }

  std::vector<const ProbeSignal*> ordered;
  for (const auto& p : inputs) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const ProbeSignal* a, const ProbeSignal* b) { return a->machine < b->machine; });
  for (const ProbeSignal* p : ordered) {
    r.inputs.push_back(p->machine);
    Eigen::MatrixXd num_lags(N, k + 1);
    for (int rr = 0; rr < N; ++rr)
      for (int i = 0; i <= k; ++i) num_lags(rr, i) = p->values[t - 2 - rr - i];
    r.x_num_basis.push_back(std::move(num_lags));
  }
  return r;
}

Eigen::VectorXd solve_denominator(const RegressorSet& r,
                                  const std::vector<Eigen::VectorXd>& current_num) {
  return solve_denominator_multi({r}, current_num);
}

std::vector<Eigen::VectorXd> solve_numerators(const RegressorSet& r,
                                              const Eigen::VectorXd& den) {
  return solve_numerators_multi({r}, den);
}

ArxCommonDen identify(const std::vector<Experiment>& experiments, int order_k, int N,
                      const IdentifyOptions& opts) {
  if (experiments.empty()) throw std::invalid_argument("identify: no experiments");
  const int n_machines = experiments.front().outputs.machines();
  const double ts = experiments.front().outputs.ts;
  for (const auto& e : experiments) {
    if (e.outputs.machines() != n_machines)
      throw std::invalid_argument("identify: machine count differs across experiments");
    if (std::abs(e.outputs.ts - ts) > 1e-12)
      throw std::invalid_argument("identify: sample period differs across experiments");
  }

  // Union of probed machines; unprobed inputs in an experiment are zero.
  std::set<MachineId> input_set;
  for (const auto& e : experiments)
    for (const auto& p : e.inputs) input_set.insert(p.machine);
  if (input_set.empty()) throw std::invalid_argument("identify: no probe inputs");
  const std::vector<MachineId> global_inputs(input_set.begin(), input_set.end());
  const int q = static_cast<int>(global_inputs.size());

  std::vector<RegressorSet> regs;
  for (const auto& e : experiments) {
    std::vector<ProbeSignal> expanded;
    for (MachineId id : global_inputs) {
      ProbeSignal sig;
      sig.machine = id;
      sig.values = Eigen::VectorXd::Zero(e.outputs.length());
      for (const auto& p : e.inputs)
        if (p.machine == id) sig.values = p.values;
      expanded.push_back(std::move(sig));
    }
    regs.push_back(build_regressors(e.outputs, expanded, order_k, N));
  }

  ArxCommonDen model;
  model.order_k = order_k;
  model.ts = ts;
  for (int m = 1; m <= n_machines; ++m)
    for (MachineId p : global_inputs) model.pairs.emplace_back(m, p);

  std::vector<Eigen::VectorXd> nums;
  if (!opts.init_num.empty()) {
    if (opts.init_num.size() != model.pairs.size())
      throw std::invalid_argument("identify: init_num size != pair count");
    nums = opts.init_num;
  } else {
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(order_k + 1);
    b0[0] = 1e-3;
    nums.assign(model.pairs.size(), b0);
  }

  double best_fit = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_den;
  std::vector<Eigen::VectorXd> best_nums;
  int it = 0;
  for (it = 1; it <= opts.max_iter; ++it) {
    const Eigen::VectorXd den = solve_denominator_multi(regs, nums);
    nums = solve_numerators_multi(regs, den);
    const double fit = stacked_residual(regs, den, nums);
    if (fit < best_fit) {
      best_fit = fit;
      best_den = den;
      best_nums = nums;
    }
    if (best_fit <= opts.tol) break;
  }
  model.iterations = std::min(it, opts.max_iter);
  model.den = best_den;
  model.num = best_nums;
  model.fit = best_fit;
  model.converged = best_fit <= opts.tol;

  Eigen::VectorXd den_poly(order_k + 1);
  den_poly[0] = 1.0;
  den_poly.tail(order_k) = model.den;
  const Eigen::VectorXcd roots = poly_roots(den_poly);
  model.stable = true;
  for (Eigen::Index i = 0; i < roots.size(); ++i)
    if (std::abs(roots[i]) >= 1.0) model.stable = false;
  (void)q;
  return model;
}

ArxCommonDen identify(const MeasurementWindow& outputs,
                      const std::vector<ProbeSignal>& inputs, int order_k, int N,
                      const IdentifyOptions& opts) {
  return identify(std::vector<Experiment>{{outputs, inputs}}, order_k, N, opts);
}

Eigen::MatrixXd simulate_arx(const ArxCommonDen& model,
                             const std::vector<ProbeSignal>& inputs, int n_samples) {
  std::set<MachineId> out_set;
  for (const auto& pr : model.pairs) out_set.insert(pr.first);
  const std::vector<MachineId> outs(out_set.begin(), out_set.end());
  const int k = model.order_k;

  auto input_at = [&](MachineId id, int t) -> double {
    if (t < 0) return 0.0;
    for (const auto& p : inputs)
      if (p.machine == id) return (t < p.values.size()) ? p.values[t] : 0.0;
    return 0.0;
  };

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_samples, static_cast<int>(outs.size()));
  for (int t = 0; t < n_samples; ++t) {
    for (size_t mi = 0; mi < outs.size(); ++mi) {
      double v = 0.0;
      for (size_t h = 0; h < model.pairs.size(); ++h) {
        if (model.pairs[h].first != outs[mi]) continue;
        for (int i = 0; i <= k; ++i)
          v += model.num[h][i] * input_at(model.pairs[h].second, t - 1 - i);
      }
      for (int i = 1; i <= k; ++i)
        if (t - i >= 0) v -= model.den[i - 1] * y(t - i, static_cast<int>(mi));
      y(t, static_cast<int>(mi)) = v;
    }
  }
  return y;
}

}  // namespace wadc
