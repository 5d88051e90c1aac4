#include "wadc/modal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace wadc {

namespace {

/// B(z) in positive powers: b0 z^k + b1 z^(k-1) + ... + bk.
Eigen::VectorXd numerator_poly(const Eigen::VectorXd& b) { return b; }

/// z^k + a1 z^(k-1) + ... + ak from the stored a1..ak.
Eigen::VectorXd denominator_poly(const Eigen::VectorXd& den) {
  Eigen::VectorXd d(den.size() + 1);
  d[0] = 1.0;
  d.tail(den.size()) = den;
  return d;
}

double mode_frequency(Cplx s) { return std::abs(s.imag()) / (2.0 * M_PI); }

double mode_damping(Cplx s) {
  const double mag = std::abs(s);
  return (mag > 0.0) ? -s.real() / mag : 0.0;
}

}  // namespace

Cplx ModalDecomposition::eval_pair(int pair_idx, Cplx z) const {
  Cplx acc(direct[static_cast<size_t>(pair_idx)], 0.0);
  for (size_t j = 0; j < z_poles.size(); ++j)
    acc += residues[static_cast<size_t>(pair_idx)][j] / (z - z_poles[j]);
  return acc;
}

ModalDecomposition decompose(const ArxCommonDen& model, double cluster_tol) {
  if (model.den.size() == 0) throw std::invalid_argument("decompose: empty denominator");
  ModalDecomposition d;
  d.pairs = model.pairs;
  d.ts = model.ts;

  const Eigen::VectorXd den = denominator_poly(model.den);
  const Eigen::VectorXcd roots = poly_roots(den);
  const int k = static_cast<int>(roots.size());

  // Deterministic pole order shared across pairs.
  std::vector<Cplx> poles(k);
  for (int i = 0; i < k; ++i) poles[i] = roots[i];
  std::sort(poles.begin(), poles.end(), [](Cplx a, Cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  d.z_poles = poles;

  const Eigen::VectorXd dden = poly_derivative(den);
  for (size_t h = 0; h < model.pairs.size(); ++h) {
    const Eigen::VectorXd num = numerator_poly(model.num[h]);
    // Equal degrees: quotient is the leading-coefficient ratio b0.
    const double direct = model.num[h][0];
    const Eigen::VectorXd rem = num - direct * den;
    std::vector<Cplx> res(k);
    for (int j = 0; j < k; ++j) res[j] = polyval(rem, poles[j]) / polyval(dden, poles[j]);
    d.residues.push_back(std::move(res));
    d.direct.push_back(direct);
  }

  std::vector<int> cluster_of(k, -1);
  for (int i = 0; i < k; ++i) {
    if (cluster_of[i] >= 0) continue;
    std::vector<int> members{i};
    for (int j = i + 1; j < k; ++j)
      if (cluster_of[j] < 0 && std::abs(poles[i] - poles[j]) < cluster_tol)
        members.push_back(j);
    if (members.size() > 1) {
      d.near_repeated = true;
      const int id = static_cast<int>(d.clusters.size());
      for (int m : members) cluster_of[m] = id;
      d.clusters.push_back(std::move(members));
    }
  }
  return d;
}

PartialFractions partial_fractions(const ArxCommonDen& model,
                                   std::pair<MachineId, MachineId> pair) {
  const int h = model.pair_index(pair.first, pair.second);
  if (h < 0) throw std::out_of_range("partial_fractions: no such pair");
  return partial_fraction_expand(numerator_poly(model.num[static_cast<size_t>(h)]),
                                 denominator_poly(model.den));
}

void to_continuous(ModalDecomposition& decomp) {
  if (decomp.ts <= 0.0) throw std::invalid_argument("to_continuous: ts must be > 0");
  const size_t k = decomp.z_poles.size();
  decomp.s_poles.resize(k);
  for (size_t j = 0; j < k; ++j) {
    const Cplx p = decomp.z_poles[j];
    if (p.imag() == 0.0 && p.real() <= 0.0) decomp.branch_warning = true;
    if (std::abs(p) == 0.0) throw std::invalid_argument("to_continuous: pole at z = 0");
    decomp.s_poles[j] = std::log(p) / decomp.ts;
  }
  decomp.s_residues.clear();
  for (const auto& res : decomp.residues) {
    std::vector<Cplx> sres(res.size());
    for (size_t j = 0; j < res.size(); ++j) sres[j] = res[j] / decomp.ts;
    decomp.s_residues.push_back(std::move(sres));
  }
}

ModalDecomposition reduce_order(const ModalDecomposition& decomp, double rel_threshold) {
  if (rel_threshold <= 0.0 || rel_threshold >= 1.0)
    throw std::invalid_argument("reduce_order: rel_threshold must be in (0, 1)");
  const int k = static_cast<int>(decomp.z_poles.size());

  std::vector<double> strength(k, 0.0);
  double global_max = 0.0;
  for (int j = 0; j < k; ++j) {
    for (const auto& res : decomp.residues)
      strength[j] = std::max(strength[j], std::abs(res[static_cast<size_t>(j)]));
    global_max = std::max(global_max, strength[j]);
  }
  if (global_max <= 0.0) throw std::runtime_error("reduce_order: all residues vanish");

  // Conjugate partners decide together on their pair's best strength.
  std::vector<bool> keep(k, false);
  for (int j = 0; j < k; ++j) {
    if (keep[j]) continue;
    double s = strength[j];
    std::vector<int> members{j};
    if (std::abs(decomp.z_poles[j].imag()) > 0.0) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        if (i == j) continue;
        const double dist = std::abs(decomp.z_poles[i] - std::conj(decomp.z_poles[j]));
        if (dist < best_d) {
          best_d = dist;
          best = i;
        }
      }
      if (best >= 0 && best_d < 1e-6) {
        members.push_back(best);
        s = std::max(s, strength[best]);
      }
    }
    if (s >= rel_threshold * global_max)
      for (int m : members) keep[m] = true;
  }
  if (std::none_of(keep.begin(), keep.end(), [](bool b) { return b; }))
    throw std::runtime_error("reduce_order: threshold would drop every pole");

  ModalDecomposition out;
  out.pairs = decomp.pairs;
  out.ts = decomp.ts;
  out.direct = decomp.direct;
  out.residues.resize(decomp.residues.size());
  out.s_residues.resize(decomp.s_residues.size());
  for (int j = 0; j < k; ++j) {
    if (!keep[j]) continue;
    out.z_poles.push_back(decomp.z_poles[j]);
    if (!decomp.s_poles.empty()) out.s_poles.push_back(decomp.s_poles[j]);
    for (size_t h = 0; h < decomp.residues.size(); ++h)
      out.residues[h].push_back(decomp.residues[h][static_cast<size_t>(j)]);
    for (size_t h = 0; h < decomp.s_residues.size(); ++h)
      out.s_residues[h].push_back(decomp.s_residues[h][static_cast<size_t>(j)]);
  }

  // Re-derive the coalescence flags on the survivors.
  const int kr = static_cast<int>(out.z_poles.size());
  std::vector<int> cluster_of(kr, -1);
  for (int i = 0; i < kr; ++i) {
    if (cluster_of[i] >= 0) continue;
    std::vector<int> members{i};
    for (int j2 = i + 1; j2 < kr; ++j2)
      if (cluster_of[j2] < 0 && std::abs(out.z_poles[i] - out.z_poles[j2]) < 1e-7)
        members.push_back(j2);
    if (members.size() > 1) {
      out.near_repeated = true;
      const int id = static_cast<int>(out.clusters.size());
      for (int m : members) cluster_of[m] = id;
      out.clusters.push_back(std::move(members));
    }
  }
  out.branch_warning = decomp.branch_warning;
  return out;
}

ModeDescriptor dominant_mode(const ModalDecomposition& decomp, double band_lo_hz,
                             double band_hi_hz) {
  if (decomp.s_poles.empty())
    throw std::logic_error("dominant_mode: call to_continuous first");
  ModeDescriptor best;
  double best_zeta = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < decomp.s_poles.size(); ++j) {
    const Cplx s = decomp.s_poles[j];
    if (s.imag() <= 0.0) continue;  // one representative per conjugate pair
    const double f = mode_frequency(s);
    if (f < band_lo_hz || f > band_hi_hz) continue;
    const double zeta = mode_damping(s);
    if (zeta < best_zeta) {
      best_zeta = zeta;
      best.frequency = f;
      best.damping_ratio = zeta;
      best.pole_index = static_cast<int>(j);
    }
  }
  if (best.pole_index < 0)
    throw std::runtime_error("dominant_mode: no oscillatory pole inside the band");
  return best;
}

ResidueMatrix residue_matrix_at_mode(const ModalDecomposition& decomp,
                                     const ModeDescriptor& mode) {
  if (mode.pole_index < 0 ||
      mode.pole_index >= static_cast<int>(decomp.z_poles.size()))
    throw std::out_of_range("residue_matrix_at_mode: bad pole reference");

  // If the mode's pole nearly coalesces with others, rank by the summed
  // residue of the whole cluster (the simple-pole formula degrades there).
  std::vector<int> members{mode.pole_index};
  for (const auto& cluster : decomp.clusters)
    if (std::find(cluster.begin(), cluster.end(), mode.pole_index) != cluster.end())
      members = cluster;

  std::set<MachineId> out_set, in_set;
  for (const auto& pr : decomp.pairs) {
    out_set.insert(pr.first);
    in_set.insert(pr.second);
  }
  ResidueMatrix rm;
  rm.mode = mode;
  rm.outputs.assign(out_set.begin(), out_set.end());
  rm.inputs.assign(in_set.begin(), in_set.end());
  rm.values.setZero(static_cast<int>(rm.outputs.size()), static_cast<int>(rm.inputs.size()));

  for (size_t h = 0; h < decomp.pairs.size(); ++h) {
    Cplx sum(0.0, 0.0);
    for (int j : members) sum += decomp.residues[h][static_cast<size_t>(j)];
    const auto r = std::find(rm.outputs.begin(), rm.outputs.end(), decomp.pairs[h].first);
    const auto c = std::find(rm.inputs.begin(), rm.inputs.end(), decomp.pairs[h].second);
    rm.values(static_cast<int>(r - rm.outputs.begin()),
              static_cast<int>(c - rm.inputs.begin())) = std::abs(sum);
  }
  const double mx = rm.values.maxCoeff();
  if (mx > 0.0) rm.values /= mx;
  return rm;
}

ControlLoopSelection select_loops(const ResidueMatrix& rm, const CoherencyGrouping& grouping,
                                  double reject_below) {
  ControlLoopSelection sel;
  for (const auto& [gid, machines] : grouping.groups()) {
    SelectedLoop best;
    best.group = gid;
    bool found = false;
    for (MachineId m : machines) {
      const auto r = std::find(rm.outputs.begin(), rm.outputs.end(), m);
      if (r == rm.outputs.end()) continue;
      for (MachineId p : machines) {
        const auto c = std::find(rm.inputs.begin(), rm.inputs.end(), p);
        if (c == rm.inputs.end()) continue;
        const double v = rm.values(static_cast<int>(r - rm.outputs.begin()),
                                   static_cast<int>(c - rm.inputs.begin()));
        // Strict comparison keeps the lowest (output, input) on ties; the
        // scan is already in ascending pair order.
        if (!found || v > best.residue) {
          best.output = m;
          best.input = p;
          best.residue = v;
          found = true;
        }
      }
    }
    if (!found) {
      sel.rejected.push_back(best);  // no measurable/controllable pair in group
    } else if (best.residue < reject_below) {
      sel.rejected.push_back(best);
    } else {
      sel.loops.push_back(best);
    }
  }
  return sel;
}

ArxCommonDen to_model(const ModalDecomposition& decomp) {
  const int k = static_cast<int>(decomp.z_poles.size());
  if (k == 0) throw std::invalid_argument("to_model: no poles");

  ArxCommonDen model;
  model.order_k = k;
  model.ts = decomp.ts;
  model.pairs = decomp.pairs;

  const Eigen::VectorXd den = poly_from_roots(decomp.z_poles);  // monic, length k+1
  model.den = den.tail(k);

  for (size_t h = 0; h < decomp.pairs.size(); ++h) {
    // num(z) = direct * den(z) + sum_j r_j * prod_{i != j} (z - p_i).
    std::vector<Cplx> acc(static_cast<size_t>(k) + 1, Cplx(0.0, 0.0));
    for (Eigen::Index i = 0; i <= k; ++i)
      acc[static_cast<size_t>(i)] = decomp.direct[h] * den[i];
    for (int j = 0; j < k; ++j) {
      std::vector<Cplx> others;
      for (int i = 0; i < k; ++i)
        if (i != j) others.push_back(decomp.z_poles[static_cast<size_t>(i)]);
      // Expand the deflated polynomial in complex arithmetic.
      std::vector<Cplx> c{Cplx(1.0, 0.0)};
      for (const Cplx& r : others) {
        c.push_back(Cplx(0.0, 0.0));
        for (int i = static_cast<int>(c.size()) - 1; i >= 1; --i) c[i] -= r * c[i - 1];
      }
      for (size_t i = 0; i < c.size(); ++i)
        acc[i + 1] += decomp.residues[h][static_cast<size_t>(j)] * c[i];
    }
    Eigen::VectorXd b(k + 1);
    for (int i = 0; i <= k; ++i) {
      const Cplx v = acc[static_cast<size_t>(i)];
      if (std::abs(v.imag()) > 1e-8 * (1.0 + std::abs(v.real())))
        throw std::runtime_error("to_model: residues not conjugate-closed");
      b[i] = v.real();
    }
    model.num.push_back(b);
  }

  model.stable = true;
  for (const Cplx& p : decomp.z_poles)
    if (std::abs(p) >= 1.0) model.stable = false;
  model.converged = true;
  return model;
}

}  // namespace wadc
