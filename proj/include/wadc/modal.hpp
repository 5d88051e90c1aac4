#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "wadc/coherency.hpp"
#include "wadc/polynomial.hpp"
#include "wadc/sysid.hpp"

namespace wadc {

/// Pole/residue form of the identified model. One eigendecomposition of the
/// shared denominator serves every pair; residues are indexed
/// [pair][pole]. The expansion describes B(z)/A(z) (numerator over
/// denominator in positive powers); the loop transfer functions carry an
/// extra z^-1 input delay, which scales every pair's residues identically
/// and therefore never changes normalized rankings.
struct ModalDecomposition {
  std::vector<Cplx> z_poles;   // conjugate-closed
  std::vector<Cplx> s_poles;   // ln(z)/ts, filled by to_continuous
  std::vector<std::vector<Cplx>> residues;    // z-domain, [pair][pole]
  std::vector<std::vector<Cplx>> s_residues;  // z residues / ts
  std::vector<double> direct;  // per-pair constant term (b0)
  std::vector<std::pair<MachineId, MachineId>> pairs;
  double ts = 0.01;
  bool near_repeated = false;                 // poles closer than cluster_tol
  std::vector<std::vector<int>> clusters;     // indices of coalescing poles
  bool branch_warning = false;                // pole on the non-positive real axis

  Cplx eval_pair(int pair_idx, Cplx z) const;
};

struct ModeDescriptor {
  double frequency = 0.0;      // Hz, from Im(s)
  double damping_ratio = 0.0;  // -Re(s)/|s|
  int pole_index = -1;         // into ModalDecomposition arrays
};

/// |residue| of every pair at one mode, normalized to a global maximum of 1.
struct ResidueMatrix {
  Eigen::MatrixXd values;          // outputs x inputs
  ModeDescriptor mode;
  std::vector<MachineId> outputs;  // row labels
  std::vector<MachineId> inputs;   // column labels
};

struct SelectedLoop {
  int group = 0;
  MachineId output = 0;
  MachineId input = 0;
  double residue = 0.0;  // normalized
};

struct ControlLoopSelection {
  std::vector<SelectedLoop> loops;     // at most one per group
  std::vector<SelectedLoop> rejected;  // groups dropped for low residue (best shown)
};

/// Shared-denominator decomposition of all pairs.
ModalDecomposition decompose(const ArxCommonDen& model, double cluster_tol = 1e-7);

/// Single-pair expansion, z-domain.
PartialFractions partial_fractions(const ArxCommonDen& model,
                                   std::pair<MachineId, MachineId> pair);

/// Matched pole map s = ln(z)/ts; residues scaled by 1/ts. Frequencies and
/// damping ratios are preserved exactly under this map.
void to_continuous(ModalDecomposition& decomp);

/// Drops poles whose best residue over all pairs falls below
/// rel_threshold x (global max); conjugate partners stay together, and the
/// dominant pair always survives.
ModalDecomposition reduce_order(const ModalDecomposition& decomp, double rel_threshold);

/// Least-damped oscillatory pole with frequency inside the band.
ModeDescriptor dominant_mode(const ModalDecomposition& decomp, double band_lo_hz = 0.1,
                             double band_hi_hz = 0.8);

ResidueMatrix residue_matrix_at_mode(const ModalDecomposition& decomp,
                                     const ModeDescriptor& mode);

/// Per coherent group, the (output, input) argmax of the residue matrix with
/// both machines inside the group; groups under reject_below go to rejected.
ControlLoopSelection select_loops(const ResidueMatrix& rm, const CoherencyGrouping& grouping,
                                  double reject_below = 0.05);

/// Rebuilds a (reduced-order) transfer-function model from retained
/// poles/residues: den from the pole polynomial, num from the residue sum.
ArxCommonDen to_model(const ModalDecomposition& decomp);

}  // namespace wadc
