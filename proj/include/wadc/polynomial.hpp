#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace wadc {

using Cplx = std::complex<double>;

/// Roots of c[0] x^n + c[1] x^(n-1) + ... + c[n] via the eigenvalues of the
/// companion matrix. Leading zeros are stripped; c[0] must end up nonzero.
Eigen::VectorXcd poly_roots(const Eigen::VectorXd& coeffs_desc);

/// Monic real polynomial with the given roots, descending coefficients
/// (length roots+1, leading 1). Roots must be conjugate-closed; imaginary
/// residue of the expansion is discarded after a symmetry check.
Eigen::VectorXd poly_from_roots(const std::vector<Cplx>& roots);

Cplx polyval(const Eigen::VectorXd& coeffs_desc, Cplx x);
Cplx polyval(const Eigen::VectorXcd& coeffs_desc, Cplx x);

/// Derivative coefficients, descending.
Eigen::VectorXd poly_derivative(const Eigen::VectorXd& coeffs_desc);

/// Polynomial long division: num = quot * den + rem, deg(rem) < deg(den).
void poly_divide(const Eigen::VectorXd& num_desc, const Eigen::VectorXd& den_desc,
                 Eigen::VectorXd& quot_desc, Eigen::VectorXd& rem_desc);

/// Expansion of num/den into quotient polynomial plus simple-pole terms
/// r_i / (x - p_i). Residues come from num(p_i) / den'(p_i); poles closer
/// than cluster_tol are grouped and flagged since that formula degrades there.
struct PartialFractions {
  std::vector<Cplx> poles;
  std::vector<Cplx> residues;
  Eigen::VectorXd direct;  // quotient polynomial, descending; empty if strictly proper
  bool near_repeated = false;
  std::vector<std::vector<int>> clusters;  // pole indices grouped within cluster_tol

  Cplx eval(Cplx x) const;
};

PartialFractions partial_fraction_expand(const Eigen::VectorXd& num_desc,
                                         const Eigen::VectorXd& den_desc,
                                         double cluster_tol = 1e-7);

}  // namespace wadc
