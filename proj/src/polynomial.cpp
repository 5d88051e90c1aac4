#include "wadc/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wadc {

Eigen::VectorXcd poly_roots(const Eigen::VectorXd& coeffs_desc) {
  // Strip leading zeros.
  int lead = 0;
  while (lead < coeffs_desc.size() && coeffs_desc[lead] == 0.0) ++lead;
  const int n = static_cast<int>(coeffs_desc.size()) - lead - 1;
  if (n < 0) throw std::invalid_argument("poly_roots: zero polynomial");
  if (n == 0) return Eigen::VectorXcd(0);

  const double c0 = coeffs_desc[lead];
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(0, i) = -coeffs_desc[lead + 1 + i] / c0;
  companion.block(1, 0, n - 1, n - 1).setIdentity();

  // Balance for accuracy on badly scaled coefficients (Parlett-Reinsch style,
  // one sweep variant as used by the usual companion-root solvers).
  bool scaled = true;
  while (scaled) {
    scaled = false;
    for (int i = 0; i < n; ++i) {
      double row = companion.row(i).lpNorm<1>() - std::abs(companion(i, i));
      double col = companion.col(i).lpNorm<1>() - std::abs(companion(i, i));
      if (row == 0.0 || col == 0.0) continue;
      double f = 1.0;
      double s = row + col;
      while (col < row / 2.0) {
        col *= 2.0;
        row /= 2.0;
        f *= 2.0;
      }
      while (col >= row * 2.0) {
        col /= 2.0;
        row *= 2.0;
        f /= 2.0;
      }
      if (row + col < 0.95 * s) {
        scaled = true;
        companion.row(i) /= f;
        companion.col(i) *= f;
      }
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  return es.eigenvalues();
}

Eigen::VectorXd poly_from_roots(const std::vector<Cplx>& roots) {
  std::vector<Cplx> c{Cplx(1.0, 0.0)};
  for (const Cplx& r : roots) {
    c.push_back(Cplx(0.0, 0.0));
    for (int i = static_cast<int>(c.size()) - 1; i >= 1; --i) c[i] -= r * c[i - 1];
  }
  Eigen::VectorXd out(c.size());
  for (size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].imag()) > 1e-8 * (1.0 + std::abs(c[i].real())))
      throw std::invalid_argument("poly_from_roots: roots not conjugate-closed");
    out[static_cast<Eigen::Index>(i)] = c[i].real();
  }
  return out;
}

Cplx polyval(const Eigen::VectorXd& coeffs_desc, Cplx x) {
  Cplx acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < coeffs_desc.size(); ++i) acc = acc * x + coeffs_desc[i];
  return acc;
}

Cplx polyval(const Eigen::VectorXcd& coeffs_desc, Cplx x) {
  Cplx acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < coeffs_desc.size(); ++i) acc = acc * x + coeffs_desc[i];
  return acc;
}

Eigen::VectorXd poly_derivative(const Eigen::VectorXd& c) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n <= 0) return Eigen::VectorXd::Zero(1);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = c[i] * static_cast<double>(n - i);
  return d;
}

void poly_divide(const Eigen::VectorXd& num_desc, const Eigen::VectorXd& den_desc,
                 Eigen::VectorXd& quot_desc, Eigen::VectorXd& rem_desc) {
  int dlead = 0;
  while (dlead < den_desc.size() && den_desc[dlead] == 0.0) ++dlead;
  if (dlead == den_desc.size()) throw std::invalid_argument("poly_divide: zero divisor");
  const int dn = static_cast<int>(den_desc.size()) - dlead - 1;
  const int nn = static_cast<int>(num_desc.size()) - 1;
  if (nn < dn) {
    quot_desc = Eigen::VectorXd::Zero(1);
    rem_desc = num_desc;
    return;
  }
  Eigen::VectorXd work = num_desc;
  quot_desc.resize(nn - dn + 1);
  const double d0 = den_desc[dlead];
  for (int i = 0; i <= nn - dn; ++i) {
    const double q = work[i] / d0;
    quot_desc[i] = q;
    for (int j = 0; j <= dn; ++j) work[i + j] -= q * den_desc[dlead + j];
  }
  rem_desc = (dn > 0) ? Eigen::VectorXd(work.tail(dn)) : Eigen::VectorXd::Zero(1);
}

Cplx PartialFractions::eval(Cplx x) const {
  Cplx acc = (direct.size() > 0) ? polyval(direct, x) : Cplx(0.0, 0.0);
  for (size_t i = 0; i < poles.size(); ++i) acc += residues[i] / (x - poles[i]);
  return acc;
}

PartialFractions partial_fraction_expand(const Eigen::VectorXd& num_desc,
                                         const Eigen::VectorXd& den_desc,
                                         double cluster_tol) {
  PartialFractions pf;
  Eigen::VectorXd quot, rem;
  poly_divide(num_desc, den_desc, quot, rem);
  pf.direct = (quot.size() == 1 && quot[0] == 0.0) ? Eigen::VectorXd() : quot;

  Eigen::VectorXcd roots = poly_roots(den_desc);
  const int k = static_cast<int>(roots.size());
  pf.poles.resize(k);
  for (int i = 0; i < k; ++i) pf.poles[i] = roots[i];

  // Deterministic pole order: by real part, then imaginary part.
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pf.poles[a].real() != pf.poles[b].real()) return pf.poles[a].real() < pf.poles[b].real();
    return pf.poles[a].imag() < pf.poles[b].imag();
  });
  std::vector<Cplx> sorted(k);
  for (int i = 0; i < k; ++i) sorted[i] = pf.poles[order[i]];
  pf.poles = sorted;

  const Eigen::VectorXd dden = poly_derivative(den_desc);
  pf.residues.resize(k);
  for (int i = 0; i < k; ++i) {
    // rem/den has the same pole terms as num/den once the quotient is removed.
    pf.residues[i] = polyval(rem, pf.poles[i]) / polyval(dden, pf.poles[i]);
  }

  // Flag near-repeated poles: the cover-up residue formula divides by den',
  // which vanishes as poles coalesce.
  std::vector<int> cluster_of(k, -1);
  for (int i = 0; i < k; ++i) {
    if (cluster_of[i] >= 0) continue;
    std::vector<int> members{i};
    for (int j = i + 1; j < k; ++j) {
      if (cluster_of[j] < 0 && std::abs(pf.poles[i] - pf.poles[j]) < cluster_tol)
        members.push_back(j);
    }
    if (members.size() > 1) {
      pf.near_repeated = true;
      const int id = static_cast<int>(pf.clusters.size());
      for (int m : members) cluster_of[m] = id;
      pf.clusters.push_back(std::move(members));
    }
  }
  return pf;
}

}  // namespace wadc
