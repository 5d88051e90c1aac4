#include "wadc/coherency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace wadc {

namespace {

constexpr double kRegularize = 1e-10;   // added to the A block before inversion/sqrt
constexpr double kZeroRowTol = 1e-12;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Symmetric pseudo inverse square root; eigenvalues below tol contribute 0.
Eigen::MatrixXd inv_sqrt_psd(const Eigen::MatrixXd& m, double tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    d[i] = (d[i] > tol) ? 1.0 / std::sqrt(d[i]) : 0.0;
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Flips each column so its largest-magnitude entry is positive, making
/// eigenvector signs comparable across solvers.
void canonicalize_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > best) {
        best = std::abs(v(r, c));
        arg = r;
      }
    }
    if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
  }
}

}  // namespace

std::map<int, std::vector<MachineId>> CoherencyGrouping::groups() const {
  std::map<int, std::vector<MachineId>> out;
  for (int g = 1; g <= k; ++g) out[g];  // empty groups still listed
  for (size_t i = 0; i < assignment.size(); ++i)
    out[assignment[i]].push_back(static_cast<MachineId>(i) + 1);
  return out;
}

SimilarityFactors similarity_factors(const MeasurementWindow& window, int l,
                                     std::uint64_t seed, const SimilarityOptions& opts) {
  const int n = window.machines();
  if (window.length() < 2) throw std::invalid_argument("similarity_factors: need >= 2 samples");
  if (l < 1 || l > n) throw std::invalid_argument("similarity_factors: need 1 <= l <= n");

  SimilarityFactors f;
  f.l = l;
  f.n = n;
  if (!opts.landmark_override.empty()) {
    if (static_cast<int>(opts.landmark_override.size()) != l)
      throw std::invalid_argument("similarity_factors: landmark_override size != l");
    std::vector<bool> used(n, false);
    for (int idx : opts.landmark_override) {
      if (idx < 0 || idx >= n || used[idx])
        throw std::invalid_argument("similarity_factors: bad landmark_override index");
      used[idx] = true;
      f.perm.push_back(idx);
    }
    for (int i = 0; i < n; ++i)
      if (!used[i]) f.perm.push_back(i);
  } else {
    Rng rng(seed);
    f.perm = rng.permutation(n);
  }

  // Pairwise distances between landmark columns drive the median heuristic.
  if (opts.sigma > 0.0) {
    f.sigma = opts.sigma;
  } else {
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(l) * (l - 1) / 2);
    for (int i = 0; i < l; ++i)
      for (int j = i + 1; j < l; ++j)
        dists.push_back((window.samples.col(f.perm[i]) - window.samples.col(f.perm[j])).norm());
    const double med = median_of(dists);
    f.sigma = (med > 0.0) ? med / std::sqrt(2.0) : 1.0;
  }

  const double denom = 2.0 * f.sigma * f.sigma;
  auto entry = [&](int pi, int pj) {
    const double d = (window.samples.col(f.perm[pi]) - window.samples.col(f.perm[pj])).norm();
    return std::exp(-(opts.squared_distance ? d * d : d) / denom);
  };
  f.a_block.resize(l, l);
  for (int i = 0; i < l; ++i) {
    f.a_block(i, i) = 1.0;
    for (int j = i + 1; j < l; ++j) f.a_block(i, j) = f.a_block(j, i) = entry(i, j);
  }
  f.b_block.resize(l, n - l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < n - l; ++j) f.b_block(i, j) = entry(i, l + j);
  return f;
}

Eigen::VectorXd approximate_row_sums(const SimilarityFactors& f) {
  const int l = f.l;
  const int rest = f.n - f.l;
  Eigen::VectorXd d(f.n);
  if (rest == 0) {
    d = f.a_block.rowwise().sum();
    return d;
  }
  const Eigen::VectorXd b1 = f.b_block.rowwise().sum();               // B 1
  d.head(l) = f.a_block.rowwise().sum() + b1;                         // A 1 + B 1
  // no ridge here: the kernel block over distinct landmarks is positive
  // definite, and a ridge would spoil the exactness of the completion
  const Eigen::VectorXd x = f.a_block.ldlt().solve(b1);               // A^{-1} B 1
  d.tail(rest) = f.b_block.colwise().sum().transpose() + f.b_block.transpose() * x;
  if (!d.allFinite()) throw std::runtime_error("approximate_row_sums: singular A block");
  return d;
}

SpectralEmbedding laplacian_embedding(const SimilarityFactors& f,
                                      const Eigen::VectorXd& degree_permuted, int j) {
  const int l = f.l;
  const int n = f.n;
  if (j < 1 || j > l) throw std::invalid_argument("laplacian_embedding: need 1 <= j <= l");
  if (degree_permuted.size() != n || (degree_permuted.array() <= 0.0).any())
    throw std::invalid_argument("laplacian_embedding: degrees must be positive");

  const Eigen::VectorXd dinv_sqrt = degree_permuted.array().rsqrt();
  const auto dtop = dinv_sqrt.head(l);
  const auto dbot = dinv_sqrt.tail(n - l);

  // Scaled blocks of S_hat = D^{-1/2} S D^{-1/2}.
  const Eigen::MatrixXd a_hat = dtop.asDiagonal() * f.a_block * dtop.asDiagonal();
  Eigen::MatrixXd a_reg = a_hat;
  a_reg.diagonal().array() += kRegularize;
  const Eigen::MatrixXd a_is = inv_sqrt_psd(a_reg);

  Eigen::MatrixXd r = a_hat;
  Eigen::MatrixXd b_hat;  // empty when l == n
  if (n > l) {
    b_hat = dtop.asDiagonal() * f.b_block * dbot.asDiagonal();
    const Eigen::MatrixXd t = a_is * b_hat;
    r += t * t.transpose();
  }
  r = 0.5 * (r + r.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("laplacian_embedding: eigensolver failure");
  const Eigen::VectorXd lam = es.eigenvalues();  // ascending

  // j largest eigenvalues of S_hat correspond to the j smallest of L.
  Eigen::MatrixXd v(n, j);
  Eigen::VectorXd lap(j);
  for (int t = 0; t < j; ++t) {
    const int c = l - 1 - t;  // descending through the top eigenvalues
    lap[t] = 1.0 - lam[c];
    const Eigen::VectorXd w = a_is * es.eigenvectors().col(c);
    if (lam[c] > kZeroRowTol) {
      const double scale = 1.0 / std::sqrt(lam[c]);
      v.col(t).head(l) = scale * (a_hat * w);
      if (n > l) v.col(t).tail(n - l) = scale * (b_hat.transpose() * w);
    } else {
      v.col(t).setZero();  // degenerate direction; rows get flagged below
    }
  }
  canonicalize_signs(v);

  SpectralEmbedding emb;
  emb.eigenvalues = lap;
  emb.u_rows.setZero(n, j);
  emb.degree.resize(n);
  for (int i = 0; i < n; ++i) {
    emb.u_rows.row(f.perm[i]) = v.row(i);
    emb.degree[f.perm[i]] = degree_permuted[i];
  }
  for (int i = 0; i < n; ++i) {
    const double norm = emb.u_rows.row(i).norm();
    if (norm < kZeroRowTol)
      emb.zero_rows.push_back(i);
    else
      emb.u_rows.row(i) /= norm;
  }

  // Eigengap suggestion over the available spectrum estimates (reported only).
  std::vector<double> lap_all(l);
  for (int i = 0; i < l; ++i) lap_all[i] = 1.0 - lam[l - 1 - i];
  const int scan = std::min(l, 10);
  double best_gap = -1.0;
  emb.suggested_k = 1;
  for (int i = 0; i + 1 < scan; ++i) {
    const double gap = lap_all[i + 1] - lap_all[i];
    if (gap > best_gap) {
      best_gap = gap;
      emb.suggested_k = i + 1;
    }
  }
  return emb;
}

CoherencyGrouping kmeans_cluster(const SpectralEmbedding& embedding, int k,
                                 std::uint64_t seed) {
  const Eigen::MatrixXd& x = embedding.u_rows;
  const int n = static_cast<int>(x.rows());
  const int j = static_cast<int>(x.cols());
  if (n == 0) throw std::invalid_argument("kmeans_cluster: empty embedding");
  if (k < 1 || k > n) throw std::invalid_argument("kmeans_cluster: need 1 <= k <= n");
  if (!x.allFinite()) throw std::invalid_argument("kmeans_cluster: non-finite embedding");

  Rng rng(seed);

  // k-means++ seeding: first center uniform, then squared-distance weighted.
  Eigen::MatrixXd centers(k, j);
  std::vector<bool> chosen(n, false);
  {
    const int first = rng.uniform_int(n);
    centers.row(0) = x.row(first);
    chosen[first] = true;
    Eigen::VectorXd d2(n);
    for (int i = 0; i < n; ++i) d2[i] = (x.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      int pick = -1;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          cum += d2[i];
          if (cum >= r) {
            pick = i;
            break;
          }
        }
      }
      if (pick < 0) {  // all remaining points coincide with a center
        for (int i = 0; i < n; ++i)
          if (!chosen[i]) {
            pick = i;
            break;
          }
        if (pick < 0) pick = 0;
      }
      centers.row(c) = x.row(pick);
      chosen[pick] = true;
      for (int i = 0; i < n; ++i)
        d2[i] = std::min(d2[i], (x.row(i) - centers.row(c)).squaredNorm());
    }
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {  // strict: ties stay with the lowest index
          best_d = d;
          best_c = c;
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(j);
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) {
          mean += x.row(i);
          ++count;
        }
      if (count > 0) centers.row(c) = mean / count;  // empty keeps previous center
    }
  }

  CoherencyGrouping g;
  g.k = k;
  g.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    g.inertia += (x.row(i) - centers.row(assign[i])).squaredNorm();

  // Canonical labels: group of machine 1 becomes 1, next unseen becomes 2, ...
  std::vector<int> relabel(k, 0);
  int next = 0;
  for (int i = 0; i < n; ++i)
    if (relabel[assign[i]] == 0) relabel[assign[i]] = ++next;
  for (int c = 0; c < k; ++c)
    if (relabel[c] == 0) {
      relabel[c] = ++next;
      g.empty_cluster = true;
    }
  g.assignment.resize(n);
  for (int i = 0; i < n; ++i) g.assignment[i] = relabel[assign[i]];
  g.centers.resize(k, j);
  for (int c = 0; c < k; ++c) g.centers.row(relabel[c] - 1) = centers.row(c);
  g.suggested_k = embedding.suggested_k;
  return g;
}

CoherencyGrouping group_machines(const MeasurementWindow& window, int k,
                                 const GroupingParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = window.machines();
  const int l = (params.l <= 0) ? n : std::min(params.l, n);

  SimilarityOptions sopts;
  sopts.sigma = params.sigma;
  sopts.squared_distance = params.squared_distance;
  sopts.landmark_override = params.landmark_override;

  const SimilarityFactors f = similarity_factors(window, l, params.seed, sopts);
  const Eigen::VectorXd degree = approximate_row_sums(f);
  const SpectralEmbedding emb = laplacian_embedding(f, degree, std::min(k, l));
  CoherencyGrouping g = kmeans_cluster(emb, k, params.seed);

  g.eigenvalues = emb.eigenvalues;
  g.sigma = f.sigma;
  g.l = l;
  g.seed = params.seed;
  const auto t1 = std::chrono::steady_clock::now();
  g.elapsed = std::chrono::duration<double>(t1 - t0).count();
  return g;
}

}  // namespace wadc
