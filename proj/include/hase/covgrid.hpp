#pragma once

// Finite discretisation of the covariance cone.
//
// A grid member is either the absorbing zero matrix or
//   f(lambda, alpha, u) = lambda * [u B] diag(1, alpha I) [u B]^T
// for a principal eigenvalue lambda from a log-spaced set, an eigenvalue ratio
// alpha from a second log-spaced set, and a principal direction u drawn from a
// per-lambda set of lines produced by relaxing repelling charges on a sphere.

#include "hase/linalg.hpp"
#include "hase/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hase {

struct GridParams {
  int dim = 2;
  double lambda_max = 1.0;
  int n_lambda = 6;
  int n_alpha = 3;
  int n_dirs_max = 98;
  double kappa_lambda = 9.0;
  double kappa_alpha = 3.0;
  int charge_iters = 2000;
  double charge_step = 0.01;

  void validate() const;
};

/// {lambda_max * exp(kappa (i - n) / n) : i = 1..n}, ascending; the last element is lambda_max.
std::vector<double> build_lambda_set(double lambda_max, int n_lambda, double kappa_lambda);

/// {exp(kappa (i - n) / n) : i = 1..n}, ascending in (0, 1]; the last element is 1.
std::vector<double> build_alpha_set(int n_alpha, double kappa_alpha);

/// Number of directions kept for the i-th (1-based) eigenvalue:
/// ceil(exp(kappa (i - n) / n) * n_dirs_max).
int direction_count(int i, int n_lambda, double kappa_lambda, int n_dirs_max);

/// `count` pairwise non-antipodal unit vectors in R^dim, one per line through
/// the origin, from an equilibrium of 2*count repelling charges on the sphere.
std::vector<Vector> sample_directions(int dim, int count, int charge_iters, double charge_step,
                                      std::uint64_t seed);

/// Smallest angle in [0, pi/2] between any two lines spanned by `dirs`.
double min_line_angle(const std::vector<Vector>& dirs);

/// Orthonormal basis [u b_2 ... b_n] by Gram-Schmidt of the canonical axes
/// against u, taken in index order.
template <typename Scalar>
MatrixX<Scalar> complete_basis(const VectorX<Scalar>& u) {
  const Eigen::Index n = u.size();
  MatrixX<Scalar> basis(n, n);
  basis.col(0) = u.normalized();
  Eigen::Index filled = 1;
  for (Eigen::Index axis = 0; axis < n && filled < n; ++axis) {
    VectorX<Scalar> v = VectorX<Scalar>::Unit(n, axis);
    for (Eigen::Index c = 0; c < filled; ++c) v -= basis.col(c).dot(v) * basis.col(c);
    const Scalar norm = v.norm();
    if (norm > Scalar(1e-8)) basis.col(filled++) = v / norm;
  }
  return basis;
}

/// f(lambda, alpha, u).
template <typename Scalar>
MatrixX<Scalar> covariance_from_params(Scalar lambda, Scalar alpha, const VectorX<Scalar>& u) {
  const Eigen::Index n = u.size();
  const MatrixX<Scalar> basis = complete_basis(u);
  VectorX<Scalar> spectrum = VectorX<Scalar>::Constant(n, alpha);
  spectrum(0) = Scalar(1);
  return symmetrize(lambda * basis * spectrum.asDiagonal() * basis.transpose());
}

struct EigenGrid {
  std::vector<double> lambdas;            // ascending; back() == lambda_max
  std::vector<double> alphas;             // ascending; back() == 1
  std::vector<std::vector<Vector>> dirs;  // dirs[l] are the directions for lambdas[l]
};

struct GridTriple {
  int lambda = 0;
  int alpha = 0;
  int dir = 0;
  bool operator==(const GridTriple&) const = default;
};

class CovGrid {
 public:
  /// Builds the eigen-structure sets and every member matrix.
  static CovGrid assemble(const GridParams& params, std::uint64_t seed);

  /// Rebuilds a grid from stored sets (members are recomputed from them).
  static CovGrid from_parts(const GridParams& params, std::uint64_t seed, EigenGrid eigen);

  const GridParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const EigenGrid& eigen() const { return eigen_; }
  int dim() const { return params_.dim; }

  int size() const { return static_cast<int>(members_.size()); }
  static constexpr int zero_index() { return 0; }
  /// Covariances whose principal eigenvalue falls below this are absorbed into zero.
  double tolerance() const { return 0.5 * eigen_.lambdas.front(); }

  const Matrix& member(int index) const { return members_.at(static_cast<std::size_t>(index)); }
  double trace(int index) const { return traces_.at(static_cast<std::size_t>(index)); }
  const std::vector<Matrix>& members() const { return members_; }

  /// Generating triple of a member; empty for the zero member.
  std::optional<GridTriple> triple(int index) const;
  int index_of(const GridTriple& t) const;

  /// Staged projection: round lambda_max to the eigenvalue set (or zero),
  /// pick the stored direction with the largest |<u, u_max>|, then round the
  /// ratio lambda_min / lambda_max to the alpha set. Ties go to the lowest index.
  int project(const Matrix& sigma) const;

  /// 1 + N_A * sum_l |T_l|.
  static long long expected_size(const GridParams& params);

 private:
  CovGrid(GridParams params, std::uint64_t seed, EigenGrid eigen);

  GridParams params_;
  std::uint64_t seed_ = 0;
  EigenGrid eigen_;
  std::vector<int> offsets_;  // first member index of each lambda block
  std::vector<Matrix> members_;
  std::vector<double> traces_;
};

}  // namespace hase
