#include "hase/covgrid.hpp"

#include "hase/error.hpp"
#include "hase/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hase {

void GridParams::validate() const {
  if (dim < 2) throw ParameterError("grid: dim must be >= 2");
  if (!(lambda_max > 0.0)) throw ParameterError("grid: lambda_max must be positive");
  if (n_lambda < 1 || n_alpha < 1 || n_dirs_max < 1)
    throw ParameterError("grid: counts must be >= 1");
  if (!(kappa_lambda > 0.0) || !(kappa_alpha > 0.0))
    throw ParameterError("grid: kappa values must be positive");
  if (charge_iters < 0) throw ParameterError("grid: charge_iters must be >= 0");
  if (!(charge_step > 0.0)) throw ParameterError("grid: charge_step must be positive");
}

std::vector<double> build_lambda_set(double lambda_max, int n_lambda, double kappa_lambda) {
  if (!(lambda_max > 0.0) || n_lambda < 1 || !(kappa_lambda > 0.0))
    throw ParameterError("lambda set: inputs must be positive");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_lambda));
  for (int i = 1; i <= n_lambda; ++i) {
    const double e = kappa_lambda * (i - n_lambda) / n_lambda;
    out.push_back(i == n_lambda ? lambda_max : lambda_max * std::exp(e));
  }
  return out;
}

std::vector<double> build_alpha_set(int n_alpha, double kappa_alpha) {
  if (n_alpha < 1 || !(kappa_alpha > 0.0)) throw ParameterError("alpha set: inputs must be positive");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_alpha));
  for (int i = 1; i <= n_alpha; ++i) out.push_back(std::exp(kappa_alpha * (i - n_alpha) / n_alpha));
  return out;
}

int direction_count(int i, int n_lambda, double kappa_lambda, int n_dirs_max) {
  const double ratio = std::exp(kappa_lambda * (i - n_lambda) / n_lambda);
  return std::max(1, static_cast<int>(std::ceil(ratio * n_dirs_max)));
}

namespace {

// Representative of the line through v: last coordinate positive, or on the
// equator the first non-zero coordinate positive.
void to_upper_hemisphere(Vector& v) {
  constexpr double eps = 1e-12;
  const double last = v(v.size() - 1);
  if (last < -eps) {
    v = -v;
    return;
  }
  if (last > eps) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > eps) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

std::vector<Vector> sample_directions(int dim, int count, int charge_iters, double charge_step,
                                      std::uint64_t seed) {
  if (dim < 2) throw ParameterError("sample_directions: dim must be >= 2");
  if (count < 1) throw ParameterError("sample_directions: count must be >= 1");

  Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(pts.size()) < count) {
    Vector v = standard_normal(dim, rng);
    if (v.norm() > 1e-9) pts.push_back(v.normalized());
  }

  // Each stored point p carries its antipode -p, so the simulation holds
  // 2*count charges with inverse-square repulsion and cutting along an equator
  // leaves exactly one charge per pair.
  const double step = charge_step / static_cast<double>(2 * count);
  constexpr double max_move = 0.1;
  std::vector<Vector> force(pts.size(), Vector::Zero(dim));
  for (int it = 0; it < charge_iters; ++it) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vector f = Vector::Zero(dim);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j == i) continue;
        const Vector a = pts[i] - pts[j];
        const Vector b = pts[i] + pts[j];
        f += a / std::max(std::pow(a.norm(), 3), 1e-12);
        f += b / std::max(std::pow(b.norm(), 3), 1e-12);
      }
      force[i] = f - f.dot(pts[i]) * pts[i];
    }
    double max_disp = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vector move = step * force[i];
      const double len = move.norm();
      if (len > max_move) move *= max_move / len;
      const Vector next = (pts[i] + move).normalized();
      max_disp = std::max(max_disp, (next - pts[i]).norm());
      pts[i] = next;
    }
    if (max_disp < 1e-6) break;
  }

  for (auto& p : pts) to_upper_hemisphere(p);
  return pts;
}

double min_line_angle(const std::vector<Vector>& dirs) {
  double best = std::numbers::pi / 2.0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      const double c = std::min(1.0, std::abs(dirs[i].dot(dirs[j])));
      best = std::min(best, std::acos(c));
    }
  return best;
}

CovGrid::CovGrid(GridParams params, std::uint64_t seed, EigenGrid eigen)
    : params_(params), seed_(seed), eigen_(std::move(eigen)) {
  const auto n_alpha = static_cast<int>(eigen_.alphas.size());
  members_.push_back(Matrix::Zero(params_.dim, params_.dim));
  for (std::size_t l = 0; l < eigen_.lambdas.size(); ++l) {
    offsets_.push_back(static_cast<int>(members_.size()));
    for (int a = 0; a < n_alpha; ++a)
      for (const auto& u : eigen_.dirs[l])
        members_.push_back(covariance_from_params(eigen_.lambdas[l], eigen_.alphas[static_cast<std::size_t>(a)], u));
  }
  traces_.reserve(members_.size());
  for (const auto& m : members_) traces_.push_back(m.trace());
}

CovGrid CovGrid::assemble(const GridParams& params, std::uint64_t seed) {
  params.validate();
  EigenGrid eigen;
  eigen.lambdas = build_lambda_set(params.lambda_max, params.n_lambda, params.kappa_lambda);
  eigen.alphas = build_alpha_set(params.n_alpha, params.kappa_alpha);
  for (int i = 1; i <= params.n_lambda; ++i) {
    const int count = direction_count(i, params.n_lambda, params.kappa_lambda, params.n_dirs_max);
    eigen.dirs.push_back(sample_directions(params.dim, count, params.charge_iters, params.charge_step,
                                           substream_seed(seed, "directions", static_cast<std::uint64_t>(i))));
  }
  return CovGrid(params, seed, std::move(eigen));
}

CovGrid CovGrid::from_parts(const GridParams& params, std::uint64_t seed, EigenGrid eigen) {
  params.validate();
  if (eigen.lambdas.size() != static_cast<std::size_t>(params.n_lambda) ||
      eigen.alphas.size() != static_cast<std::size_t>(params.n_alpha) ||
      eigen.dirs.size() != eigen.lambdas.size())
    throw ParameterError("grid: stored sets do not match parameters");
  for (const auto& set : eigen.dirs) {
    if (set.empty()) throw ParameterError("grid: empty direction set");
    for (const auto& u : set)
      if (u.size() != params.dim) throw ParameterError("grid: direction has wrong dimension");
  }
  return CovGrid(params, seed, std::move(eigen));
}

std::optional<GridTriple> CovGrid::triple(int index) const {
  if (index <= 0 || index >= size()) return std::nullopt;
  int l = static_cast<int>(offsets_.size()) - 1;
  while (offsets_[static_cast<std::size_t>(l)] > index) --l;
  const int block = static_cast<int>(eigen_.dirs[static_cast<std::size_t>(l)].size());
  const int local = index - offsets_[static_cast<std::size_t>(l)];
  return GridTriple{l, local / block, local % block};
}

int CovGrid::index_of(const GridTriple& t) const {
  const int block = static_cast<int>(eigen_.dirs.at(static_cast<std::size_t>(t.lambda)).size());
  return offsets_[static_cast<std::size_t>(t.lambda)] + t.alpha * block + t.dir;
}

int CovGrid::project(const Matrix& sigma) const {
  if (sigma.rows() != params_.dim || sigma.cols() != params_.dim)
    throw DomainError("project: dimension mismatch");
  if (!sigma.allFinite()) throw DomainError("project: non-finite matrix");
  if (!is_symmetric(sigma)) throw DomainError("project: matrix is not symmetric");
  const auto eig = symmetric_eigen(sigma);
  const double top = eig.max_value();
  if (eig.min_value() < -1e-10 * std::max(std::abs(top), 1e-300))
    throw DomainError("project: matrix is indefinite");
  if (top < tolerance()) return zero_index();

  int l = 0;
  for (std::size_t i = 1; i < eigen_.lambdas.size(); ++i)
    if (std::abs(eigen_.lambdas[i] - top) < std::abs(eigen_.lambdas[static_cast<std::size_t>(l)] - top))
      l = static_cast<int>(i);

  const Vector u = eig.principal();
  const auto& dirs = eigen_.dirs[static_cast<std::size_t>(l)];
  int d = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double c = std::abs(dirs[i].dot(u));
    if (c > best) {
      best = c;
      d = static_cast<int>(i);
    }
  }

  const double ratio = std::max(0.0, eig.min_value()) / top;
  int a = 0;
  for (std::size_t i = 1; i < eigen_.alphas.size(); ++i)
    if (std::abs(eigen_.alphas[i] - ratio) < std::abs(eigen_.alphas[static_cast<std::size_t>(a)] - ratio))
      a = static_cast<int>(i);

  return index_of({l, a, d});
}

long long CovGrid::expected_size(const GridParams& params) {
  long long dirs = 0;
  for (int i = 1; i <= params.n_lambda; ++i)
    dirs += direction_count(i, params.n_lambda, params.kappa_lambda, params.n_dirs_max);
  return 1 + static_cast<long long>(params.n_alpha) * dirs;
}

}  // namespace hase
