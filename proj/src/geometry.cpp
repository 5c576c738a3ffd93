#include "stratfib/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "stratfib/errors.hpp"

namespace stratfib {

Subspace::Subspace(int ambient_dim, Eigen::MatrixXd orthonormal_basis)
    : ambient_dim_(ambient_dim), basis_(std::move(orthonormal_basis)) {
  if (ambient_dim <= 0) throw InputError("subspace: ambient dimension must be positive");
  if (basis_.cols() == 0) {
    basis_.resize(ambient_dim, 0);
    return;
  }
  if (basis_.rows() != ambient_dim) throw InputError("subspace: basis has wrong row count");
  if (basis_.cols() > ambient_dim) throw InputError("subspace: more columns than ambient dimension");
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(basis_.cols(), basis_.cols());
  if ((gram - eye).cwiseAbs().maxCoeff() > 1e-12)
    throw InputError("subspace: basis columns are not orthonormal");
}

Subspace Subspace::full(int n) { return Subspace(n, Eigen::MatrixXd::Identity(n, n)); }

Subspace Subspace::trivial(int n) { return Subspace(n, Eigen::MatrixXd(n, 0)); }

Subspace Subspace::span(const Eigen::MatrixXd& vectors, double rank_tol) {
  const int n = static_cast<int>(vectors.rows());
  if (vectors.cols() == 0) return trivial(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vectors, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(0) > 0.0 && s(i) > rank_tol * s(0)) ++rank;
  return Subspace(n, svd.matrixU().leftCols(rank));
}

Eigen::VectorXd Subspace::project(const Eigen::VectorXd& v) const {
  if (v.size() != ambient_dim_) throw InputError("subspace projection: dimension mismatch");
  if (is_trivial()) return Eigen::VectorXd::Zero(ambient_dim_);
  return basis_ * (basis_.transpose() * v);
}

bool Subspace::contains(const Eigen::VectorXd& v, double tol) const {
  return (v - project(v)).norm() <= tol * std::max(1.0, v.norm());
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, double rank_tol) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(0) > 0.0 && s(i) >= rank_tol * s(0)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

double subspace_delta(const Subspace& V1, const Subspace& V2) {
  if (V1.ambient_dim() != V2.ambient_dim())
    throw InputError("subspace_delta: ambient dimension mismatch");
  if (V1.is_trivial()) return 0.0;
  Eigen::MatrixXd residual = V1.basis();
  if (!V2.is_trivial()) residual -= V2.basis() * (V2.basis().transpose() * V1.basis());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

Subspace tangent_space(const PolySystem& eqs, const Point& x, double rank_tol,
                       double residual_tol) {
  const int n = eqs.nvars();
  if (x.size() != n) throw InputError("tangent_space: dimension mismatch");
  if (eqs.empty()) return Subspace::full(n);
  const Eigen::VectorXd r = eqs.eval(x);
  if (r.lpNorm<Eigen::Infinity>() > residual_tol)
    throw InputError("tangent_space: point is not on the zero set (residual " +
                     std::to_string(r.lpNorm<Eigen::Infinity>()) + ")");
  return Subspace(n, null_space(eqs.jacobian(x), rank_tol));
}

Subspace sphere_tangent_intersection(const Subspace& T, const Point& x) {
  if (x.size() != T.ambient_dim()) throw InputError("sphere_tangent_intersection: dimension mismatch");
  const double xn = x.norm();
  if (xn == 0.0) throw DomainError("sphere_tangent_intersection: sphere tangent undefined at the origin");
  if (T.is_trivial()) return T;
  const Eigen::VectorXd w = T.basis().transpose() * (x / xn);
  if (w.norm() <= 1e-14) return T;
  // Complement of w inside coordinates of T.
  Eigen::MatrixXd row = w.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(row, Eigen::ComputeFullV);
  Eigen::MatrixXd C = svd.matrixV().rightCols(T.dim() - 1);
  Eigen::MatrixXd B = T.basis() * C;
  // Re-orthonormalize to keep the 1e-12 invariant after the product.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  return Subspace(T.ambient_dim(), Q);
}

double nu_min_singular(const Eigen::MatrixXd& J) {
  if (J.rows() > J.cols())
    throw InputError("nu_min_singular: more rows than columns (nu degenerates to 0)");
  if (J.rows() == 0) throw InputError("nu_min_singular: empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues()(J.rows() - 1);
}

}  // namespace stratfib
