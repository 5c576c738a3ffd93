#pragma once

#include <Eigen/Dense>

#include "stratfib/algebra.hpp"

namespace stratfib {

/// Linear subspace of R^n stored by an orthonormal basis (columns).
/// The trivial subspace has a basis with zero columns.
class Subspace {
 public:
  /// Takes ownership of an orthonormal basis; throws InputError if the
  /// columns are not orthonormal to 1e-12.
  Subspace(int ambient_dim, Eigen::MatrixXd orthonormal_basis);

  static Subspace full(int n);
  static Subspace trivial(int n);
  /// Orthonormal basis of the column span of `vectors`, rank decided relative
  /// to the largest singular value.
  static Subspace span(const Eigen::MatrixXd& vectors, double rank_tol = 1e-10);

  int ambient_dim() const { return ambient_dim_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  bool is_trivial() const { return basis_.cols() == 0; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol = 1e-10) const;

 private:
  int ambient_dim_;
  Eigen::MatrixXd basis_;
};

/// Orthonormal basis of ker(A): right singular vectors with singular value
/// below rank_tol * sigma_max (all of R^cols when A is zero or empty).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, double rank_tol = 1e-8);

/// delta(V1, V2) = sup over unit a in V1 of |a - proj_{V2}(a)|.
/// Not symmetric. Zero when V1 is trivial or contained in V2.
double subspace_delta(const Subspace& V1, const Subspace& V2);

/// Tangent space of {eqs = 0} at x: null space of the equation Jacobian.
/// Throws InputError when some |e(x)| exceeds residual_tol.
Subspace tangent_space(const PolySystem& eqs, const Point& x, double rank_tol = 1e-8,
                       double residual_tol = 1e-6);

/// {v in T : <x, v> = 0}. Throws DomainError at x = 0.
Subspace sphere_tangent_intersection(const Subspace& T, const Point& x);

/// Smallest singular value of an m x n matrix with m <= n, i.e. the infimum
/// of |J^T phi| over unit covectors phi.
double nu_min_singular(const Eigen::MatrixXd& J);

}  // namespace stratfib
