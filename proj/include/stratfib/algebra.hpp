#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stratfib {

/// Points of R^n. Coordinates must be finite; operations that accept a
/// Point check this on entry.
using Point = Eigen::VectorXd;

void require_finite(const Point& x, const char* what);

struct Term {
  double coeff = 0.0;
  std::vector<int> exponents;
};

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are kept sorted by exponent vector, with duplicates merged and zero
/// coefficients removed, so two polynomials with equal terms() are equal.
class Polynomial {
 public:
  explicit Polynomial(int nvars);
  Polynomial(int nvars, std::vector<Term> terms);

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int index);

  int nvars() const { return nvars_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  /// Throws InputError when x has the wrong length.
  double operator()(const Point& x) const;
  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;

  bool operator==(const Polynomial& other) const;

 private:
  double eval_unchecked(const double* x) const;

  int nvars_;
  std::vector<Term> terms_;

  friend class PolySystem;
};

double poly_eval(const Polynomial& p, const Point& x);

/// Ordered list of polynomials in the same variables with cached first and
/// second derivatives. May be empty (the open stratum has no equations).
class PolySystem {
 public:
  explicit PolySystem(int nvars);
  PolySystem(int nvars, std::vector<Polynomial> polys);

  int nvars() const { return nvars_; }
  int size() const { return static_cast<int>(polys_.size()); }
  bool empty() const { return polys_.empty(); }
  const Polynomial& operator[](int i) const { return polys_[static_cast<std::size_t>(i)]; }
  const std::vector<Polynomial>& polys() const { return polys_; }

  Eigen::VectorXd eval(const Point& x) const;
  /// size() x nvars() matrix of partial derivatives.
  Eigen::MatrixXd jacobian(const Point& x) const;
  /// Hessian of the i-th polynomial.
  Eigen::MatrixXd hessian(int i, const Point& x) const;

  /// A copy with extra polynomials appended.
  PolySystem with(std::span<const Polynomial> extra) const;

 private:
  void check(const Point& x) const;

  int nvars_;
  std::vector<Polynomial> polys_;
  std::vector<std::vector<Polynomial>> grad_;
  std::vector<std::vector<std::vector<Polynomial>>> hess_;
};

/// Polynomial map F: R^n -> R^m with m >= 1.
class PolyMap {
 public:
  PolyMap(int nvars, std::vector<Polynomial> components);

  int nvars() const { return system_.nvars(); }
  int dim() const { return system_.size(); }
  const Polynomial& component(int i) const { return system_[i]; }
  const PolySystem& system() const { return system_; }

  Eigen::VectorXd operator()(const Point& x) const { return system_.eval(x); }
  Eigen::MatrixXd jacobian(const Point& x) const { return system_.jacobian(x); }
  Eigen::MatrixXd hessian(int i, const Point& x) const { return system_.hessian(i, x); }

 private:
  PolySystem system_;
};

Eigen::MatrixXd jacobian(const PolyMap& F, const Point& x);

/// Moore-Penrose pseudoinverse; singular values below rel_tol * sigma_max are dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double rel_tol = 1e-12);

struct ProjectionOptions {
  double tol = 1e-10;
  int max_iter = 50;
};

/// Gauss-Newton projection of x0 onto {e = 0 for all e in eqs}, using the
/// minimal-norm (pseudoinverse) step. Returns x0 unchanged for an empty system.
/// Throws ProjectionError on non-convergence.
Point newton_project(const PolySystem& eqs, const Point& x0, double tol = 1e-10, int max_iter = 50);
Point newton_project(std::span<const Polynomial> eqs, const Point& x0, double tol = 1e-10,
                     int max_iter = 50);

/// Polynomial ||x - c||^2 - r^2.
Polynomial sphere_polynomial(const Point& center, double radius);

}  // namespace stratfib
