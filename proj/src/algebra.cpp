#include "stratfib/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stratfib/errors.hpp"

namespace stratfib {

namespace {

// Exact for integer bases while the result fits in 53 bits.
double ipow(double base, int e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

bool exponent_less(const Term& a, const Term& b) { return a.exponents < b.exponents; }

}  // namespace

void require_finite(const Point& x, const char* what) {
  if (!x.allFinite()) throw InputError(std::string(what) + ": non-finite coordinate");
}

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars <= 0) throw InputError("polynomial: nvars must be positive");
}

Polynomial::Polynomial(int nvars, std::vector<Term> terms) : Polynomial(nvars) {
  for (const auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != nvars) {
      std::ostringstream msg;
      msg << "polynomial: exponent list of length " << t.exponents.size() << ", expected "
          << nvars;
      throw InputError(msg.str());
    }
    if (std::any_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e < 0; }))
      throw InputError("polynomial: negative exponent");
    if (!std::isfinite(t.coeff)) throw InputError("polynomial: non-finite coefficient");
  }
  std::sort(terms.begin(), terms.end(), exponent_less);
  for (auto& t : terms) {
    if (!terms_.empty() && terms_.back().exponents == t.exponents)
      terms_.back().coeff += t.coeff;
    else
      terms_.push_back(std::move(t));
  }
  std::erase_if(terms_, [](const Term& t) { return t.coeff == 0.0; });
}

Polynomial Polynomial::constant(int nvars, double c) {
  return Polynomial(nvars, {Term{c, std::vector<int>(static_cast<std::size_t>(nvars), 0)}});
}

Polynomial Polynomial::variable(int nvars, int index) {
  if (index < 0 || index >= nvars) throw InputError("polynomial: variable index out of range");
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  e[static_cast<std::size_t>(index)] = 1;
  return Polynomial(nvars, {Term{1.0, e}});
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int e : t.exponents) s += e;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::eval_unchecked(const double* x) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int j = 0; j < nvars_; ++j) {
      const int e = t.exponents[static_cast<std::size_t>(j)];
      if (e != 0) v *= ipow(x[j], e);
    }
    sum += v;
  }
  return sum;
}

double Polynomial::operator()(const Point& x) const {
  if (x.size() != nvars_) {
    std::ostringstream msg;
    msg << "polynomial evaluation: point has " << x.size() << " coordinates, expected " << nvars_;
    throw InputError(msg.str());
  }
  return eval_unchecked(x.data());
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= nvars_) throw InputError("derivative: variable index out of range");
  std::vector<Term> out;
  for (const auto& t : terms_) {
    const int e = t.exponents[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    Term d{t.coeff * e, t.exponents};
    d.exponents[static_cast<std::size_t>(var)] = e - 1;
    out.push_back(std::move(d));
  }
  return Polynomial(nvars_, std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (other.nvars_ != nvars_) throw InputError("polynomial sum: nvars mismatch");
  std::vector<Term> all = terms_;
  all.insert(all.end(), other.terms_.begin(), other.terms_.end());
  return Polynomial(nvars_, std::move(all));
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other * -1.0; }

Polynomial Polynomial::operator*(double s) const {
  std::vector<Term> out = terms_;
  for (auto& t : out) t.coeff *= s;
  return Polynomial(nvars_, std::move(out));
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.nvars_ != nvars_) throw InputError("polynomial product: nvars mismatch");
  std::vector<Term> out;
  out.reserve(terms_.size() * other.terms_.size());
  for (const auto& a : terms_) {
    for (const auto& b : other.terms_) {
      Term t{a.coeff * b.coeff, a.exponents};
      for (std::size_t j = 0; j < t.exponents.size(); ++j) t.exponents[j] += b.exponents[j];
      out.push_back(std::move(t));
    }
  }
  return Polynomial(nvars_, std::move(out));
}

bool Polynomial::operator==(const Polynomial& other) const {
  if (nvars_ != other.nvars_ || terms_.size() != other.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].coeff != other.terms_[i].coeff ||
        terms_[i].exponents != other.terms_[i].exponents)
      return false;
  }
  return true;
}

double poly_eval(const Polynomial& p, const Point& x) { return p(x); }

// PolySystem

PolySystem::PolySystem(int nvars) : nvars_(nvars) {
  if (nvars <= 0) throw InputError("polynomial system: nvars must be positive");
}

PolySystem::PolySystem(int nvars, std::vector<Polynomial> polys)
    : nvars_(nvars), polys_(std::move(polys)) {
  if (nvars <= 0) throw InputError("polynomial system: nvars must be positive");
  for (const auto& p : polys_) {
    if (p.nvars() != nvars_) throw InputError("polynomial system: nvars mismatch");
  }
  grad_.reserve(polys_.size());
  hess_.reserve(polys_.size());
  for (const auto& p : polys_) {
    std::vector<Polynomial> g;
    std::vector<std::vector<Polynomial>> h;
    for (int j = 0; j < nvars_; ++j) {
      g.push_back(p.derivative(j));
      std::vector<Polynomial> row;
      for (int k = 0; k < nvars_; ++k) row.push_back(g.back().derivative(k));
      h.push_back(std::move(row));
    }
    grad_.push_back(std::move(g));
    hess_.push_back(std::move(h));
  }
}

void PolySystem::check(const Point& x) const {
  if (x.size() != nvars_) {
    std::ostringstream msg;
    msg << "dimension mismatch: point has " << x.size() << " coordinates, expected " << nvars_;
    throw InputError(msg.str());
  }
}

Eigen::VectorXd PolySystem::eval(const Point& x) const {
  check(x);
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = polys_[static_cast<std::size_t>(i)].eval_unchecked(x.data());
  return v;
}

Eigen::MatrixXd PolySystem::jacobian(const Point& x) const {
  check(x);
  Eigen::MatrixXd J(size(), nvars_);
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < nvars_; ++j)
      J(i, j) = grad_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval_unchecked(x.data());
  return J;
}

Eigen::MatrixXd PolySystem::hessian(int i, const Point& x) const {
  check(x);
  if (i < 0 || i >= size()) throw InputError("hessian: component index out of range");
  const auto& h = hess_[static_cast<std::size_t>(i)];
  Eigen::MatrixXd H(nvars_, nvars_);
  for (int j = 0; j < nvars_; ++j)
    for (int k = 0; k < nvars_; ++k)
      H(j, k) = h[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].eval_unchecked(x.data());
  return H;
}

PolySystem PolySystem::with(std::span<const Polynomial> extra) const {
  std::vector<Polynomial> all = polys_;
  all.insert(all.end(), extra.begin(), extra.end());
  return PolySystem(nvars_, std::move(all));
}

PolyMap::PolyMap(int nvars, std::vector<Polynomial> components)
    : system_(nvars, std::move(components)) {
  if (system_.empty()) throw InputError("polynomial map: needs at least one component");
}

Eigen::MatrixXd jacobian(const PolyMap& F, const Point& x) { return F.jacobian(x); }

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double rel_tol) {
  if (A.size() == 0) return Eigen::MatrixXd::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Point newton_project(const PolySystem& eqs, const Point& x0, double tol, int max_iter) {
  if (!(tol > 0.0)) throw InputError("newton_project: tol must be positive");
  if (x0.size() != eqs.nvars()) throw InputError("newton_project: dimension mismatch");
  require_finite(x0, "newton_project");
  if (eqs.empty()) return x0;

  Point x = x0;
  Eigen::VectorXd r = eqs.eval(x);
  double res = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    if (res < tol) return x;
    const Eigen::MatrixXd J = eqs.jacobian(x);
    const Eigen::VectorXd step = pseudo_inverse(J, 1e-12) * r;
    if (step.norm() == 0.0) {
      throw ProjectionError("newton_project: singular Jacobian with residual " + std::to_string(res),
                            res, x);
    }
    // Backtrack when the full Gauss-Newton step increases the residual.
    double lambda = 1.0;
    Point trial = x - step;
    Eigen::VectorXd rt = eqs.eval(trial);
    for (int k = 0; k < 12 && !(rt.norm() < r.norm()); ++k) {
      lambda *= 0.5;
      trial = x - lambda * step;
      rt = eqs.eval(trial);
    }
    if (!trial.allFinite()) break;
    x = trial;
    r = rt;
    res = r.lpNorm<Eigen::Infinity>();
  }
  if (res < tol) return x;
  throw ProjectionError("newton_project: no convergence, residual " + std::to_string(res), res, x);
}

Point newton_project(std::span<const Polynomial> eqs, const Point& x0, double tol, int max_iter) {
  if (eqs.empty()) {
    if (!(tol > 0.0)) throw InputError("newton_project: tol must be positive");
    return x0;
  }
  return newton_project(PolySystem(eqs.front().nvars(), {eqs.begin(), eqs.end()}), x0, tol,
                        max_iter);
}

Polynomial sphere_polynomial(const Point& center, double radius) {
  const int n = static_cast<int>(center.size());
  Polynomial p = Polynomial::constant(n, center.squaredNorm() - radius * radius);
  for (int j = 0; j < n; ++j) {
    Polynomial xj = Polynomial::variable(n, j);
    p = p + xj * xj + xj * (-2.0 * center(j));
  }
  return p;
}

}  // namespace stratfib
