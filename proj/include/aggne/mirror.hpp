#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <utility>

namespace aggne {

// Componentwise box {x : lower <= x <= upper}.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxSet() = default;

  BoxSet(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size())
      throw std::invalid_argument("BoxSet: bound dimensions differ");
    if (((upper - lower).array() <= 0.0).any())
      throw std::invalid_argument("BoxSet: requires lower < upper componentwise");
  }

  Eigen::Index dim() const { return lower.size(); }

  Eigen::VectorXd clamp(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return (x.array() >= lower.array() - tol).all() &&
           (x.array() <= upper.array() + tol).all();
  }
};

// 1-strongly-convex regularizer h. The Euclidean case h(x) = ||x||^2 / 2 is
// the built-in fast path with closed-form prox steps; any other
// 1-strongly-convex h plugs in through value/gradient callbacks together with
// a smoothness constant for its gradient, and prox steps fall back to a
// numerical inner solve.
class Regularizer {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  static Regularizer euclidean() { return Regularizer(); }

  static Regularizer custom(ValueFn value, GradFn grad, double grad_smoothness) {
    if (!value || !grad) throw std::invalid_argument("Regularizer: null callback");
    if (grad_smoothness < 1.0)
      throw std::invalid_argument(
          "Regularizer: gradient smoothness cannot be below the strong convexity modulus");
    Regularizer r;
    r.value_ = std::move(value);
    r.grad_ = std::move(grad);
    r.smoothness_ = grad_smoothness;
    return r;
  }

  bool is_euclidean() const { return !value_; }

  double value(const Eigen::VectorXd& x) const {
    return is_euclidean() ? 0.5 * x.squaredNorm() : value_(x);
  }

  Eigen::VectorXd grad(const Eigen::VectorXd& x) const { return is_euclidean() ? x : grad_(x); }

  double grad_smoothness() const { return smoothness_; }

 private:
  Regularizer() = default;

  ValueFn value_;
  GradFn grad_;
  double smoothness_ = 1.0;
};

// D(x, y) = h(y) - h(x) - <grad h(x), y - x>. Nonnegative, zero iff x == y;
// the Euclidean case reduces to ||x - y||^2 / 2.
inline double bregman(const Regularizer& reg, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("bregman: dimension mismatch");
  if (reg.is_euclidean()) return 0.5 * (x - y).squaredNorm();
  return reg.value(y) - reg.value(x) - reg.grad(x).dot(y - x);
}

// Worst violation of the prox optimality condition
//   <alpha * direction + grad h(result) - grad h(x_current), u - result> >= 0
// over all u in the box. The inner product is linear in u, so the minimum is
// attained at a corner and the scan below is exact. Zero (up to rounding)
// means result solves the prox subproblem.
inline double check_optimality(const Regularizer& reg, const BoxSet& box,
                               const Eigen::VectorXd& result,
                               const Eigen::VectorXd& x_current,
                               const Eigen::VectorXd& direction, double alpha) {
  const Eigen::VectorXd c = alpha * direction + reg.grad(result) - reg.grad(x_current);
  double worst = 0.0;
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    const double at_lower = c[l] * (box.lower[l] - result[l]);
    const double at_upper = c[l] * (box.upper[l] - result[l]);
    worst += std::min(at_lower, at_upper);
  }
  return std::max(0.0, -worst);
}

// argmin over the box of alpha * <direction, u> + D(x_current, u).
// Euclidean h gives the componentwise clamp of x_current - alpha * direction;
// custom regularizers run projected gradient on the inner problem until the
// optimality residual drops below 1e-12.
inline Eigen::VectorXd prox_step(const Regularizer& reg, const BoxSet& box,
                                 const Eigen::VectorXd& x_current,
                                 const Eigen::VectorXd& direction, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("prox_step: alpha must be positive");
  if (x_current.size() != direction.size() || x_current.size() != box.dim())
    throw std::invalid_argument("prox_step: dimension mismatch");
  if (reg.is_euclidean()) return box.clamp(x_current - alpha * direction);

  constexpr double kInnerTol = 1e-12;
  constexpr int kMaxInnerIters = 200000;
  const double step = 1.0 / reg.grad_smoothness();
  const Eigen::VectorXd grad_at_start = reg.grad(x_current);
  Eigen::VectorXd u = box.clamp(x_current - alpha * direction);
  for (int it = 0; it < kMaxInnerIters; ++it) {
    if (check_optimality(reg, box, u, x_current, direction, alpha) <= kInnerTol) return u;
    const Eigen::VectorXd g = alpha * direction + reg.grad(u) - grad_at_start;
    u = box.clamp(u - step * g);
  }
  throw std::runtime_error("prox_step: inner solver did not reach tolerance");
}

}  // namespace aggne
