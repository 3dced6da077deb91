// Periodic one-dimensional mesh.
#ifndef CHIEQ_GRID_HPP
#define CHIEQ_GRID_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace chieq {

template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Raised for invalid user-facing parameters. `field()` names the offender.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Uniform periodic partition of [a, a + L) with N points, x_j = a + j h.
template <typename Scalar>
struct Grid {
  Scalar a{0};
  Scalar L{1};
  Eigen::Index N{0};
  Scalar h{0};

  /// Angular base frequency 2 pi / L.
  Scalar mu() const { return Scalar(2) * Scalar(EIGEN_PI) / L; }

  Scalar node(Eigen::Index j) const { return a + Scalar(j) * h; }

  Field<Scalar> nodes() const {
    Field<Scalar> x(N);
    for (Eigen::Index j = 0; j < N; ++j) x[j] = node(j);
    return x;
  }

  template <typename Fn>
  Field<Scalar> sample(Fn&& fn) const {
    Field<Scalar> v(N);
    for (Eigen::Index j = 0; j < N; ++j) v[j] = fn(node(j));
    return v;
  }
};

template <typename Scalar>
Grid<Scalar> make_grid(Scalar a, Scalar L, Eigen::Index N) {
  if (!std::isfinite(static_cast<double>(a))) throw ConfigError("a", "domain origin must be finite");
  if (!(L > Scalar(0)) || !std::isfinite(static_cast<double>(L)))
    throw ConfigError("L", "period length must be positive, got " + std::to_string(static_cast<double>(L)));
  if (N < 4) throw ConfigError("N", "point count must be at least 4, got " + std::to_string(N));
  if (N % 2 != 0) throw ConfigError("N", "point count must be even, got " + std::to_string(N));
  return Grid<Scalar>{a, L, N, L / Scalar(N)};
}

using Gridd = Grid<double>;
using FieldXd = Field<double>;

}  // namespace chieq

#endif  // CHIEQ_GRID_HPP
