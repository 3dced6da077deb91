// Fourier pseudo-spectral differentiation on a periodic grid.
//
// All operators are diagonal in Fourier space and are applied as
// forward real FFT -> symbol multiply -> inverse real FFT. Only the
// non-negative half of the spectrum is touched; conjugate symmetry of the
// symbols makes the result real by construction.
#ifndef CHIEQ_SPECTRAL_HPP
#define CHIEQ_SPECTRAL_HPP

#include <chieq/grid.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <stdexcept>
#include <string>

namespace chieq {

template <typename Scalar>
using ComplexField = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

namespace detail {

// Eigen::FFT keeps plan caches and scratch buffers, so each thread gets its own.
template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
  thread_local Eigen::FFT<Scalar> engine = [] {
    Eigen::FFT<Scalar> f;
    f.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
    return f;
  }();
  return engine;
}

inline void check_length(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(got) +
                                " vs " + std::to_string(want) + ")");
}

}  // namespace detail

/// Fourier symbols of D1, D2 and D = (I - D2)^{-1} D1 on a fixed grid.
///
/// Full-length symbols use the FFT's native mode order
/// (0, 1, ..., N/2-1, N/2, -N/2+1, ..., -1). The first-derivative symbol is
/// zero on the Nyquist mode; the second-derivative symbol is not.
/// Immutable after construction.
template <typename Scalar>
class SpectralOps {
 public:
  using RealVector = Field<Scalar>;
  using ComplexVector = ComplexField<Scalar>;
  using Complex = std::complex<Scalar>;

  explicit SpectralOps(const Grid<Scalar>& grid) : grid_(grid) {
    const Eigen::Index n = grid.N;
    const Eigen::Index half = n / 2;
    const Scalar mu = grid.mu();
    sym1_.resize(n);
    sym2_.resize(n);
    symD_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index k = j <= half ? j : j - n;
      const Scalar wave = mu * Scalar(k);
      sym1_[j] = (j == half) ? Complex(0) : Complex(0, wave);
      sym2_[j] = -wave * wave;
      symD_[j] = sym1_[j] / (Scalar(1) - sym2_[j]);
    }
    half1_ = sym1_.head(half + 1);
    half2_ = sym2_.head(half + 1);
    halfD_ = symD_.head(half + 1);
  }

  const Grid<Scalar>& grid() const { return grid_; }
  Eigen::Index size() const { return grid_.N; }
  Eigen::Index spectrum_size() const { return grid_.N / 2 + 1; }

  const ComplexVector& sym1() const { return sym1_; }
  const RealVector& sym2() const { return sym2_; }
  const ComplexVector& symD() const { return symD_; }

  /// Symbols restricted to modes 0..N/2, matching forward()'s layout.
  const ComplexVector& half_sym1() const { return half1_; }
  const RealVector& half_sym2() const { return half2_; }
  const ComplexVector& half_symD() const { return halfD_; }

  void forward(const RealVector& u, ComplexVector& uh) const {
    detail::check_length(u.size(), size(), "forward");
    detail::fft_engine<Scalar>().fwd(uh, u);
  }

  void inverse(const ComplexVector& uh, RealVector& u) const {
    detail::check_length(uh.size(), spectrum_size(), "inverse");
    detail::fft_engine<Scalar>().inv(u, uh, size());
  }

  ComplexVector forward(const RealVector& u) const {
    ComplexVector uh;
    forward(u, uh);
    return uh;
  }

  RealVector inverse(const ComplexVector& uh) const {
    RealVector u;
    inverse(uh, u);
    return u;
  }

  template <typename Symbol>
  RealVector apply_symbol(const Symbol& half_symbol, const RealVector& u) const {
    ComplexVector uh = forward(u);
    uh.array() *= half_symbol.array().template cast<Complex>();
    return inverse(uh);
  }

 private:
  Grid<Scalar> grid_;
  ComplexVector sym1_;
  RealVector sym2_;
  ComplexVector symD_;
  ComplexVector half1_;
  RealVector half2_;
  ComplexVector halfD_;
};

template <typename Scalar>
SpectralOps<Scalar> build_ops(const Grid<Scalar>& grid) {
  return SpectralOps<Scalar>(grid);
}

/// First derivative of the trigonometric interpolant at the nodes.
template <typename Derived>
Field<typename Derived::Scalar> apply_d1(const SpectralOps<typename Derived::Scalar>& ops,
                                         const Eigen::MatrixBase<Derived>& u) {
  return ops.apply_symbol(ops.half_sym1(), Field<typename Derived::Scalar>(u));
}

/// Second derivative of the trigonometric interpolant at the nodes.
template <typename Derived>
Field<typename Derived::Scalar> apply_d2(const SpectralOps<typename Derived::Scalar>& ops,
                                         const Eigen::MatrixBase<Derived>& u) {
  return ops.apply_symbol(ops.half_sym2(), Field<typename Derived::Scalar>(u));
}

/// (I - D2)^{-1} D1 u.
template <typename Derived>
Field<typename Derived::Scalar> apply_D(const SpectralOps<typename Derived::Scalar>& ops,
                                        const Eigen::MatrixBase<Derived>& u) {
  return ops.apply_symbol(ops.half_symD(), Field<typename Derived::Scalar>(u));
}

/// Discrete inner product h * sum_j u_j v_j.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar inner(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
                                const Grid<typename DerivedU::Scalar>& grid) {
  detail::check_length(u.size(), v.size(), "inner");
  return grid.h * u.dot(v);
}

template <typename Derived>
typename Derived::Scalar linf_norm(const Eigen::MatrixBase<Derived>& u) {
  return u.size() == 0 ? typename Derived::Scalar(0) : u.cwiseAbs().maxCoeff();
}

using SpectralOpsd = SpectralOps<double>;

}  // namespace chieq

#endif  // CHIEQ_SPECTRAL_HPP
