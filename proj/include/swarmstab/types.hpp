#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace swarmstab {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vertex = std::size_t;
using EdgeId = std::size_t;

// Bad input: malformed graphs, distributions off the simplex, negative rates.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The requested target cannot be reached by the requested construction.
class InfeasibleTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration left the simplex, a linear solve was singular, a cap was hit.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point of the probability simplex over the vertices of a graph.
///
/// Construction validates nonnegativity and unit mass; entries in
/// [-tol, 0) are clamped to zero.
template <typename Scalar = double>
class Distribution {
 public:
  static constexpr double kDefaultTolerance = 1e-12;

  Distribution() = default;

  explicit Distribution(Vector<Scalar> densities,
                        Scalar tol = Scalar(kDefaultTolerance))
      : densities_(std::move(densities)) {
    if (densities_.size() == 0) {
      throw InvalidArgument("distribution must have at least one entry");
    }
    Scalar mass(0);
    for (Eigen::Index i = 0; i < densities_.size(); ++i) {
      const Scalar v = densities_[i];
      if (!std::isfinite(static_cast<double>(v))) {
        throw InvalidArgument("distribution entry " + std::to_string(i + 1) +
                              " is not finite");
      }
      if (v < -tol) {
        throw InvalidArgument("distribution entry " + std::to_string(i + 1) +
                              " is negative");
      }
      if (v < Scalar(0)) densities_[i] = Scalar(0);
      mass += densities_[i];
    }
    if (std::abs(mass - Scalar(1)) > tol) {
      throw InvalidArgument("distribution entries sum to " +
                            std::to_string(static_cast<double>(mass)) +
                            ", expected 1");
    }
  }

  static Distribution uniform(std::size_t m) {
    return Distribution(Vector<Scalar>::Constant(static_cast<Eigen::Index>(m),
                                                 Scalar(1) / Scalar(m)));
  }

  const Vector<Scalar>& values() const { return densities_; }
  std::size_t size() const { return static_cast<std::size_t>(densities_.size()); }
  Scalar operator[](std::size_t i) const {
    return densities_[static_cast<Eigen::Index>(i)];
  }

  bool strictly_positive() const { return (densities_.array() > Scalar(0)).all(); }

 private:
  Vector<Scalar> densities_;
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar l1_distance(const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).template lpNorm<1>();
}

}  // namespace swarmstab
