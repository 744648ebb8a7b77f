#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "swarmstab/graph.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab {

/// Per-capita transition rate on every edge, indexed by edge id.
template <typename Scalar = double>
class RateAssignment {
 public:
  RateAssignment() = default;

  RateAssignment(const DirectedGraph& g, Vector<Scalar> rates) : rates_(std::move(rates)) {
    if (static_cast<std::size_t>(rates_.size()) != g.edge_count()) {
      throw InvalidArgument("rate assignment has " + std::to_string(rates_.size()) +
                            " entries for " + std::to_string(g.edge_count()) + " edges");
    }
    for (Eigen::Index e = 0; e < rates_.size(); ++e) {
      if (!(rates_[e] >= Scalar(0)) || !std::isfinite(static_cast<double>(rates_[e]))) {
        const auto& edge = g.edge(static_cast<EdgeId>(e));
        throw InvalidArgument("rate on edge (" + std::to_string(edge.source + 1) + "," +
                              std::to_string(edge.target + 1) +
                              ") must be finite and nonnegative");
      }
    }
  }

  static RateAssignment zero(const DirectedGraph& g) {
    return RateAssignment(g, Vector<Scalar>::Zero(static_cast<Eigen::Index>(g.edge_count())));
  }
  static RateAssignment constant(const DirectedGraph& g, Scalar value) {
    return RateAssignment(
        g, Vector<Scalar>::Constant(static_cast<Eigen::Index>(g.edge_count()), value));
  }

  const Vector<Scalar>& values() const { return rates_; }
  Scalar operator[](EdgeId e) const { return rates_[static_cast<Eigen::Index>(e)]; }
  std::size_t size() const { return static_cast<std::size_t>(rates_.size()); }

 private:
  Vector<Scalar> rates_;
};

/// Transition-rate matrix: nonnegative off-diagonal, zero row sums.
template <typename Scalar = double>
class Generator {
 public:
  static constexpr double kRowSumTolerance = 1e-12;

  Generator() = default;

  explicit Generator(Matrix<Scalar> entries, Scalar tol = Scalar(kRowSumTolerance))
      : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) throw InvalidArgument("generator must be square");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      Scalar scale(1);
      for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
        if (i != j && entries_(i, j) < Scalar(0)) {
          throw InvalidArgument("generator has a negative off-diagonal entry at (" +
                                std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }
        scale = std::max(scale, std::abs(entries_(i, j)));
      }
      if (std::abs(entries_.row(i).sum()) > tol * scale) {
        throw InvalidArgument("generator row " + std::to_string(i + 1) + " does not sum to zero");
      }
    }
  }

  const Matrix<Scalar>& matrix() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }

 private:
  Matrix<Scalar> entries_;
};

template <typename Scalar>
Generator<Scalar> generator_from_rates(const DirectedGraph& g, const RateAssignment<Scalar>& u) {
  if (u.size() != g.edge_count()) throw InvalidArgument("rate assignment does not match graph");
  const auto m = static_cast<Eigen::Index>(g.vertex_count());
  Matrix<Scalar> gen = Matrix<Scalar>::Zero(m, m);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto s = static_cast<Eigen::Index>(g.source(e));
    const auto t = static_cast<Eigen::Index>(g.target(e));
    gen(s, t) = u[e];
    gen(s, s) -= u[e];
  }
  return Generator<Scalar>(std::move(gen));
}

/// Kolmogorov forward field G^T x.
template <typename Scalar, typename Derived>
Vector<Scalar> forward_field(const Generator<Scalar>& gen, const Eigen::MatrixBase<Derived>& x) {
  return gen.matrix().transpose() * x;
}

/// B_e: -1 at (S(e), S(e)) and +1 at (T(e), S(e)).
template <typename Scalar = double>
Matrix<Scalar> control_matrix(const DirectedGraph& g, EdgeId e) {
  if (e >= g.edge_count()) throw InvalidArgument("unknown edge id " + std::to_string(e));
  const auto m = static_cast<Eigen::Index>(g.vertex_count());
  Matrix<Scalar> b = Matrix<Scalar>::Zero(m, m);
  const auto s = static_cast<Eigen::Index>(g.source(e));
  const auto t = static_cast<Eigen::Index>(g.target(e));
  b(s, s) = Scalar(-1);
  b(t, s) = Scalar(1);
  return b;
}

/// sum_e u_e B_e x, evaluated as per-edge fluxes u_e x_{S(e)}.
template <typename Scalar, typename Derived>
Vector<Scalar> control_form_field(const DirectedGraph& g, const RateAssignment<Scalar>& u,
                                  const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> dx = Vector<Scalar>::Zero(x.size());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto s = static_cast<Eigen::Index>(g.source(e));
    const auto t = static_cast<Eigen::Index>(g.target(e));
    const Scalar flux = u[e] * x[s];
    dx[s] -= flux;
    dx[t] += flux;
  }
  return dx;
}

template <typename Scalar = double>
struct SpectralReport {
  int zero_multiplicity = 0;
  // Largest real part among eigenvalues not classified as zero; empty when
  // every eigenvalue is zero.
  std::optional<Scalar> max_nonzero_real_part;

  bool simple_zero_and_stable() const {
    return zero_multiplicity == 1 &&
           (!max_nonzero_real_part || *max_nonzero_real_part < Scalar(0));
  }
};

template <typename Scalar>
SpectralReport<Scalar> spectral_check(const Generator<Scalar>& gen,
                                      Scalar zero_tol = Scalar(1e-9)) {
  SpectralReport<Scalar> report;
  if (gen.size() == 0) return report;
  Eigen::EigenSolver<Matrix<Scalar>> solver(gen.matrix(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalFailure("eigenvalue computation failed");
  for (const auto& lambda : solver.eigenvalues()) {
    if (std::abs(lambda) <= zero_tol) {
      ++report.zero_multiplicity;
    } else if (!report.max_nonzero_real_part || lambda.real() > *report.max_nonzero_real_part) {
      report.max_nonzero_real_part = lambda.real();
    }
  }
  return report;
}

/// Unique z on the simplex with G^T z = 0, from the bordered system
/// [G^T; 1^T] z = [0; 1]. Throws NumericalFailure when the null space of G^T
/// is not one-dimensional.
template <typename Scalar>
Distribution<Scalar> stationary_distribution(const Generator<Scalar>& gen) {
  const auto m = static_cast<Eigen::Index>(gen.size());
  Matrix<Scalar> bordered(m + 1, m);
  bordered.topRows(m) = gen.matrix().transpose();
  bordered.row(m).setOnes();
  Vector<Scalar> rhs = Vector<Scalar>::Zero(m + 1);
  rhs[m] = Scalar(1);

  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(bordered);
  const Scalar scale = std::max(Scalar(1), gen.matrix().cwiseAbs().maxCoeff());
  qr.setThreshold(Scalar(1e-10));
  if (qr.rank() < m) {
    throw NumericalFailure("no unique stationary distribution: generator has a non-simple "
                           "zero eigenvalue");
  }
  Vector<Scalar> z = qr.solve(rhs);
  if ((bordered * z - rhs).template lpNorm<Eigen::Infinity>() > Scalar(1e-8) * scale) {
    throw NumericalFailure("no unique stationary distribution: bordered system inconsistent");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (z[i] < Scalar(0)) {
      if (z[i] < -Scalar(1e-9)) throw NumericalFailure("stationary vector has negative mass");
      z[i] = Scalar(0);
    }
  }
  z /= z.sum();
  return Distribution<Scalar>(std::move(z));
}

}  // namespace swarmstab
