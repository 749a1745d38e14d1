#pragma once

// Piecewise-linear over-approximation of y^2 on [0, y_max] with uniform
// segments, and the ordered-filling (error-self-optimal) condition.
//
// Everything here is templated on the scalar type so the identities can be
// checked in exact rational arithmetic as well as in double.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace sopwl {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Segment geometry of one linearized quadratic term: y_max split into
/// num_segments intervals of equal width.
template <typename Scalar = double>
class PwlGrid {
 public:
  PwlGrid(Scalar y_max, int num_segments)
      : y_max_(y_max), num_segments_(num_segments) {
    if (!(y_max >= Scalar(0))) {
      throw std::invalid_argument("PwlGrid: y_max must be nonnegative");
    }
    if (num_segments < 1) {
      throw std::invalid_argument("PwlGrid: num_segments must be >= 1");
    }
    seg_width_ = y_max_ / Scalar(num_segments_);
  }

  const Scalar& y_max() const { return y_max_; }
  int num_segments() const { return num_segments_; }
  const Scalar& seg_width() const { return seg_width_; }

  bool operator==(const PwlGrid&) const = default;

 private:
  Scalar y_max_;
  int num_segments_;
  Scalar seg_width_;
};

/// Segment values Delta_1..Delta_L of one block. Indices are 1-based in the
/// accessors below to match the usual segment numbering; storage is 0-based.
template <typename Scalar = double>
class FillingState {
 public:
  /// Validates 0 <= delta <= seg_width (up to `slack`) and sum <= y_max.
  FillingState(PwlGrid<Scalar> grid, VectorX<Scalar> deltas,
               Scalar slack = Scalar(0))
      : grid_(std::move(grid)), deltas_(std::move(deltas)) {
    if (deltas_.size() != grid_.num_segments()) {
      throw std::invalid_argument("FillingState: expected " +
                                  std::to_string(grid_.num_segments()) +
                                  " segment values, got " +
                                  std::to_string(deltas_.size()));
    }
    for (Eigen::Index i = 0; i < deltas_.size(); ++i) {
      const Scalar& d = deltas_[i];
      if (d < -slack || d > grid_.seg_width() + slack) {
        throw std::invalid_argument("FillingState: segment " +
                                    std::to_string(i + 1) +
                                    " outside [0, seg_width]");
      }
    }
    // Summing L full segments may round one ulp past y_max.
    const Scalar rounding = grid_.y_max() * Scalar(grid_.num_segments()) *
                            std::numeric_limits<Scalar>::epsilon();
    if (deltas_.sum() >
        grid_.y_max() + slack * Scalar(grid_.num_segments()) + rounding) {
      throw std::invalid_argument("FillingState: total exceeds y_max");
    }
  }

  const PwlGrid<Scalar>& grid() const { return grid_; }
  const VectorX<Scalar>& deltas() const { return deltas_; }
  const Scalar& delta(int lambda) const { return deltas_[lambda - 1]; }
  Scalar total() const { return deltas_.sum(); }

 private:
  PwlGrid<Scalar> grid_;
  VectorX<Scalar> deltas_;
};

/// A deficient segment j that a later segment k makes up for: the state
/// leaves part of j empty while k holds at least `remainder` more than the
/// ordered filling of the same total.
template <typename Scalar = double>
struct EsoWitness {
  int deficient_index;
  int compensating_index;
  Scalar remainder;
};

using PwlGridd = PwlGrid<double>;
using FillingStated = FillingState<double>;
using EsoWitnessd = EsoWitness<double>;

namespace detail {

template <typename Scalar>
long ceil_to_long(const Scalar& v) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return static_cast<long>(std::ceil(v));
  } else {
    // Exact types (rationals): truncate then correct.
    long t = static_cast<long>(v);
    if (Scalar(t) < v) ++t;
    return t;
  }
}

template <typename Scalar>
Scalar abs(const Scalar& v) {
  return v < Scalar(0) ? Scalar(-v) : v;
}

template <typename Scalar>
void check_domain(const PwlGrid<Scalar>& grid, const Scalar& y,
                  const char* what) {
  if (y < Scalar(0) || y > grid.y_max()) {
    throw std::domain_error(std::string(what) + ": y outside [0, y_max]");
  }
}

}  // namespace detail

/// phi_lambda = (2 lambda - 1) * y_max / L. Slope of segment `lambda`.
template <typename Scalar>
Scalar segment_slope(const PwlGrid<Scalar>& grid, int lambda) {
  if (lambda < 1 || lambda > grid.num_segments()) {
    throw std::invalid_argument("segment_slope: lambda out of range");
  }
  return Scalar(2 * lambda - 1) * grid.seg_width();
}

/// All slopes as a vector, phi_1..phi_L.
template <typename Scalar>
VectorX<Scalar> segment_slopes(const PwlGrid<Scalar>& grid) {
  VectorX<Scalar> phi(grid.num_segments());
  for (int l = 1; l <= grid.num_segments(); ++l) {
    phi[l - 1] = segment_slope(grid, l);
  }
  return phi;
}

/// Index of the last segment an ordered filling of `y` touches.
template <typename Scalar>
int lambda_up(const PwlGrid<Scalar>& grid, const Scalar& y) {
  detail::check_domain(grid, y, "lambda_up");
  if (y == Scalar(0) || grid.seg_width() == Scalar(0)) return 1;
  const long up = detail::ceil_to_long(Scalar(y / grid.seg_width()));
  if (up < 1) return 1;
  if (up > grid.num_segments()) return grid.num_segments();
  return static_cast<int>(up);
}

/// The ordered filling of `y`: full segments, then one partial, then zeros.
template <typename Scalar>
FillingState<Scalar> eso_fill(const PwlGrid<Scalar>& grid, const Scalar& y) {
  const int up = lambda_up(grid, y);
  const Scalar& h = grid.seg_width();
  VectorX<Scalar> d = VectorX<Scalar>::Zero(grid.num_segments());
  for (int l = 1; l < up; ++l) d[l - 1] = h;
  Scalar last = y - Scalar(up - 1) * h;
  if (last < Scalar(0)) last = Scalar(0);
  if (last > h) last = h;
  d[up - 1] = last;
  return FillingState<Scalar>(grid, std::move(d));
}

/// f = sum phi_lambda * Delta_lambda.
template <typename Scalar>
Scalar pwl_value(const FillingState<Scalar>& state) {
  return segment_slopes(state.grid()).dot(state.deltas());
}

/// |approx - y^2| / y^2 * 100.
template <typename Scalar>
Scalar relative_error(const Scalar& approx, const Scalar& y) {
  if (y == Scalar(0)) {
    throw std::domain_error("relative_error: undefined for y = 0");
  }
  const Scalar sq = y * y;
  return detail::abs(Scalar(approx - sq)) / sq * Scalar(100);
}

/// Default tolerance for is_eso: 1e-6 of a segment width.
template <typename Scalar>
Scalar default_eso_tol(const PwlGrid<Scalar>& grid) {
  return grid.seg_width() * Scalar(1e-6);
}

/// True when segments are filled strictly in order: some m with every
/// segment before m full (within tol) and every segment after m empty.
template <typename Scalar>
bool is_eso(const FillingState<Scalar>& state, const Scalar& tol) {
  const auto& d = state.deltas();
  const Scalar full = state.grid().seg_width() - tol;
  Eigen::Index m = 0;
  // The first non-full segment is the only sensible partial index: any
  // earlier choice leaves a longer tail that must be empty.
  while (m < d.size() && d[m] >= full) ++m;
  for (Eigen::Index i = m + 1; i < d.size(); ++i) {
    if (d[i] > tol) return false;
  }
  return true;
}

template <typename Scalar>
bool is_eso(const FillingState<Scalar>& state) {
  return is_eso(state, default_eso_tol(state.grid()));
}

/// Closed-form absolute error of the ordered filling:
/// (up*h - y) * (y - (up-1)*h).
template <typename Scalar>
Scalar eso_error(const PwlGrid<Scalar>& grid, const Scalar& y) {
  if (!(y > Scalar(0)) || y > grid.y_max()) {
    throw std::domain_error("eso_error: y outside (0, y_max]");
  }
  const int up = lambda_up(grid, y);
  const Scalar& h = grid.seg_width();
  return (Scalar(up) * h - y) * (y - Scalar(up - 1) * h);
}

/// When the state breaks the ordering, finds j < k where segment j is short
/// and segment k holds more than the ordered filling of the same total.
/// `remainder` is the part of j's gap that k covers.
template <typename Scalar>
std::optional<EsoWitness<Scalar>> compensation_witness(
    const FillingState<Scalar>& state, const Scalar& tol = Scalar(0)) {
  if (is_eso(state, tol)) return std::nullopt;
  const auto& grid = state.grid();
  Scalar y = state.total();
  if (y > grid.y_max()) y = grid.y_max();
  const auto ordered = eso_fill(grid, y);
  const auto& d = state.deltas();
  const auto& e = ordered.deltas();
  // Prefix sums of the ordered filling dominate every other filling with the
  // same total, so the first difference is a shortfall.
  Eigen::Index j = 0;
  while (j < d.size() && !(d[j] < e[j] - tol)) ++j;
  if (j == d.size()) return std::nullopt;
  for (Eigen::Index k = j + 1; k < d.size(); ++k) {
    const Scalar excess = d[k] - e[k];
    if (excess > tol) {
      const Scalar gap = grid.seg_width() - d[j];
      return EsoWitness<Scalar>{static_cast<int>(j + 1),
                                static_cast<int>(k + 1),
                                gap < excess ? gap : excess};
    }
  }
  return std::nullopt;
}

/// Slack used when comparing the brute-force minimum to the ordered filling:
/// the steepest slope times one search step.
template <typename Scalar>
Scalar oracle_slack(const PwlGrid<Scalar>& grid, int steps_per_segment) {
  return segment_slope(grid, grid.num_segments()) * grid.seg_width() /
         Scalar(steps_per_segment);
}

/// Exhaustive minimum of pwl_value over fillings whose segments lie on a
/// uniform grid of `steps_per_segment` steps and whose total is within one
/// step of `y`. Only for small grids (at most 6 segments).
template <typename Scalar>
Scalar min_pwl_oracle(const PwlGrid<Scalar>& grid, const Scalar& y,
                      int steps_per_segment) {
  if (grid.num_segments() > 6) {
    throw std::invalid_argument("min_pwl_oracle: at most 6 segments");
  }
  if (steps_per_segment < 2) {
    throw std::invalid_argument("min_pwl_oracle: steps_per_segment >= 2");
  }
  detail::check_domain(grid, y, "min_pwl_oracle");
  const int n = grid.num_segments();
  const Scalar step = grid.seg_width() / Scalar(steps_per_segment);
  const VectorX<Scalar> phi = segment_slopes(grid);
  // Integer total tolerance: one step, with a hair of float headroom.
  const Scalar lo = y - step * Scalar(1.000001);
  const Scalar hi = y + step * Scalar(1.000001);

  std::optional<Scalar> best;
  std::function<void(int, int, Scalar)> visit = [&](int seg, long units,
                                                    Scalar value) {
    const Scalar sum = Scalar(units) * step;
    if (sum > hi) return;
    const Scalar reach =
        sum + Scalar(static_cast<long>(n - seg) * steps_per_segment) * step;
    if (reach < lo) return;
    if (seg == n) {
      if (sum >= lo && (!best || value < *best)) best = value;
      return;
    }
    for (int s = 0; s <= steps_per_segment; ++s) {
      visit(seg + 1, units + s, value + phi[seg] * Scalar(s) * step);
    }
  };
  visit(0, 0, Scalar(0));
  if (!best) {
    throw std::logic_error("min_pwl_oracle: no filling within tolerance");
  }
  return *best;
}

}  // namespace sopwl
