#pragma once

#include <Eigen/Dense>

#include "betagas/measure.hpp"

namespace betagas {

/// Average of log|x - y| over y uniform in [lo, hi]; log|x - lo| when lo == hi.
///
/// At the centre of the cell this is log(width / 2) - 1, the diagonal rule for
/// the integrable singularity.
double cell_log_average(double x, double lo, double hi) noexcept;

/// Average of 1 / (x - y) over y uniform in [lo, hi] (principal value inside).
double cell_inverse_average(double x, double lo, double hi) noexcept;

/// 2 * int log|x - y| dmu(y), cell-averaged.
double log_field(const DiscreteMeasure& mu, double x) noexcept;

/// d/dx of log_field, evaluated in closed form.
double log_field_derivative(const DiscreteMeasure& mu, double x) noexcept;

/// Stieltjes transform int dmu(y) / (x - y).
double stieltjes(const DiscreteMeasure& mu, double x) noexcept;

/// Symmetrized collocation matrix K_ij = cell_log_average(x_i, cell_j).
Eigen::MatrixXd log_kernel_matrix(std::span<const double> nodes, std::span<const Interval> cells);

}  // namespace betagas
