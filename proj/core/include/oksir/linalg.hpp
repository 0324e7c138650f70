#pragma once

#include <Eigen/Dense>

namespace oksir {

/// Principal angles (radians, ascending) between the column spans of a and b.
Eigen::VectorXd principal_angles(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                 const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Largest principal angle, or 0 for empty inputs.
double max_principal_angle(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Canonical correlations between the column spans of two sample matrices (rows are samples);
/// columns are mean-centered first. Descending.
Eigen::VectorXd canonical_correlations(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                       const Eigen::Ref<const Eigen::MatrixXd>& b);

/// max |a - a^T|
double asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& a);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& a);

}  // namespace oksir
