#pragma once

#include <Eigen/Dense>

namespace oksir {

/// Running mean of the coefficient rows, i.e. the feature-space center expressed in the
/// dictionary basis.
struct CenteringState {
    Eigen::VectorXd a_bar;
    bool enabled{true};
    long t{0};  ///< number of rows averaged so far

    /// When `grew`, a_bar is zero-padded first (the new atom had no weight in past rows).
    void update_mean(const Eigen::Ref<const Eigen::VectorXd>& a, bool grew);
};

/// K - 1 a^T K - K a 1^T + (a^T K a) 1 1^T
Eigen::MatrixXd center_matrix(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                              const Eigen::Ref<const Eigen::VectorXd>& a_bar);

/// k - (a^T k) 1 - K a + (a^T K a) 1
Eigen::VectorXd center_vector(const Eigen::Ref<const Eigen::VectorXd>& k_vec,
                              const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                              const Eigen::Ref<const Eigen::VectorXd>& a_bar);

}  // namespace oksir
