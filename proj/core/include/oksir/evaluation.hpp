#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace oksir {

/// |Pearson correlation|. Throws InputError for length mismatch, n < 2 or a constant input.
double abs_correlation(std::span<const double> a, std::span<const double> b);
double abs_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Greedily pairs estimated columns with true columns by largest absolute correlation.
/// Returns the matched correlation for each true column, in true-column order.
Eigen::VectorXd direction_match(const Eigen::Ref<const Eigen::MatrixXd>& estimated,
                                const Eigen::Ref<const Eigen::MatrixXd>& truth);

enum class CvMetric {
    normalized_mse,  ///< sum (y - yhat)^2 / sum (y - ybar)^2 per fold
    mse,             ///< plain mean squared error per fold
};

struct KernelRegressionCvOptions {
    int folds{5};
    std::vector<double> bandwidth_grid{0.1, 0.2, 0.5, 1.0, 2.0, 5.0};  ///< multiples of column sd
    CvMetric metric{CvMetric::normalized_mse};
    std::uint64_t seed{7};
};

/// Nadaraya-Watson regression with a Gaussian product kernel: y_hat(v) = sum w_i y_i / sum w_i.
/// `bandwidths` holds one width per column of `train`.
Eigen::VectorXd nadaraya_watson(const Eigen::Ref<const Eigen::MatrixXd>& train,
                                const Eigen::Ref<const Eigen::VectorXd>& train_y,
                                const Eigen::Ref<const Eigen::MatrixXd>& query,
                                const Eigen::Ref<const Eigen::VectorXd>& bandwidths);

/// K-fold cross-validation error of Nadaraya-Watson regression of y on the columns of
/// `features`. Inside every training split the bandwidth multiple is picked from the grid by
/// leave-one-out error. Returns the mean over folds of the per-fold error.
double kernel_regression_cv(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const KernelRegressionCvOptions& opts = {});

}  // namespace oksir
