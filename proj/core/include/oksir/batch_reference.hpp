#pragma once

#include "oksir/kernel.hpp"
#include "oksir/slicing.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oksir {

/// Leading solutions of the regularized reduced problem
///   K Q K a = lambda (K G K + r K + r^2 I) a,
/// with K symmetric PSD, Q and G symmetric. Eigenvalues are sorted descending.
struct GeneralizedEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  ///< one column per solution
};

/// Dense solve through the eigen-decomposition of K followed by a diagonally scaled Cholesky
/// reduction, which stays accurate for tiny ridges. Throws NumericError if the reduction fails.
GeneralizedEigen solve_reduced_ksir(const Eigen::Ref<const Eigen::MatrixXd>& k,
                                    const Eigen::Ref<const Eigen::MatrixXd>& q,
                                    const Eigen::Ref<const Eigen::MatrixXd>& g, int d, double ridge);

/// Slice-averaging matrix J: J_ij = 1/n_h when i and j share slice h.
Eigen::MatrixXd slice_matrix(std::span<const double> ys, const SliceConfig& slices);

/// Offline centering (I - 11^T/n) K (I - 11^T/n).
Eigen::MatrixXd center_gram(const Eigen::Ref<const Eigen::MatrixXd>& k);

/// Near-zero ridges overfit badly once n is in the hundreds (the Gram's tail is noise), so the
/// default regularizes at the scale of the mean kernel diagonal.
inline constexpr double kDefaultRelativeRidge = 1.0;

struct BatchOptions {
    int dim{2};
    int num_slices{10};
    std::optional<std::vector<double>> cutpoints;
    std::optional<double> ridge;  ///< default kDefaultRelativeRidge * trace(K) / n on the Gram in use
    bool center{true};
};

struct BatchKsirResult {
    Eigen::MatrixXd coeffs;       ///< n x d, column j is c_j
    Eigen::VectorXd eigenvalues;  ///< descending
    double ridge{0.0};
    KernelConfig kernel;
    SliceConfig slices;
    Eigen::MatrixXd train_x;      ///< n x p
    bool centered{true};
    Eigen::VectorXd k_row_mean;   ///< (1/n) K 1, for centering new kernel columns
    double k_mean{0.0};           ///< (1/n^2) 1^T K 1
};

/// Batch KSIR on (X, y): K J K c = lambda (K^2 + r K + r^2 I) c on the (optionally centered) Gram.
BatchKsirResult batch_ksir(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y,
                           const KernelConfig& kernel, const BatchOptions& opts);

/// v_j = c_j^T K_x with K_x the (centered) kernel column against the training points.
Eigen::VectorXd batch_transform(const BatchKsirResult& result, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::MatrixXd batch_transform_rows(const BatchKsirResult& result, const Eigen::Ref<const Eigen::MatrixXd>& xs);

/// JSON form of a batch fit (format "oksir-batch-model"), same number formatting as save_model.
std::string save_batch_model(const BatchKsirResult& result);
/// Throws FormatError on malformed payloads.
BatchKsirResult load_batch_model(const std::string& payload);

}  // namespace oksir
