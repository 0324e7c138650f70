#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace oksir {

class Dictionary;

enum class KernelFamily { additive_gaussian, gaussian_rbf };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Mercer kernel selection. `sigma` is the window width of the Gaussian terms.
class KernelConfig {
public:
    KernelConfig() = default;
    KernelConfig(KernelFamily family, double sigma);

    KernelFamily family() const { return family_; }
    double sigma() const { return sigma_; }

private:
    KernelFamily family_{KernelFamily::additive_gaussian};
    double sigma_{2.0};
};

/// k(x, z). The additive Gaussian family is sum_j exp(-(x_j - z_j)^2 / (2 sigma^2)).
double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& z,
                   const KernelConfig& cfg);

/// Kernel values of `x` against every dictionary atom, in atom order.
Eigen::VectorXd kernel_vector(const Dictionary& dict,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const KernelConfig& cfg);

/// Gram matrix of the rows of `points`.
Eigen::MatrixXd gram_matrix(const Eigen::Ref<const Eigen::MatrixXd>& points, const KernelConfig& cfg);

/// Kernel values of `x` against each row of `points`.
Eigen::VectorXd kernel_column(const Eigen::Ref<const Eigen::MatrixXd>& points,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const KernelConfig& cfg);

}  // namespace oksir
