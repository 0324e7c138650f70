#include "oksir/kernel.hpp"

#include "oksir/dictionary.hpp"
#include "oksir/error.hpp"

#include <cmath>

namespace oksir {

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::additive_gaussian:
            return "additive_gaussian";
        case KernelFamily::gaussian_rbf:
            return "gaussian_rbf";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
    if (name == "additive_gaussian") return KernelFamily::additive_gaussian;
    if (name == "gaussian_rbf") return KernelFamily::gaussian_rbf;
    throw InputError("unknown kernel family '" + std::string(name) + "'");
}

KernelConfig::KernelConfig(KernelFamily family, double sigma) : family_(family), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InputError("kernel window width must be positive and finite");
    }
}

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& z,
                   const KernelConfig& cfg) {
    if (x.size() != z.size()) {
        throw InputError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(z.size()) + ")");
    }
    if (x.size() == 0) throw InputError("kernel_eval: empty input");

    const double scale = -1.0 / (2.0 * cfg.sigma() * cfg.sigma());
    switch (cfg.family()) {
        case KernelFamily::additive_gaussian: {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                const double diff = x[j] - z[j];
                sum += std::exp(scale * diff * diff);
            }
            return sum;
        }
        case KernelFamily::gaussian_rbf:
            return std::exp(scale * (x - z).squaredNorm());
    }
    return 0.0;
}

Eigen::VectorXd kernel_vector(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const KernelConfig& cfg) {
    if (dict.empty()) throw StateError("kernel_vector: dictionary is empty");
    Eigen::VectorXd out(dict.size());
    const auto& atoms = dict.samples();
    for (Eigen::Index i = 0; i < dict.size(); ++i) {
        out[i] = kernel_eval(atoms[static_cast<std::size_t>(i)], x, cfg);
    }
    return out;
}

Eigen::MatrixXd gram_matrix(const Eigen::Ref<const Eigen::MatrixXd>& points, const KernelConfig& cfg) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = points.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_eval(xi, points.row(j).transpose(), cfg);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::VectorXd kernel_column(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const KernelConfig& cfg) {
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out[i] = kernel_eval(points.row(i).transpose(), x, cfg);
    }
    return out;
}

}  // namespace oksir
