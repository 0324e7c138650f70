#include "oksir/centering.hpp"

#include "oksir/error.hpp"

namespace oksir {

void CenteringState::update_mean(const Eigen::Ref<const Eigen::VectorXd>& a, bool grew) {
    if (grew) {
        a_bar.conservativeResize(a_bar.size() + 1);
        a_bar[a_bar.size() - 1] = 0.0;
    }
    if (a.size() != a_bar.size()) throw InputError("update_mean: coefficient length does not match the running mean");
    const auto next = static_cast<double>(t + 1);
    a_bar = (static_cast<double>(t) * a_bar + a) / next;
    ++t;
}

Eigen::MatrixXd center_matrix(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde, const Eigen::Ref<const Eigen::VectorXd>& a_bar) {
    if (k_tilde.rows() != a_bar.size() || k_tilde.cols() != a_bar.size()) {
        throw InputError("center_matrix: dimension mismatch");
    }
    const Eigen::VectorXd ka = k_tilde * a_bar;
    const double aka = a_bar.dot(ka);
    Eigen::MatrixXd out = k_tilde;
    out.rowwise() -= ka.transpose();  // 1 (a^T K)
    out.colwise() -= ka;              // (K a) 1^T
    out.array() += aka;
    return out;
}

Eigen::VectorXd center_vector(const Eigen::Ref<const Eigen::VectorXd>& k_vec, const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                              const Eigen::Ref<const Eigen::VectorXd>& a_bar) {
    if (k_vec.size() != a_bar.size() || k_tilde.rows() != a_bar.size() || k_tilde.cols() != a_bar.size()) {
        throw InputError("center_vector: dimension mismatch");
    }
    const Eigen::VectorXd ka = k_tilde * a_bar;
    Eigen::VectorXd out = k_vec - ka;
    out.array() += a_bar.dot(ka) - a_bar.dot(k_vec);
    return out;
}

}  // namespace oksir
