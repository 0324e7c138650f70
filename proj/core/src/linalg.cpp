#include "oksir/linalg.hpp"

#include "oksir/error.hpp"

#include <algorithm>
#include <cmath>

namespace oksir {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace

Eigen::VectorXd principal_angles(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (a.rows() != b.rows()) throw InputError("principal_angles: row counts differ");
    if (a.cols() == 0 || b.cols() == 0) return {};
    const Eigen::MatrixXd qa = orthonormal_basis(a);
    const Eigen::MatrixXd qb = orthonormal_basis(b);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
    const Eigen::VectorXd s = svd.singularValues();
    Eigen::VectorXd angles(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) angles[i] = std::acos(std::clamp(s[i], -1.0, 1.0));
    return angles;
}

double max_principal_angle(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
    const Eigen::VectorXd angles = principal_angles(a, b);
    return angles.size() == 0 ? 0.0 : angles.maxCoeff();
}

Eigen::VectorXd canonical_correlations(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (a.rows() != b.rows()) throw InputError("canonical_correlations: row counts differ");
    const Eigen::MatrixXd ac = a.rowwise() - a.colwise().mean();
    const Eigen::MatrixXd bc = b.rowwise() - b.colwise().mean();
    const Eigen::VectorXd angles = principal_angles(ac, bc);
    return angles.array().cos();
}

double asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    if (a.size() == 0) return 0.0;
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& a) { return a.allFinite(); }

}  // namespace oksir
