#include "oksir/dictionary.hpp"

#include "oksir/error.hpp"

#include <cmath>
#include <string>

namespace oksir {

Dictionary Dictionary::initialize(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelConfig& cfg, double nu) {
    const double k11 = kernel_eval(x, x, cfg);
    if (!(k11 > 0.0)) throw InputError("invalid kernel: k(x1, x1) must be positive");

    Dictionary dict;
    dict.samples_.emplace_back(x);
    dict.k_tilde_ = Eigen::MatrixXd::Constant(1, 1, k11);
    dict.k_tilde_inv_ = Eigen::MatrixXd::Constant(1, 1, 1.0 / k11);
    dict.ata_ = Eigen::MatrixXd::Identity(1, 1);
    dict.nu_ = nu;
    return dict;
}

Dictionary Dictionary::from_parts(std::vector<Eigen::VectorXd> samples, Eigen::MatrixXd k_tilde,
                                  Eigen::MatrixXd k_tilde_inv, Eigen::MatrixXd ata, double nu) {
    const auto m = static_cast<Eigen::Index>(samples.size());
    auto square = [m](const Eigen::MatrixXd& a) { return a.rows() == m && a.cols() == m; };
    if (!square(k_tilde) || !square(k_tilde_inv) || !square(ata)) {
        throw FormatError("dictionary matrices do not match the number of atoms");
    }
    for (const auto& s : samples) {
        if (s.size() != samples.front().size()) throw FormatError("dictionary atoms differ in dimension");
    }
    Dictionary dict;
    dict.samples_ = std::move(samples);
    dict.k_tilde_ = std::move(k_tilde);
    dict.k_tilde_inv_ = std::move(k_tilde_inv);
    dict.ata_ = std::move(ata);
    dict.nu_ = nu;
    return dict;
}

AldResult Dictionary::ald_test(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelConfig& cfg) const {
    if (empty()) throw StateError("ald_test: dictionary is empty");
    if (x.size() != input_dim()) throw InputError("ald_test: input dimension does not match the dictionary");
    return ald_test(kernel_vector(*this, x, cfg), kernel_eval(x, x, cfg));
}

AldResult Dictionary::ald_test(Eigen::VectorXd k_vec, double k_tt) const {
    if (empty()) throw StateError("ald_test: dictionary is empty");
    if (k_vec.size() != size()) throw InputError("ald_test: kernel vector length does not match the dictionary");

    AldResult r;
    r.a_tilde = k_tilde_inv_ * k_vec;
    // One refinement step against the exact K~ keeps a~ accurate once the recursive inverse has
    // drifted, and the quadratic form is flat at the optimum, so eps only sees second-order error.
    r.a_tilde += k_tilde_inv_ * (k_vec - k_tilde_ * r.a_tilde);
    double eps = k_tt - 2.0 * k_vec.dot(r.a_tilde) + r.a_tilde.dot(k_tilde_ * r.a_tilde);
    if (!std::isfinite(eps)) throw NumericError("ald_test: non-finite residual");
    if (eps < 0.0) {
        if (eps < -kEpsilonClamp) {
            throw NumericError("ald_test: negative residual " + std::to_string(eps) +
                               " (inverse Gram has lost accuracy)");
        }
        eps = 0.0;
    }
    r.epsilon = eps;
    r.admitted = eps > nu_;
    r.k_vec = std::move(k_vec);
    r.k_tt = k_tt;
    return r;
}

void Dictionary::grow(const Eigen::Ref<const Eigen::VectorXd>& x, const AldResult& ald) {
    if (!ald.admitted) throw StateError("grow: the ALD test did not admit this input");
    if (!(ald.epsilon > 0.0)) throw NumericError("grow: nonpositive ALD residual, bordered inverse is undefined");
    const Eigen::Index m = size();
    if (ald.a_tilde.size() != m || ald.k_vec.size() != m) throw InputError("grow: ALD result does not match dictionary");
    if (x.size() != input_dim()) throw InputError("grow: input dimension does not match the dictionary");

    const double inv_eps = 1.0 / ald.epsilon;
    Eigen::MatrixXd k(m + 1, m + 1);
    k.topLeftCorner(m, m) = k_tilde_;
    k.topRightCorner(m, 1) = ald.k_vec;
    k.bottomLeftCorner(1, m) = ald.k_vec.transpose();
    k(m, m) = ald.k_tt;

    Eigen::MatrixXd inv(m + 1, m + 1);
    inv.topLeftCorner(m, m) = k_tilde_inv_ + inv_eps * ald.a_tilde * ald.a_tilde.transpose();
    inv.topRightCorner(m, 1) = -inv_eps * ald.a_tilde;
    inv.bottomLeftCorner(1, m) = -inv_eps * ald.a_tilde.transpose();
    inv(m, m) = inv_eps;
    inv.triangularView<Eigen::StrictlyLower>() = inv.transpose();

    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(m + 1, m + 1);
    ata.topLeftCorner(m, m) = ata_;
    ata(m, m) = 1.0;

    samples_.emplace_back(x);
    k_tilde_ = std::move(k);
    k_tilde_inv_ = std::move(inv);
    ata_ = std::move(ata);
}

void Dictionary::absorb(const AldResult& ald) {
    if (ald.a_tilde.size() != size()) throw InputError("absorb: coefficient length does not match dictionary");
    ata_.noalias() += ald.a_tilde * ald.a_tilde.transpose();
}

double Dictionary::inverse_residual() const {
    if (empty()) return 0.0;
    const Eigen::MatrixXd r = k_tilde_ * k_tilde_inv_ - Eigen::MatrixXd::Identity(size(), size());
    return r.cwiseAbs().maxCoeff();
}

double Dictionary::inverse_drift() const {
    if (empty()) return 0.0;
    const Eigen::MatrixXd dense = k_tilde_.ldlt().solve(Eigen::MatrixXd::Identity(size(), size()));
    return (dense - k_tilde_inv_).cwiseAbs().maxCoeff();
}

}  // namespace oksir
