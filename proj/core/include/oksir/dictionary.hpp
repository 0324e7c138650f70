#pragma once

#include "oksir/kernel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace oksir {

/// Outcome of the approximate-linear-dependence test for one input.
struct AldResult {
    Eigen::VectorXd a_tilde;  ///< least-squares coefficients of phi(x) on the dictionary atoms
    double epsilon{0.0};      ///< squared residual of that projection, clamped at zero
    bool admitted{false};     ///< epsilon > nu: the input becomes a new atom
    Eigen::VectorXd k_vec;    ///< kernel vector against the atoms (reused by grow)
    double k_tt{0.0};         ///< k(x, x)
};

/// Residuals in [-kEpsilonClamp, 0) are rounding noise and are clamped to zero.
inline constexpr double kEpsilonClamp = 1e-10;

/// Sparse basis of the kernel feature space built with the ALD criterion.
///
/// Keeps the retained atoms, their Gram matrix K~, its inverse (updated recursively
/// through the bordered-inverse identity, never re-inverted in the hot path) and the
/// running Gram A^T A of the per-sample coefficient rows. Coefficient rows themselves
/// are not stored.
class Dictionary {
public:
    Dictionary() = default;

    /// One-atom dictionary {x}. Throws InputError when k(x, x) <= 0.
    static Dictionary initialize(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelConfig& cfg,
                                 double nu);

    /// Rebuilds a dictionary from serialized parts, validating shapes.
    static Dictionary from_parts(std::vector<Eigen::VectorXd> samples, Eigen::MatrixXd k_tilde,
                                 Eigen::MatrixXd k_tilde_inv, Eigen::MatrixXd ata, double nu);

    Eigen::Index size() const { return static_cast<Eigen::Index>(samples_.size()); }
    bool empty() const { return samples_.empty(); }
    Eigen::Index input_dim() const { return empty() ? 0 : samples_.front().size(); }
    double nu() const { return nu_; }

    const std::vector<Eigen::VectorXd>& samples() const { return samples_; }
    const Eigen::MatrixXd& k_tilde() const { return k_tilde_; }
    const Eigen::MatrixXd& k_tilde_inv() const { return k_tilde_inv_; }
    const Eigen::MatrixXd& ata() const { return ata_; }

    /// a~ = K~^{-1} k~(x) (with one refinement step), eps = k(x,x) - 2 k~^T a~ + a~^T K~ a~, which
    /// equals k(x,x) - k~^T a~ at the exact solution. Admitted iff eps > nu.
    /// Throws NumericError when eps < -kEpsilonClamp (the inverse has drifted).
    AldResult ald_test(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelConfig& cfg) const;

    /// Same as above with the kernel quantities already evaluated.
    AldResult ald_test(Eigen::VectorXd k_vec, double k_tt) const;

    /// Appends x as a new atom: bordered K~, rank-structured inverse update, A^T A gains a unit corner.
    /// Throws NumericError when ald.epsilon <= 0 and StateError when the test did not admit x.
    void grow(const Eigen::Ref<const Eigen::VectorXd>& x, const AldResult& ald);

    /// Case of an approximately dependent input: A^T A += a~ a~^T.
    void absorb(const AldResult& ald);

    /// Reinstates a previous A^T A (rollback of absorb).
    void restore_ata(Eigen::MatrixXd ata) noexcept { ata_ = std::move(ata); }

    /// max |K~ K~^{-1} - I|.
    double inverse_residual() const;

    /// max |K~^{-1} - dense_inverse(K~)|, the drift of the recursive inverse.
    double inverse_drift() const;

private:
    std::vector<Eigen::VectorXd> samples_;
    Eigen::MatrixXd k_tilde_;
    Eigen::MatrixXd k_tilde_inv_;
    Eigen::MatrixXd ata_;
    double nu_{0.0};
};

}  // namespace oksir
