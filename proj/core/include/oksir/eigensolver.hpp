#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace oksir {

/// Learning-rate schedule for the stochastic eigen-update.
struct EtaSchedule {
    enum class Kind { inverse_t, inverse_t_then_fixed };

    Kind kind{Kind::inverse_t_then_fixed};
    long t0{5};
    double eta{0.2};

    static EtaSchedule inverse_t() { return {Kind::inverse_t, 0, 0.0}; }
    static EtaSchedule inverse_t_then_fixed(long t0, double eta) { return {Kind::inverse_t_then_fixed, t0, eta}; }

    /// "inverse_t" or "inverse_t_then_fixed:<t0>:<eta>".
    static EtaSchedule parse(std::string_view text);
    std::string to_string() const;

    /// 1/t, switching to the fixed rate once t > t0.
    double rate(long t) const;
    bool fixed_phase(long t) const { return kind == Kind::inverse_t_then_fixed && t > t0; }
};

/// Which matrix plays the numerator role in the stochastic update.
///
/// With B = K~ Q K~ (between slices) and C = K~ A^T A K~ (total):
///   generalized_hebbian: Phi - eta (C Phi Phi^T - I) B Phi, whose stable fixed points are the
///                        leading solutions of B a = lambda C a normalized to Phi^T C Phi = I;
///   swapped_roles:       Phi - eta (B Phi Phi^T - I) C Phi. Its stable fixed
///                        points are the leading solutions of C a = mu B a, i.e. the trailing
///                        KSIR directions, and it grows without bound along the null space of B.
enum class UpdateRule { generalized_hebbian, swapped_roles };

std::string to_string(UpdateRule rule);
UpdateRule update_rule_from_string(std::string_view name);

/// One stochastic iterate at a fixed step size, without any guard.
Eigen::MatrixXd phi_iterate(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                            const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                            const Eigen::Ref<const Eigen::MatrixXd>& q,
                            const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta,
                            UpdateRule rule = UpdateRule::generalized_hebbian);

/// Magnitude beyond which an iterate counts as diverged.
inline constexpr double kDivergenceBound = 1e6;
inline constexpr int kMaxHalvings = 20;

/// The m x d block Phi whose columns are the coefficient vectors of the directions.
class ProjectionState {
public:
    ProjectionState() = default;

    /// 1 x d block with entries drawn from N(0, 0.001) using `seed`.
    static ProjectionState initialize(int d, std::uint64_t seed, EtaSchedule schedule,
                                      UpdateRule rule = UpdateRule::generalized_hebbian);

    static ProjectionState from_parts(Eigen::MatrixXd phi, EtaSchedule schedule, UpdateRule rule,
                                      long step, int halvings);

    const Eigen::MatrixXd& phi() const { return phi_; }
    Eigen::Index rows() const { return phi_.rows(); }
    int dim() const { return static_cast<int>(phi_.cols()); }
    long step() const { return step_; }
    const EtaSchedule& schedule() const { return schedule_; }
    UpdateRule rule() const { return rule_; }
    int halvings() const { return halvings_; }

    /// Rate for the step that is about to run (sample index step() + 1).
    double learning_rate() const { return schedule_.rate(step_ + 1); }

    /// One stochastic step with the divergence guard: on a non-finite or exploding iterate the
    /// step size is halved and the step re-applied from the current Phi, at most kMaxHalvings
    /// times (DivergenceError afterwards). Halvings taken in the fixed phase persist.
    void update_case1(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                      const Eigen::Ref<const Eigen::MatrixXd>& q,
                      const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta);

    /// Pads Phi with a zero row, then steps as in update_case1.
    void update_case2(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                      const Eigen::Ref<const Eigen::MatrixXd>& q,
                      const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta);

    /// Same, with `new_row` (1 x d) as the appended row instead of zeros.
    void update_case2(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                      const Eigen::Ref<const Eigen::MatrixXd>& q,
                      const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta,
                      const Eigen::Ref<const Eigen::RowVectorXd>& new_row);

    /// Row drawn like the initial block, N(0, 0.001) per entry, from a generator seeded by
    /// (seed, row). Stateless so that a reloaded model draws the same rows.
    static Eigen::RowVectorXd random_row(int d, std::uint64_t seed, Eigen::Index row);

    /// Copy of Phi; column j holds the coefficients of direction j.
    Eigen::MatrixXd extract_directions() const { return phi_; }

    /// Overwrites Phi (same shape). Used by tests and by diagnostics.
    void set_phi(Eigen::MatrixXd phi);

private:
    void guarded_step(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                      const Eigen::Ref<const Eigen::MatrixXd>& q,
                      const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta);

    Eigen::MatrixXd phi_;
    EtaSchedule schedule_{};
    UpdateRule rule_{UpdateRule::generalized_hebbian};
    long step_{1};
    int halvings_{0};
};

}  // namespace oksir
