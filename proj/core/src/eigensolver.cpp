#include "oksir/eigensolver.hpp"

#include "oksir/error.hpp"
#include "oksir/linalg.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace oksir {

namespace {

bool diverged(const Eigen::MatrixXd& phi) {
    return !all_finite(phi) || (phi.size() > 0 && phi.cwiseAbs().maxCoeff() > kDivergenceBound);
}

}  // namespace

EtaSchedule EtaSchedule::parse(std::string_view text) {
    if (text == "inverse_t") return inverse_t();
    constexpr std::string_view prefix = "inverse_t_then_fixed";
    if (text.substr(0, prefix.size()) == prefix) {
        std::string rest(text.substr(prefix.size()));
        if (rest.empty()) return EtaSchedule{};
        long t0 = 0;
        double eta = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream in(rest);
        if (in >> c1 >> t0 >> c2 >> eta && c1 == ':' && c2 == ':' && in.peek() == EOF && t0 >= 0 && eta > 0.0) {
            return inverse_t_then_fixed(t0, eta);
        }
    }
    throw InputError("bad eta schedule '" + std::string(text) +
                     "' (expected inverse_t or inverse_t_then_fixed:<t0>:<eta>)");
}

std::string EtaSchedule::to_string() const {
    if (kind == Kind::inverse_t) return "inverse_t";
    std::ostringstream out;
    out.precision(17);
    out << "inverse_t_then_fixed:" << t0 << ':' << eta;
    return out.str();
}

double EtaSchedule::rate(long t) const {
    if (t < 1) throw InputError("learning rate requested for step < 1");
    if (fixed_phase(t)) return eta;
    return 1.0 / static_cast<double>(t);
}

std::string to_string(UpdateRule rule) {
    return rule == UpdateRule::generalized_hebbian ? "generalized_hebbian" : "swapped_roles";
}

UpdateRule update_rule_from_string(std::string_view name) {
    if (name == "generalized_hebbian") return UpdateRule::generalized_hebbian;
    if (name == "swapped_roles") return UpdateRule::swapped_roles;
    throw InputError("unknown update rule '" + std::string(name) + "'");
}

Eigen::MatrixXd phi_iterate(const Eigen::Ref<const Eigen::MatrixXd>& phi, const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                            const Eigen::Ref<const Eigen::MatrixXd>& q, const Eigen::Ref<const Eigen::MatrixXd>& ata,
                            double eta, UpdateRule rule) {
    const Eigen::Index m = phi.rows();
    if (k_tilde.rows() != m || k_tilde.cols() != m || q.rows() != m || q.cols() != m || ata.rows() != m ||
        ata.cols() != m) {
        throw InputError("phi update: operator sizes do not match Phi");
    }
    if (!(eta >= 0.0)) throw InputError("phi update: learning rate must be nonnegative");

    // Only m x d products: K (Q (K Phi)) and K (A^T A (K Phi)).
    const Eigen::MatrixXd k_phi = k_tilde * phi;
    const Eigen::MatrixXd b_phi = k_tilde * (q * k_phi);
    const Eigen::MatrixXd c_phi = k_tilde * (ata * k_phi);

    if (rule == UpdateRule::generalized_hebbian) {
        // Phi - eta (C Phi Phi^T - I) B Phi
        return phi - eta * (c_phi * (phi.transpose() * b_phi) - b_phi);
    }
    // Phi - eta (B Phi Phi^T - I) C Phi
    return phi - eta * (b_phi * (phi.transpose() * c_phi) - c_phi);
}

ProjectionState ProjectionState::initialize(int d, std::uint64_t seed, EtaSchedule schedule, UpdateRule rule) {
    if (d < 1) throw InputError("number of directions must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.001));
    ProjectionState ps;
    ps.phi_.resize(1, d);
    for (int j = 0; j < d; ++j) ps.phi_(0, j) = normal(rng);
    ps.schedule_ = schedule;
    ps.rule_ = rule;
    ps.step_ = 1;
    return ps;
}

ProjectionState ProjectionState::from_parts(Eigen::MatrixXd phi, EtaSchedule schedule, UpdateRule rule, long step,
                                            int halvings) {
    if (phi.cols() < 1 || step < 1 || halvings < 0) throw FormatError("invalid projection state");
    ProjectionState ps;
    ps.phi_ = std::move(phi);
    ps.schedule_ = schedule;
    ps.rule_ = rule;
    ps.step_ = step;
    ps.halvings_ = halvings;
    return ps;
}

void ProjectionState::set_phi(Eigen::MatrixXd phi) {
    if (phi.cols() != phi_.cols() && phi_.size() > 0) throw InputError("set_phi: column count is fixed");
    phi_ = std::move(phi);
}

void ProjectionState::update_case1(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                                   const Eigen::Ref<const Eigen::MatrixXd>& q, const Eigen::Ref<const Eigen::MatrixXd>& ata,
                                   double eta) {
    guarded_step(k_tilde, q, ata, eta);
}

void ProjectionState::update_case2(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                                   const Eigen::Ref<const Eigen::MatrixXd>& q, const Eigen::Ref<const Eigen::MatrixXd>& ata,
                                   double eta) {
    update_case2(k_tilde, q, ata, eta, Eigen::RowVectorXd::Zero(phi_.cols()));
}

void ProjectionState::update_case2(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                                   const Eigen::Ref<const Eigen::MatrixXd>& q, const Eigen::Ref<const Eigen::MatrixXd>& ata,
                                   double eta, const Eigen::Ref<const Eigen::RowVectorXd>& new_row) {
    if (new_row.size() != phi_.cols()) throw InputError("update_case2: new row has the wrong length");
    Eigen::MatrixXd padded(phi_.rows() + 1, phi_.cols());
    padded.topRows(phi_.rows()) = phi_;
    padded.row(phi_.rows()) = new_row;
    std::swap(phi_, padded);
    try {
        guarded_step(k_tilde, q, ata, eta);
    } catch (...) {
        std::swap(phi_, padded);
        throw;
    }
}

Eigen::RowVectorXd ProjectionState::random_row(int d, std::uint64_t seed, Eigen::Index row) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(static_cast<std::uint64_t>(row) >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.001));
    Eigen::RowVectorXd out(d);
    for (int j = 0; j < d; ++j) out[j] = normal(rng);
    return out;
}

void ProjectionState::guarded_step(const Eigen::Ref<const Eigen::MatrixXd>& k_tilde,
                                   const Eigen::Ref<const Eigen::MatrixXd>& q,
                                   const Eigen::Ref<const Eigen::MatrixXd>& ata, double eta) {
    const long t = step_ + 1;
    Eigen::MatrixXd next = phi_iterate(phi_, k_tilde, q, ata, eta, rule_);
    int halved = 0;
    while (diverged(next)) {
        if (halved == kMaxHalvings) {
            throw DivergenceError("eigen-update diverged after " + std::to_string(kMaxHalvings) +
                                  " step-size halvings at t=" + std::to_string(t));
        }
        eta *= 0.5;
        ++halved;
        next = phi_iterate(phi_, k_tilde, q, ata, eta, rule_);
    }
    phi_ = std::move(next);
    step_ = t;
    halvings_ += halved;
    if (halved > 0 && schedule_.fixed_phase(t)) schedule_.eta = eta;
}

}  // namespace oksir
