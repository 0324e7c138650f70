#pragma once

// Shared fixtures for the test binaries. Everything here is a plain reference
// computation, written without touching the recursive code paths under test.

#include <oksir/dictionary.hpp>
#include <oksir/kernel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <vector>

namespace oksir::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
    return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

inline Eigen::MatrixXd random_spd(Eigen::Index n, std::uint64_t seed, double shift = 0.5) {
    const Eigen::MatrixXd g = random_matrix(n, n, seed);
    return g * g.transpose() / static_cast<double>(n) + shift * Eigen::MatrixXd::Identity(n, n);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Scalar evaluation of the additive Gaussian kernel, one coordinate at a time.
inline double additive_kernel_by_hand(const std::vector<double>& x, const std::vector<double>& z, double sigma) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - z[j];
        s += std::exp(-(d * d) / (2.0 * sigma * sigma));
    }
    return s;
}

// ALD by brute force: minimize a^T K a - 2 a^T k + ktt with a general solver.
struct DenseAld {
    Eigen::VectorXd a;
    double epsilon;
};

inline DenseAld dense_ald(const Eigen::MatrixXd& k_tilde, const Eigen::VectorXd& k_vec, double k_tt) {
    const Eigen::VectorXd a = k_tilde.colPivHouseholderQr().solve(k_vec);
    return {a, a.dot(k_tilde * a) - 2.0 * a.dot(k_vec) + k_tt};
}

// Coefficient rows recorded next to a dictionary so the harness can rebuild A densely.
struct RecordedStream {
    Dictionary dict;
    std::vector<Eigen::VectorXd> rows;  // a_t, each padded to its length at time t
    std::vector<bool> grew;
};

inline RecordedStream run_dictionary(const Eigen::MatrixXd& xs, const KernelConfig& kernel, double nu) {
    RecordedStream rec;
    rec.dict = Dictionary::initialize(xs.row(0).transpose(), kernel, nu);
    rec.rows.push_back(Eigen::VectorXd::Ones(1));
    rec.grew.push_back(true);
    for (Eigen::Index t = 1; t < xs.rows(); ++t) {
        const AldResult ald = rec.dict.ald_test(xs.row(t).transpose(), kernel);
        if (ald.admitted) {
            rec.dict.grow(xs.row(t).transpose(), ald);
            Eigen::VectorXd unit = Eigen::VectorXd::Zero(rec.dict.size());
            unit[rec.dict.size() - 1] = 1.0;
            rec.rows.push_back(unit);
        } else {
            rec.dict.absorb(ald);
            rec.rows.push_back(ald.a_tilde);
        }
        rec.grew.push_back(ald.admitted);
    }
    return rec;
}

// n x m coefficient matrix with rows zero-padded to the final dictionary size.
inline Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows, Eigen::Index m) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        a.row(static_cast<Eigen::Index>(i)).head(rows[i].size()) = rows[i].transpose();
    }
    return a;
}

// Bounded inputs so the dictionary saturates.
inline Eigen::MatrixXd uniform_points(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = u(rng);
    return m;
}

// Largest principal angle between spans, via orthonormal bases and SVD.
inline double subspace_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(qa.transpose() * qb).singularValues();
    return std::acos(std::clamp(s.minCoeff(), -1.0, 1.0));
}

}  // namespace oksir::testing
