#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace oksir {

enum class SimModel {
    linear_ratio,  ///< y = (x1+x2+x3) / (0.5 + (x4+x5+1.5)^2) + e,  x ~ N(0, 0.5^|i-j|)
    sine_product,  ///< y = (sin x1 + sin x2)(1 + sin x3) + 0.1 e,  x ~ N(0, I)
};

std::string to_string(SimModel model);
SimModel sim_model_from_string(std::string_view name);

struct SimConfig {
    SimModel model{SimModel::linear_ratio};
    int p{100};
    long n{1000};
    std::uint64_t seed{1};
    bool ar1_sampling{false};  ///< linear_ratio only: recursive AR(1) draw instead of Cholesky

    void validate() const;
};

/// One draw with its two ground-truth summary statistics.
struct SimSample {
    Eigen::VectorXd x;
    double y{0.0};
    double v1{0.0};
    double v2{0.0};
};

/// Covariance 0.5^|i-j| of the linear_ratio design.
Eigen::MatrixXd ar_covariance(int p);

double linear_ratio_response(const Eigen::Ref<const Eigen::VectorXd>& x, double noise);
double sine_product_response(const Eigen::Ref<const Eigen::VectorXd>& x, double noise);

/// Ground truth (v1, v2) of an input under `model`.
std::pair<double, double> true_statistics(SimModel model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Seeded infinite generator.
class SimStream {
public:
    explicit SimStream(SimConfig cfg);

    SimSample next();
    const SimConfig& config() const { return cfg_; }

private:
    SimConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    Eigen::MatrixXd chol_;  ///< lower Cholesky factor of the design covariance
};

/// First cfg.n draws of SimStream(cfg).
std::vector<SimSample> simulate(const SimConfig& cfg);

/// Stacks samples into (X, y, V) with V holding (v1, v2).
struct SimTable {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::MatrixXd v;
};
SimTable to_table(const std::vector<SimSample>& samples);

}  // namespace oksir
