#include "oksir/simgen.hpp"

#include "oksir/error.hpp"

#include <cmath>
#include <tuple>

namespace oksir {

std::string to_string(SimModel model) {
    return model == SimModel::linear_ratio ? "linear_ratio" : "sine_product";
}

SimModel sim_model_from_string(std::string_view name) {
    if (name == "linear_ratio" || name == "linear") return SimModel::linear_ratio;
    if (name == "sine_product" || name == "sine") return SimModel::sine_product;
    throw InputError("unknown simulation model '" + std::string(name) + "'");
}

void SimConfig::validate() const {
    if (model == SimModel::linear_ratio && p < 5) throw InputError("linear_ratio needs p >= 5");
    if (model == SimModel::sine_product && p < 3) throw InputError("sine_product needs p >= 3");
    if (n < 0) throw InputError("sample count must be nonnegative");
}

Eigen::MatrixXd ar_covariance(int p) {
    Eigen::MatrixXd s(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) s(i, j) = std::pow(0.5, std::abs(i - j));
    }
    return s;
}

double linear_ratio_response(const Eigen::Ref<const Eigen::VectorXd>& x, double noise) {
    const double den = x[3] + x[4] + 1.5;
    return (x[0] + x[1] + x[2]) / (0.5 + den * den) + noise;
}

double sine_product_response(const Eigen::Ref<const Eigen::VectorXd>& x, double noise) {
    return (std::sin(x[0]) + std::sin(x[1])) * (1.0 + std::sin(x[2])) + 0.1 * noise;
}

std::pair<double, double> true_statistics(SimModel model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (model == SimModel::linear_ratio) return {x[0] + x[1] + x[2], x[3] + x[4]};
    return {std::sin(x[0]) + std::sin(x[1]), 1.0 + std::sin(x[2])};
}

SimStream::SimStream(SimConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    if (cfg_.model == SimModel::linear_ratio && !cfg_.ar1_sampling) {
        Eigen::LLT<Eigen::MatrixXd> llt(ar_covariance(cfg_.p));
        chol_ = llt.matrixL();
    }
}

SimSample SimStream::next() {
    SimSample s;
    s.x.resize(cfg_.p);
    for (int j = 0; j < cfg_.p; ++j) s.x[j] = normal_(rng_);
    if (cfg_.model == SimModel::linear_ratio) {
        if (cfg_.ar1_sampling) {
            // x_1 = z_1, x_j = 0.5 x_{j-1} + sqrt(0.75) z_j has covariance 0.5^|i-j|
            const double innov = std::sqrt(0.75);
            for (int j = 1; j < cfg_.p; ++j) s.x[j] = 0.5 * s.x[j - 1] + innov * s.x[j];
        } else {
            s.x = chol_.triangularView<Eigen::Lower>() * s.x;
        }
    }
    const double e = normal_(rng_);
    s.y = cfg_.model == SimModel::linear_ratio ? linear_ratio_response(s.x, e) : sine_product_response(s.x, e);
    std::tie(s.v1, s.v2) = true_statistics(cfg_.model, s.x);
    return s;
}

std::vector<SimSample> simulate(const SimConfig& cfg) {
    SimStream stream(cfg);
    std::vector<SimSample> out;
    out.reserve(static_cast<std::size_t>(cfg.n));
    for (long i = 0; i < cfg.n; ++i) out.push_back(stream.next());
    return out;
}

SimTable to_table(const std::vector<SimSample>& samples) {
    SimTable t;
    const auto n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index p = samples.empty() ? 0 : samples.front().x.size();
    t.x.resize(n, p);
    t.y.resize(n);
    t.v.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        t.x.row(i) = s.x.transpose();
        t.y[i] = s.y;
        t.v(i, 0) = s.v1;
        t.v(i, 1) = s.v2;
    }
    return t;
}

}  // namespace oksir
