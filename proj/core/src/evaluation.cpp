#include "oksir/evaluation.hpp"

#include "oksir/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace oksir {

double abs_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("abs_correlation: inputs differ in length");
    if (a.size() < 2) throw InputError("abs_correlation: need at least two observations");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw InputError("abs_correlation: undefined for a constant input");
    return std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb));
}

double abs_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    const Eigen::VectorXd ac = a;
    const Eigen::VectorXd bc = b;
    return abs_correlation(std::span<const double>(ac.data(), static_cast<std::size_t>(ac.size())),
                           std::span<const double>(bc.data(), static_cast<std::size_t>(bc.size())));
}

Eigen::VectorXd direction_match(const Eigen::Ref<const Eigen::MatrixXd>& estimated, const Eigen::Ref<const Eigen::MatrixXd>& truth) {
    if (estimated.rows() != truth.rows()) throw InputError("direction_match: row counts differ");
    if (estimated.cols() < truth.cols()) throw InputError("direction_match: fewer estimated than true components");

    const Eigen::Index de = estimated.cols();
    const Eigen::Index dt = truth.cols();
    Eigen::MatrixXd cor(de, dt);
    for (Eigen::Index i = 0; i < de; ++i) {
        for (Eigen::Index j = 0; j < dt; ++j) cor(i, j) = abs_correlation(estimated.col(i), truth.col(j));
    }

    Eigen::VectorXd matched = Eigen::VectorXd::Constant(dt, -1.0);
    std::vector<bool> used(static_cast<std::size_t>(de), false);
    for (Eigen::Index round = 0; round < dt; ++round) {
        double best = -1.0;
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index i = 0; i < de; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < dt; ++j) {
                if (matched[j] >= 0.0) continue;
                if (cor(i, j) > best) {
                    best = cor(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        used[static_cast<std::size_t>(bi)] = true;
        matched[bj] = best;
    }
    return matched;
}

namespace {

// Log of the unnormalized Gaussian product weight between two rows.
double log_weight(const Eigen::Ref<const Eigen::MatrixXd>& a, Eigen::Index i, const Eigen::Ref<const Eigen::MatrixXd>& b,
                  Eigen::Index j, const Eigen::VectorXd& inv_bw) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double z = (a(i, c) - b(j, c)) * inv_bw[c];
        s += z * z;
    }
    return -0.5 * s;
}

Eigen::MatrixXd take_rows(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
    return out;
}

Eigen::VectorXd take(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[idx[r]];
    return out;
}

double leave_one_out_mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& inv_bw) {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd lw(n);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            lw[j] = j == i ? -std::numeric_limits<double>::infinity() : log_weight(x, i, x, j, inv_bw);
            top = std::max(top, lw[j]);
        }
        double num = 0.0, den = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = std::exp(lw[j] - top);
            num += w * y[j];
            den += w;
        }
        const double r = y[i] - num / den;
        sse += r * r;
    }
    return sse / static_cast<double>(n);
}

}  // namespace

Eigen::VectorXd nadaraya_watson(const Eigen::Ref<const Eigen::MatrixXd>& train, const Eigen::Ref<const Eigen::VectorXd>& train_y,
                                const Eigen::Ref<const Eigen::MatrixXd>& query, const Eigen::Ref<const Eigen::VectorXd>& bandwidths) {
    if (train.rows() == 0) throw InputError("nadaraya_watson: empty training set");
    if (train.rows() != train_y.size() || train.cols() != query.cols() || bandwidths.size() != train.cols()) {
        throw InputError("nadaraya_watson: dimension mismatch");
    }
    if (!(bandwidths.array() > 0.0).all()) throw InputError("nadaraya_watson: bandwidths must be positive");
    const Eigen::VectorXd inv_bw = bandwidths.cwiseInverse();
    Eigen::VectorXd out(query.rows());
    Eigen::VectorXd lw(train.rows());
    for (Eigen::Index q = 0; q < query.rows(); ++q) {
        for (Eigen::Index j = 0; j < train.rows(); ++j) lw[j] = log_weight(query, q, train, j, inv_bw);
        const double top = lw.maxCoeff();
        double num = 0.0, den = 0.0;
        for (Eigen::Index j = 0; j < train.rows(); ++j) {
            const double w = std::exp(lw[j] - top);
            num += w * train_y[j];
            den += w;
        }
        out[q] = num / den;
    }
    return out;
}

double kernel_regression_cv(const Eigen::Ref<const Eigen::MatrixXd>& features, const Eigen::Ref<const Eigen::VectorXd>& y,
                            const KernelRegressionCvOptions& opts) {
    const Eigen::Index n = features.rows();
    if (y.size() != n) throw InputError("kernel_regression_cv: features and response differ in length");
    if (opts.folds < 2) throw InputError("kernel_regression_cv: need at least two folds");
    if (opts.bandwidth_grid.empty()) throw InputError("kernel_regression_cv: empty bandwidth grid");
    if (n < 2 * opts.folds) throw InputError("kernel_regression_cv: too few rows, some fold would be empty or singleton");
    if (features.cols() == 0) throw InputError("kernel_regression_cv: no feature columns");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(opts.seed);
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    for (int f = 0; f < opts.folds; ++f) {
        std::vector<Eigen::Index> train_idx, test_idx;
        for (std::size_t r = 0; r < order.size(); ++r) {
            (static_cast<int>(r % static_cast<std::size_t>(opts.folds)) == f ? test_idx : train_idx).push_back(order[r]);
        }
        const Eigen::MatrixXd xtr = take_rows(features, train_idx);
        const Eigen::VectorXd ytr = take(y, train_idx);
        const Eigen::MatrixXd xte = take_rows(features, test_idx);
        const Eigen::VectorXd yte = take(y, test_idx);

        Eigen::VectorXd sd(xtr.cols());
        for (Eigen::Index c = 0; c < xtr.cols(); ++c) {
            const double mean = xtr.col(c).mean();
            const double var = (xtr.col(c).array() - mean).square().mean();
            sd[c] = var > 0.0 ? std::sqrt(var) : 1.0;
        }

        double best_err = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_bw = sd;
        for (const double factor : opts.bandwidth_grid) {
            if (!(factor > 0.0)) throw InputError("kernel_regression_cv: bandwidth multiples must be positive");
            const Eigen::VectorXd bw = factor * sd;
            const double err = leave_one_out_mse(xtr, ytr, bw.cwiseInverse());
            if (err < best_err) {
                best_err = err;
                best_bw = bw;
            }
        }

        const Eigen::VectorXd pred = nadaraya_watson(xtr, ytr, xte, best_bw);
        const double sse = (yte - pred).squaredNorm();
        if (opts.metric == CvMetric::mse) {
            total += sse / static_cast<double>(yte.size());
        } else {
            const double sst = (yte.array() - yte.mean()).square().sum();
            if (!(sst > 0.0)) throw InputError("kernel_regression_cv: response is constant within a fold");
            total += sse / sst;
        }
    }
    return total / static_cast<double>(opts.folds);
}

}  // namespace oksir
