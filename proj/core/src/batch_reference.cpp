#include "oksir/batch_reference.hpp"

#include "oksir/error.hpp"

#include <vector>

namespace oksir {

GeneralizedEigen solve_reduced_ksir(const Eigen::Ref<const Eigen::MatrixXd>& k, const Eigen::Ref<const Eigen::MatrixXd>& q,
                                    const Eigen::Ref<const Eigen::MatrixXd>& g, int d, double ridge) {
    const Eigen::Index n = k.rows();
    if (k.cols() != n || q.rows() != n || q.cols() != n || g.rows() != n || g.cols() != n) {
        throw InputError("solve_reduced_ksir: operator sizes differ");
    }
    if (d < 1 || d > n) throw InputError("solve_reduced_ksir: need 1 <= d <= n");
    if (!(ridge >= 0.0)) throw InputError("solve_reduced_ksir: ridge must be nonnegative");

    // Work in the eigenbasis of K = U L U^T: the pencil becomes
    //   A' = L U^T Q U L,   B' = L U^T G U L + r L + r^2 I.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ks(k);
    if (ks.info() != Eigen::Success) throw NumericError("eigen-decomposition of the kernel matrix failed");
    const Eigen::VectorXd lambda = ks.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& u = ks.eigenvectors();

    Eigen::MatrixXd a = lambda.asDiagonal() * (u.transpose() * q * u) * lambda.asDiagonal();
    Eigen::MatrixXd b = lambda.asDiagonal() * (u.transpose() * g * u) * lambda.asDiagonal();
    b.diagonal().array() += ridge * lambda.array() + ridge * ridge;

    // Coordinates with a zero diagonal in B' carry no mass in either form.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (b(i, i) > 0.0) keep.push_back(i);
    }
    const auto r = static_cast<Eigen::Index>(keep.size());
    if (r < d) throw NumericError("reduced problem has fewer than d informative directions; increase the ridge");

    Eigen::VectorXd scale(r);
    Eigen::MatrixXd as(r, r), bs(r, r);
    for (Eigen::Index i = 0; i < r; ++i) scale[i] = 1.0 / std::sqrt(b(keep[i], keep[i]));
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) {
            as(i, j) = a(keep[i], keep[j]) * scale[i] * scale[j];
            bs(i, j) = b(keep[i], keep[j]) * scale[i] * scale[j];
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(bs);
    if (llt.info() != Eigen::Success) {
        throw NumericError("regularized constraint matrix is not positive definite; increase the ridge");
    }
    const auto& l = llt.matrixL();
    Eigen::MatrixXd s = l.solve(as);
    s = l.solve(s.transpose()).eval();
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss(s);
    if (ss.info() != Eigen::Success) throw NumericError("symmetric eigen-solver failed; increase the ridge");

    GeneralizedEigen out;
    out.values.resize(d);
    out.vectors.resize(n, d);
    for (int j = 0; j < d; ++j) {
        const Eigen::Index col = r - 1 - j;
        out.values[j] = ss.eigenvalues()[col];
        Eigen::VectorXd y = l.transpose().solve(ss.eigenvectors().col(col));
        y.array() *= scale.array();
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < r; ++i) alpha += y[i] * u.col(keep[i]);
        out.vectors.col(j) = alpha;
    }
    return out;
}

Eigen::MatrixXd slice_matrix(std::span<const double> ys, const SliceConfig& slices) {
    const auto n = static_cast<Eigen::Index>(ys.size());
    std::vector<int> idx(ys.size());
    std::vector<long> counts(static_cast<std::size_t>(slices.num_slices()), 0);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        idx[i] = slices.slice_index(ys[i]);
        ++counts[static_cast<std::size_t>(idx[i])];
    }
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const int ha = idx[static_cast<std::size_t>(a)];
            if (ha == idx[static_cast<std::size_t>(b)]) j(a, b) = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(ha)]);
        }
    }
    return j;
}

Eigen::MatrixXd center_gram(const Eigen::Ref<const Eigen::MatrixXd>& k) {
    const Eigen::VectorXd row_mean = k.rowwise().mean();
    const Eigen::RowVectorXd col_mean = k.colwise().mean();
    Eigen::MatrixXd out = k;
    out.rowwise() -= col_mean;
    out.colwise() -= row_mean;
    out.array() += k.mean();
    return out;
}

BatchKsirResult batch_ksir(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const double> y,
                           const KernelConfig& kernel, const BatchOptions& opts) {
    const Eigen::Index n = x.rows();
    if (static_cast<std::size_t>(n) != y.size()) throw InputError("batch_ksir: X and y differ in length");
    if (opts.dim < 1 || n < opts.dim) throw InputError("batch_ksir: need n >= d >= 1");

    BatchKsirResult res;
    res.kernel = kernel;
    res.slices = opts.cutpoints ? SliceConfig(*opts.cutpoints) : SliceConfig::from_sample(y, opts.num_slices);
    res.train_x = x;
    res.centered = opts.center;

    const Eigen::MatrixXd k = gram_matrix(x, kernel);
    res.k_row_mean = k.rowwise().mean();
    res.k_mean = k.mean();
    const Eigen::MatrixXd kw = opts.center ? center_gram(k) : k;

    res.ridge = opts.ridge.value_or(kDefaultRelativeRidge * kw.trace() / static_cast<double>(n));
    if (!(res.ridge >= 0.0)) throw InputError("batch_ksir: ridge must be nonnegative");

    const Eigen::MatrixXd j = slice_matrix(y, res.slices);
    GeneralizedEigen ge = solve_reduced_ksir(kw, j, Eigen::MatrixXd::Identity(n, n), opts.dim, res.ridge);
    res.coeffs = std::move(ge.vectors);
    res.eigenvalues = std::move(ge.values);
    return res;
}

Eigen::VectorXd batch_transform(const BatchKsirResult& result, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != result.train_x.cols()) throw InputError("batch_transform: input dimension mismatch");
    Eigen::VectorXd kx = kernel_column(result.train_x, x, result.kernel);
    if (result.centered) {
        const double mean = kx.mean();
        kx -= result.k_row_mean;
        kx.array() += result.k_mean - mean;
    }
    return result.coeffs.transpose() * kx;
}

Eigen::MatrixXd batch_transform_rows(const BatchKsirResult& result, const Eigen::Ref<const Eigen::MatrixXd>& xs) {
    Eigen::MatrixXd out(xs.rows(), result.coeffs.cols());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out.row(i) = batch_transform(result, xs.row(i).transpose()).transpose();
    return out;
}

}  // namespace oksir
