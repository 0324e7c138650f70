#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace oksir {

/// Slice layout of the response: H right-closed intervals (q_{h-1}, q_h] with
/// q_0 = -inf and q_H = +inf. Slice indices are zero-based.
class SliceConfig {
public:
    SliceConfig() = default;

    /// Throws InputError unless the cut-points are finite and strictly increasing and H >= 2.
    explicit SliceConfig(std::vector<double> cutpoints);

    /// Balanced cut-points from order statistics of `ys`. When `ys` holds at most
    /// `num_slices` distinct values, one slice per distinct value is used instead.
    static SliceConfig from_sample(std::span<const double> ys, int num_slices);

    int num_slices() const { return static_cast<int>(cutpoints_.size()) + 1; }
    const std::vector<double>& cutpoints() const { return cutpoints_; }

    /// h such that q_{h-1} < y <= q_h.
    int slice_index(double y) const;

private:
    std::vector<double> cutpoints_;
};

/// Statistics of one slice: n_h, m_h = A^T Delta_h and M_h = A^T Delta_h Delta_h^T A.
struct SliceStats {
    long count{0};
    Eigen::VectorXd m_vec;
    Eigen::MatrixXd m_mat;
};

/// Recursive slice statistics over a dictionary of size m.
class SliceState {
public:
    SliceState() = default;
    SliceState(int num_slices, Eigen::Index m);

    int num_slices() const { return static_cast<int>(slices_.size()); }
    Eigen::Index dim() const { return m_; }
    long total() const;

    const SliceStats& slice(int h) const { return slices_.at(static_cast<std::size_t>(h)); }
    const std::vector<SliceStats>& slices() const { return slices_; }

    /// Dictionary unchanged: only slice h moves.
    void update_case1(int h, const Eigen::Ref<const Eigen::VectorXd>& a);

    /// Dictionary grew by one atom: every slice is bordered, slice h with a unit indicator.
    void update_case2(int h);

    /// Q = sum over nonempty slices of M_h / n_h. Throws StateError if every slice is empty.
    Eigen::MatrixXd compute_q() const;

    /// Rollback hook for update_case1.
    void restore(int h, SliceStats stats) noexcept;

    static SliceState from_parts(std::vector<SliceStats> slices, Eigen::Index m);

private:
    std::vector<SliceStats> slices_;
    Eigen::Index m_{0};
};

}  // namespace oksir
