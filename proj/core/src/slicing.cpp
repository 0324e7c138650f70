#include "oksir/slicing.hpp"

#include "oksir/error.hpp"

#include <algorithm>
#include <cmath>

namespace oksir {

SliceConfig::SliceConfig(std::vector<double> cutpoints) : cutpoints_(std::move(cutpoints)) {
    if (cutpoints_.empty()) throw InputError("slicing needs at least one cut-point (H >= 2)");
    for (std::size_t i = 0; i < cutpoints_.size(); ++i) {
        if (!std::isfinite(cutpoints_[i])) throw InputError("cut-points must be finite");
        if (i > 0 && !(cutpoints_[i] > cutpoints_[i - 1])) {
            throw InputError("cut-points must be strictly increasing");
        }
    }
}

SliceConfig SliceConfig::from_sample(std::span<const double> ys, int num_slices) {
    if (num_slices < 2) throw InputError("number of slices must be at least 2");
    if (ys.empty()) throw InputError("cannot derive cut-points from an empty sample");

    std::vector<double> sorted(ys.begin(), ys.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> cuts;
    if (distinct.size() == 1) {
        cuts.push_back(distinct.front());
    } else if (distinct.size() <= static_cast<std::size_t>(num_slices)) {
        // one slice per observed value
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
            cuts.push_back(0.5 * (distinct[i] + distinct[i + 1]));
        }
    } else {
        // q_h is the ceil(h n / H)-th order statistic, so slice h holds about n/H points
        const auto n = static_cast<long>(sorted.size());
        for (int h = 1; h < num_slices; ++h) {
            const long rank = (static_cast<long>(h) * n + num_slices - 1) / num_slices;
            const double q = sorted[static_cast<std::size_t>(std::max(rank, 1L) - 1)];
            if (q < sorted.back() && (cuts.empty() || q > cuts.back())) cuts.push_back(q);
        }
        if (cuts.empty()) cuts.push_back(sorted.front());
    }
    return SliceConfig(std::move(cuts));
}

int SliceConfig::slice_index(double y) const {
    const auto it = std::lower_bound(cutpoints_.begin(), cutpoints_.end(), y);
    return static_cast<int>(it - cutpoints_.begin());
}

SliceState::SliceState(int num_slices, Eigen::Index m) : m_(m) {
    if (num_slices < 1) throw InputError("slice state needs at least one slice");
    slices_.resize(static_cast<std::size_t>(num_slices));
    for (auto& s : slices_) {
        s.m_vec = Eigen::VectorXd::Zero(m);
        s.m_mat = Eigen::MatrixXd::Zero(m, m);
    }
}

long SliceState::total() const {
    long n = 0;
    for (const auto& s : slices_) n += s.count;
    return n;
}

void SliceState::update_case1(int h, const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (h < 0 || h >= num_slices()) throw InputError("slice index out of range");
    if (a.size() != m_) throw InputError("update_case1: coefficient length does not match the dictionary");
    auto& s = slices_[static_cast<std::size_t>(h)];
    // M += a m^T + m a^T + a a^T, using m before its own update
    s.m_mat.noalias() += a * s.m_vec.transpose();
    s.m_mat.noalias() += s.m_vec * a.transpose();
    s.m_mat.noalias() += a * a.transpose();
    s.m_vec += a;
    ++s.count;
}

void SliceState::update_case2(int h) {
    if (h < 0 || h >= num_slices()) throw InputError("slice index out of range");
    const Eigen::Index m = m_;
    for (int g = 0; g < num_slices(); ++g) {
        auto& s = slices_[static_cast<std::size_t>(g)];
        const double delta = g == h ? 1.0 : 0.0;

        Eigen::MatrixXd mat(m + 1, m + 1);
        mat.topLeftCorner(m, m) = s.m_mat;
        mat.topRightCorner(m, 1) = delta * s.m_vec;
        mat.bottomLeftCorner(1, m) = delta * s.m_vec.transpose();
        mat(m, m) = delta;

        Eigen::VectorXd vec(m + 1);
        vec.head(m) = s.m_vec;
        vec[m] = delta;

        s.m_mat = std::move(mat);
        s.m_vec = std::move(vec);
        if (g == h) ++s.count;
    }
    m_ = m + 1;
}

Eigen::MatrixXd SliceState::compute_q() const {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m_, m_);
    bool any = false;
    for (const auto& s : slices_) {
        if (s.count == 0) continue;
        q += s.m_mat / static_cast<double>(s.count);
        any = true;
    }
    if (!any) throw StateError("compute_q: every slice is empty");
    return q;
}

void SliceState::restore(int h, SliceStats stats) noexcept {
    slices_[static_cast<std::size_t>(h)] = std::move(stats);
}

SliceState SliceState::from_parts(std::vector<SliceStats> slices, Eigen::Index m) {
    if (slices.empty()) throw FormatError("slice state has no slices");
    for (const auto& s : slices) {
        if (s.count < 0 || s.m_vec.size() != m || s.m_mat.rows() != m || s.m_mat.cols() != m) {
            throw FormatError("slice statistics do not match the dictionary size");
        }
    }
    SliceState st;
    st.slices_ = std::move(slices);
    st.m_ = m;
    return st;
}

}  // namespace oksir
