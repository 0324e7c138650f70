#include <doctest.h>

#include "support.hpp"

#include <oksir/error.hpp>
#include <oksir/slicing.hpp>

#include <random>

using namespace oksir;
using namespace oksir::testing;

TEST_CASE("slice membership is right-closed") {
    const SliceConfig one({0.0});
    CHECK(one.num_slices() == 2);
    CHECK(one.slice_index(-1.0) == 0);
    CHECK(one.slice_index(0.0) == 0);
    CHECK(one.slice_index(1e-300) == 1);
    const SliceConfig two({0.0, 1.0});
    CHECK(two.slice_index(0.5) == 1);
    CHECK(two.slice_index(1.0) == 1);
    CHECK(two.slice_index(7.0) == 2);
    CHECK(two.slice_index(-std::numeric_limits<double>::infinity()) == 0);
}

TEST_CASE("cut-point validation") {
    CHECK_THROWS_AS(SliceConfig(std::vector<double>{}), InputError);
    CHECK_THROWS_AS(SliceConfig({1.0, 1.0}), InputError);
    CHECK_THROWS_AS(SliceConfig({2.0, 1.0}), InputError);
    CHECK_THROWS_AS(SliceConfig({0.0, std::numeric_limits<double>::quiet_NaN()}), InputError);
}

TEST_CASE("cut-points from a sample") {
    std::vector<double> ys;
    for (int i = 0; i < 100; ++i) ys.push_back(static_cast<double>((i * 37) % 100));
    const SliceConfig cfg = SliceConfig::from_sample(ys, 4);
    REQUIRE(cfg.num_slices() == 4);
    std::vector<int> counts(4, 0);
    for (const double y : ys) ++counts[static_cast<std::size_t>(cfg.slice_index(y))];
    for (const int c : counts) CHECK(c == 25);

    SUBCASE("few distinct values give one slice per value") {
        const std::vector<double> classes{1, 2, 1, 2, 3, 3, 1};
        const SliceConfig c = SliceConfig::from_sample(classes, 10);
        CHECK(c.num_slices() == 3);
        CHECK(c.slice_index(1.0) != c.slice_index(2.0));
        CHECK(c.slice_index(2.0) != c.slice_index(3.0));
    }
}

TEST_CASE("case 1 update") {
    SUBCASE("zero coefficients only count") {
        SliceState s(3, 2);
        s.update_case1(1, Eigen::Vector2d(0, 0));
        CHECK(s.slice(1).count == 1);
        CHECK(max_abs(s.slice(1).m_vec) == 0.0);
        CHECK(max_abs(s.slice(1).m_mat) == 0.0);
        CHECK(s.slice(0).count == 0);
    }
    SUBCASE("scalar square of the running sum") {
        SliceStats st;
        st.count = 2;
        st.m_vec = Eigen::VectorXd::Constant(1, 2.0);
        st.m_mat = Eigen::MatrixXd::Constant(1, 1, 4.0);
        SliceState s = SliceState::from_parts({st, SliceStats{0, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1)}}, 1);
        s.update_case1(0, Eigen::VectorXd::Ones(1));
        CHECK(s.slice(0).m_vec[0] == 3.0);
        CHECK(s.slice(0).m_mat(0, 0) == 9.0);
        CHECK(s.slice(0).count == 3);
        CHECK(s.slice(1).count == 0);
    }
    SUBCASE("dimension mismatch") {
        SliceState s(2, 2);
        CHECK_THROWS_AS(s.update_case1(0, Eigen::Vector3d(1, 2, 3)), InputError);
    }
}

TEST_CASE("case 1 against dense products, one slice") {
    SliceState s(2, 4);
    Eigen::MatrixXd a(30, 4);
    for (int t = 0; t < 30; ++t) {
        a.row(t) = random_vector(4, 100 + static_cast<std::uint64_t>(t)).transpose();
        s.update_case1(0, a.row(t).transpose());
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(30);
    const Eigen::VectorXd mh = a.transpose() * ones;
    CHECK(max_abs(s.slice(0).m_vec - mh) <= 1e-12);
    CHECK(max_abs(s.slice(0).m_mat - mh * mh.transpose()) <= 1e-10);
}

TEST_CASE("case 2 borders every slice") {
    SUBCASE("other slices gain zeros") {
        SliceState s(3, 1);
        s.update_case1(0, Eigen::VectorXd::Constant(1, 2.0));
        s.update_case2(2);
        CHECK(s.dim() == 2);
        CHECK(s.slice(0).m_vec.size() == 2);
        CHECK(s.slice(0).m_vec[1] == 0.0);
        CHECK(s.slice(0).m_mat.row(1).cwiseAbs().sum() == 0.0);
        CHECK(s.slice(0).m_mat(0, 0) == 4.0);
        CHECK(s.slice(2).m_vec[1] == 1.0);
        CHECK(s.slice(2).m_mat(1, 1) == 1.0);
    }
    SUBCASE("first hit on an empty state") {
        SliceState s(2, 0);
        s.update_case2(1);
        CHECK(s.slice(1).count == 1);
        CHECK(s.slice(1).m_vec.size() == 1);
        CHECK(s.slice(1).m_vec[0] == 1.0);
        CHECK(s.slice(1).m_mat(0, 0) == 1.0);
        CHECK(s.slice(0).count == 0);
    }
}

namespace {

// Interleaved stream with recorded coefficient rows and slice labels.
struct SliceRun {
    SliceState state;
    Eigen::MatrixXd a;
    std::vector<int> labels;
};

SliceRun interleaved_run(int n, int h_count, std::uint64_t seed) {
    const RecordedStream rec = run_dictionary(uniform_points(n, 5, seed), KernelConfig(), 0.05);
    std::mt19937_64 rng(seed + 1);
    std::uniform_int_distribution<int> pick(0, h_count - 1);
    SliceRun run{SliceState(h_count, 0), stack_rows(rec.rows, rec.dict.size()), {}};
    for (std::size_t t = 0; t < rec.rows.size(); ++t) {
        const int h = pick(rng);
        run.labels.push_back(h);
        if (rec.grew[t]) {
            run.state.update_case2(h);
        } else {
            run.state.update_case1(h, rec.rows[t]);
        }
    }
    return run;
}

}  // namespace

TEST_CASE("interleaved recursion equals dense statistics") {
    const SliceRun run = interleaved_run(300, 4, 77);
    const Eigen::Index n = run.a.rows();
    long total = 0;
    for (int h = 0; h < 4; ++h) {
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
        for (Eigen::Index t = 0; t < n; ++t) delta[t] = run.labels[static_cast<std::size_t>(t)] == h ? 1.0 : 0.0;
        const Eigen::VectorXd mh = run.a.transpose() * delta;
        CHECK(run.state.slice(h).count == static_cast<long>(delta.sum()));
        CHECK(max_abs(run.state.slice(h).m_vec - mh) <= 1e-10);
        CHECK(max_abs(run.state.slice(h).m_mat - mh * mh.transpose()) <= 1e-10);
        total += run.state.slice(h).count;
    }
    CHECK(total == n);
    CHECK(run.state.total() == n);
}

TEST_CASE("Q") {
    SUBCASE("two atoms in one slice") {
        SliceState s(2, 0);
        s.update_case2(0);
        s.update_case2(0);
        Eigen::Matrix2d expected;
        expected << 0.5, 0.5, 0.5, 0.5;
        CHECK(max_abs(s.compute_q() - expected) <= 1e-15);
    }
    SUBCASE("single sample") {
        SliceState s(3, 0);
        s.update_case2(2);
        CHECK(s.compute_q()(0, 0) == 1.0);
    }
    SUBCASE("all empty") {
        const SliceState s(3, 2);
        CHECK_THROWS_AS(s.compute_q(), StateError);
    }
    SUBCASE("explicit slice matrix") {
        const SliceRun run = interleaved_run(250, 5, 5);
        const Eigen::Index n = run.a.rows();
        std::vector<int> counts(5, 0);
        for (const int h : run.labels) ++counts[static_cast<std::size_t>(h)];
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c)
                if (run.labels[static_cast<std::size_t>(r)] == run.labels[static_cast<std::size_t>(c)])
                    j(r, c) = 1.0 / counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(r)])];
        const Eigen::MatrixXd oracle = run.a.transpose() * j * run.a;
        const Eigen::MatrixXd q = run.state.compute_q();
        CHECK(max_abs(q - oracle) <= 1e-10);
        CHECK(max_abs(q - q.transpose()) <= 1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().minCoeff() >= -1e-8 * q.trace());
    }
}

TEST_CASE("restore rolls back one slice") {
    SliceState s(2, 2);
    s.update_case1(0, Eigen::Vector2d(1, 2));
    const SliceStats saved = s.slice(0);
    s.update_case1(0, Eigen::Vector2d(3, 4));
    s.restore(0, saved);
    CHECK(s.slice(0).count == 1);
    CHECK(max_abs(s.slice(0).m_vec - Eigen::Vector2d(1, 2)) == 0.0);
}
