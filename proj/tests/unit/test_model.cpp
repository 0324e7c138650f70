#include <doctest.h>

#include "support.hpp"

#include <oksir/error.hpp>
#include <oksir/evaluation.hpp>
#include <oksir/model.hpp>
#include <oksir/simgen.hpp>

using namespace oksir;
using namespace oksir::testing;

namespace {

ModelConfig explicit_cuts(double nu = 0.05) {
    ModelConfig cfg;
    cfg.nu = nu;
    cfg.cutpoints = std::vector<double>{-0.5, 0.0, 0.5};
    return cfg;
}

// Same model with Phi replaced.
OksirModel with_phi(const OksirModel& m, Eigen::MatrixXd phi) {
    OksirModel::Parts parts{m.config(),   m.input_dim(), m.dictionary(), m.slice_config(), m.slices(), m.projection(),
                            m.centering(), m.scaling(),   m.t(),          m.warmup_buffer()};
    const ProjectionState& ps = m.projection();
    parts.proj = ProjectionState::from_parts(std::move(phi), ps.schedule(), ps.rule(), ps.step(), ps.halvings());
    return OksirModel::from_parts(std::move(parts));
}

void feed(OksirModel& model, const SimTable& t, Eigen::Index from, Eigen::Index to) {
    for (Eigen::Index i = from; i < to; ++i) model.partial_fit(t.x.row(i).transpose(), t.y[i]);
}

void check_consistent(const OksirModel& m, long fed) {
    CHECK(m.t() + static_cast<long>(m.warmup_buffer().size()) == fed);
    if (!m.initialized()) return;
    const Eigen::Index size = m.dictionary().size();
    CHECK(m.projection().rows() == size);
    CHECK(m.centering().a_bar.size() == size);
    CHECK(m.slices().dim() == size);
    CHECK(m.slices().total() == m.t());
    for (const auto& s : m.slices().slices()) CHECK(s.m_vec.size() == size);
}

}  // namespace

TEST_CASE("first sample builds a one-atom model") {
    ModelConfig cfg = explicit_cuts();
    OksirModel a(cfg), b(cfg);
    const Eigen::Vector4d x(0.1, 2.0, -3.0, 0.7);
    a.partial_fit(x, 0.2);
    b.partial_fit(x, 0.2);
    CHECK(a.dictionary().k_tilde()(0, 0) == 4.0);
    CHECK(a.dictionary().k_tilde_inv()(0, 0) == 0.25);
    CHECK(a.projection().phi().rows() == 1);
    CHECK(a.projection().phi().cols() == 2);
    CHECK(max_abs(a.projection().phi() - b.projection().phi()) == 0.0);
    CHECK(a.t() == 1);

    cfg.seed = 43;
    OksirModel c(cfg);
    c.partial_fit(x, 0.2);
    CHECK(max_abs(a.projection().phi() - c.projection().phi()) > 0.0);
}

TEST_CASE("default threshold follows the first self-similarity") {
    ModelConfig cfg = explicit_cuts();
    cfg.nu.reset();
    OksirModel m(cfg);
    CHECK_FALSE(m.nu().has_value());
    m.partial_fit(Eigen::VectorXd::Zero(7), 0.0);
    REQUIRE(m.nu().has_value());
    CHECK(*m.nu() == doctest::Approx(0.07));
}

TEST_CASE("a duplicate atom is absorbed") {
    OksirModel m(explicit_cuts());
    const Eigen::Vector3d x(1.0, 2.0, 3.0);
    m.partial_fit(x, 0.1);
    m.partial_fit(x, 0.9);
    CHECK(m.dictionary().size() == 1);
    CHECK(m.t() == 2);
    CHECK(m.dictionary().ata()(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("negative threshold admits every distinct point") {
    ModelConfig cfg = explicit_cuts(-1.0);
    cfg.kernel = KernelConfig(KernelFamily::additive_gaussian, 1.0);
    OksirModel m(cfg);
    const Eigen::MatrixXd pts = random_matrix(30, 50, 2);
    for (Eigen::Index i = 0; i < 30; ++i) m.partial_fit(pts.row(i).transpose(), static_cast<double>(i % 3) - 1.0);
    CHECK(m.dictionary().size() == 30);
    CHECK(max_abs(m.dictionary().ata() - Eigen::MatrixXd::Identity(30, 30)) == 0.0);
}

TEST_CASE("tiny threshold reproduces the dense batch objects") {
    // p = 50 with sigma = 1 keeps the 200-point Gram well inside double precision.
    ModelConfig cfg = explicit_cuts(1e-12);
    cfg.kernel = KernelConfig(KernelFamily::additive_gaussian, 1.0);
    cfg.center = false;
    const SimTable t = to_table(simulate({SimModel::sine_product, 50, 200, 5}));
    OksirModel m(cfg);
    feed(m, t, 0, 200);
    REQUIRE(m.dictionary().size() == 200);

    const Eigen::MatrixXd k = gram_matrix(t.x, cfg.kernel);
    const SliceConfig sc(*cfg.cutpoints);
    std::vector<int> label(200);
    std::vector<int> count(4, 0);
    for (int i = 0; i < 200; ++i) ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)] = sc.slice_index(t.y[i]))];
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(200, 200);
    for (int r = 0; r < 200; ++r)
        for (int c = 0; c < 200; ++c)
            if (label[static_cast<std::size_t>(r)] == label[static_cast<std::size_t>(c)]) j(r, c) = 1.0 / count[static_cast<std::size_t>(label[static_cast<std::size_t>(r)])];

    const Eigen::MatrixXd& kt = m.dictionary().k_tilde();
    const Eigen::MatrixXd q = m.slices().compute_q();
    const Eigen::MatrixXd& g = m.dictionary().ata();
    CHECK(max_abs(kt - k) <= 1e-6);
    CHECK(max_abs(q - j) <= 1e-6);
    CHECK(max_abs(g - Eigen::MatrixXd::Identity(200, 200)) <= 1e-6);
    CHECK(max_abs(kt * q * kt - k * j * k) <= 1e-6 * max_abs(k * j * k));
    CHECK(max_abs(kt * g * kt - k * k) <= 1e-6 * max_abs(k * k));
}

TEST_CASE("transform") {
    SUBCASE("zero Phi gives zero") {
        OksirModel m(explicit_cuts());
        const SimTable t = to_table(simulate({SimModel::sine_product, 5, 40, 1}));
        feed(m, t, 0, 40);
        const OksirModel z = with_phi(m, Eigen::MatrixXd::Zero(m.dictionary().size(), 2));
        CHECK(max_abs(z.transform(t.x.row(3).transpose())) == 0.0);
    }
    SUBCASE("scalar product") {
        ModelConfig cfg = explicit_cuts();
        cfg.dim = 1;
        cfg.center = false;
        OksirModel m(cfg);
        m.partial_fit(Eigen::VectorXd::Zero(1), 0.0);
        const OksirModel two = with_phi(m, Eigen::MatrixXd::Constant(1, 1, 2.0));
        Eigen::VectorXd x(1);
        x << std::sqrt(-8.0 * std::log(0.3));  // k(0, x) = 0.3 at sigma = 2
        CHECK(two.transform(x)[0] == doctest::Approx(0.6).epsilon(1e-14));
    }
    SUBCASE("linear in Phi") {
        OksirModel m(explicit_cuts());
        const SimTable t = to_table(simulate({SimModel::sine_product, 5, 80, 2}));
        feed(m, t, 0, 80);
        const Eigen::Index size = m.dictionary().size();
        const Eigen::MatrixXd p1 = random_matrix(size, 2, 3);
        const Eigen::MatrixXd p2 = random_matrix(size, 2, 4);
        for (Eigen::Index i = 0; i < 10; ++i) {
            const Eigen::VectorXd x = t.x.row(i).transpose();
            const Eigen::VectorXd sum = with_phi(m, p1).transform(x) + with_phi(m, p2).transform(x);
            CHECK(max_abs(with_phi(m, p1 + p2).transform(x) - sum) <= 1e-12 * (1.0 + max_abs(sum)));
        }
    }
    SUBCASE("errors") {
        OksirModel m(explicit_cuts());
        CHECK_THROWS_AS(m.transform(Eigen::Vector3d(0, 0, 0)), StateError);
        m.partial_fit(Eigen::Vector3d(0, 0, 0), 0.0);
        CHECK_THROWS_AS(m.transform(Eigen::Vector2d(0, 0)), InputError);
        CHECK_THROWS_AS(m.partial_fit(Eigen::Vector2d(0, 0), 0.0), InputError);
    }
}

TEST_CASE("converged online directions match the dense reduced solution") {
    // Well-conditioned uncentered setting: with K~ invertible, K~ Q K~ a = lambda K~ A^T A K~ a is
    // Q w = lambda A^T A w for w = K~ a, so the oracle never touches the kernel matrix.
    ModelConfig cfg;
    cfg.nu = 2.0;
    cfg.center = false;
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 1500, 8}));
    OksirModel m(cfg);
    feed(m, t, 0, 1000);
    m.refine(20000, 1.0);
    m.align_directions();
    REQUIRE(m.dictionary().size() >= 4);

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(m.slices().compute_q(), m.dictionary().ata());
    REQUIRE(es.info() == Eigen::Success);
    const Eigen::MatrixXd w = es.eigenvectors().rightCols(2).rowwise().reverse();
    const Eigen::MatrixXd coeffs = m.dictionary().k_tilde().ldlt().solve(w);

    const Eigen::MatrixXd held = t.x.bottomRows(500);
    Eigen::MatrixXd oracle(500, 2);
    for (Eigen::Index i = 0; i < 500; ++i)
        oracle.row(i) = (coeffs.transpose() * kernel_vector(m.dictionary(), held.row(i).transpose(), cfg.kernel)).transpose();
    const Eigen::MatrixXd online = m.transform_rows(held);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double c = abs_correlation(online.col(j), oracle.col(j));
        MESSAGE("direction " << j << ": |cor| = " << c);
        CHECK(c >= 0.999);
    }
}

TEST_CASE("centered online directions track the dense solution on the range of K~c") {
    // A finite dictionary leaves the centered Gram with a near-null direction (the constant
    // feature, a^T 1 -> 1 only asymptotically). The update barely moves along it, so the fair
    // reference is the dense problem restricted to the well-conditioned part of range(K~c).
    ModelConfig cfg;
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 1500, 8}));
    OksirModel m(cfg);
    feed(m, t, 0, 1000);
    m.refine(20000, 0.2);
    m.align_directions();

    const Eigen::MatrixXd& kt = m.dictionary().k_tilde();
    const Eigen::VectorXd& abar = m.centering().a_bar;
    const Eigen::MatrixXd kc = center_matrix(kt, abar);
    const Eigen::MatrixXd b = kc * m.slices().compute_q() * kc;
    const Eigen::MatrixXd c = kc * m.dictionary().ata() * kc;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(kc);
    Eigen::Index keep = 0;
    for (Eigen::Index i = 0; i < kc.rows(); ++i) keep += ek.eigenvalues()[i] > 1e-6 * ek.eigenvalues().maxCoeff() ? 1 : 0;
    REQUIRE(keep < kc.rows());
    const Eigen::MatrixXd u = ek.eigenvectors().rightCols(keep);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(u.transpose() * b * u, u.transpose() * c * u);
    REQUIRE(es.info() == Eigen::Success);
    const Eigen::MatrixXd w = u * es.eigenvectors().rightCols(2).rowwise().reverse();

    const Eigen::MatrixXd held = t.x.bottomRows(500);
    Eigen::MatrixXd oracle(500, 2);
    for (Eigen::Index i = 0; i < 500; ++i) {
        const Eigen::VectorXd kv = center_vector(kernel_vector(m.dictionary(), held.row(i).transpose(), cfg.kernel), kt, abar);
        oracle.row(i) = (w.transpose() * kv).transpose();
    }
    const Eigen::MatrixXd online = m.transform_rows(held);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double r = abs_correlation(online.col(j), oracle.col(j));
        MESSAGE("centered direction " << j << ": |cor| = " << r);
        CHECK(r >= 0.95);
    }
}

TEST_CASE("aligned directions are Ritz vectors of the reduced problem") {
    OksirModel m{ModelConfig{}};
    const SimTable t = to_table(simulate({SimModel::linear_ratio, 10, 600, 4}));
    feed(m, t, 0, 600);
    const Eigen::MatrixXd before = m.projection().phi();
    m.align_directions();
    const Eigen::MatrixXd& phi = m.projection().phi();
    CHECK(subspace_angle(before, phi) <= 1e-8);
    const auto ops = m.operators();
    const Eigen::MatrixXd kp = ops.k * phi;
    const Eigen::MatrixXd c = kp.transpose() * ops.ata * kp;
    const Eigen::MatrixXd b = kp.transpose() * ops.q * kp;
    CHECK(max_abs(c - Eigen::MatrixXd::Identity(2, 2)) <= 1e-8);
    CHECK(std::abs(b(0, 1)) <= 1e-8);
    CHECK(b(0, 0) >= b(1, 1));
}

TEST_CASE("warm-up buffers then replays") {
    ModelConfig cfg;
    cfg.num_slices = 5;
    OksirModel m(cfg);
    REQUIRE(cfg.warmup_size() == 100);
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 150, 3}));
    for (Eigen::Index i = 0; i < 150; ++i) {
        m.partial_fit(t.x.row(i).transpose(), t.y[i]);
        check_consistent(m, static_cast<long>(i + 1));
        if (i < 99) {
            CHECK(m.warming_up());
            CHECK_FALSE(m.initialized());
        }
    }
    CHECK_FALSE(m.warming_up());
    CHECK(m.t() == 150);
    REQUIRE(m.slice_config()->num_slices() == 5);
    // Balanced over the warm-up responses.
    std::vector<int> counts(5, 0);
    for (Eigen::Index i = 0; i < 100; ++i) ++counts[static_cast<std::size_t>(m.slice_config()->slice_index(t.y[i]))];
    for (const int c : counts) CHECK(c == 20);

    SUBCASE("finish early") {
        OksirModel early(cfg);
        feed(early, t, 0, 30);
        CHECK(early.warming_up());
        early.finish_warmup();
        CHECK_FALSE(early.warming_up());
        CHECK(early.t() == 30);
    }
}

TEST_CASE("dimensional consistency after every step") {
    OksirModel m(explicit_cuts(0.02));
    const SimTable t = to_table(simulate({SimModel::sine_product, 4, 300, 6}));
    for (Eigen::Index i = 0; i < 300; ++i) {
        m.partial_fit(t.x.row(i).transpose(), t.y[i]);
        check_consistent(m, static_cast<long>(i + 1));
    }
}

TEST_CASE("failed steps leave the model untouched") {
    ModelConfig cfg = explicit_cuts();
    cfg.schedule = EtaSchedule::inverse_t_then_fixed(0, 1e30);
    // A single centered atom has a zero Gram and so a zero update; uncentered it moves.
    cfg.center = false;
    OksirModel m(cfg);
    const SimTable t = to_table(simulate({SimModel::sine_product, 3, 20, 9}));
    m.partial_fit(t.x.row(0).transpose(), t.y[0]);
    const std::string before = save_model(m);

    SUBCASE("absorb path") {
        CHECK_THROWS_AS(m.partial_fit(t.x.row(0).transpose(), t.y[0]), DivergenceError);
    }
    SUBCASE("grow path") {
        CHECK_THROWS_AS(m.partial_fit(t.x.row(1).transpose(), t.y[1]), DivergenceError);
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS_AS(m.partial_fit(t.x.row(1).transpose(), std::numeric_limits<double>::quiet_NaN()), InputError);
        Eigen::VectorXd bad = t.x.row(1).transpose();
        bad[0] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(m.partial_fit(bad, 0.0), InputError);
    }
    CHECK(save_model(m) == before);
}

TEST_CASE("a failed warm-up replay rolls back") {
    ModelConfig cfg;
    cfg.warmup = 10;
    cfg.schedule = EtaSchedule::inverse_t_then_fixed(0, 1e14);
    OksirModel m(cfg);
    const SimTable t = to_table(simulate({SimModel::sine_product, 3, 10, 9}));
    feed(m, t, 0, 9);
    const std::string before = save_model(m);
    CHECK_THROWS_AS(m.partial_fit(t.x.row(9).transpose(), t.y[9]), DivergenceError);
    CHECK(save_model(m) == before);
    CHECK(m.warmup_buffer().size() == 9);
}

TEST_CASE("fixed seed and stream give identical state at every step") {
    const SimTable t = to_table(simulate({SimModel::linear_ratio, 8, 400, 12}));
    OksirModel a{ModelConfig{}}, b{ModelConfig{}};
    for (Eigen::Index i = 0; i < 400; ++i) {
        a.partial_fit(t.x.row(i).transpose(), t.y[i]);
        b.partial_fit(t.x.row(i).transpose(), t.y[i]);
        if (i % 50 == 49) CHECK(save_model(a) == save_model(b));
    }
}

TEST_CASE("configuration validation") {
    ModelConfig cfg;
    cfg.dim = 0;
    CHECK_THROWS_AS(OksirModel{cfg}, InputError);
    cfg = ModelConfig{};
    cfg.num_slices = 1;
    CHECK_THROWS_AS(OksirModel{cfg}, InputError);
    cfg = ModelConfig{};
    cfg.cutpoints = std::vector<double>{1.0, 0.0};
    CHECK_THROWS_AS(OksirModel{cfg}, InputError);
    cfg = ModelConfig{};
    cfg.schedule = EtaSchedule::inverse_t_then_fixed(5, 0.0);
    CHECK_THROWS_AS(OksirModel{cfg}, InputError);
    CHECK(ModelConfig{}.warmup_size() == 100);
}

TEST_CASE("state size tracks the dictionary, not the stream") {
    OksirModel m{ModelConfig{}};
    const SimTable t = to_table(simulate({SimModel::linear_ratio, 10, 4000, 14}));
    feed(m, t, 0, 2000);
    const std::size_t mid = m.state_bytes();
    const Eigen::Index m_mid = m.dictionary().size();
    feed(m, t, 2000, 4000);
    MESSAGE("dictionary " << m_mid << " -> " << m.dictionary().size() << ", bytes " << mid << " -> " << m.state_bytes());
    CHECK(m.state_bytes() <= mid * 11 / 10);
}

TEST_CASE("periodic dense re-inversion records the drift") {
    ModelConfig cfg;
    cfg.drift_check_every = 50;
    OksirModel m(cfg);
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 500, 15}));
    feed(m, t, 0, 500);
    CHECK(m.max_inverse_drift() > 0.0);
    CHECK(m.max_inverse_drift() <= 1e-6);
}
