#include "oksir/model.hpp"

#include "oksir/error.hpp"
#include "oksir/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace oksir {

namespace {

// Power-iteration sweeps per streaming step; the probe is warm-started so a couple suffice.
constexpr int kStepPowerIterations = 2;
constexpr int kRefinePowerIterations = 100;

}  // namespace

void ModelConfig::validate() const {
    if (dim < 1) throw InputError("number of directions must be at least 1");
    if (nu && std::isnan(*nu)) throw InputError("ALD threshold is NaN");
    if (cutpoints) {
        SliceConfig check(*cutpoints);
    } else if (num_slices < 2) {
        throw InputError("number of slices must be at least 2");
    }
    if (warmup < 0) throw InputError("warm-up length must be nonnegative");
    if (schedule.kind == EtaSchedule::Kind::inverse_t_then_fixed && (!(schedule.eta > 0.0) || schedule.t0 < 0)) {
        throw InputError("fixed learning rate must be positive and t0 nonnegative");
    }
    if (drift_check_every < 0) throw InputError("drift check interval must be nonnegative");
}

int ModelConfig::warmup_size() const { return warmup > 0 ? warmup : std::max(10 * num_slices, 100); }

OksirModel::OksirModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.cutpoints) slice_config_ = SliceConfig(*cfg_.cutpoints);
    centering_.enabled = cfg_.center;
}

void OksirModel::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() == 0) throw InputError("empty input vector");
    if (input_dim_ != 0 && x.size() != input_dim_) {
        throw InputError("input has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(input_dim_));
    }
    if (!x.allFinite()) throw InputError("input contains non-finite values");
}

void OksirModel::partial_fit(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
    partial_fit(StreamSample{x, y});
}

void OksirModel::partial_fit(const StreamSample& sample) {
    check_input(sample.x);
    if (!std::isfinite(sample.y)) throw InputError("response is not finite");

    if (warming_up()) {
        warmup_buffer_.push_back(sample);
        if (input_dim_ == 0) input_dim_ = sample.x.size();
        if (static_cast<int>(warmup_buffer_.size()) >= cfg_.warmup_size()) {
            try {
                finish_warmup();
            } catch (...) {
                warmup_buffer_.pop_back();
                if (warmup_buffer_.empty()) input_dim_ = 0;
                throw;
            }
        }
        return;
    }
    step(sample);
}

void OksirModel::finish_warmup() {
    if (!warming_up() || warmup_buffer_.empty()) return;

    OksirModel backup = *this;
    try {
        std::vector<double> ys;
        ys.reserve(warmup_buffer_.size());
        for (const auto& s : warmup_buffer_) ys.push_back(s.y);
        slice_config_ = SliceConfig::from_sample(ys, cfg_.num_slices);

        std::vector<StreamSample> replay = std::move(warmup_buffer_);
        warmup_buffer_.clear();
        for (const auto& s : replay) step(s);
    } catch (...) {
        *this = std::move(backup);
        throw;
    }
}

void OksirModel::initialize(const StreamSample& first) {
    const double nu = cfg_.nu ? *cfg_.nu : ModelConfig::kRelativeNu * kernel_eval(first.x, first.x, cfg_.kernel);
    Dictionary dict = Dictionary::initialize(first.x, cfg_.kernel, nu);
    SliceState slices(slice_config_->num_slices(), 0);
    slices.update_case2(slice_config_->slice_index(first.y));
    CenteringState centering;
    centering.enabled = cfg_.center;
    centering.update_mean(Eigen::VectorXd::Ones(1), true);
    ProjectionState proj = ProjectionState::initialize(cfg_.dim, cfg_.seed, cfg_.schedule, cfg_.rule);

    dict_ = std::move(dict);
    slices_ = std::move(slices);
    centering_ = std::move(centering);
    proj_ = std::move(proj);
    scaling_ = OperatorScaling{};
    input_dim_ = first.x.size();
    t_ = 1;
}

void OksirModel::step(const StreamSample& sample) {
    if (!initialized()) {
        initialize(sample);
        return;
    }
    const int h = slice_config_->slice_index(sample.y);
    const AldResult ald = dict_.ald_test(sample.x, cfg_.kernel);
    if (ald.admitted) {
        step_grow(sample, h, ald);
    } else {
        step_absorb(h, ald);
    }
    check_drift();
}

void OksirModel::step_absorb(int h, const AldResult& ald) {
    Eigen::MatrixXd old_ata = dict_.ata();
    SliceStats old_slice = slices_.slice(h);
    CenteringState old_centering = centering_;
    ProjectionState old_proj = proj_;
    OperatorScaling old_scaling = scaling_;
    const long old_t = t_;
    try {
        dict_.absorb(ald);
        slices_.update_case1(h, ald.a_tilde);
        centering_.update_mean(ald.a_tilde, false);
        ++t_;
        const Operators ops = build_operators(scaling_, kStepPowerIterations);
        proj_.update_case1(ops.k, ops.q, ops.ata, proj_.learning_rate());
    } catch (...) {
        dict_.restore_ata(std::move(old_ata));
        slices_.restore(h, std::move(old_slice));
        centering_ = std::move(old_centering);
        proj_ = std::move(old_proj);
        scaling_ = std::move(old_scaling);
        t_ = old_t;
        throw;
    }
}

void OksirModel::step_grow(const StreamSample& sample, int h, const AldResult& ald) {
    Dictionary old_dict = dict_;
    SliceState old_slices = slices_;
    CenteringState old_centering = centering_;
    ProjectionState old_proj = proj_;
    OperatorScaling old_scaling = scaling_;
    const long old_t = t_;
    try {
        dict_.grow(sample.x, ald);
        slices_.update_case2(h);
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(dict_.size());
        unit[dict_.size() - 1] = 1.0;
        centering_.update_mean(unit, true);
        ++t_;
        const Operators ops = build_operators(scaling_, kStepPowerIterations);
        if (cfg_.random_new_rows) {
            proj_.update_case2(ops.k, ops.q, ops.ata, proj_.learning_rate(),
                               ProjectionState::random_row(cfg_.dim, cfg_.seed, dict_.size() - 1));
        } else {
            proj_.update_case2(ops.k, ops.q, ops.ata, proj_.learning_rate());
        }
    } catch (...) {
        dict_ = std::move(old_dict);
        slices_ = std::move(old_slices);
        centering_ = std::move(old_centering);
        proj_ = std::move(old_proj);
        scaling_ = std::move(old_scaling);
        t_ = old_t;
        throw;
    }
}

Eigen::MatrixXd OksirModel::working_kernel() const {
    if (!initialized()) throw StateError("model has no dictionary yet");
    if (cfg_.center) return center_matrix(dict_.k_tilde(), centering_.a_bar);
    return dict_.k_tilde();
}

OksirModel::Operators OksirModel::build_operators(OperatorScaling& scaling, int power_iterations) const {
    Operators ops{working_kernel(), slices_.compute_q(), dict_.ata()};
    if (!cfg_.normalize_operators) return ops;

    const double inv_t = 1.0 / static_cast<double>(t_);
    ops.q *= inv_t;
    ops.ata *= inv_t;

    const Eigen::Index m = ops.k.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    v.head(std::min(m, scaling.probe.size())) = scaling.probe.head(std::min(m, scaling.probe.size()));
    // The constant vector lies in the null space of a centered kernel, so never start from it.
    if (!(v.norm() > 0.0)) {
        for (Eigen::Index i = 0; i < m; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    }
    v.normalize();

    double top = 0.0;
    for (int i = 0; i < power_iterations; ++i) {
        const Eigen::VectorXd w = ops.k * (ops.ata * (ops.k * v));
        const double norm = w.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        top = norm;
        v = w / norm;
    }
    // Rounding noise from a (numerically) zero operator must not blow the kernel up.
    const double floor = 1e-12 * ops.k.squaredNorm() * ops.ata.norm();
    if (!(top > floor)) top = 0.0;
    scaling.probe = v;
    scaling.top = top;
    if (top > 0.0) ops.k *= 1.0 / std::sqrt(top);
    return ops;
}

OksirModel::Operators OksirModel::operators() const {
    OperatorScaling scratch = scaling_;
    return build_operators(scratch, kRefinePowerIterations);
}

std::optional<double> OksirModel::nu() const {
    if (initialized()) return dict_.nu();
    return cfg_.nu;
}

void OksirModel::align_directions() {
    if (!initialized()) throw StateError("align_directions: model has no dictionary yet");
    const Operators ops = operators();
    const Eigen::MatrixXd& phi = proj_.phi();
    const Eigen::MatrixXd kp = ops.k * phi;
    const Eigen::MatrixXd b = kp.transpose() * ops.q * kp;
    const Eigen::MatrixXd c = kp.transpose() * ops.ata * kp;
    // A rank-deficient C block (too few atoms, or columns still collapsed) has no Ritz basis.
    const Eigen::VectorXd c_eigs = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(c_eigs.maxCoeff() > 0.0) || c_eigs.minCoeff() <= 1e-12 * c_eigs.maxCoeff()) {
        throw NumericError("align_directions: the columns of Phi are (numerically) dependent");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(b, c);
    if (es.info() != Eigen::Success) throw NumericError("align_directions: Ritz problem failed to converge");
    Eigen::MatrixXd rotated = phi * es.eigenvectors().rowwise().reverse();
    if (!all_finite(rotated)) throw NumericError("align_directions: non-finite Ritz vectors");
    for (Eigen::Index j = 0; j < rotated.cols(); ++j) {
        Eigen::Index arg = 0;
        rotated.col(j).cwiseAbs().maxCoeff(&arg);
        if (rotated(arg, j) < 0.0) rotated.col(j) *= -1.0;
    }
    proj_.set_phi(std::move(rotated));
}

void OksirModel::refine(int iterations, double eta) {
    if (!initialized()) throw StateError("refine: model has no dictionary yet");
    const Operators ops = operators();
    Eigen::MatrixXd phi = proj_.phi();
    for (int i = 0; i < iterations; ++i) {
        phi = phi_iterate(phi, ops.k, ops.q, ops.ata, eta, proj_.rule());
        if (!phi.allFinite() || phi.cwiseAbs().maxCoeff() > kDivergenceBound) {
            throw DivergenceError("refine: iterate diverged, reduce the learning rate");
        }
    }
    proj_.set_phi(std::move(phi));
}

void OksirModel::check_drift() {
    if (cfg_.drift_check_every > 0 && t_ % cfg_.drift_check_every == 0) {
        max_inverse_drift_ = std::max(max_inverse_drift_, dict_.inverse_drift());
    }
}

Eigen::VectorXd OksirModel::transform(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (!initialized()) throw StateError("transform: model is still warming up");
    check_input(x);
    Eigen::VectorXd k = kernel_vector(dict_, x, cfg_.kernel);
    if (cfg_.center) k = center_vector(k, dict_.k_tilde(), centering_.a_bar);
    return proj_.phi().transpose() * k;
}

Eigen::MatrixXd OksirModel::transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
    Eigen::MatrixXd out(xs.rows(), proj_.dim());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out.row(i) = transform(xs.row(i).transpose()).transpose();
    return out;
}

std::size_t OksirModel::state_bytes() const {
    const auto m = static_cast<std::size_t>(dict_.size());
    const auto p = static_cast<std::size_t>(input_dim_);
    const auto h = static_cast<std::size_t>(slices_.num_slices());
    const auto d = static_cast<std::size_t>(proj_.dim());
    std::size_t doubles = m * p + 3 * m * m + h * (m * m + m) + m * d + m +
                          static_cast<std::size_t>(scaling_.probe.size());
    doubles += warmup_buffer_.size() * (p + 1);
    return doubles * sizeof(double);
}

OksirModel OksirModel::from_parts(Parts parts) {
    parts.cfg.validate();
    OksirModel model(parts.cfg);
    const Eigen::Index m = parts.dict.size();
    if (parts.slice_config) {
        if (m > 0) {
            if (parts.slices.num_slices() != parts.slice_config->num_slices() || parts.slices.dim() != m) {
                throw FormatError("slice statistics do not match the slice layout or dictionary");
            }
            if (parts.proj.rows() != m || parts.proj.dim() != parts.cfg.dim) {
                throw FormatError("projection block does not match the dictionary");
            }
            if (parts.centering.a_bar.size() != m) throw FormatError("centering mean does not match the dictionary");
            if (parts.slices.total() != parts.t) throw FormatError("sample count disagrees with slice counts");
            if (parts.scaling.probe.size() > m) throw FormatError("scaling probe is longer than the dictionary");
            if (parts.dict.input_dim() != parts.input_dim) throw FormatError("dictionary atoms have the wrong dimension");
        }
        if (!parts.warmup_buffer.empty()) throw FormatError("warm-up buffer present after cut-points were frozen");
    } else if (m > 0) {
        throw FormatError("dictionary present while still warming up");
    }
    for (const auto& s : parts.warmup_buffer) {
        if (s.x.size() != parts.input_dim) throw FormatError("warm-up sample has the wrong dimension");
    }

    model.input_dim_ = parts.input_dim;
    model.dict_ = std::move(parts.dict);
    model.slice_config_ = std::move(parts.slice_config);
    model.slices_ = std::move(parts.slices);
    model.proj_ = std::move(parts.proj);
    model.centering_ = std::move(parts.centering);
    model.centering_.enabled = model.cfg_.center;
    model.scaling_ = std::move(parts.scaling);
    model.t_ = parts.t;
    model.warmup_buffer_ = std::move(parts.warmup_buffer);
    return model;
}

}  // namespace oksir
