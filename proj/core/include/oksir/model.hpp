#pragma once

#include "oksir/centering.hpp"
#include "oksir/dictionary.hpp"
#include "oksir/eigensolver.hpp"
#include "oksir/kernel.hpp"
#include "oksir/slicing.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oksir {

struct StreamSample {
    Eigen::VectorXd x;
    double y{0.0};
};

struct ModelConfig {
    KernelConfig kernel{};
    std::optional<double> nu;                 ///< ALD threshold; unset selects kRelativeNu * k(x1, x1)
    int dim{2};                               ///< number of directions d
    int num_slices{10};                       ///< H, used when no explicit cut-points are given
    std::optional<std::vector<double>> cutpoints;
    int warmup{0};                            ///< 0 selects max(10 H, 100)
    EtaSchedule schedule{};
    UpdateRule rule{UpdateRule::generalized_hebbian};
    bool center{true};
    bool normalize_operators{true};
    /// Fill the row that a new atom adds to Phi with a fresh N(0, 0.001) draw instead of
    /// zeros. Zero rows keep Phi at rank one in exact arithmetic (its 1 x d start has rank one
    /// and the update maps u w^T to u' w^T); only rounding noise, amplified over thousands of
    /// steps, ever separates the columns.
    bool random_new_rows{true};
    std::uint64_t seed{42};
    long drift_check_every{0};                ///< >0: densely re-invert K~ every N steps and record the drift

    /// Throws InputError on inconsistent settings.
    void validate() const;
    int warmup_size() const;

    /// Unset nu scales with the kernel's self-similarity, so it tracks p for the additive kernel.
    static constexpr double kRelativeNu = 0.01;
};

/// Step-size preconditioning of the reduced operators.
///
/// The accumulated Q and A^T A grow linearly with t and K~ carries the kernel's own scale, so the
/// raw operators make any fixed learning rate unstable. The model feeds the eigen-update with
/// Q / t, A^T A / t and s K~, where s puts the leading eigenvalue of K~ (A^T A / t) K~ near one
/// (tracked by a warm-started power iteration). None of these rescalings moves the solutions
/// of K~ Q K~ a = lambda K~ A^T A K~ a.
struct OperatorScaling {
    Eigen::VectorXd probe;  ///< power-iteration vector
    double top{0.0};        ///< latest estimate of the leading eigenvalue
};

/// Streaming kernel sliced inverse regression.
///
/// Samples arrive through partial_fit. Unless explicit cut-points are configured, the first
/// warmup_size() samples are buffered, slice cut-points are frozen from their responses and the
/// buffer is replayed in arrival order. After that every sample runs one ALD test, the
/// matching dictionary and slice updates and one stochastic eigen-update.
class OksirModel {
public:
    explicit OksirModel(ModelConfig cfg);

    /// Consumes one sample. On any error the model is left exactly as before the call.
    void partial_fit(const StreamSample& sample);
    void partial_fit(const Eigen::Ref<const Eigen::VectorXd>& x, double y);

    /// Freezes cut-points from whatever is buffered and replays it. No-op after warm-up.
    void finish_warmup();

    bool warming_up() const { return !slice_config_.has_value(); }
    bool initialized() const { return !dict_.empty(); }

    /// v = Phi^T k~(x), with the centered kernel vector when centering is enabled.
    Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Row-wise transform of a sample matrix (n x p) into n x d.
    Eigen::MatrixXd transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& xs) const;

    const ModelConfig& config() const { return cfg_; }
    const Dictionary& dictionary() const { return dict_; }
    const std::optional<SliceConfig>& slice_config() const { return slice_config_; }
    const SliceState& slices() const { return slices_; }
    const ProjectionState& projection() const { return proj_; }
    const CenteringState& centering() const { return centering_; }
    const OperatorScaling& scaling() const { return scaling_; }
    const std::vector<StreamSample>& warmup_buffer() const { return warmup_buffer_; }

    /// Samples absorbed into the statistics (warm-up buffer excluded).
    long t() const { return t_; }
    Eigen::Index input_dim() const { return input_dim_; }

    /// Largest drift measured by the periodic dense re-inversion (0 when disabled).
    double max_inverse_drift() const { return max_inverse_drift_; }

    /// Bytes held by the streaming state (dictionary, statistics, projection, buffers).
    std::size_t state_bytes() const;

    /// Kernel matrix used by the eigen-update (centered when enabled), unscaled.
    Eigen::MatrixXd working_kernel() const;

    /// Eigen-update operators at the current state: {s K, Q / t, A^T A / t} (or the raw
    /// matrices when normalization is off).
    struct Operators {
        Eigen::MatrixXd k;
        Eigen::MatrixXd q;
        Eigen::MatrixXd ata;
    };
    Operators operators() const;

    /// Rotates Phi within its column span onto the Ritz vectors of the reduced problem, ordered
    /// by decreasing Ritz value and scaled to Phi^T C Phi = I. The stochastic update only pins
    /// down the span, so this is what turns its columns into ordered directions. The span (and
    /// hence every later update) is unaffected.
    void align_directions();

    /// Threshold in use: the configured value or, once the first sample fixed it, the relative default.
    std::optional<double> nu() const;

    /// Runs extra eigen-updates on the frozen statistics at a fixed rate (no new samples).
    void refine(int iterations, double eta);

    struct Parts {
        ModelConfig cfg;
        Eigen::Index input_dim{0};
        Dictionary dict;
        std::optional<SliceConfig> slice_config;
        SliceState slices;
        ProjectionState proj;
        CenteringState centering;
        OperatorScaling scaling;
        long t{0};
        std::vector<StreamSample> warmup_buffer;
    };
    /// Reassembles a model from deserialized parts; throws FormatError when they disagree.
    static OksirModel from_parts(Parts parts);

private:
    void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    void initialize(const StreamSample& first);
    void step(const StreamSample& sample);
    void step_absorb(int h, const AldResult& ald);
    void step_grow(const StreamSample& sample, int h, const AldResult& ald);
    Operators build_operators(OperatorScaling& scaling, int power_iterations) const;
    void check_drift();

    ModelConfig cfg_;
    Eigen::Index input_dim_{0};
    Dictionary dict_;
    std::optional<SliceConfig> slice_config_;
    SliceState slices_;
    ProjectionState proj_;
    CenteringState centering_;
    OperatorScaling scaling_;
    long t_{0};
    std::vector<StreamSample> warmup_buffer_;
    double max_inverse_drift_{0.0};
};

/// Serializes to the versioned JSON model format.
std::string save_model(const OksirModel& model);

/// Parses save_model output. Throws FormatError on malformed or incompatible payloads.
OksirModel load_model(const std::string& payload);

inline constexpr int kModelFormatVersion = 1;

}  // namespace oksir
