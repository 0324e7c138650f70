#include "oksir/batch_reference.hpp"
#include "oksir/error.hpp"
#include "oksir/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace oksir {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "oksir-model";
constexpr const char* kBatchFormatName = "oksir-batch-model";

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::VectorXd vector_from(const json& j) {
    if (!j.is_array()) throw FormatError("expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (rows < 0 || cols < 0 || !data.is_array() || data.size() != static_cast<std::size_t>(rows * cols)) {
        throw FormatError("matrix payload does not match its declared shape");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = data[k++].get<double>();
    }
    return m;
}

// Reals are written with 17 significant digits so every double round-trips exactly.
void emit(std::ostream& out, const json& j) {
    switch (j.type()) {
        case json::value_t::object: {
            out << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out << ',';
                first = false;
                out << json(it.key()).dump() << ':';
                emit(out, it.value());
            }
            out << '}';
            break;
        }
        case json::value_t::array: {
            out << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out << ',';
                emit(out, j[i]);
            }
            out << ']';
            break;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) throw NumericError("cannot serialize a non-finite value");
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.16e", v);
            out << buf;
            break;
        }
        default:
            out << j.dump();
    }
}

}  // namespace

std::string save_model(const OksirModel& model) {
    const ModelConfig& cfg = model.config();
    json j;
    j["format"] = kFormatName;
    j["version"] = kModelFormatVersion;
    j["kernel"] = {{"family", to_string(cfg.kernel.family())}, {"sigma", cfg.kernel.sigma()}};
    j["nu"] = cfg.nu ? json(*cfg.nu) : json(nullptr);
    j["d"] = cfg.dim;
    j["H"] = model.slice_config() ? model.slice_config()->num_slices() : cfg.num_slices;
    j["cutpoints"] = model.slice_config() ? json(model.slice_config()->cutpoints()) : json(nullptr);
    j["config"] = {
        {"num_slices", cfg.num_slices},
        {"explicit_cutpoints", cfg.cutpoints ? json(*cfg.cutpoints) : json(nullptr)},
        {"warmup", cfg.warmup},
        {"eta_schedule", cfg.schedule.to_string()},
        {"update_rule", to_string(cfg.rule)},
        {"normalize_operators", cfg.normalize_operators},
        {"random_new_rows", cfg.random_new_rows},
        {"drift_check_every", cfg.drift_check_every},
    };
    j["input_dim"] = model.input_dim();
    j["seed"] = cfg.seed;
    j["t"] = model.t();
    j["centering_enabled"] = cfg.center;

    const Dictionary& dict = model.dictionary();
    Eigen::MatrixXd samples(dict.size(), dict.input_dim());
    for (Eigen::Index i = 0; i < dict.size(); ++i) samples.row(i) = dict.samples()[static_cast<std::size_t>(i)].transpose();
    j["dict"] = {{"samples", matrix_json(samples)},
                 {"k_tilde", matrix_json(dict.k_tilde())},
                 {"k_tilde_inv", matrix_json(dict.k_tilde_inv())},
                 {"ata", matrix_json(dict.ata())},
                 {"nu", dict.nu()}};

    const SliceState& slices = model.slices();
    json counts = json::array();
    json m_mats = json::array();
    Eigen::MatrixXd m_vecs(slices.num_slices(), slices.dim());
    for (int h = 0; h < slices.num_slices(); ++h) {
        counts.push_back(slices.slice(h).count);
        m_vecs.row(h) = slices.slice(h).m_vec.transpose();
        m_mats.push_back(matrix_json(slices.slice(h).m_mat));
    }
    j["slices"] = {{"counts", counts}, {"m_vecs", matrix_json(m_vecs)}, {"m_mats", m_mats}};

    const ProjectionState& proj = model.projection();
    j["phi"] = matrix_json(proj.phi());
    j["projection"] = {{"step", proj.step()},
                       {"halvings", proj.halvings()},
                       {"eta_schedule", proj.schedule().to_string()}};
    j["a_bar"] = vector_json(model.centering().a_bar);
    j["centering_t"] = model.centering().t;
    j["scaling"] = {{"probe", vector_json(model.scaling().probe)}, {"top", model.scaling().top}};

    Eigen::MatrixXd wx(static_cast<Eigen::Index>(model.warmup_buffer().size()), model.input_dim());
    Eigen::VectorXd wy(wx.rows());
    for (Eigen::Index i = 0; i < wx.rows(); ++i) {
        const auto& s = model.warmup_buffer()[static_cast<std::size_t>(i)];
        wx.row(i) = s.x.transpose();
        wy[i] = s.y;
    }
    j["warmup_buffer"] = {{"x", matrix_json(wx)}, {"y", vector_json(wy)}};

    std::ostringstream out;
    emit(out, j);
    out << '\n';
    return out.str();
}

OksirModel load_model(const std::string& payload) {
    try {
        const json j = json::parse(payload);
        if (j.at("format").get<std::string>() != kFormatName) throw FormatError("not an oksir model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model format version " + std::to_string(version));
        }

        OksirModel::Parts parts;
        ModelConfig& cfg = parts.cfg;
        const json& kj = j.at("kernel");
        cfg.kernel = KernelConfig(kernel_family_from_string(kj.at("family").get<std::string>()),
                                  kj.at("sigma").get<double>());
        if (!j.at("nu").is_null()) cfg.nu = j.at("nu").get<double>();
        cfg.dim = j.at("d").get<int>();
        const json& cj = j.at("config");
        cfg.num_slices = cj.at("num_slices").get<int>();
        if (!cj.at("explicit_cutpoints").is_null()) cfg.cutpoints = cj.at("explicit_cutpoints").get<std::vector<double>>();
        cfg.warmup = cj.at("warmup").get<int>();
        cfg.schedule = EtaSchedule::parse(cj.at("eta_schedule").get<std::string>());
        cfg.rule = update_rule_from_string(cj.at("update_rule").get<std::string>());
        cfg.normalize_operators = cj.at("normalize_operators").get<bool>();
        cfg.random_new_rows = cj.at("random_new_rows").get<bool>();
        cfg.drift_check_every = cj.at("drift_check_every").get<long>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.center = j.at("centering_enabled").get<bool>();

        parts.input_dim = j.at("input_dim").get<Eigen::Index>();
        parts.t = j.at("t").get<long>();
        if (!j.at("cutpoints").is_null()) parts.slice_config = SliceConfig(j.at("cutpoints").get<std::vector<double>>());

        const json& dj = j.at("dict");
        const Eigen::MatrixXd samples = matrix_from(dj.at("samples"));
        std::vector<Eigen::VectorXd> atoms;
        for (Eigen::Index i = 0; i < samples.rows(); ++i) atoms.emplace_back(samples.row(i).transpose());
        parts.dict = Dictionary::from_parts(std::move(atoms), matrix_from(dj.at("k_tilde")),
                                            matrix_from(dj.at("k_tilde_inv")), matrix_from(dj.at("ata")), dj.at("nu").get<double>());
        const Eigen::Index m = parts.dict.size();

        const json& sj = j.at("slices");
        const auto counts = sj.at("counts").get<std::vector<long>>();
        const Eigen::MatrixXd m_vecs = matrix_from(sj.at("m_vecs"));
        const json& m_mats = sj.at("m_mats");
        if (m > 0) {
            if (counts.size() != m_mats.size() || m_vecs.rows() != static_cast<Eigen::Index>(counts.size())) {
                throw FormatError("slice arrays disagree in length");
            }
            std::vector<SliceStats> stats(counts.size());
            for (std::size_t h = 0; h < counts.size(); ++h) {
                stats[h].count = counts[h];
                stats[h].m_vec = m_vecs.row(static_cast<Eigen::Index>(h)).transpose();
                stats[h].m_mat = matrix_from(m_mats[h]);
            }
            parts.slices = SliceState::from_parts(std::move(stats), m);

            const json& pj = j.at("projection");
            parts.proj = ProjectionState::from_parts(matrix_from(j.at("phi")),
                                                     EtaSchedule::parse(pj.at("eta_schedule").get<std::string>()),
                                                     cfg.rule, pj.at("step").get<long>(), pj.at("halvings").get<int>());
            parts.centering.a_bar = vector_from(j.at("a_bar"));
            parts.centering.t = j.at("centering_t").get<long>();
            parts.scaling.probe = vector_from(j.at("scaling").at("probe"));
            parts.scaling.top = j.at("scaling").at("top").get<double>();
        }

        const json& wj = j.at("warmup_buffer");
        const Eigen::MatrixXd wx = matrix_from(wj.at("x"));
        const Eigen::VectorXd wy = vector_from(wj.at("y"));
        if (wx.rows() != wy.size()) throw FormatError("warm-up buffer arrays disagree in length");
        for (Eigen::Index i = 0; i < wx.rows(); ++i) parts.warmup_buffer.push_back({wx.row(i).transpose(), wy[i]});

        return OksirModel::from_parts(std::move(parts));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    } catch (const InputError& e) {
        throw FormatError(std::string("invalid model file: ") + e.what());
    } catch (const StateError& e) {
        throw FormatError(std::string("invalid model file: ") + e.what());
    }
}

std::string save_batch_model(const BatchKsirResult& result) {
    json j;
    j["format"] = kBatchFormatName;
    j["version"] = kModelFormatVersion;
    j["kernel"] = {{"family", to_string(result.kernel.family())}, {"sigma", result.kernel.sigma()}};
    j["cutpoints"] = result.slices.cutpoints();
    j["ridge"] = result.ridge;
    j["centered"] = result.centered;
    j["eigenvalues"] = vector_json(result.eigenvalues);
    j["coeffs"] = matrix_json(result.coeffs);
    j["train_x"] = matrix_json(result.train_x);
    j["k_row_mean"] = vector_json(result.k_row_mean);
    j["k_mean"] = result.k_mean;
    std::ostringstream out;
    emit(out, j);
    out << '\n';
    return out.str();
}

BatchKsirResult load_batch_model(const std::string& payload) {
    try {
        const json j = json::parse(payload);
        if (j.at("format").get<std::string>() != kBatchFormatName) throw FormatError("not an oksir batch model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model format version " + std::to_string(version));
        }
        BatchKsirResult r;
        const json& kj = j.at("kernel");
        r.kernel = KernelConfig(kernel_family_from_string(kj.at("family").get<std::string>()), kj.at("sigma").get<double>());
        r.slices = SliceConfig(j.at("cutpoints").get<std::vector<double>>());
        r.ridge = j.at("ridge").get<double>();
        r.centered = j.at("centered").get<bool>();
        r.eigenvalues = vector_from(j.at("eigenvalues"));
        r.coeffs = matrix_from(j.at("coeffs"));
        r.train_x = matrix_from(j.at("train_x"));
        r.k_row_mean = vector_from(j.at("k_row_mean"));
        r.k_mean = j.at("k_mean").get<double>();
        const Eigen::Index n = r.train_x.rows();
        if (r.coeffs.rows() != n || r.eigenvalues.size() != r.coeffs.cols() ||
            (r.centered && r.k_row_mean.size() != n)) {
            throw FormatError("batch model arrays disagree in size");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed batch model file: ") + e.what());
    } catch (const InputError& e) {
        throw FormatError(std::string("invalid batch model file: ") + e.what());
    }
}

}  // namespace oksir
