#include "oksir_cli/cli.hpp"

#include "oksir/batch_reference.hpp"
#include "oksir/csv.hpp"
#include "oksir/error.hpp"
#include "oksir/evaluation.hpp"
#include "oksir/model.hpp"
#include "oksir/simgen.hpp"
#include "oksir_cli/protocol.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace oksir::cli {

namespace {

// Input and output files where "-" means the caller's streams.
class Input {
public:
    Input(const std::string& path, std::istream& fallback) {
        if (path == "-") {
            in_ = &fallback;
        } else {
            file_ = std::make_unique<std::ifstream>(path);
            if (!*file_) throw InputError("cannot open '" + path + "' for reading");
            in_ = file_.get();
        }
    }
    std::istream& get() { return *in_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* in_{nullptr};
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (path == "-") {
            out_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw InputError("cannot open '" + path + "' for writing");
            out_ = file_.get();
        }
    }
    std::ostream& get() { return *out_; }
    void close(const std::string& path) {
        out_->flush();
        if (!*out_) throw InputError("write to '" + path + "' failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_{nullptr};
};

std::string read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& field : split_csv_line(text)) {
        std::istringstream s(field);
        double v = 0.0;
        if (!(s >> v) || !s.eof()) throw InputError("bad number '" + field + "' in list '" + text + "'");
        out.push_back(v);
    }
    return out;
}

bool parse_on_off(const std::string& v, const char* flag) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw InputError(std::string(flag) + " expects on or off, got '" + v + "'");
}

// Flags shared by fit, batch and benchmark.
struct ModelFlags {
    std::optional<double> nu;
    double sigma{2.0};
    std::string kernel{"additive_gaussian"};
    int dim{2};
    int slices{10};
    std::string cutpoints;
    std::string eta_schedule;
    std::string rule{"generalized_hebbian"};
    std::uint64_t seed{42};
    std::string center{"on"};
    int warmup{0};

    void add_kernel(CLI::App* cmd) {
        cmd->add_option("--sigma", sigma, "kernel width")->capture_default_str();
        cmd->add_option("--kernel", kernel, "additive_gaussian or gaussian_rbf")->capture_default_str();
    }
    void add_slicing(CLI::App* cmd) {
        cmd->add_option("--dim,-d", dim, "number of directions")->capture_default_str();
        cmd->add_option("--slices,-H", slices, "number of slices when cut-points are learned")->capture_default_str();
        cmd->add_option("--cutpoints", cutpoints, "explicit comma-separated slice cut-points");
        cmd->add_option("--center", center, "feature-space centering (on|off; benchmark also takes both)")->capture_default_str();
    }
    void add_streaming(CLI::App* cmd, const std::string& seed_flag = "--seed") {
        cmd->add_option("--nu", nu, "ALD threshold (default 0.01 k(x1,x1))");
        cmd->add_option("--eta-schedule", eta_schedule, "inverse_t or inverse_t_then_fixed:<t0>:<eta>");
        cmd->add_option("--update-rule", rule, "generalized_hebbian or swapped_roles")->capture_default_str();
        cmd->add_option(seed_flag, seed, "seed for the initial directions")->capture_default_str();
        cmd->add_option("--warmup", warmup, "samples buffered to learn cut-points (0: max(10 H, 100))");
    }

    KernelConfig kernel_config() const { return KernelConfig(kernel_family_from_string(kernel), sigma); }

    ModelConfig model_config() const {
        ModelConfig cfg;
        cfg.kernel = kernel_config();
        cfg.nu = nu;
        cfg.dim = dim;
        cfg.num_slices = slices;
        if (!cutpoints.empty()) cfg.cutpoints = parse_list(cutpoints);
        if (!eta_schedule.empty()) cfg.schedule = EtaSchedule::parse(eta_schedule);
        cfg.rule = update_rule_from_string(rule);
        cfg.seed = seed;
        cfg.center = parse_on_off(center, "--center");
        cfg.warmup = warmup;
        cfg.validate();
        return cfg;
    }
};

// ---------------------------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string model{"linear_ratio"};
    long n{1000};
    std::optional<int> p;
    std::uint64_t seed{1};
    bool ar1{false};
    std::string out{"-"};
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    SimConfig cfg;
    cfg.model = sim_model_from_string(a.model);
    cfg.p = a.p.value_or(cfg.model == SimModel::linear_ratio ? 100 : 10);
    cfg.n = a.n;
    cfg.seed = a.seed;
    cfg.ar1_sampling = a.ar1;
    cfg.validate();

    Output o(a.out, out);
    std::ostream& s = o.get();
    s << 'y';
    for (int j = 1; j <= cfg.p; ++j) s << ",x" << j;
    s << ",v1,v2\n";
    SimStream stream(cfg);
    for (long i = 0; i < cfg.n; ++i) {
        const SimSample d = stream.next();
        s << format_double(d.y);
        for (Eigen::Index j = 0; j < d.x.size(); ++j) s << ',' << format_double(d.x[j]);
        s << ',' << format_double(d.v1) << ',' << format_double(d.v2) << '\n';
    }
    o.close(a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// fit

struct FitArgs {
    ModelFlags flags;
    std::string input{"-"};
    std::string out;
    bool lenient{false};
    long log_every{100};
    bool no_align{false};
};

Eigen::VectorXd features_of(const CsvRow& row, const CsvLayout& layout) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(layout.feature_columns.size()));
    for (std::size_t i = 0; i < layout.feature_columns.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = row.values[layout.feature_columns[i]];
    }
    return x;
}

int cmd_fit(const FitArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    const ModelConfig cfg = a.flags.model_config();
    OksirModel model(cfg);

    Input input(a.input, in);
    CsvReader reader(input.get());
    const CsvLayout& layout = reader.layout();
    if (!layout.y_column) throw InputError("CSV header must start with a 'y' column");
    if (layout.feature_columns.empty()) throw InputError("CSV has no feature columns");

    using Clock = std::chrono::steady_clock;
    long rows = 0, skipped = 0;
    auto window_start = Clock::now();
    long window_rows = 0;
    auto log_line = [&] {
        const double ms = window_rows > 0
                              ? std::chrono::duration<double, std::milli>(Clock::now() - window_start).count() /
                                    static_cast<double>(window_rows)
                              : 0.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", ms);
        err << "t=" << rows << " dict=" << model.dictionary().size() << " step_ms=" << buf << '\n';
        window_start = Clock::now();
        window_rows = 0;
    };

    CsvRow row;
    for (;;) {
        try {
            if (!reader.next(row)) break;
            model.partial_fit(features_of(row, layout), row.values[*layout.y_column]);
        } catch (const InputError& e) {
            if (!a.lenient) throw;
            err << "warning: skipping row: " << e.what() << '\n';
            ++skipped;
            continue;
        }
        ++rows;
        ++window_rows;
        if (a.log_every > 0 && rows % a.log_every == 0) log_line();
    }
    if (rows == 0) throw InputError("no usable data rows");
    model.finish_warmup();
    if (!a.no_align) {
        try {
            model.align_directions();
        } catch (const NumericError& e) {
            err << "warning: directions left unaligned: " << e.what() << '\n';
        }
    }
    if (a.log_every > 0 && rows % a.log_every != 0) log_line();
    if (skipped > 0) err << "skipped " << skipped << " malformed rows\n";

    Output o(a.out, out);
    o.get() << save_model(model);
    o.close(a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// transform

struct TransformArgs {
    std::string model;
    std::string input{"-"};
    std::string out{"-"};
};

int cmd_transform(const TransformArgs& a, std::istream& in, std::ostream& out) {
    std::string payload;
    {
        std::ifstream f(a.model, std::ios::binary);
        if (!f) throw InputError("cannot open model '" + a.model + "'");
        payload = read_all(f);
    }
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
    int d = 0;
    if (payload.find("\"oksir-batch-model\"") != std::string::npos) {
        auto fit = std::make_shared<BatchKsirResult>(load_batch_model(payload));
        d = static_cast<int>(fit->coeffs.cols());
        apply = [fit](const Eigen::VectorXd& x) { return batch_transform(*fit, x); };
    } else {
        auto model = std::make_shared<OksirModel>(load_model(payload));
        if (!model->initialized()) throw StateError("model holds no fitted state yet");
        d = model->projection().dim();
        apply = [model](const Eigen::VectorXd& x) { return model->transform(x); };
    }

    Input input(a.input, in);
    CsvReader reader(input.get());
    const CsvLayout& layout = reader.layout();
    Output o(a.out, out);
    std::ostream& s = o.get();
    for (int j = 1; j <= d; ++j) s << (j > 1 ? "," : "") << 'v' << j;
    s << '\n';
    CsvRow row;
    while (reader.next(row)) {
        Eigen::VectorXd v;
        try {
            v = apply(features_of(row, layout));
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(row.line) + ": " + e.what());
        }
        for (Eigen::Index j = 0; j < v.size(); ++j) s << (j ? "," : "") << format_double(v[j]);
        s << '\n';
    }
    o.close(a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// batch

struct BatchArgs {
    ModelFlags flags;
    std::string input{"-"};
    std::string out;
    std::optional<double> ridge;
    long max_points{1000};
    std::uint64_t sample_seed{1};
};

int cmd_batch(const BatchArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    Input input(a.input, in);
    CsvReader reader(input.get());
    const CsvLayout& layout = reader.layout();
    if (!layout.y_column) throw InputError("CSV header must start with a 'y' column");
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    CsvRow row;
    while (reader.next(row)) {
        xs.push_back(features_of(row, layout));
        ys.push_back(row.values[*layout.y_column]);
    }
    if (xs.empty()) throw InputError("no data rows");
    if (a.max_points < 1) throw InputError("--max-points must be positive");

    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (static_cast<long>(idx.size()) > a.max_points) {
        std::mt19937_64 rng(a.sample_seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(a.max_points));
        std::sort(idx.begin(), idx.end());
        err << "using a random subsample of " << idx.size() << " of " << xs.size() << " rows\n";
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), xs.front().size());
    std::vector<double> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = xs[idx[i]].transpose();
        y[i] = ys[idx[i]];
    }

    BatchOptions bo;
    bo.dim = a.flags.dim;
    bo.num_slices = a.flags.slices;
    if (!a.flags.cutpoints.empty()) bo.cutpoints = parse_list(a.flags.cutpoints);
    bo.ridge = a.ridge;
    bo.center = parse_on_off(a.flags.center, "--center");
    const BatchKsirResult fit = batch_ksir(x, y, a.flags.kernel_config(), bo);

    Output o(a.out, out);
    o.get() << save_batch_model(fit);
    o.close(a.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
    ModelFlags flags;
    std::string setting;
    int reps{10};
    std::optional<long> n;
    std::optional<int> p;
    std::uint64_t seed{1};
    long n_test{1000};
    int jobs{0};
    std::string out{"-"};
    std::string batch;
    bool omit_timing{false};
    bool no_align{false};
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
    ProtocolOptions opts = ProtocolOptions::defaults(setting_from_string(a.setting));
    opts.reps = a.reps;
    if (a.n) opts.n = *a.n;
    if (a.p) opts.p = *a.p;
    opts.seed = a.seed;
    opts.n_test = a.n_test;
    opts.jobs = a.jobs;
    ModelFlags flags = a.flags;
    if (flags.center == "both") {
        flags.center = "on";
        opts.also_uncentered = true;
    }
    opts.model = flags.model_config();
    opts.align = !a.no_align;
    if (!a.batch.empty()) opts.batch = parse_on_off(a.batch, "--batch");

    const auto rows = run_protocol(opts);
    Output o(a.out, out);
    write_results_csv(o.get(), rows, a.omit_timing);
    o.close(a.out);
    write_summary(a.out == "-" ? err : out, rows, a.omit_timing);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string pred;
    std::string truth;
    int folds{5};
    std::string metric{"normalized_mse"};
};

struct Columns {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
};

Columns read_columns(const std::string& path, std::istream& in) {
    Input input(path, in);
    CsvReader reader(input.get());
    std::vector<std::vector<double>> rows;
    CsvRow row;
    while (reader.next(row)) rows.push_back(row.values);
    Columns c;
    c.names = reader.layout().names;
    c.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < rows[r].size(); ++j) {
            c.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
        }
    }
    return c;
}

int cmd_evaluate(const EvaluateArgs& a, std::istream& in, std::ostream& out) {
    if (a.pred == "-" && a.truth == "-") throw InputError("only one of --pred and --truth can read stdin");
    const Columns pred = read_columns(a.pred, in);
    const Columns truth = read_columns(a.truth, in);
    if (pred.values.rows() != truth.values.rows()) {
        throw InputError("predictions have " + std::to_string(pred.values.rows()) + " rows, truth has " +
                         std::to_string(truth.values.rows()));
    }
    if (pred.values.rows() == 0) throw InputError("no rows to evaluate");

    const CsvLayout tl = CsvLayout::from_header(truth.names);
    out << "metric,value\n";
    if (!tl.truth_columns.empty()) {
        Eigen::MatrixXd v(truth.values.rows(), static_cast<Eigen::Index>(tl.truth_columns.size()));
        for (std::size_t j = 0; j < tl.truth_columns.size(); ++j) {
            v.col(static_cast<Eigen::Index>(j)) = truth.values.col(static_cast<Eigen::Index>(tl.truth_columns[j]));
        }
        const Eigen::VectorXd cor = direction_match(pred.values, v);
        for (Eigen::Index j = 0; j < cor.size(); ++j) out << "cor" << j + 1 << ',' << format_double(cor[j]) << '\n';
    }
    if (tl.y_column) {
        KernelRegressionCvOptions cv;
        cv.folds = a.folds;
        if (a.metric == "normalized_mse") {
            cv.metric = CvMetric::normalized_mse;
        } else if (a.metric == "mse") {
            cv.metric = CvMetric::mse;
        } else {
            throw InputError("--metric expects normalized_mse or mse");
        }
        out << "cv_error," << format_double(kernel_regression_cv(pred.values, truth.values.col(0), cv)) << '\n';
    }
    if (tl.truth_columns.empty() && !tl.y_column) throw InputError("truth file has neither a y column nor v columns");
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online kernel sliced inverse regression"};
    app.name("oksir");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "write a simulated data stream as CSV (y,x1..xp,v1,v2)");
    c_sim->add_option("--model", sim.model, "linear_ratio or sine_product")->capture_default_str();
    c_sim->add_option("--n", sim.n, "number of rows")->capture_default_str();
    c_sim->add_option("--p", sim.p, "input dimension (default 100, or 10 for sine_product)");
    c_sim->add_option("--seed", sim.seed)->capture_default_str();
    c_sim->add_flag("--ar1", sim.ar1, "draw linear_ratio inputs by the AR(1) recursion");
    c_sim->add_option("--out,-o", sim.out, "output path or -")->capture_default_str();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "stream a CSV through the online model and save it");
    c_fit->add_option("input", fit.input, "CSV path or - for stdin")->capture_default_str();
    fit.flags.add_kernel(c_fit);
    fit.flags.add_slicing(c_fit);
    fit.flags.add_streaming(c_fit);
    c_fit->add_option("--out,-o", fit.out, "model file")->required();
    c_fit->add_flag("--lenient", fit.lenient, "skip malformed rows with a warning instead of failing");
    c_fit->add_option("--log-every", fit.log_every, "progress line every N rows (0 disables)")->capture_default_str();
    c_fit->add_flag("--no-align", fit.no_align, "keep Phi as produced by the stream (no Ritz rotation)");

    TransformArgs tr;
    auto* c_tr = app.add_subcommand("transform", "project CSV rows onto the fitted directions");
    c_tr->add_option("--model,-m", tr.model, "online or batch model file")->required();
    c_tr->add_option("input", tr.input, "CSV path or -")->capture_default_str();
    c_tr->add_option("--out,-o", tr.out, "output path or -")->capture_default_str();

    BatchArgs ba;
    auto* c_ba = app.add_subcommand("batch", "fit batch KSIR on (a subsample of) a CSV");
    c_ba->add_option("input", ba.input, "CSV path or -")->capture_default_str();
    ba.flags.add_kernel(c_ba);
    ba.flags.add_slicing(c_ba);
    c_ba->add_option("--ridge", ba.ridge, "regularization r (default trace(K)/n of the centered Gram)");
    c_ba->add_option("--max-points", ba.max_points, "subsample size cap")->capture_default_str();
    c_ba->add_option("--sample-seed", ba.sample_seed, "seed of the subsample")->capture_default_str();
    c_ba->add_option("--out,-o", ba.out, "model file")->required();

    BenchmarkArgs be;
    auto* c_be = app.add_subcommand("benchmark", "replicated simulation study (table1 or table3)");
    c_be->add_option("--setting", be.setting, "table1 or table3")->required();
    c_be->add_option("--reps", be.reps, "replications")->capture_default_str();
    c_be->add_option("--n", be.n, "training stream length (default 1000 / 500)");
    c_be->add_option("--p", be.p, "input dimension (default 100 / 10)");
    c_be->add_option("--seed", be.seed, "base data seed; replication r uses seed + r (and model-seed + r)")->capture_default_str();
    c_be->add_option("--n-test", be.n_test, "test rows per replication")->capture_default_str();
    c_be->add_option("--jobs", be.jobs, "worker threads (0: all cores)")->capture_default_str();
    c_be->add_option("--out,-o", be.out, "results CSV path or -")->capture_default_str();
    c_be->add_option("--batch", be.batch, "also run batch KSIR (on|off; default on for table3)");
    c_be->add_flag("--omit-timing", be.omit_timing, "leave fit_seconds empty so outputs are reproducible");
    c_be->add_flag("--no-align", be.no_align, "score the raw Phi columns");
    be.flags.center = "both";
    be.flags.add_kernel(c_be);
    be.flags.add_slicing(c_be);
    be.flags.add_streaming(c_be, "--model-seed");

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "score predicted directions against truth columns");
    c_ev->add_option("--pred", ev.pred, "CSV of predicted directions")->required();
    c_ev->add_option("--truth", ev.truth, "CSV with y and/or v1..vd")->required();
    c_ev->add_option("--folds", ev.folds, "CV folds")->capture_default_str();
    c_ev->add_option("--metric", ev.metric, "normalized_mse or mse")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n' << "run 'oksir --help' for usage\n";
        return kExitUsage;
    }

    try {
        if (*c_sim) return cmd_simulate(sim, out);
        if (*c_fit) return cmd_fit(fit, in, out, err);
        if (*c_tr) return cmd_transform(tr, in, out);
        if (*c_ba) return cmd_batch(ba, in, out, err);
        if (*c_be) return cmd_benchmark(be, out, err);
        if (*c_ev) return cmd_evaluate(ev, in, out);
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace oksir::cli
