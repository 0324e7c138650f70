#include "oksir_cli/protocol.hpp"

#include "oksir/batch_reference.hpp"
#include "oksir/csv.hpp"
#include "oksir/error.hpp"
#include "oksir/evaluation.hpp"
#include "oksir/simgen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace oksir::cli {

Setting setting_from_string(std::string_view name) {
    if (name == "table1") return Setting::table1;
    if (name == "table3") return Setting::table3;
    throw InputError("unknown setting '" + std::string(name) + "' (expected table1 or table3)");
}

std::string to_string(Setting setting) { return setting == Setting::table1 ? "table1" : "table3"; }

ProtocolOptions ProtocolOptions::defaults(Setting setting) {
    ProtocolOptions o;
    o.setting = setting;
    if (setting == Setting::table3) {
        o.n = 500;
        o.p = 10;
    }
    return o;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<ReplicationResult> run_one(const ProtocolOptions& opts, int rep) {
    SimConfig sc;
    sc.model = opts.setting == Setting::table1 ? SimModel::linear_ratio : SimModel::sine_product;
    sc.p = opts.p;
    sc.n = opts.n + opts.n_test;
    sc.seed = opts.seed + static_cast<std::uint64_t>(rep);
    const std::vector<SimSample> data = simulate(sc);
    const std::vector<SimSample> train(data.begin(), data.begin() + opts.n);
    const SimTable test = to_table(std::vector<SimSample>(data.begin() + opts.n, data.end()));

    const std::string name = to_string(opts.setting);
    std::vector<ReplicationResult> rows;

    auto score = [&](ReplicationResult& r, const Eigen::MatrixXd& v) {
        const Eigen::VectorXd cor = direction_match(v, test.v);
        r.cor1 = cor[0];
        r.cor2 = cor.size() > 1 ? cor[1] : 0.0;
        if (opts.setting == Setting::table3) r.cv_error = kernel_regression_cv(v, test.y);
    };

    auto online = [&](bool center, const std::string& setting) {
        ModelConfig cfg = opts.model;
        cfg.center = center;
        cfg.seed = opts.model.seed + static_cast<std::uint64_t>(rep);
        const auto start = Clock::now();
        OksirModel model(cfg);
        for (const auto& s : train) model.partial_fit(s.x, s.y);
        model.finish_warmup();
        if (opts.align) {
            try {
                model.align_directions();
            } catch (const NumericError&) {
                // Columns still (nearly) parallel: score the raw block.
            }
        }
        ReplicationResult r;
        r.fit_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        r.setting = setting;
        r.rep = rep;
        r.dict_size = static_cast<long>(model.dictionary().size());
        score(r, model.transform_rows(test.x));
        rows.push_back(std::move(r));
    };
    online(opts.model.center, name);
    if (opts.also_uncentered && opts.model.center) online(false, name + "-uncentered");

    if (opts.batch.value_or(opts.setting == Setting::table3)) {
        // Same subsample rule as the batch command: at most batch_points training rows.
        std::vector<std::size_t> idx(train.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (static_cast<long>(idx.size()) > opts.batch_points) {
            std::mt19937_64 rng(sc.seed);
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(static_cast<std::size_t>(opts.batch_points));
            std::sort(idx.begin(), idx.end());
        }
        Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), opts.p);
        std::vector<double> y(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = train[idx[i]].x.transpose();
            y[i] = train[idx[i]].y;
        }
        BatchOptions bo;
        bo.dim = opts.model.dim;
        bo.num_slices = opts.model.num_slices;
        bo.cutpoints = opts.model.cutpoints;
        bo.center = opts.model.center;
        const auto start = Clock::now();
        const BatchKsirResult fit = batch_ksir(x, y, opts.model.kernel, bo);
        ReplicationResult r;
        r.fit_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        r.setting = name + "-batch";
        r.rep = rep;
        r.dict_size = static_cast<long>(idx.size());
        score(r, batch_transform_rows(fit, test.x));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

std::vector<ReplicationResult> run_protocol(const ProtocolOptions& opts) {
    if (opts.reps < 1) throw InputError("need at least one replication");
    if (opts.n < 1 || opts.p < 5 || opts.n_test < 10) throw InputError("need n >= 1, p >= 5 and at least 10 test rows");
    if (opts.model.dim < 2) throw InputError("the protocol scores two directions, dim must be at least 2");
    opts.model.validate();

    std::vector<std::vector<ReplicationResult>> per_rep(static_cast<std::size_t>(opts.reps));
    std::vector<std::exception_ptr> errors(per_rep.size());
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < opts.reps; r = next++) {
            try {
                per_rep[static_cast<std::size_t>(r)] = run_one(opts, r);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    };
    int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, opts.reps);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<ReplicationResult> rows;
    for (auto& rep : per_rep) {
        for (auto& r : rep) rows.push_back(std::move(r));
    }
    return rows;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<SettingSummary> summarize_rows(const std::vector<ReplicationResult>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ReplicationResult*>> groups;
    for (const auto& r : rows) {
        if (!groups.count(r.setting)) order.push_back(r.setting);
        groups[r.setting].push_back(&r);
    }
    std::vector<SettingSummary> out;
    for (const auto& name : order) {
        const auto& g = groups[name];
        std::vector<double> c1, c2, cv, secs, m;
        for (const auto* r : g) {
            c1.push_back(r->cor1);
            c2.push_back(r->cor2);
            secs.push_back(r->fit_seconds);
            m.push_back(static_cast<double>(r->dict_size));
            if (r->cv_error) cv.push_back(*r->cv_error);
        }
        SettingSummary s;
        s.setting = name;
        s.reps = static_cast<int>(g.size());
        s.cor1 = summarize(c1);
        s.cor2 = summarize(c2);
        s.fit_seconds = summarize(secs);
        s.dict_size = summarize(m);
        if (!cv.empty()) s.cv_error = summarize(cv);
        out.push_back(std::move(s));
    }
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<ReplicationResult>& rows, bool omit_timing) {
    out << "setting,rep,cor1,cor2,cv_error,fit_seconds,dict_size\n";
    for (const auto& r : rows) {
        out << r.setting << ',' << r.rep << ',' << format_double(r.cor1) << ',' << format_double(r.cor2) << ','
            << (r.cv_error ? format_double(*r.cv_error) : "") << ','
            << (omit_timing ? "" : format_double(r.fit_seconds)) << ',' << r.dict_size << '\n';
    }
}

namespace {

std::string mean_sd(const Summary& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f(%.2f)", s.mean, s.sd);
    return buf;
}

}  // namespace

void write_summary(std::ostream& out, const std::vector<ReplicationResult>& rows, bool omit_timing) {
    for (const auto& s : summarize_rows(rows)) {
        out << s.setting << " (" << s.reps << " reps): cor1 " << mean_sd(s.cor1) << "  cor2 " << mean_sd(s.cor2);
        if (s.cv_error) out << "  cv_error " << mean_sd(*s.cv_error);
        if (!omit_timing) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", s.fit_seconds.mean);
            out << "  fit_seconds " << buf;
        }
        out << "  dict " << mean_sd(s.dict_size) << '\n';
    }
}

}  // namespace oksir::cli
