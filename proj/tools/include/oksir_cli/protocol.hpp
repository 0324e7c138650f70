#pragma once

#include "oksir/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace oksir::cli {

enum class Setting { table1, table3 };

Setting setting_from_string(std::string_view name);
std::string to_string(Setting setting);

/// Simulation protocol behind the benchmark command.
///
/// Replication r draws n training and n_test test samples from one seeded stream (seed + r),
/// fits the streaming model on the training part and evaluates on the test part: table1
/// reports matched absolute correlations with the true statistics, table3 additionally the
/// 5-fold kernel-regression CV error of y on the estimated directions, plus a batch KSIR row.
struct ProtocolOptions {
    Setting setting{Setting::table1};
    int reps{10};
    long n{1000};
    int p{100};
    std::uint64_t seed{1};
    long n_test{1000};
    int jobs{0};  ///< worker threads; 0 uses the hardware concurrency
    ModelConfig model{};
    bool align{true};
    bool also_uncentered{false};  ///< add a "<setting>-uncentered" online row per replication
    std::optional<bool> batch;  ///< unset: only table3 runs the batch baseline
    long batch_points{1000};

    /// Defaults for a setting: table1 is p = 100, n = 1000; table3 is p = 10, n = 500.
    static ProtocolOptions defaults(Setting setting);
};

struct ReplicationResult {
    std::string setting;  ///< "table1", "table3" or "table3-batch"
    int rep{0};
    double cor1{0.0};
    double cor2{0.0};
    std::optional<double> cv_error;
    double fit_seconds{0.0};
    long dict_size{0};
};

/// Rows are ordered by replication, online before batch. Deterministic for fixed options
/// apart from fit_seconds.
std::vector<ReplicationResult> run_protocol(const ProtocolOptions& opts);

struct Summary {
    double mean{0.0};
    double sd{0.0};
};
Summary summarize(const std::vector<double>& values);

/// Averages of the rows whose setting equals `setting`.
struct SettingSummary {
    std::string setting;
    int reps{0};
    Summary cor1, cor2, fit_seconds, dict_size;
    std::optional<Summary> cv_error;
};
std::vector<SettingSummary> summarize_rows(const std::vector<ReplicationResult>& rows);

/// setting,rep,cor1,cor2,cv_error,fit_seconds,dict_size. Missing cells and, with
/// omit_timing, the timing column are left empty.
void write_results_csv(std::ostream& out, const std::vector<ReplicationResult>& rows, bool omit_timing);

/// Human-readable "mean(sd)" table, one row per setting.
void write_summary(std::ostream& out, const std::vector<ReplicationResult>& rows, bool omit_timing);

}  // namespace oksir::cli
