#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oksir {

/// Column roles in the data CSV: a leading `y`, features, and optional truth columns v1..vd.
struct CsvLayout {
    std::vector<std::string> names;
    std::optional<std::size_t> y_column;
    std::vector<std::size_t> feature_columns;
    std::vector<std::size_t> truth_columns;

    static CsvLayout from_header(const std::vector<std::string>& names);
};

struct CsvRow {
    std::size_t line{0};
    std::vector<double> values;
};

/// Streaming reader for numeric CSV with a mandatory header line.
class CsvReader {
public:
    /// Reads the header; throws InputError when it is missing.
    explicit CsvReader(std::istream& in);

    const CsvLayout& layout() const { return layout_; }

    /// Next data row. Throws InputError naming the line for malformed rows
    /// (wrong field count, non-numeric or non-finite values). Returns false at end of input.
    bool next(CsvRow& row);

    /// Line number of the last line consumed.
    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    CsvLayout layout_;
    std::size_t line_{0};
};

std::vector<std::string> split_csv_line(const std::string& line);

/// Writes a header and the rows of `m` with round-trip precision.
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace oksir
