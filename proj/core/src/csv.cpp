#include "oksir/csv.hpp"

#include "oksir/error.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace oksir {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return s.substr(first, last - first + 1);
}

bool is_truth_name(const std::string& name) {
    if (name.size() < 2 || name[0] != 'v') return false;
    for (std::size_t i = 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return false;
    }
    return true;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

CsvLayout CsvLayout::from_header(const std::vector<std::string>& names) {
    CsvLayout layout;
    layout.names = names;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i == 0 && names[i] == "y") {
            layout.y_column = 0;
        } else if (is_truth_name(names[i])) {
            layout.truth_columns.push_back(i);
        } else {
            layout.feature_columns.push_back(i);
        }
    }
    return layout;
}

CsvReader::CsvReader(std::istream& in) : in_(in) {
    std::string header;
    while (std::getline(in_, header)) {
        ++line_;
        if (!trim(header).empty()) break;
        header.clear();
    }
    if (trim(header).empty()) throw InputError("CSV input has no header line");
    layout_ = CsvLayout::from_header(split_csv_line(header));
}

bool CsvReader::next(CsvRow& row) {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (trim(text).empty()) continue;
        const auto fields = split_csv_line(text);
        if (fields.size() != layout_.names.size()) {
            throw InputError("line " + std::to_string(line_) + ": expected " + std::to_string(layout_.names.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        row.line = line_;
        row.values.resize(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto& f = fields[i];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw InputError("line " + std::to_string(line_) + ": column '" + layout_.names[i] +
                                 "' is not a finite number ('" + f + "')");
            }
            row.values[i] = v;
        }
        return true;
    }
    return false;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::Ref<const Eigen::MatrixXd>& m) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
        out << '\n';
    }
}

}  // namespace oksir
