#include "piw/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace piw {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

}  // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Eigen::MatrixXd read_matrix_csv(std::istream& in, std::vector<std::string>* row_ids) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    bool header_allowed = true;  // only before any data row
    bool labeled_rows = false;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        std::vector<double> values;
        values.reserve(fields.size());
        bool all_numeric = true;
        for (const auto& f : fields) {
            double v;
            if (!parse_double(f, v)) {
                all_numeric = false;
                break;
            }
            values.push_back(v);
        }
        std::string id;
        if (!all_numeric) {
            // A row whose first field is a label but whose remaining fields are
            // numeric is data; anything else non-numeric is a header (once).
            values.clear();
            bool rest_numeric = fields.size() >= 2;
            for (std::size_t i = 1; i < fields.size() && rest_numeric; ++i) {
                double v;
                if (!parse_double(fields[i], v)) rest_numeric = false;
                else values.push_back(v);
            }
            if (!rest_numeric) {
                if (header_allowed) {
                    header_allowed = false;
                    continue;
                }
                throw InvalidMatrix("CSV row has non-numeric data fields");
            }
            if (!rows.empty() && !labeled_rows)
                throw InvalidMatrix("CSV mixes labeled and unlabeled rows");
            id = fields[0];
            labeled_rows = true;
        } else if (labeled_rows) {
            throw InvalidMatrix("CSV mixes labeled and unlabeled rows");
        }
        header_allowed = false;
        if (!rows.empty() && values.size() != rows.front().size())
            throw InvalidMatrix("CSV rows have inconsistent lengths");
        rows.push_back(std::move(values));
        ids.push_back(id.empty() ? std::to_string(rows.size() - 1) : id);
    }
    if (rows.empty()) throw InvalidMatrix("CSV contains no data rows");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    if (row_ids) *row_ids = std::move(ids);
    return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* row_ids) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open file: " + path);
    return read_matrix_csv(in, row_ids);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j) out << ',';
            out << header[j];
        }
        out << '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open file for writing: " + path);
    write_matrix_csv(out, m, header);
}

}  // namespace piw
