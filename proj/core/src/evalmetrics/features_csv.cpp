#include "radsynth/evalmetrics/features_csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace radsynth::eval {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

void write_features_csv(const FeatureTable& table, const std::filesystem::path& path) {
    if (static_cast<Eigen::Index>(table.ids.size()) != table.features.rows()) {
        throw std::invalid_argument("write_features_csv: id count != row count");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "id";
    for (Eigen::Index j = 0; j < table.features.cols(); ++j) out << ",f" << j;
    out << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < table.features.rows(); ++i) {
        const auto& id = table.ids[static_cast<std::size_t>(i)];
        if (id.find(',') != std::string::npos) throw std::invalid_argument("feature id contains a comma: " + id);
        out << id;
        for (Eigen::Index j = 0; j < table.features.cols(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", table.features(i, j));
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("features csv is empty: " + path.string());
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "id") {
        throw std::runtime_error("features csv header must start with 'id': " + path.string());
    }
    const std::size_t dims = header.size() - 1;
    for (std::size_t j = 0; j < dims; ++j) {
        if (header[j + 1] != "f" + std::to_string(j)) {
            throw std::runtime_error("features csv: unexpected column '" + header[j + 1] + "'");
        }
    }
    FeatureTable table;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != dims + 1) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(dims + 1) + " cells");
        }
        table.ids.push_back(cells[0]);
        std::vector<double> row(dims);
        for (std::size_t j = 0; j < dims; ++j) row[j] = std::stod(cells[j + 1]);
        rows.push_back(std::move(row));
    }
    table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < dims; ++j)
            table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

}  // namespace radsynth::eval
