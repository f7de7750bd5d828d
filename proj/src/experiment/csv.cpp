#include "nclosure/experiment/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ncm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    for (const std::string& h : header) field(h);
    end_row();
}

void CsvWriter::field(const std::string& s) {
    if (s.find_first_of(",\n\"") != std::string::npos) throw std::runtime_error("csv: field needs quoting: " + s);
    if (pending_ > 0) row_ += ',';
    row_ += s;
    ++pending_;
}

CsvWriter& CsvWriter::operator<<(double v) {
    field(format_double(v));
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
    field(s);
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t v) {
    field(std::to_string(v));
    return *this;
}

void CsvWriter::end_row() {
    if (pending_ != columns_) {
        const std::size_t got = pending_;
        row_.clear();
        pending_ = 0;
        throw std::runtime_error("csv: " + path_ + ": row has " + std::to_string(got) + " fields, header has " +
                                 std::to_string(columns_));
    }
    out_ << row_ << '\n';
    row_.clear();
    pending_ = 0;
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("csv: failed writing '" + path_ + "'");
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::runtime_error("csv: no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
        if (t.rows.back().size() != t.header.size()) throw std::runtime_error("csv: ragged row in '" + path + "'");
    }
    return t;
}

}  // namespace ncm
