#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

namespace ncm {

/// Comma-separated output with a header row; doubles use %.17g.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(std::size_t v);
    /// Writes the row; throws and discards it when the field count differs from the header.
    void end_row();
    void close();

private:
    void field(const std::string& s);

    std::string path_, row_;
    std::ofstream out_;
    std::size_t columns_ = 0, pending_ = 0;
};

std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace ncm
