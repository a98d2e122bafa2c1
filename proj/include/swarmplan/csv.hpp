#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form, locale-independent.
std::string format_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names);
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& out_;
};

/// Header plus rows of text cells; every row has the header's width.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  ///< throws CsvError when absent
    std::vector<double> numeric_column(std::size_t index) const;
    std::vector<double> numeric_column(const std::string& name) const { return numeric_column(column(name)); }
};

/// Plain comma-separated text; double-quoted cells may contain commas.
CsvTable parse_csv(std::istream& in, const std::string& source = "csv");
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace swarmplan
