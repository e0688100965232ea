#ifndef FSAN_EXPERIMENT_TABLE_HPP
#define FSAN_EXPERIMENT_TABLE_HPP

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace fsan::experiment
{

///
/// Rows of named numeric columns plus string metadata. CSV output starts
/// with one `# key=value` line per metadata entry, then the header row.
/// Values are written with 17 significant digits so reruns compare
/// bit-identically.
///
class ResultTable
{
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> columns);

    void add_row(std::vector<double> row);

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    std::size_t column(const std::string& name) const;
    double at(std::size_t row, const std::string& name) const;

    std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
    const std::map<std::string, std::string>& metadata() const noexcept
    {
        return metadata_;
    }

    void write_csv(std::ostream& os) const;
    std::string to_csv() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
    std::map<std::string, std::string> metadata_;
};

/// Parses text produced by ResultTable::write_csv.
ResultTable parse_csv(const std::string& text);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomically(const std::string& path, const std::string& content);

/// Library version with the git revision when known, e.g. "0.1.0+g1a2b3c4".
std::string version_string();

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_TABLE_HPP
