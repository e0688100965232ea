#include <fsan/experiment/table.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef FSAN_VERSION
#define FSAN_VERSION "0.0.0"
#endif

namespace fsan::experiment
{

ResultTable::ResultTable(std::vector<std::string> columns)
    : columns_(std::move(columns))
{
}

void ResultTable::add_row(std::vector<double> row)
{
    if (row.size() != columns_.size())
    {
        throw std::invalid_argument("ResultTable: row width differs from header");
    }
    rows_.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
    {
        if (columns_[i] == name) return i;
    }
    throw std::out_of_range("ResultTable: no column '" + name + "'");
}

double ResultTable::at(std::size_t row, const std::string& name) const
{
    return rows_.at(row).at(column(name));
}

void ResultTable::write_csv(std::ostream& os) const
{
    for (const auto& [k, v] : metadata_) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i)
    {
        os << (i ? "," : "") << columns_[i];
    }
    os << '\n';
    char buf[32];
    for (const auto& row : rows_)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            os << (i ? "," : "") << buf;
        }
        os << '\n';
    }
}

std::string ResultTable::to_csv() const
{
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

ResultTable parse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    ResultTable t;
    std::map<std::string, std::string> meta;
    bool header = false;
    while (std::getline(in, line))
    {
        if (line.empty()) continue;
        if (!header && line.rfind("# ", 0) == 0)
        {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
            {
                throw std::invalid_argument("parse_csv: malformed metadata line");
            }
            meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header)
        {
            t = ResultTable(cells);
            header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::stod(c));
        t.add_row(std::move(row));
    }
    if (!header) throw std::invalid_argument("parse_csv: missing header row");
    t.metadata() = std::move(meta);
    return t;
}

void write_atomically(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string version_string()
{
    return FSAN_VERSION;
}

} // namespace fsan::experiment
