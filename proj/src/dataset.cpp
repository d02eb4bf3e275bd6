#include "distscale/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "distscale/error.hpp"

namespace distscale {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    }
    return out;
}

double parse_number(const std::string& cell, const std::string& where) {
    if (cell == "nan" || cell == "NaN") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last) {
        throw Error(ErrorCode::Parse, where + ": cannot parse '" + cell + "' as a number");
    }
    return v;
}

}  // namespace

std::string to_string(const RecordKey& key) {
    return key.machine_id + "/" + key.run_id + "/" + format_double(key.t);
}

std::vector<double> Dataset::column(std::size_t quantity) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.values.at(quantity));
    return out;
}

std::vector<std::string> Dataset::machines() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (seen.insert(r.key.machine_id).second) out.push_back(r.key.machine_id);
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Dataset parse_dataset_csv(const std::string& text, const QuantityRegistry& registry, bool require_target,
                          const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_line(line);
        break;
    }
    if (header.empty()) throw Error(ErrorCode::Parse, source + ": empty data file (no header)");
    if (header.size() < 3 || header[0] != "machine_id" || header[1] != "run_id" || header[2] != "t") {
        throw Error(ErrorCode::Parse, source + ":" + std::to_string(line_no) +
                                          ": header must start with machine_id,run_id,t");
    }

    std::map<std::string, std::size_t> column_of;
    for (std::size_t c = 3; c < header.size(); ++c) {
        if (!column_of.emplace(header[c], c).second) {
            throw Error(ErrorCode::Parse, source + ": duplicate column '" + header[c] + "'");
        }
    }
    std::vector<long> source_col(registry.size(), -1);
    for (std::size_t q = 0; q < registry.size(); ++q) {
        auto it = column_of.find(registry[q].name);
        if (it != column_of.end()) {
            source_col[q] = static_cast<long>(it->second);
        } else if (require_target || q != registry.target_index()) {
            throw Error(ErrorCode::Parse, source + ": missing column for quantity '" + registry[q].name + "'");
        }
    }

    Dataset data;
    data.quantity_names = registry.names();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::Parse, where + ": expected " + std::to_string(header.size()) + " columns, found " +
                                              std::to_string(cells.size()));
        }
        Record r;
        r.key.machine_id = cells[0];
        r.key.run_id = cells[1];
        r.key.t = parse_number(cells[2], where + " column t");
        r.values.resize(registry.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t q = 0; q < registry.size(); ++q) {
            if (source_col[q] < 0) continue;
            const auto c = static_cast<std::size_t>(source_col[q]);
            r.values[q] = parse_number(cells[c], where + " column " + header[c]);
        }
        data.records.push_back(std::move(r));
    }
    if (data.records.empty()) throw Error(ErrorCode::Parse, source + ": data file has no records");
    return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, const QuantityRegistry& registry, bool require_target) {
    return parse_dataset_csv(read_text_file(path), registry, require_target, path.string());
}

std::string dataset_to_csv(const Dataset& data) {
    std::string out = "machine_id,run_id,t";
    for (const auto& n : data.quantity_names) out += "," + n;
    out += "\n";
    for (const auto& r : data.records) {
        out += r.key.machine_id + "," + r.key.run_id + "," + format_double(r.key.t);
        for (double v : r.values) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    write_text_file(path, dataset_to_csv(data));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace distscale
