#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <vector>

#include "distscale/dimensions.hpp"

namespace distscale {

struct RecordKey {
    std::string machine_id;
    std::string run_id;
    double t = 0.0;  ///< time, or the sweep coordinate for bench data

    friend bool operator==(const RecordKey&, const RecordKey&) = default;
    friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

std::string to_string(const RecordKey& key);

struct Record {
    RecordKey key;
    std::vector<double> values;  ///< one per quantity, in Dataset::quantity_names order
};

/// Tabular time series keyed by (machine, run, t). Values are stored in the
/// quantity order of the registry the data was read against; a missing
/// column is represented by NaN.
struct Dataset {
    std::vector<std::string> quantity_names;
    std::vector<Record> records;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::vector<double> column(std::size_t quantity) const;
    std::vector<std::string> machines() const;  ///< distinct ids, first-seen order
};

/// Shortest-exact decimal for CSV: 17 significant digits.
std::string format_double(double v);

/// Canonical CSV: machine_id,run_id,t,<quantities>. Columns are matched to
/// the registry by name; every registry quantity must be present except the
/// target when `require_target` is false (its values become NaN).
Dataset read_dataset_csv(const std::filesystem::path& path, const QuantityRegistry& registry,
                         bool require_target = true);
Dataset parse_dataset_csv(const std::string& text, const QuantityRegistry& registry, bool require_target = true,
                          const std::string& source = "<memory>");

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
std::string dataset_to_csv(const Dataset& data);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace distscale
