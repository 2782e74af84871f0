#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tppmix {

/// Event timestamps on (0, T]. `label` is a 0-based cluster index or -1 when
/// unknown.
struct EventSequence {
    std::int64_t id = 0;
    double horizon = 0.0;
    std::vector<double> times;
    int label = -1;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }

    /// Inter-event times a_i = t_i - t_{i-1} with t_0 = 0.
    std::vector<double> gaps() const;

    /// Throws std::invalid_argument unless timestamps are strictly increasing
    /// and inside (0, horizon].
    void validate() const;
};

using Dataset = std::vector<EventSequence>;

/// One JSON object per line: {"id", "label", "T", "timestamps"}.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Number of distinct non-negative labels, i.e. max label + 1 (0 if none).
int label_count(const Dataset& data);
bool has_labels(const Dataset& data);

}  // namespace tppmix
