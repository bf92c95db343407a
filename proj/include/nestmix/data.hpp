#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace nestmix {

class ValidationError : public std::runtime_error {
public:
    enum class Code { LengthMismatch, NonFinite, Empty };

    ValidationError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
    Code code;
};

// Grouped observations, stably sorted by group. Group indices are 0-based
// internally; original labels are kept for reporting.
struct GroupedData {
    std::vector<double> values;
    std::vector<int> group_of;           // per observation, in 0..J-1
    std::vector<int> group_sizes;        // N_j
    std::vector<int> offsets;            // size J+1; group j spans [offsets[j], offsets[j+1])
    std::vector<std::string> group_labels;  // original label of each group index
    int J = 0;
    int N = 0;
};

// Maps raw labels to contiguous group indices in order of first appearance
// and stably sorts the observations by group.
inline GroupedData validate_dataset(std::span<const double> values,
                                    std::span<const std::string> raw_groups) {
    if (values.size() != raw_groups.size())
        throw ValidationError(ValidationError::Code::LengthMismatch,
                              "validate_dataset: values and groups differ in length");
    if (values.empty())
        throw ValidationError(ValidationError::Code::Empty, "validate_dataset: empty input");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw ValidationError(ValidationError::Code::NonFinite,
                                  "validate_dataset: non-finite value at row " + std::to_string(i));
    }

    GroupedData d;
    d.N = static_cast<int>(values.size());
    std::vector<int> raw_idx(values.size());
    std::unordered_map<std::string, int> seen;
    for (std::size_t i = 0; i < raw_groups.size(); ++i) {
        auto [it, inserted] = seen.try_emplace(raw_groups[i], static_cast<int>(d.group_labels.size()));
        if (inserted) d.group_labels.push_back(raw_groups[i]);
        raw_idx[i] = it->second;
    }
    d.J = static_cast<int>(d.group_labels.size());
    d.group_sizes.assign(d.J, 0);
    for (int g : raw_idx) ++d.group_sizes[g];
    d.offsets.assign(d.J + 1, 0);
    for (int j = 0; j < d.J; ++j) d.offsets[j + 1] = d.offsets[j] + d.group_sizes[j];

    d.values.resize(values.size());
    d.group_of.resize(values.size());
    std::vector<int> cursor(d.offsets.begin(), d.offsets.end() - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int g = raw_idx[i];
        const int pos = cursor[g]++;
        d.values[pos] = values[i];
        d.group_of[pos] = g;
    }
    return d;
}

inline GroupedData validate_dataset(std::span<const double> values, std::span<const int> raw_groups) {
    std::vector<std::string> labels(raw_groups.size());
    for (std::size_t i = 0; i < raw_groups.size(); ++i) labels[i] = std::to_string(raw_groups[i]);
    return validate_dataset(values, labels);
}

}  // namespace nestmix
