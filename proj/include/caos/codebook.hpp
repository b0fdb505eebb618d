#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace caos {

// W x W Sylvester-Hadamard matrix with entries in {+1, -1}. Rows are the
// Walsh codes handed out to CAOS pixels; row 0 is the all-ones row.
class Codebook {
public:
    int order() const { return order_; }
    int at(int row, int col) const { return entries_[static_cast<std::size_t>(row) * order_ + col]; }
    std::span<const std::int8_t> row(int r) const {
        return {entries_.data() + static_cast<std::size_t>(r) * order_, static_cast<std::size_t>(order_)};
    }
    // Unipolar on/off bit of row r at position k: (h + 1) / 2.
    bool unipolar(int row, int col) const { return at(row, col) > 0; }

    bool operator==(const Codebook&) const = default;

private:
    friend Codebook sylvester_codebook(int order);
    int order_ = 0;
    std::vector<std::int8_t> entries_;
};

bool is_power_of_two(long value);

Codebook sylvester_codebook(int order);

} // namespace caos
