#include "caos/codebook.hpp"

#include "caos/error.hpp"

#include <fmt/format.h>

namespace caos {

bool is_power_of_two(long value) { return value > 0 && (value & (value - 1)) == 0; }

Codebook sylvester_codebook(int order) {
    require(order >= 2 && is_power_of_two(order), ErrorKind::domain,
            fmt::format("codebook order {} must be a power of two >= 2", order));
    Codebook book;
    book.order_ = order;
    book.entries_.assign(static_cast<std::size_t>(order) * order, 1);
    // H_2k = [[H_k, H_k], [H_k, -H_k]], grown in place from H_1 = [1].
    for (int k = 1; k < order; k *= 2) {
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) {
                const auto v = book.entries_[static_cast<std::size_t>(r) * order + c];
                book.entries_[static_cast<std::size_t>(r) * order + c + k] = v;
                book.entries_[static_cast<std::size_t>(r + k) * order + c] = v;
                book.entries_[static_cast<std::size_t>(r + k) * order + c + k] = static_cast<std::int8_t>(-v);
            }
        }
    }
    return book;
}

} // namespace caos
