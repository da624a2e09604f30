#pragma once

#include "kslab/rng.hpp"

#include <cstddef>
#include <vector>

namespace kslab {

// Walker alias table for a discrete distribution given by nonnegative
// weights (need not be normalised).
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(const std::vector<double>& weights);
    std::size_t sample(Rng& rng) const;
    double total() const { return total_; }
    std::size_t size() const { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
    double total_ = 0;
};

} // namespace kslab
