#include "kslab/alias.hpp"
#include "kslab/error.hpp"
#include "kslab/parallel.hpp"

namespace kslab {

AliasTable::AliasTable(const std::vector<double>& weights)
{
    const std::size_t n = weights.size();
    KahanSum s;
    for (double w : weights) {
        if (!(w >= 0)) throw Error(ErrorCode::InvalidArgument, "alias weights must be nonnegative");
        s.add(w);
    }
    total_ = s.value();
    if (!(total_ > 0)) throw Error(ErrorCode::InvalidArgument, "alias weights sum to zero");
    prob_.resize(n);
    alias_.resize(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        prob_[i] = weights[i] * n / total_;
        alias_[i] = i;
        (prob_[i] < 1 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s_i = small.back(), l_i = large.back();
        small.pop_back();
        alias_[s_i] = l_i;
        prob_[l_i] -= 1 - prob_[s_i];
        if (prob_[l_i] < 1) {
            large.pop_back();
            small.push_back(l_i);
        }
    }
    for (std::size_t i : small) prob_[i] = 1;
    for (std::size_t i : large) prob_[i] = 1;
}

std::size_t AliasTable::sample(Rng& rng) const
{
    const double u = rng.uniform() * prob_.size();
    std::size_t k = std::size_t(u);
    if (k >= prob_.size()) k = prob_.size() - 1;
    return (u - k) < prob_[k] ? k : alias_[k];
}

} // namespace kslab
