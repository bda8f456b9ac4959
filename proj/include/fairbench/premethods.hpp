#ifndef FAIRBENCH_PREMETHODS_HPP
#define FAIRBENCH_PREMETHODS_HPP

#include <cstdint>

#include "fairbench/dataset.hpp"

namespace fairbench {

/// Quantile repair: every feature value moves fraction min(strength, 1) of the
/// way from its own value toward the pooled quantile curve evaluated at the
/// value's within-group rank. Labels, codes, and weights are untouched.
TabularDataset data_repairer(const TabularDataset& train, const SensitiveEncoding& encoding,
                             double strength);

/// Flips min(strength, 1) of the per-group label changes needed to equalize
/// every group's positive base rate with the global rate. Over-represented
/// labels closest to a naive scorer's 0.5 margin flip first; ties break by
/// sample index.
TabularDataset label_flipping(const TabularDataset& train, const SensitiveEncoding& encoding,
                              double strength, std::uint64_t seed);

/// Moves each (group, label) cell count toward the counts that equalize every
/// group's prevalence with the global prevalence (group sizes fixed),
/// undersampling or duplicating rows uniformly at random.
TabularDataset prevalence_sampling(const TabularDataset& train, const SensitiveEncoding& encoding,
                                   double strength, std::uint64_t seed);

}  // namespace fairbench

#endif  // FAIRBENCH_PREMETHODS_HPP
