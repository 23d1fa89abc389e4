#ifndef UNIREG_LOSSES_HPP_
#define UNIREG_LOSSES_HPP_

#include <span>

#include "unireg/autodiff.hpp"

namespace unireg {

// Mean softmax cross-entropy of logits [b x c] against labels in [0, c).
ad::Var classification_loss(ad::Var logits, std::span<const int> labels);

// Negative squared distances [q x n] from queries to class prototypes, the
// prototypes being per-class means of the support embeddings. Support
// labels must cover every class in [0, n) where n = max label + 1.
ad::Var prototypical_logits(ad::Var support_z, std::span<const int> support_labels,
                            ad::Var query_z);

// Cross-entropy of prototypical_logits against the query labels.
ad::Var prototypical_loss(ad::Var support_z, std::span<const int> support_labels,
                          ad::Var query_z, std::span<const int> query_labels);

inline constexpr double kDefaultContrastiveMargin = 1.0;

// Mean over unordered pairs i < j: d^2 for same-label pairs,
// max(0, margin - d)^2 otherwise. Needs at least two rows.
ad::Var contrastive_loss(ad::Var z, std::span<const int> labels,
                         double margin = kDefaultContrastiveMargin);

}  // namespace unireg

#endif  // UNIREG_LOSSES_HPP_
