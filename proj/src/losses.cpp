#include "unireg/losses.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "unireg/error.hpp"

namespace unireg {

namespace {

void check_labels(std::span<const int> labels, std::size_t rows,
                  std::size_t classes, const char* op) {
  if (labels.size() != rows) {
    throw ContractError(std::string(op) + ": " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(rows) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError(std::string(op) + ": label " + std::to_string(y) +
                          " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

ad::Var classification_loss(ad::Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2) throw DimensionError("classification_loss needs [b x c] logits");
  const std::size_t b = lv.rows();
  const std::size_t c = lv.cols();
  check_labels(labels, b, c, "classification_loss");
  Tensor pick({b, c});
  for (std::size_t i = 0; i < b; ++i) {
    pick.at(i, static_cast<std::size_t>(labels[i])) = -1.0 / static_cast<double>(b);
  }
  ad::Tape& tape = logits.tape();
  return ad::sum(ad::mul(tape.constant(std::move(pick)), ad::log_softmax(logits)));
}

ad::Var prototypical_logits(ad::Var support_z, std::span<const int> support_labels,
                            ad::Var query_z) {
  const Tensor& sv = support_z.value();
  if (sv.rank() != 2) throw DimensionError("prototypical_logits needs [s x d] support");
  if (support_labels.size() != sv.rows()) {
    throw ContractError("prototypical_logits: support label count mismatch");
  }
  int max_label = -1;
  for (int y : support_labels) {
    if (y < 0) throw ContractError("prototypical_logits: negative label");
    max_label = std::max(max_label, y);
  }
  const std::size_t n = static_cast<std::size_t>(max_label + 1);
  std::vector<double> counts(n, 0.0);
  for (int y : support_labels) counts[static_cast<std::size_t>(y)] += 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (counts[c] == 0.0) {
      throw ContractError("prototypical_logits: class " + std::to_string(c) +
                          " has no support rows");
    }
  }
  Tensor averaging({n, sv.rows()});
  for (std::size_t i = 0; i < sv.rows(); ++i) {
    const auto c = static_cast<std::size_t>(support_labels[i]);
    averaging.at(c, i) = 1.0 / counts[c];
  }
  ad::Tape& tape = support_z.tape();
  ad::Var prototypes = ad::matmul(tape.constant(std::move(averaging)), support_z);
  return ad::neg(ad::pairwise_sq_dist(query_z, prototypes));
}

ad::Var prototypical_loss(ad::Var support_z, std::span<const int> support_labels,
                          ad::Var query_z, std::span<const int> query_labels) {
  ad::Var logits = prototypical_logits(support_z, support_labels, query_z);
  return classification_loss(logits, query_labels);
}

ad::Var contrastive_loss(ad::Var z, std::span<const int> labels, double margin) {
  const Tensor& zv = z.value();
  if (zv.rank() != 2) throw DimensionError("contrastive_loss needs [b x d] embeddings");
  const std::size_t b = zv.rows();
  if (b < 2) throw ContractError("contrastive_loss: batch has no valid pair");
  if (labels.size() != b) throw ContractError("contrastive_loss: label count mismatch");
  const double pairs = static_cast<double>(b * (b - 1) / 2);
  Tensor positive({b, b});
  Tensor negative({b, b});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      (labels[i] == labels[j] ? positive : negative).at(i, j) = 1.0 / pairs;
    }
  }
  ad::Tape& tape = z.tape();
  ad::Var sq = ad::pairwise_sq_dist(z, z);
  // Floor keeps sqrt differentiable at coincident points.
  ad::Var dist = ad::sqrt(ad::clamp_min(sq, 1e-24));
  ad::Var hinge = ad::square(ad::relu(ad::add_scalar(ad::neg(dist), margin)));
  return ad::add(ad::sum(ad::mul(tape.constant(std::move(positive)), sq)),
                 ad::sum(ad::mul(tape.constant(std::move(negative)), hinge)));
}

}  // namespace unireg
