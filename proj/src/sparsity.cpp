#include "opacity/sparsity.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace opacity {
namespace {

void split(const std::vector<bool>& mask, std::vector<Index>& on,
           std::vector<Index>& off) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    (mask[i] ? on : off).push_back(static_cast<Index>(i));
  }
}

}  // namespace

StructuredPattern::StructuredPattern(std::vector<bool> row_mask,
                                     std::vector<bool> col_mask)
    : row_mask_(std::move(row_mask)), col_mask_(std::move(col_mask)) {
  split(row_mask_, rows_, other_rows_);
  split(col_mask_, cols_, other_cols_);
  if (rows_.empty() || cols_.empty()) {
    throw std::invalid_argument(
        "StructuredPattern: select at least one row and one column");
  }
}

StructuredPattern StructuredPattern::from_indices(Index total_rows,
                                                  Index total_cols,
                                                  const std::vector<Index>& rows,
                                                  const std::vector<Index>& cols) {
  std::vector<bool> rm(total_rows, false), cm(total_cols, false);
  for (Index r : rows) {
    if (r < 0 || r >= total_rows) {
      throw std::out_of_range("StructuredPattern: row index " + std::to_string(r) +
                              " out of range");
    }
    rm[r] = true;
  }
  for (Index c : cols) {
    if (c < 0 || c >= total_cols) {
      throw std::out_of_range("StructuredPattern: column index " +
                              std::to_string(c) + " out of range");
    }
    cm[c] = true;
  }
  return StructuredPattern(std::move(rm), std::move(cm));
}

RealMatrix StructuredPattern::E() const {
  RealMatrix E = RealMatrix::Zero(total_rows(), total_rows());
  for (Index r : rows_) E(r, r) = 1.0;
  return E;
}

RealMatrix StructuredPattern::G() const {
  RealMatrix G = RealMatrix::Zero(total_cols(), total_cols());
  for (Index c : cols_) G(c, c) = 1.0;
  return G;
}

RealMatrix StructuredPattern::J() const {
  RealMatrix J = RealMatrix::Zero(static_cast<Index>(cols_.size()), total_cols());
  for (std::size_t k = 0; k < cols_.size(); ++k) J(static_cast<Index>(k), cols_[k]) = 1.0;
  return J;
}

StructuredPattern StructuredPattern::transposed() const {
  return StructuredPattern(col_mask_, row_mask_);
}

PartitionedPencil partition_lambda(const ComplexMatrix& lambda,
                                   const StructuredPattern& pattern) {
  if (lambda.rows() != pattern.total_rows() || lambda.cols() != pattern.total_cols()) {
    throw std::invalid_argument("partition_lambda: mask lengths do not match the pencil");
  }
  PartitionedPencil out;
  out.alpha_rows = pattern.rows();
  out.beta_rows = pattern.other_rows();
  out.alpha_cols = pattern.cols();
  out.alpha = lambda(out.alpha_rows, Eigen::all);
  out.beta = lambda(out.beta_rows, Eigen::all);
  out.J = pattern.J();
  return out;
}

RealMatrix reduce(const RealMatrix& delta_full, const StructuredPattern& pattern) {
  if (delta_full.rows() != pattern.total_rows() ||
      delta_full.cols() != pattern.total_cols()) {
    throw std::invalid_argument("reduce: shape does not match the pattern");
  }
  return delta_full(pattern.rows(), pattern.cols());
}

RealMatrix expand(const RealMatrix& delta_r, const StructuredPattern& pattern) {
  if (delta_r.rows() != static_cast<Index>(pattern.rows().size()) ||
      delta_r.cols() != static_cast<Index>(pattern.cols().size())) {
    throw std::invalid_argument("expand: reduced shape does not match the pattern");
  }
  RealMatrix full = RealMatrix::Zero(pattern.total_rows(), pattern.total_cols());
  full(pattern.rows(), pattern.cols()) = delta_r;
  return full;
}

AffinePattern::AffinePattern(Index total_rows, Index total_cols,
                             std::vector<Cell> cells)
    : total_rows_(total_rows), total_cols_(total_cols), cells_(std::move(cells)) {
  if (cells_.empty()) throw std::invalid_argument("AffinePattern: no cells");
  std::string bad;
  for (const Cell& c : cells_) {
    if (c.row < 0 || c.row >= total_rows_ || c.col < 0 || c.col >= total_cols_) {
      bad += " (" + std::to_string(c.row + 1) + "," + std::to_string(c.col + 1) + ")";
    }
  }
  if (!bad.empty()) {
    throw std::out_of_range("AffinePattern: cells out of range:" + bad);
  }
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
}

AffinePattern AffinePattern::from_structured(const StructuredPattern& pattern) {
  std::vector<Cell> cells;
  for (Index r : pattern.rows()) {
    for (Index c : pattern.cols()) cells.push_back({r, c});
  }
  return AffinePattern(pattern.total_rows(), pattern.total_cols(), std::move(cells));
}

bool AffinePattern::representable_as_structured() const {
  std::set<Index> rows, cols;
  for (const Cell& c : cells_) {
    rows.insert(c.row);
    cols.insert(c.col);
  }
  return rows.size() * cols.size() == cells_.size();
}

std::optional<StructuredPattern> AffinePattern::as_structured() const {
  if (!representable_as_structured()) return std::nullopt;
  std::vector<Index> rows, cols;
  for (const Cell& c : cells_) {
    rows.push_back(c.row);
    cols.push_back(c.col);
  }
  return StructuredPattern::from_indices(total_rows_, total_cols_, rows, cols);
}

RealMatrix AffinePattern::mask() const {
  RealMatrix m = RealMatrix::Zero(total_rows_, total_cols_);
  for (const Cell& c : cells_) m(c.row, c.col) = 1.0;
  return m;
}

RealMatrix AffinePattern::apply(const RealMatrix& delta) const {
  if (delta.rows() != total_rows_ || delta.cols() != total_cols_) {
    throw std::invalid_argument("AffinePattern::apply: shape mismatch");
  }
  return delta.cwiseProduct(mask());
}

RealMatrix AffinePattern::E(Index term) const {
  RealMatrix E = RealMatrix::Zero(total_rows_, total_rows_);
  E(cells_.at(term).row, cells_.at(term).row) = 1.0;
  return E;
}

RealMatrix AffinePattern::G(Index term) const {
  RealMatrix G = RealMatrix::Zero(total_cols_, total_cols_);
  G(cells_.at(term).col, cells_.at(term).col) = 1.0;
  return G;
}

AffinePattern AffinePattern::transposed() const {
  std::vector<Cell> cells;
  for (const Cell& c : cells_) cells.push_back({c.col, c.row});
  return AffinePattern(total_cols_, total_rows_, std::move(cells));
}

AffinePattern affine_pattern(Index total_rows, Index total_cols,
                             std::vector<Cell> cells) {
  return AffinePattern(total_rows, total_cols, std::move(cells));
}

}  // namespace opacity
