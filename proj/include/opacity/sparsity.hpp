#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "opacity/linalg.hpp"

namespace opacity {

// Zero-based (row, col) position inside [A B; C D].
struct Cell {
  Index row = 0;
  Index col = 0;

  auto operator<=>(const Cell&) const = default;
};

// Binary row mask E and column mask G; only the entries in selected rows
// and selected columns of Delta survive E Delta G.
class StructuredPattern {
 public:
  StructuredPattern(std::vector<bool> row_mask, std::vector<bool> col_mask);

  // Zero-based index lists into a total_rows x total_cols target.
  static StructuredPattern from_indices(Index total_rows, Index total_cols,
                                        const std::vector<Index>& rows,
                                        const std::vector<Index>& cols);

  Index total_rows() const { return static_cast<Index>(row_mask_.size()); }
  Index total_cols() const { return static_cast<Index>(col_mask_.size()); }
  const std::vector<bool>& row_mask() const { return row_mask_; }
  const std::vector<bool>& col_mask() const { return col_mask_; }

  const std::vector<Index>& rows() const { return rows_; }
  const std::vector<Index>& cols() const { return cols_; }
  const std::vector<Index>& other_rows() const { return other_rows_; }
  const std::vector<Index>& other_cols() const { return other_cols_; }

  Index zero_rows() const { return total_rows() - static_cast<Index>(rows_.size()); }
  Index zero_cols() const { return total_cols() - static_cast<Index>(cols_.size()); }

  RealMatrix E() const;
  RealMatrix G() const;
  // Selector with Delta^alpha = Delta^r J.
  RealMatrix J() const;

  StructuredPattern transposed() const;

 private:
  std::vector<bool> row_mask_, col_mask_;
  std::vector<Index> rows_, cols_, other_rows_, other_cols_;
};

struct PartitionedPencil {
  ComplexMatrix alpha;  // selected rows
  ComplexMatrix beta;   // remaining rows
  RealMatrix J;
  std::vector<Index> alpha_rows, beta_rows, alpha_cols;
};

PartitionedPencil partition_lambda(const ComplexMatrix& lambda,
                                   const StructuredPattern& pattern);

RealMatrix reduce(const RealMatrix& delta_full, const StructuredPattern& pattern);
RealMatrix expand(const RealMatrix& delta_r, const StructuredPattern& pattern);

// Arbitrary cell set, one single-entry term (E_i, G_i) per cell.
class AffinePattern {
 public:
  AffinePattern(Index total_rows, Index total_cols, std::vector<Cell> cells);

  static AffinePattern from_structured(const StructuredPattern& pattern);

  Index total_rows() const { return total_rows_; }
  Index total_cols() const { return total_cols_; }
  const std::vector<Cell>& cells() const { return cells_; }
  Index size() const { return static_cast<Index>(cells_.size()); }

  // True iff the cells form a full row-set x col-set rectangle.
  bool representable_as_structured() const;
  std::optional<StructuredPattern> as_structured() const;

  RealMatrix mask() const;
  // sum_i E_i Delta G_i
  RealMatrix apply(const RealMatrix& delta) const;
  RealMatrix E(Index term) const;
  RealMatrix G(Index term) const;

  AffinePattern transposed() const;

 private:
  Index total_rows_, total_cols_;
  std::vector<Cell> cells_;
};

AffinePattern affine_pattern(Index total_rows, Index total_cols,
                             std::vector<Cell> cells);

}  // namespace opacity
