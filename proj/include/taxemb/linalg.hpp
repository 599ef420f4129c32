#pragma once

#include "taxemb/common.hpp"

namespace taxemb {

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values[j]
};

/// Cyclic Jacobi rotations. Intended for the small dense matrices used by
/// the projection export (q up to a few hundred).
SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace taxemb
