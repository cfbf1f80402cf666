#pragma once

#include <span>
#include <vector>

namespace dotlab {

struct TridiagonalEigenpairs {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // Euclidean unit norm
};

// Lowest `count` eigenpairs of the symmetric tridiagonal matrix with diagonal
// `diag` and off-diagonal `off` (size n-1). Eigenvalues by Sturm-sequence
// bisection, eigenvectors by inverse iteration with re-orthogonalisation.
TridiagonalEigenpairs lowest_eigenpairs(std::span<const double> diag, std::span<const double> off, int count);

// Number of eigenvalues strictly below `x`.
int sturm_count(std::span<const double> diag, std::span<const double> off, double x);

}  // namespace dotlab
