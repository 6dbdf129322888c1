#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

namespace laecf::linalg {

inline constexpr std::uint64_t kDefaultMemoryCapBytes = 16ull << 30;  // 16 GiB

struct SolveOptions {
  std::uint64_t memory_cap_bytes = kDefaultMemoryCapBytes;
};

// Symmetric item-by-item inner-product matrix (M^T M).
struct GramMatrix {
  Eigen::MatrixXd values;
  Eigen::Index source_rows = 0;  // row count of the originating matrix
};

// Output of a ridge-regularized inversion plus the diagonal multipliers
// produced while finishing a zero-diagonal solve.
struct ClosedFormWorkspace {
  Eigen::MatrixXd p;         // (G + lambda I)^-1
  Eigen::VectorXd mu;        // filled by the finishing step
  double lambda_total = 0.0;
};

// Refuses problem sizes where three dense n x n float64 matrices would
// exceed the cap (the solve path keeps up to three such panels live).
void check_dense_budget(Eigen::Index n, const SolveOptions& options = {});

// M^T M with the upper triangle computed once and mirrored, so the result
// is bitwise symmetric. Rejects non-finite input.
GramMatrix gram(const Eigen::MatrixXd& m);
GramMatrix gram(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m);

// (G + lambda I)^-1 via Cholesky; lambda_total must be positive. The input
// gram is consumed (its storage is reused for the shifted matrix). The
// result is verified against the identity to 1e-8 * (1 + max|G|).
ClosedFormWorkspace ridge_inverse(GramMatrix g, double lambda_total,
                                  const SolveOptions& options = {});

// Rescales columns of the inverse so the result has an exactly zero
// diagonal: column j becomes e_j - p[:,j] / p[j][j]. Consumes ws.p and
// stores the diagonal multipliers in ws.mu.
Eigen::MatrixXd zero_diag_finish(ClosedFormWorkspace& ws);

// Singular values of m divided by the largest, sorted descending.
std::vector<double> spectrum(const Eigen::MatrixXd& m);

}  // namespace laecf::linalg
