#include "laecf/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "laecf/errors.hpp"

namespace laecf::linalg {

namespace {

void mirror_upper_to_lower(Eigen::MatrixXd& g) {
  const Eigen::Index n = g.rows();
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) g(i, j) = g(j, i);
}

}  // namespace

void check_dense_budget(Eigen::Index n, const SolveOptions& options) {
  const std::uint64_t needed = 3ull * 8ull * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  if (needed > options.memory_cap_bytes) {
    std::ostringstream msg;
    msg << "refusing dense solve at n=" << n << ": three n x n float64 panels need " << needed
        << " bytes, above the memory cap of " << options.memory_cap_bytes
        << " bytes (raise --memory-cap to proceed)";
    throw SolverError(msg.str());
  }
}

GramMatrix gram(const Eigen::MatrixXd& m) {
  if (m.cols() < 1) throw DataError("gram: input has no columns");
  if (!m.allFinite()) throw DataError("gram: input contains non-finite entries");
  const Eigen::Index n = m.cols();
  GramMatrix g;
  g.values = Eigen::MatrixXd::Zero(n, n);
  g.values.selfadjointView<Eigen::Upper>().rankUpdate(m.transpose());
  mirror_upper_to_lower(g.values);
  g.source_rows = m.rows();
  return g;
}

GramMatrix gram(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
  if (m.cols() < 1) throw DataError("gram: input has no columns");
  const Eigen::Index n = m.cols();
  GramMatrix g;
  g.values = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> cols;
  std::vector<double> vals;
  for (Eigen::Index row = 0; row < m.rows(); ++row) {
    cols.clear();
    vals.clear();
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, row); it; ++it) {
      if (!std::isfinite(it.value())) throw DataError("gram: input contains non-finite entries");
      cols.push_back(it.col());
      vals.push_back(it.value());
    }
    for (std::size_t a = 0; a < cols.size(); ++a)
      for (std::size_t b = a; b < cols.size(); ++b) g.values(cols[a], cols[b]) += vals[a] * vals[b];
  }
  mirror_upper_to_lower(g.values);
  g.source_rows = m.rows();
  return g;
}

ClosedFormWorkspace ridge_inverse(GramMatrix g, double lambda_total, const SolveOptions& options) {
  if (!(lambda_total > 0.0)) throw ConfigError("ridge_inverse: lambda_total must be positive");
  if (g.values.rows() != g.values.cols()) throw DataError("ridge_inverse: gram matrix not square");
  const Eigen::Index n = g.values.rows();
  check_dense_budget(n, options);

  const double gram_max = g.values.cwiseAbs().maxCoeff();

  Eigen::MatrixXd shifted = std::move(g.values);
  shifted.diagonal().array() += lambda_total;

  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    const double smallest_pivot = ldlt.vectorD().minCoeff();
    std::ostringstream msg;
    msg << "ridge_inverse: Cholesky factorization failed (matrix numerically indefinite), "
        << "smallest pivot " << smallest_pivot;
    throw SolverError(msg.str());
  }

  ClosedFormWorkspace ws;
  ws.lambda_total = lambda_total;
  ws.p = Eigen::MatrixXd::Identity(n, n);
  llt.solveInPlace(ws.p);

  // Verify (G + lambda I) p = I blockwise against the shifted matrix.
  const double tolerance = 1e-8 * (1.0 + gram_max);
  const Eigen::Index block = std::min<Eigen::Index>(n, 256);
  double residual = 0.0;
  Eigen::MatrixXd panel;
  for (Eigen::Index j0 = 0; j0 < n; j0 += block) {
    const Eigen::Index width = std::min(block, n - j0);
    panel.noalias() = shifted * ws.p.middleCols(j0, width);
    for (Eigen::Index c = 0; c < width; ++c) panel(j0 + c, c) -= 1.0;
    residual = std::max(residual, panel.cwiseAbs().maxCoeff());
  }
  if (!(residual <= tolerance)) {
    std::ostringstream msg;
    msg << "ridge_inverse: inverse residual " << residual << " above tolerance " << tolerance;
    throw SolverError(msg.str());
  }
  return ws;
}

Eigen::MatrixXd zero_diag_finish(ClosedFormWorkspace& ws) {
  const Eigen::Index n = ws.p.rows();
  if (n == 0) throw SolverError("zero_diag_finish: empty workspace");
  ws.mu.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = ws.p(j, j);
    if (!(pivot > 0.0)) {
      std::ostringstream msg;
      msg << "zero_diag_finish: diag(P)[" << j << "] = " << pivot
          << " is not positive (lambda too small or invalid input)";
      throw SolverError(msg.str());
    }
    ws.mu(j) = 1.0 / pivot;
  }
  Eigen::MatrixXd b = std::move(ws.p);
  ws.p.resize(0, 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    b.col(j) *= -ws.mu(j);
    b(j, j) = 0.0;
  }
  return b;
}

std::vector<double> spectrum(const Eigen::MatrixXd& m) {
  if (m.size() == 0) throw DataError("spectrum: empty matrix");
  if (!m.allFinite()) throw DataError("spectrum: input contains non-finite entries");
  if (m.cwiseAbs().maxCoeff() == 0.0) throw DataError("spectrum: all-zero matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double top = sigma(0);
  std::vector<double> normalized(static_cast<std::size_t>(sigma.size()));
  for (Eigen::Index i = 0; i < sigma.size(); ++i) normalized[static_cast<std::size_t>(i)] = sigma(i) / top;
  return normalized;
}

}  // namespace laecf::linalg
