#pragma once

#include <iosfwd>

#include "laecf/config.hpp"
#include "laecf/datasets.hpp"

namespace laecf::cli {

// Batch pipeline commands. Each throws ConfigError / DataError /
// SolverError; the CLI maps these to exit codes 1 / 2 / 3.

// Filter + split + persist: writes train/validation/test pair files, the
// id index files, and manifest.json with the dataset stats.
void cmd_prepare(const RunConfig& config, std::ostream& out);

// Fits config.model on the prepared training matrix and exports the weight
// matrix (header + payload). l3ae runs Phase 1 (or loads a cached semantic
// matrix), then Phase 2, and also exports the Phase-1 matrix.
void cmd_fit(const RunConfig& config, std::ostream& out);

// Ranks the chosen split and writes the overall/head/tail report.
void cmd_eval(const RunConfig& config, std::ostream& out);

// Validation-selected hyperparameter sweep; writes the full table and the
// argmax. For l3ae, finds lambda* for plain ease first and sweeps
// (lambda_f, lambda_kd) with lambda_x = lambda* - lambda_kd.
void cmd_grid(const RunConfig& config, std::ostream& out);

// Normalized singular-value tables for the training matrix and, when
// configured, the embedding matrix.
void cmd_spectrum(const RunConfig& config, std::ostream& out);

// Runs the oracle verification suite; throws SolverError if any row fails.
void cmd_audit(const RunConfig& config, std::ostream& out);

// Generates the clustered synthetic dataset files.
void cmd_synth(const RunConfig& config, std::ostream& out);

// Helpers shared by commands and tests.
datasets::SplitBundle load_prepared(const std::filesystem::path& prepared_dir);

}  // namespace laecf::cli
