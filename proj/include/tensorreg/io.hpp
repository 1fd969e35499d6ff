#pragma once

#include "tensorreg/coeff.hpp"
#include "tensorreg/dataset.hpp"
#include "tensorreg/estimator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tensorreg {

/// Binary tensor format TNSR1: magic bytes "TNSR", version byte 0x01, then
/// little-endian u32 D, u32 dims[D], f64 data in column-major order. The
/// reader validates the byte length exactly and reports offsets on error.
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

/// Coefficient container: section "GAMA" (u32 length + f64 gamma), u32 D,
/// then a "FACT" section per factor matrix and a "CORE" section, each
/// holding a TNSR1 payload.
void write_coeff(const std::filesystem::path& path, const TuckerCoeff& c);
TuckerCoeff read_coeff(const std::filesystem::path& path);

/// CSV with a header row; every cell must parse as a number. Errors name the
/// file, row and column.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* header = nullptr);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Dataset on disk: y.csv (header "y"), optional z.csv (headers z1..zp), and
/// a tensor list file naming one TNSR1 file per observation.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& y_csv, const std::filesystem::path& x_list,
                     const std::filesystem::path& z_csv = {});

/// Fit report CSV: summary row (loglik, deviance, bic, df, converged,
/// best_start) followed by the per-cycle loglik trace.
void write_fit_report(const std::filesystem::path& path, const FitResult& fr);

struct RunManifest {
  std::string command_line;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> options;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);

/// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
std::string file_digest(const std::filesystem::path& path);

/// Writes bytes to a temporary file in the target directory and renames it
/// into place, so partially written outputs are never observed.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);

std::string version_string();

}  // namespace tensorreg
