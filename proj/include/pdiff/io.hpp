#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdiff/types.hpp"

namespace pdiff {

/// One value per row, shortest round-trip decimal (%.17g).  Plain numbers,
/// no header: diffable and byte-stable across reruns.
void write_samples_csv(const std::string& path, const Vec& values);

/// Reads one numeric column; a non-numeric first line is treated as a header
/// and skipped.
Vec read_samples_csv(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<double>& epoch_loss);
void write_curve_csv(const std::string& path,
                     const std::vector<std::pair<double, double>>& curve,
                     const std::string& header = "alpha,mean_loss");
void write_pmf_csv(const std::string& path, const Vec& raw, const Vec& smoothed,
                   const Vec& band_lo, const Vec& band_hi);

std::string format_double(double v);

/// SHA-256 digest as lowercase hex.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_file(const std::string& path);

}  // namespace pdiff
