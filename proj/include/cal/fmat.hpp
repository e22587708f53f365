#pragma once

#include <filesystem>
#include <iosfwd>

#include "cal/dataset.hpp"

namespace cal {

// FMAT layout, all little-endian:
//   "FMAT" | u32 version (=1) | u64 rows | u64 cols | rows*cols f32, row-major
// Row ids live in a sibling JSONL index, one {"row": n, "id": s} per line.

inline constexpr std::uint32_t kFmatVersion = 1;

DenseMatrix<float> read_fmat_payload(std::istream& in);
void write_fmat_payload(std::ostream& out, const DenseMatrix<float>& values);

/// "features.fmat" -> "features.index.jsonl"
std::filesystem::path index_path_for(const std::filesystem::path& fmat_path);

/// Loads an FMAT file and its row-id index.
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& matrix);

}  // namespace cal
