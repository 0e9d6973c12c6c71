#pragma once

#include <filesystem>

#include "mkv/dynamics.hpp"
#include "mkv/grid.hpp"

namespace mkv {

/// Trajectory container, magic "MKVT": header (version u32, n u32, d u32,
/// count u64, little-endian) followed by count records of
/// (time f64, n*d f64 positions).
void write_trajectory(const std::filesystem::path& path, const TrajectoryStore& store);
TrajectoryStore read_trajectory(const std::filesystem::path& path);

/// Single time slice of a trajectory file as a uniform sample measure;
/// negative index counts from the end (-1 = last record).
WeightedSampleMeasure read_trajectory_slice(const std::filesystem::path& path,
                                            std::ptrdiff_t index = -1);

/// Grid variant, magic "MKVG": version u32, d u32, extent u32 per axis,
/// lower f64 per axis, h f64, then the density values.
void write_grid(const std::filesystem::path& path, const MeasureGrid& grid);
MeasureGrid read_grid(const std::filesystem::path& path);

/// FNV-1a 64-bit digest of a file, hex-encoded; recorded in manifests.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace mkv
