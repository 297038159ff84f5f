#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slam/gridmap.hpp"

namespace slam {

inline constexpr std::uint8_t kPixelOccupied = 0;
inline constexpr std::uint8_t kPixelFree = 254;
inline constexpr std::uint8_t kPixelUnknown = 205;

/// Binary P5 PGM, maxval 255. Row 0 of the image is the top of the map (the
/// grid's last row).
std::vector<std::uint8_t> encode_pgm(const OccupancyGrid& grid);

/// Map-server YAML sidecar for an image file name.
std::string map_yaml(const OccupancyGrid& grid, const std::string& image_name);

/// Writes <stem>.pgm and <stem>.yaml into dir. Throws std::runtime_error with
/// the failing path on I/O errors.
void export_map(const OccupancyGrid& grid, const std::filesystem::path& dir, const std::string& stem = "map");

struct PgmImage {
    int width{0};
    int height{0};
    int maxval{255};
    std::vector<std::uint8_t> pixels;  // row-major, top row first
};

PgmImage decode_pgm(const std::vector<std::uint8_t>& bytes);
PgmImage read_pgm(const std::filesystem::path& path);

/// Reloads an exported map: occupied pixels become l_max, free pixels l_min,
/// unknown pixels 0.
OccupancyGrid load_map(const std::filesystem::path& yaml_path, const SensorModel& model = {});

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace slam
