#include "slam/map_export.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace slam {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_bytes(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const OccupancyGrid& grid) {
    const std::string header =
        "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + grid.size());
    for (int row = grid.height() - 1; row >= 0; --row) {
        for (int col = 0; col < grid.width(); ++col) {
            switch (grid.classify(grid.index(col, row))) {
                case CellClass::occupied: out.push_back(kPixelOccupied); break;
                case CellClass::free: out.push_back(kPixelFree); break;
                case CellClass::unknown: out.push_back(kPixelUnknown); break;
            }
        }
    }
    return out;
}

std::string map_yaml(const OccupancyGrid& grid, const std::string& image_name) {
    const Point2 o = grid.origin_point();
    std::ostringstream y;
    y << "image: " << image_name << "\n"
      << "resolution: " << shortest(grid.resolution()) << "\n"
      << "origin: [" << shortest(o.x) << ", " << shortest(o.y) << ", 0]\n"
      << "negate: 0\n"
      << "occupied_thresh: " << shortest(kOccupiedThresh) << "\n"
      << "free_thresh: " << shortest(kFreeThresh) << "\n";
    return y.str();
}

void export_map(const OccupancyGrid& grid, const std::filesystem::path& dir, const std::string& stem) {
    if (grid.empty()) {
        throw std::invalid_argument("export_map: empty grid");
    }
    const auto pgm = encode_pgm(grid);
    write_bytes(dir / (stem + ".pgm"), std::string(pgm.begin(), pgm.end()));
    write_bytes(dir / (stem + ".yaml"), map_yaml(grid, stem + ".pgm"));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PgmImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) {
            tok.push_back(static_cast<char>(bytes[pos++]));
        }
        return tok;
    };
    if (next_token() != "P5") {
        throw std::runtime_error("pgm: not a binary P5 image");
    }
    PgmImage img;
    try {
        img.width = std::stoi(next_token());
        img.height = std::stoi(next_token());
        img.maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw std::runtime_error("pgm: malformed header");
    }
    if (img.maxval <= 0 || img.maxval > 255) {
        throw std::runtime_error("pgm: only 8-bit images are supported");
    }
    ++pos;  // single whitespace after maxval
    const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() < pos + n) {
        throw std::runtime_error("pgm: truncated pixel data");
    }
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

PgmImage read_pgm(const std::filesystem::path& path) {
    try {
        return decode_pgm(read_file_bytes(path));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

OccupancyGrid load_map(const std::filesystem::path& yaml_path, const SensorModel& model) {
    YAML::Node y;
    try {
        y = YAML::LoadFile(yaml_path.string());
    } catch (const YAML::Exception& e) {
        throw std::runtime_error(yaml_path.string() + ": " + e.what());
    }
    const auto image = yaml_path.parent_path() / y["image"].as<std::string>();
    const double resolution = y["resolution"].as<double>();
    const auto origin = y["origin"].as<std::vector<double>>();
    const double occ = y["occupied_thresh"].as<double>(kOccupiedThresh);
    const double fr = y["free_thresh"].as<double>(kFreeThresh);
    const bool negate = y["negate"].as<int>(0) != 0;
    const PgmImage img = read_pgm(image);

    OccupancyGrid grid(resolution, {origin.at(0), origin.at(1)}, img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        const int row = img.height - 1 - r;
        for (int col = 0; col < img.width; ++col) {
            const double v = img.pixels[static_cast<std::size_t>(r) * img.width + col] / static_cast<double>(img.maxval);
            const double p = negate ? v : 1.0 - v;
            const std::size_t idx = grid.index(col, row);
            if (p > occ) {
                grid.set_logodds(idx, model.l_max, model);
            } else if (p < fr) {
                grid.set_logodds(idx, model.l_min, model);
            }
        }
    }
    return grid;
}

}  // namespace slam
