#pragma once

// PNG file formats: RGB frames (frame_%05d.png), scribble masks
// (0 = none, 128 = BG, 255 = FG), binary masks (0 / 255), and 16-bit
// region maps.

#include <filesystem>
#include <string>
#include <vector>

#include "biprop/core.hpp"

namespace biprop {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loads frame_00000.png, frame_00001.png, ... from a directory. Indices
/// must be contiguous from zero and all frames must share one size.
FrameSequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const FrameSequence& frames, const std::filesystem::path& dir);
std::string frame_filename(std::size_t index);
std::string mask_filename(std::size_t index);

Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

ScribbleMask load_scribbles(const std::filesystem::path& path);
void save_scribbles(const ScribbleMask& scribbles, const std::filesystem::path& path);

Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// 16-bit grayscale PNG of region ids; region_count must not exceed 65535.
RegionMap load_region_map(const std::filesystem::path& path);
void save_region_map(const RegionMap& map, const std::filesystem::path& path);

/// Linear min/max stretch of a plane into an 8-bit grayscale PNG.
void save_heatmap(const Plane& plane, const std::filesystem::path& path);

// In-memory PNG codecs, used by the HTTP service.
std::vector<unsigned char> encode_image_png(const Image& image);
std::vector<unsigned char> encode_mask_png(const Mask& mask);
std::vector<unsigned char> encode_scribbles_png(const ScribbleMask& scribbles);
ScribbleMask decode_scribbles_png(const std::vector<unsigned char>& bytes);
Mask decode_mask_png(const std::vector<unsigned char>& bytes);

}  // namespace biprop
