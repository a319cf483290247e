#include "biprop/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace biprop {
namespace fs = std::filesystem;

namespace {

cv::Mat read_png(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("unreadable image: " + path.string());
  return m;
}

void write_png(const cv::Mat& m, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw IoError("cannot write image: " + path.string());
}

Image image_from_mat(const cv::Mat& m, const std::string& what) {
  if (m.depth() != CV_8U) throw IoError(what + ": expected 8-bit image");
  Image img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      Color c;
      switch (m.channels()) {
        case 1: {
          const double v = m.at<std::uint8_t>(y, x);
          c = {v, v, v};
          break;
        }
        case 3: {
          const auto& p = m.at<cv::Vec3b>(y, x);
          c = {double(p[2]), double(p[1]), double(p[0])};
          break;
        }
        case 4: {
          const auto& p = m.at<cv::Vec4b>(y, x);
          c = {double(p[2]), double(p[1]), double(p[0])};
          break;
        }
        default:
          throw IoError(what + ": unsupported channel count");
      }
      img(x, y) = c;
    }
  }
  return img;
}

// Single gray channel; multi-channel input is accepted when all color
// channels agree (browsers emit RGBA PNGs).
Mask gray_from_mat(const cv::Mat& m, const std::string& what) {
  if (m.depth() != CV_8U) throw IoError(what + ": expected 8-bit grayscale");
  Mask out(m.cols, m.rows);
  const int ch = m.channels();
  for (int y = 0; y < m.rows; ++y) {
    const std::uint8_t* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::ptrdiff_t>(x) * ch;
      if (ch >= 3 && (px[0] != px[1] || px[1] != px[2])) {
        throw IoError(what + ": expected grayscale values");
      }
      out(x, y) = px[0];
    }
  }
  return out;
}

cv::Mat mat_from_gray(const Mask& mask) {
  cv::Mat m(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) m.at<std::uint8_t>(y, x) = mask(x, y);
  }
  return m;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

cv::Mat mat_from_image(const Image& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Color& c = img(x, y);
      m.at<cv::Vec3b>(y, x) = {to_byte(c.b), to_byte(c.g), to_byte(c.r)};
    }
  }
  return m;
}

ScribbleMask scribbles_from_gray(const Mask& gray) {
  ScribbleMask s(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    switch (gray[i]) {
      case 0: s[i] = Scribble::kNone; break;
      case 128: s[i] = Scribble::kBackground; break;
      case 255: s[i] = Scribble::kForeground; break;
      default: throw IoError("scribble value must be 0, 128 or 255");
    }
  }
  return s;
}

Mask gray_from_scribbles(const ScribbleMask& s) {
  Mask gray(s.width(), s.height());
  for (std::size_t i = 0; i < s.size(); ++i) {
    gray[i] = s[i] == Scribble::kForeground ? 255 : s[i] == Scribble::kBackground ? 128 : 0;
  }
  return gray;
}

Mask validated_mask(Mask m) {
  for (auto v : m.values()) {
    if (v != 0 && v != 255) throw IoError("mask value must be 0 or 255");
  }
  return m;
}

std::vector<unsigned char> encode(const cv::Mat& m) {
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", m, buf)) throw IoError("png encoding failed");
  return buf;
}

cv::Mat decode(const std::vector<unsigned char>& bytes) {
  if (bytes.empty()) throw IoError("empty png body");
  cv::Mat m = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("undecodable png body");
  return m;
}

}  // namespace

std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.png", index);
  return buf;
}

std::string mask_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mask_%05zu.png", index);
  return buf;
}

FrameSequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("missing directory: " + dir.string());
  static const std::regex pattern(R"(frame_(\d{5})\.png)");
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files[std::stoul(m[1].str())] = entry.path();
  }
  if (files.empty()) throw IoError("no frame_%05d.png files in " + dir.string());
  FrameSequence seq;
  std::size_t expected = 0;
  for (const auto& [index, path] : files) {
    if (index != expected) throw IoError("frame indices are not contiguous at " + path.string());
    seq.frames.push_back(load_image(path));
    if (!seq.frames.back().same_shape(seq.frames.front())) throw IoError("mixed dimensions");
    ++expected;
  }
  return seq;
}

void save_sequence(const FrameSequence& frames, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < frames.size(); ++t) save_image(frames[t], dir / frame_filename(t));
}

Image load_image(const fs::path& path) { return image_from_mat(read_png(path), path.string()); }

void save_image(const Image& image, const fs::path& path) { write_png(mat_from_image(image), path); }

ScribbleMask load_scribbles(const fs::path& path) {
  return scribbles_from_gray(gray_from_mat(read_png(path), path.string()));
}

void save_scribbles(const ScribbleMask& scribbles, const fs::path& path) {
  write_png(mat_from_gray(gray_from_scribbles(scribbles)), path);
}

Mask load_mask(const fs::path& path) {
  return validated_mask(gray_from_mat(read_png(path), path.string()));
}

void save_mask(const Mask& mask, const fs::path& path) { write_png(mat_from_gray(mask), path); }

RegionMap load_region_map(const fs::path& path) {
  cv::Mat m = read_png(path);
  if (m.channels() != 1) throw IoError("region map must be single-channel");
  Grid<int> ids(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      ids(x, y) = m.depth() == CV_16U ? m.at<std::uint16_t>(y, x) : m.at<std::uint8_t>(y, x);
    }
  }
  return region_map_from_ids(std::move(ids));
}

void save_region_map(const RegionMap& map, const fs::path& path) {
  if (map.region_count > 65535) throw IoError("region map exceeds 65535 regions");
  cv::Mat m(map.height(), map.width(), CV_16UC1);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(map.ids(x, y));
    }
  }
  write_png(m, path);
}

void save_heatmap(const Plane& plane, const fs::path& path) {
  Mask gray(plane.width(), plane.height());
  if (!plane.empty()) {
    const auto [lo, hi] = std::minmax_element(plane.values().begin(), plane.values().end());
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      gray[i] = span > 0 ? to_byte(255.0 * (plane[i] - *lo) / span) : 0;
    }
  }
  write_png(mat_from_gray(gray), path);
}

std::vector<unsigned char> encode_image_png(const Image& image) {
  return encode(mat_from_image(image));
}

std::vector<unsigned char> encode_mask_png(const Mask& mask) { return encode(mat_from_gray(mask)); }

std::vector<unsigned char> encode_scribbles_png(const ScribbleMask& scribbles) {
  return encode(mat_from_gray(gray_from_scribbles(scribbles)));
}

ScribbleMask decode_scribbles_png(const std::vector<unsigned char>& bytes) {
  return scribbles_from_gray(gray_from_mat(decode(bytes), "scribble body"));
}

Mask decode_mask_png(const std::vector<unsigned char>& bytes) {
  return validated_mask(gray_from_mat(decode(bytes), "mask body"));
}

}  // namespace biprop
