#ifndef CDCGAN_IMAGE_IO_HPP
#define CDCGAN_IMAGE_IO_HPP

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcgan/tensor.hpp"

namespace cdcgan {

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Image8&, const Image8&) = default;
};

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

inline Image8 decode_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes,
                         std::size_t channels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw IoError(path, std::string("PNG decode failed: ") + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out{img.width, img.height, channels, {}};
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path, "PNG decode failed: " + msg);
  }
  return out;
}

// Binary PGM (P5) / PPM (P6) with maxval <= 255.
inline Image8 decode_pnm(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes,
                         std::size_t channels) {
  std::size_t pos = 2;
  auto next_token = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::size_t v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
    }
    if (!any) throw IoError(path, "malformed PNM header");
    return v;
  };
  const bool color = bytes[1] == '6';
  Image8 img;
  img.width = next_token();
  img.height = next_token();
  const std::size_t maxval = next_token();
  if (maxval == 0 || maxval > 255) throw IoError(path, "only 8-bit PNM is supported");
  ++pos;  // single whitespace before raster
  const std::size_t src_c = color ? 3 : 1;
  const std::size_t n = img.width * img.height;
  if (img.width == 0 || img.height == 0 || bytes.size() < pos + n * src_c) {
    throw IoError(path, "truncated PNM raster");
  }
  img.channels = channels;
  img.pixels.resize(n * channels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* s = &bytes[pos + i * src_c];
    if (channels == src_c) {
      std::memcpy(&img.pixels[i * channels], s, channels);
    } else if (channels == 3) {
      img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = s[0];
    } else {
      const double y = 0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2];
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(y));
    }
  }
  return img;
}

}  // namespace detail

/// Reads a PNG or binary PGM/PPM, converting to the requested channel count (1 or 3).
inline Image8 read_image(const std::filesystem::path& path, std::size_t channels) {
  if (channels != 1 && channels != 3) throw std::invalid_argument("read_image: channels must be 1 or 3");
  const auto bytes = detail::read_bytes(path);
  if (detail::is_png(bytes)) return detail::decode_png(path, bytes, channels);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return detail::decode_pnm(path, bytes, channels);
  }
  throw IoError(path, "unrecognised image format (expected PNG or binary PGM/PPM)");
}

inline void write_png(const std::filesystem::path& path, const Image8& img) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(path, std::string("PNG encode failed: ") + png.message);
  }
}

inline void write_pnm(const std::filesystem::path& path, const Image8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError(path, "write failed");
}

/// Chooses the encoder from the extension: .pgm/.ppm/.pnm write PNM, anything else PNG.
inline void write_image(const std::filesystem::path& path, const Image8& img) {
  const auto ext = path.extension().string();
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(path, img);
  } else {
    write_png(path, img);
  }
}

inline Tensor to_tensor(const Image8& img) {
  Tensor t({1, img.height, img.width, img.channels});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = img.pixels[i] / 255.0;
  return t;
}

/// Quantises a batch-1 tensor in [0, 1] (values clamped) to 8 bits.
inline Image8 to_image8(const Tensor& t) {
  if (t.batch() != 1 || (t.channels() != 1 && t.channels() != 3)) {
    throw ShapeError("to_image8: expected (1, H, W, 1|3), got " + to_string(t.shape()));
  }
  Image8 img{t.width(), t.height(), t.channels(), std::vector<std::uint8_t>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = t[i] < 0.0 ? 0.0 : (t[i] > 1.0 ? 1.0 : t[i]);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return img;
}

}  // namespace cdcgan

#endif  // CDCGAN_IMAGE_IO_HPP
