#ifndef CDCGAN_DATASET_HPP
#define CDCGAN_DATASET_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cdcgan/color.hpp"
#include "cdcgan/image_io.hpp"
#include "cdcgan/resize.hpp"
#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Aligned HR ground truth and its degraded, re-upsampled counterpart.
struct Sample {
  Tensor color_hr;     ///< (1, H, W, 3) RGB in [0, 1]
  Tensor depth_hr;     ///< (1, H, W, 1) in [0, 1]
  Tensor color_lr_up;  ///< same dims, bicubic down then up
  Tensor depth_lr_up;
  std::size_t scale = 2;
};

/// Single-channel planes the networks consume, all (1, H, W, 1).
struct SamplePlanes {
  Tensor luma_hr;
  Tensor luma_lr_up;
  Tensor cb_lr_up;
  Tensor cr_lr_up;
  Tensor depth_hr;
  Tensor depth_lr_up;
};

/// Bicubic downscale by 1/scale then upscale by scale, clamped to [0, 1].
inline Tensor degrade(const Tensor& hr, std::size_t scale) {
  Tensor lr = bicubic_resize(hr, Scale::down(scale));
  Tensor up = bicubic_resize(lr, Scale::up(scale));
  clamp_unit(up);
  return up;
}

/// Centre crop to the largest height/width divisible by `multiple`.
inline Tensor center_crop_to_multiple(const Tensor& t, std::size_t multiple) {
  const std::size_t h = t.height() - t.height() % multiple;
  const std::size_t w = t.width() - t.width() % multiple;
  if (h == 0 || w == 0) {
    throw ShapeError("image " + to_string(t.shape()) + " is smaller than scale " +
                     std::to_string(multiple));
  }
  if (h == t.height() && w == t.width()) return t;
  const std::size_t top = (t.height() - h) / 2, left = (t.width() - w) / 2;
  Tensor out({t.batch(), h, w, t.channels()});
  for (std::size_t b = 0; b < t.batch(); ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < t.channels(); ++c) out(b, y, x, c) = t(b, top + y, left + x, c);
  return out;
}

inline void check_scale(std::size_t scale) {
  if (scale != 2 && scale != 4) {
    throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
  }
}

inline Sample make_sample(const Tensor& color_rgb, const Tensor& depth, std::size_t scale) {
  check_scale(scale);
  if (color_rgb.height() != depth.height() || color_rgb.width() != depth.width()) {
    throw ShapeError("colour " + to_string(color_rgb.shape()) + " and depth " +
                     to_string(depth.shape()) + " dimensions differ");
  }
  if (color_rgb.channels() != 3 || depth.channels() != 1) {
    throw ShapeError("make_sample: expected RGB colour and single-channel depth");
  }
  Sample s;
  s.scale = scale;
  s.color_hr = center_crop_to_multiple(color_rgb, scale);
  s.depth_hr = center_crop_to_multiple(depth, scale);
  s.color_lr_up = degrade(s.color_hr, scale);
  s.depth_lr_up = degrade(s.depth_hr, scale);
  return s;
}

inline Sample load_sample(const std::filesystem::path& color_path,
                          const std::filesystem::path& depth_path, std::size_t scale) {
  Tensor color = to_tensor(read_image(color_path, 3));
  Tensor depth = to_tensor(read_image(depth_path, 1));
  if (color.height() != depth.height() || color.width() != depth.width()) {
    throw IoError(depth_path, "depth is " + std::to_string(depth.width()) + "x" +
                                  std::to_string(depth.height()) + " but colour " +
                                  color_path.string() + " is " + std::to_string(color.width()) +
                                  "x" + std::to_string(color.height()));
  }
  return make_sample(color, depth, scale);
}

inline SamplePlanes to_planes(const Sample& s) {
  const Tensor hr = rgb_to_ycbcr(s.color_hr);
  const Tensor lr = rgb_to_ycbcr(s.color_lr_up);
  return {slice_channels(hr, 0, 1), slice_channels(lr, 0, 1), slice_channels(lr, 1, 1),
          slice_channels(lr, 2, 1), s.depth_hr, s.depth_lr_up};
}

// ---------------------------------------------------------------------------
// Patches

struct PatchLocation {
  std::size_t sample = 0;
  std::size_t top = 0;
  std::size_t left = 0;
  friend bool operator==(const PatchLocation&, const PatchLocation&) = default;
};

/// Congruent crops of every plane, each (B, P, P, 1).
struct PatchBatch {
  Tensor c_up;  ///< degraded luma (generator input)
  Tensor d_up;  ///< degraded depth (generator input)
  Tensor c_g;   ///< ground-truth luma
  Tensor d_g;   ///< ground-truth depth
  Tensor cb;    ///< degraded chroma, reattached for the discriminator
  Tensor cr;
  [[nodiscard]] std::size_t size() const { return c_up.batch(); }
};

/// Uniform random crop corners (sample chosen uniformly, then top-left uniformly).
/// The sequence depends only on the seed and the sample dimensions.
inline std::vector<PatchLocation> sample_patches(std::span<const SamplePlanes> samples,
                                                 std::size_t count, std::size_t patch_size,
                                                 std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("sample_patches: no samples");
  if (patch_size == 0) throw std::invalid_argument("sample_patches: patch size must be >= 1");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor& t = samples[i].luma_hr;
    if (t.height() < patch_size || t.width() < patch_size) {
      throw ShapeError("sample " + std::to_string(i) + " (" + std::to_string(t.width()) + "x" +
                       std::to_string(t.height()) + ") is smaller than patch size " +
                       std::to_string(patch_size));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<PatchLocation> out(count);
  for (auto& loc : out) {
    loc.sample = std::uniform_int_distribution<std::size_t>(0, samples.size() - 1)(rng);
    const Tensor& t = samples[loc.sample].luma_hr;
    loc.top = std::uniform_int_distribution<std::size_t>(0, t.height() - patch_size)(rng);
    loc.left = std::uniform_int_distribution<std::size_t>(0, t.width() - patch_size)(rng);
  }
  return out;
}

namespace detail {
inline void copy_patch(const Tensor& src, std::size_t top, std::size_t left, std::size_t p,
                       Tensor& dst, std::size_t b) {
  for (std::size_t y = 0; y < p; ++y)
    for (std::size_t x = 0; x < p; ++x) dst(b, y, x, 0) = src(0, top + y, left + x, 0);
}
}  // namespace detail

inline PatchBatch extract_batch(std::span<const SamplePlanes> samples,
                                std::span<const PatchLocation> locations, std::size_t patch_size) {
  const Shape shape{locations.size(), patch_size, patch_size, 1};
  PatchBatch batch{Tensor(shape), Tensor(shape), Tensor(shape),
                   Tensor(shape), Tensor(shape), Tensor(shape)};
  for (std::size_t b = 0; b < locations.size(); ++b) {
    const PatchLocation& loc = locations[b];
    const SamplePlanes& s = samples[loc.sample];
    if (loc.top + patch_size > s.luma_hr.height() || loc.left + patch_size > s.luma_hr.width()) {
      throw ShapeError("patch location out of bounds");
    }
    detail::copy_patch(s.luma_lr_up, loc.top, loc.left, patch_size, batch.c_up, b);
    detail::copy_patch(s.depth_lr_up, loc.top, loc.left, patch_size, batch.d_up, b);
    detail::copy_patch(s.luma_hr, loc.top, loc.left, patch_size, batch.c_g, b);
    detail::copy_patch(s.depth_hr, loc.top, loc.left, patch_size, batch.d_g, b);
    detail::copy_patch(s.cb_lr_up, loc.top, loc.left, patch_size, batch.cb, b);
    detail::copy_patch(s.cr_lr_up, loc.top, loc.left, patch_size, batch.cr, b);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Manifest: one "colour<TAB>depth" pair per line; '#' comments and blank lines
// are ignored. Relative paths resolve against the dataset root, which defaults
// to the manifest's directory.

struct ManifestEntry {
  std::filesystem::path color;
  std::filesystem::path depth;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : root / p;
  }
};

inline Manifest parse_manifest(std::istream& in, const std::filesystem::path& root,
                               const std::string& origin = "<manifest>") {
  Manifest m;
  m.root = root;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected \"colour<TAB>depth\"");
    }
    m.entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return m;
}

inline Manifest read_manifest(const std::filesystem::path& path,
                              std::optional<std::filesystem::path> root = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open manifest");
  return parse_manifest(in, root ? *root : path.parent_path(), path.string());
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  for (const auto& e : m.entries) out << e.color.generic_string() << '\t' << e.depth.generic_string() << '\n';
  if (!out) throw IoError(path, "write failed");
}

/// Pairs files of the two directories by filename stem; entries are relative
/// to `root` and sorted by stem.
inline Manifest make_manifest(const std::filesystem::path& color_dir,
                              const std::filesystem::path& depth_dir,
                              const std::filesystem::path& root) {
  auto images_by_stem = [](const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) throw IoError(dir, "not a directory");
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const auto ext = e.path().extension().string();
      if (ext == ".png" || ext == ".pgm" || ext == ".ppm") out[e.path().stem().string()] = e.path();
    }
    return out;
  };
  const auto colors = images_by_stem(color_dir);
  const auto depths = images_by_stem(depth_dir);
  Manifest m;
  m.root = root;
  for (const auto& [stem, cpath] : colors) {
    auto it = depths.find(stem);
    if (it == depths.end()) continue;
    m.entries.push_back({std::filesystem::relative(cpath, root),
                         std::filesystem::relative(it->second, root)});
  }
  return m;
}

inline std::vector<Sample> load_manifest_samples(const Manifest& m, std::size_t scale) {
  std::vector<Sample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(m.resolve(e.color), m.resolve(e.depth), scale));
  return out;
}

}  // namespace cdcgan

#endif  // CDCGAN_DATASET_HPP
