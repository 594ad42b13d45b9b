#ifndef CDCGAN_EVALUATE_HPP
#define CDCGAN_EVALUATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cdcgan/checkpoint.hpp"
#include "cdcgan/color.hpp"
#include "cdcgan/dataset.hpp"
#include "cdcgan/image_io.hpp"
#include "cdcgan/metrics.hpp"
#include "cdcgan/network.hpp"

namespace cdcgan {

/// Scale of a checkpoint differs from the one requested on the command line.
class ScaleMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { CDcGAN, Bicubic };

inline const char* method_name(Method m) { return m == Method::CDcGAN ? "cdcgan" : "bicubic"; }

struct ImageMetrics {
  double psnr_color = 0, psnr_depth = 0;
  double ssim_color = 0, ssim_depth = 0;
  double sharp_color = 0, sharp_depth = 0;
};

struct EvalRow {
  std::string image;
  Method method = Method::Bicubic;
  ImageMetrics metrics;
};

/// One row per (image, method), in manifest order then method order.
struct EvalReport {
  std::vector<EvalRow> rows;

  /// Per-method averages. Infinite entries ("identical") propagate as +inf.
  [[nodiscard]] std::map<std::string, ImageMetrics> averages() const {
    std::map<std::string, ImageMetrics> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : rows) {
      auto& s = sums[method_name(r.method)];
      s.psnr_color += r.metrics.psnr_color;
      s.psnr_depth += r.metrics.psnr_depth;
      s.ssim_color += r.metrics.ssim_color;
      s.ssim_depth += r.metrics.ssim_depth;
      s.sharp_color += r.metrics.sharp_color;
      s.sharp_depth += r.metrics.sharp_depth;
      ++counts[method_name(r.method)];
    }
    for (auto& [name, s] : sums) {
      const double n = static_cast<double>(counts[name]);
      s = {s.psnr_color / n, s.psnr_depth / n, s.ssim_color / n,
           s.ssim_depth / n, s.sharp_color / n, s.sharp_depth / n};
    }
    return sums;
  }
};

/// Super-resolved luma and depth planes, both clamped to [0, 1].
struct SrPlanes {
  Tensor luma;
  Tensor depth;
};

inline SrPlanes super_resolve(const Generator& gen, const Tensor& luma_up, const Tensor& depth_up) {
  GeneratorOutput out = generator_forward(gen, luma_up, depth_up);
  clamp_unit(out.x);
  clamp_unit(out.y);
  return {std::move(out.x), std::move(out.y)};
}

inline ImageMetrics measure(const SrPlanes& sr, const SamplePlanes& gt) {
  ImageMetrics m;
  m.psnr_color = psnr(sr.luma, gt.luma_hr);
  m.psnr_depth = psnr(sr.depth, gt.depth_hr);
  m.ssim_color = ssim(sr.luma, gt.luma_hr);
  m.ssim_depth = ssim(sr.depth, gt.depth_hr);
  m.sharp_color = sharpness(sr.luma, gt.luma_hr);
  m.sharp_depth = sharpness(sr.depth, gt.depth_hr);
  return m;
}

/// Evaluates each method on every sample; colour metrics use luma only and no
/// border is cropped.
inline EvalReport evaluate(const Generator* gen, std::span<const SamplePlanes> samples,
                           std::span<const std::string> names, std::span<const Method> methods,
                           const std::optional<std::filesystem::path>& dump_dir = std::nullopt,
                           std::span<const Sample> rgb = {}) {
  EvalReport report;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (Method method : methods) {
      SrPlanes sr;
      if (method == Method::Bicubic) {
        sr = {samples[i].luma_lr_up, samples[i].depth_lr_up};
      } else {
        if (gen == nullptr) throw std::invalid_argument("evaluate: cdcgan method needs a generator");
        sr = super_resolve(*gen, samples[i].luma_lr_up, samples[i].depth_lr_up);
      }
      report.rows.push_back({names[i], method, measure(sr, samples[i])});
      if (dump_dir) {
        std::filesystem::create_directories(*dump_dir);
        const std::string stem = names[i] + "_" + method_name(method);
        const Tensor ycc = concat_channels({&sr.luma, &samples[i].cb_lr_up, &samples[i].cr_lr_up});
        Tensor rgb_out = ycbcr_to_rgb(ycc);
        write_png(*dump_dir / (stem + "_color.png"), to_image8(rgb_out));
        write_png(*dump_dir / (stem + "_depth.png"), to_image8(sr.depth));
        if (i < rgb.size() && method == methods.front()) {
          write_png(*dump_dir / (names[i] + "_gt_color.png"), to_image8(rgb[i].color_hr));
          write_png(*dump_dir / (names[i] + "_gt_depth.png"), to_image8(rgb[i].depth_hr));
        }
      }
    }
  }
  return report;
}

/// Loads held-out pairs from a manifest and evaluates a checkpoint against bicubic.
inline EvalReport evaluate(const std::filesystem::path& checkpoint_path, const Manifest& manifest,
                           std::size_t scale, std::span<const Method> methods,
                           const std::optional<std::filesystem::path>& dump_dir = std::nullopt) {
  std::optional<Checkpoint> ck;
  const bool need_gen = std::find(methods.begin(), methods.end(), Method::CDcGAN) != methods.end();
  if (need_gen) {
    ck = load_checkpoint(checkpoint_path);
    if (ck->scale != scale) {
      throw ScaleMismatch("checkpoint " + checkpoint_path.string() + " was trained at scale " +
                          std::to_string(ck->scale) + ", requested " + std::to_string(scale));
    }
  }
  const std::vector<Sample> samples = load_manifest_samples(manifest, scale);
  std::vector<SamplePlanes> planes;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    planes.push_back(to_planes(samples[i]));
    names.push_back(manifest.entries[i].color.stem().string());
  }
  return evaluate(ck ? &ck->gen : nullptr, planes, names, methods, dump_dir, samples);
}

namespace detail {
inline std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace detail

/// Long-format CSV: image,method,metric,plane,value.
inline void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "image,method,metric,plane,value\n";
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    const std::pair<const char*, std::array<double, 2>> metrics[] = {
        {"psnr", {m.psnr_color, m.psnr_depth}},
        {"ssim", {m.ssim_color, m.ssim_depth}},
        {"sharpness", {m.sharp_color, m.sharp_depth}}};
    for (const auto& [name, values] : metrics) {
      out << r.image << ',' << method_name(r.method) << ',' << name << ",color,"
          << detail::format_value(values[0]) << '\n';
      out << r.image << ',' << method_name(r.method) << ',' << name << ",depth,"
          << detail::format_value(values[1]) << '\n';
    }
  }
}

inline std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-8s %9s %9s %7s %7s %9s %9s\n", "image", "method",
                "PSNR-c", "PSNR-d", "SSIM-c", "SSIM-d", "Sharp-c", "Sharp-d");
  os << line;
  auto row = [&](const std::string& image, const std::string& method, const ImageMetrics& m) {
    std::snprintf(line, sizeof line, "%-20s %-8s %9.3f %9.3f %7.4f %7.4f %9.3f %9.3f\n",
                  image.c_str(), method.c_str(), m.psnr_color, m.psnr_depth, m.ssim_color,
                  m.ssim_depth, m.sharp_color, m.sharp_depth);
    os << line;
  };
  for (const auto& r : report.rows) row(r.image, method_name(r.method), r.metrics);
  for (const auto& [name, m] : report.averages()) row("Ave.", name, m);
  return os.str();
}

}  // namespace cdcgan

#endif  // CDCGAN_EVALUATE_HPP
