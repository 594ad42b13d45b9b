#ifndef CDCGAN_CHECKPOINT_HPP
#define CDCGAN_CHECKPOINT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdcgan/adam.hpp"
#include "cdcgan/image_io.hpp"
#include "cdcgan/network.hpp"

namespace cdcgan {

// Layout (all integers u32 LE, all reals f64 LE):
//   "CDCGAN01"
//   18 layer records, generator S1.conv0 .. S5.conv2 then D.conv0 .. D.conv2:
//     [kh, kw, cin, cout] kernel[kh*kw*cin*cout] bias[cout]
//   meta record [1, 1, 1, 8]: scale, epoch, step_in_epoch, global_step,
//     has_optimizer, adam_g.step, adam_d.step, leaky_slope
//   if has_optimizer, for G then D:
//     hyper record [1, 1, 1, 4]: lr, beta1, beta2, eps
//     per layer: first-moment record, then second-moment record, each shaped
//     like the layer record above.
inline constexpr char kCheckpointMagic[8] = {'C', 'D', 'C', 'G', 'A', 'N', '0', '1'};

struct TrainProgress {
  std::uint64_t epoch = 0;          ///< epochs fully completed
  std::uint64_t step_in_epoch = 0;  ///< batches consumed in the current epoch
  std::uint64_t global_step = 0;
  friend bool operator==(const TrainProgress&, const TrainProgress&) = default;
};

struct Checkpoint {
  Generator gen;
  Discriminator disc;
  std::size_t scale = 2;
  TrainProgress progress;
  std::optional<AdamState> adam_g;
  std::optional<AdamState> adam_d;
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64s(std::span<const double> values) {
    for (double d : values) f64(d);
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  [[nodiscard]] const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::filesystem::path path)
      : bytes_(bytes), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  void f64s(std::span<double> out) {
    for (double& d : out) d = f64();
  }
  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path_, "corrupt checkpoint at byte " + std::to_string(pos_) + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("unexpected end of file");
  }
  std::span<const std::uint8_t> bytes_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

inline void write_shape(ByteWriter& w, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  w.u32(static_cast<std::uint32_t>(a));
  w.u32(static_cast<std::uint32_t>(b));
  w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(d));
}

inline void expect_shape(ByteReader& r, std::size_t a, std::size_t b, std::size_t c,
                         std::size_t d, const std::string& what) {
  const std::array<std::uint32_t, 4> got = {r.u32(), r.u32(), r.u32(), r.u32()};
  if (got[0] != a || got[1] != b || got[2] != c || got[3] != d) {
    r.fail(what + ": shape header (" + std::to_string(got[0]) + "," + std::to_string(got[1]) +
           "," + std::to_string(got[2]) + "," + std::to_string(got[3]) + ") does not match (" +
           std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "," +
           std::to_string(d) + ")");
  }
}

inline void write_layer_record(ByteWriter& w, const ConvLayer& l, std::span<const double> kernel,
                               std::span<const double> bias) {
  write_shape(w, l.kh(), l.kw(), l.in_channels(), l.out_channels());
  w.f64s(kernel);
  w.f64s(bias);
}

inline void read_layer_record(ByteReader& r, const ConvLayer& l, std::span<double> kernel,
                              std::span<double> bias, const std::string& what) {
  expect_shape(r, l.kh(), l.kw(), l.in_channels(), l.out_channels(), what);
  r.f64s(kernel);
  r.f64s(bias);
}

inline std::vector<const ConvLayer*> all_layers(const Generator& g, const Discriminator& d) {
  auto layers = layer_list(g);
  for (const ConvLayer* l : layer_list(d)) layers.push_back(l);
  return layers;
}

inline void write_adam(ByteWriter& w, const AdamState& s, std::span<const ConvLayer* const> layers) {
  write_shape(w, 1, 1, 1, 4);
  w.f64(s.config.lr);
  w.f64(s.config.beta1);
  w.f64(s.config.beta2);
  w.f64(s.config.eps);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    write_layer_record(w, *layers[l], s.m[2 * l], s.m[2 * l + 1]);
    write_layer_record(w, *layers[l], s.v[2 * l], s.v[2 * l + 1]);
  }
}

inline AdamState read_adam(ByteReader& r, std::uint64_t step,
                           std::span<const ConvLayer* const> layers, const std::string& what) {
  expect_shape(r, 1, 1, 1, 4, what + " hyperparameters");
  AdamConfig cfg;
  cfg.lr = r.f64();
  cfg.beta1 = r.f64();
  cfg.beta2 = r.f64();
  cfg.eps = r.f64();
  AdamState s = adam_init(param_sizes(layers), cfg);
  s.step = step;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    read_layer_record(r, *layers[l], s.m[2 * l], s.m[2 * l + 1], what + " first moment");
    read_layer_record(r, *layers[l], s.v[2 * l], s.v[2 * l + 1], what + " second moment");
  }
  return s;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  if (ck.adam_g.has_value() != ck.adam_d.has_value()) {
    throw std::invalid_argument("checkpoint needs both optimizer states or neither");
  }
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  const auto layers = detail::all_layers(ck.gen, ck.disc);
  for (const ConvLayer* l : layers) detail::write_layer_record(w, *l, l->kernel.values(), l->bias);
  detail::write_shape(w, 1, 1, 1, 8);
  w.f64(static_cast<double>(ck.scale));
  w.f64(static_cast<double>(ck.progress.epoch));
  w.f64(static_cast<double>(ck.progress.step_in_epoch));
  w.f64(static_cast<double>(ck.progress.global_step));
  w.f64(ck.adam_g ? 1.0 : 0.0);
  w.f64(ck.adam_g ? static_cast<double>(ck.adam_g->step) : 0.0);
  w.f64(ck.adam_d ? static_cast<double>(ck.adam_d->step) : 0.0);
  w.f64(ck.disc.layers[0].activation.slope);
  if (ck.adam_g) {
    detail::write_adam(w, *ck.adam_g, layer_list(ck.gen));
    detail::write_adam(w, *ck.adam_d, layer_list(ck.disc));
  }
  return w.bytes();
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes,
                                    const std::filesystem::path& origin = "<memory>") {
  detail::ByteReader r(bytes, origin);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) r.fail("bad magic (expected CDCGAN01)");

  Checkpoint ck;
  ck.gen = zero_generator();
  ck.disc = zero_discriminator();
  {
    auto glayers = layer_list(ck.gen);
    for (std::size_t l = 0; l < glayers.size(); ++l) {
      detail::read_layer_record(r, *glayers[l], glayers[l]->kernel.values(), glayers[l]->bias,
                                layer_name(ck.gen, l));
    }
    auto dlayers = layer_list(ck.disc);
    for (std::size_t l = 0; l < dlayers.size(); ++l) {
      detail::read_layer_record(r, *dlayers[l], dlayers[l]->kernel.values(), dlayers[l]->bias,
                                layer_name(ck.disc, l));
    }
  }
  detail::expect_shape(r, 1, 1, 1, 8, "metadata");
  std::array<double, 8> meta{};
  r.f64s(meta);
  ck.scale = static_cast<std::size_t>(meta[0]);
  ck.progress = {static_cast<std::uint64_t>(meta[1]), static_cast<std::uint64_t>(meta[2]),
                 static_cast<std::uint64_t>(meta[3])};
  for (ConvLayer* l : layer_list(ck.disc)) {
    if (l->activation.kind == ActivationKind::LeakyReLU) l->activation.slope = meta[7];
  }
  if (meta[4] != 0.0) {
    ck.adam_g = detail::read_adam(r, static_cast<std::uint64_t>(meta[5]), layer_list(ck.gen),
                                  "generator optimizer");
    ck.adam_d = detail::read_adam(r, static_cast<std::uint64_t>(meta[6]), layer_list(ck.disc),
                                  "discriminator optimizer");
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(tmp, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open checkpoint");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes, path);
}

}  // namespace cdcgan

#endif  // CDCGAN_CHECKPOINT_HPP
