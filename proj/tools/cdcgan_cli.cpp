// cdcgan: train, apply and evaluate the colour/depth super-resolution GAN.
//
// Exit codes: 0 ok, 1 check failure, 2 usage or configuration error,
// 3 data mismatch (scale or image dimensions).

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdcgan/cdcgan.hpp"

namespace fs = std::filesystem;
using namespace cdcgan;

namespace {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDataMismatch = 3 };

class DataMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string resume;
};

struct SrArgs {
  std::string checkpoint, color, depth, out;
  std::size_t scale = 4;
};

struct EvalArgs {
  std::string checkpoint, manifest, csv, dump;
  std::size_t scale = 4;
  std::vector<std::string> methods{"cdcgan", "bicubic"};
};

struct GradArgs {
  std::uint64_t seed = 0;
  std::size_t probes = 40;
  std::string mutate;
};

struct ManifestArgs {
  std::string color_dir, depth_dir, out, root;
};

int cmd_train(const TrainArgs& a) {
  const TrainConfig config = load_train_config(a.config);
  if (a.manifest.empty()) throw ConfigError("train: --manifest is required");
  const Manifest manifest = read_manifest(a.manifest);
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);
  const TrainResult r = train(config, manifest, resume, [](const TrainLogRecord& rec) {
    if (rec.step % 50 == 0) {
      std::fprintf(stderr, "step %llu epoch %llu total_g %.6f adv_d %.6f d_real %.4f d_fake %.4f\n",
                   static_cast<unsigned long long>(rec.step),
                   static_cast<unsigned long long>(rec.epoch), rec.losses.total_g,
                   rec.losses.adv_d, rec.d_real, rec.d_fake);
    }
  });
  std::cout << "steps " << r.steps << "\ncheckpoint " << r.last_checkpoint.string() << "\nlog "
            << config.log_path << '\n';
  return kOk;
}

int cmd_sr(const SrArgs& a) {
  check_scale(a.scale);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  if (ck.scale != a.scale) {
    throw DataMismatch("checkpoint " + a.checkpoint + " was trained at scale " +
                       std::to_string(ck.scale) + ", --scale is " + std::to_string(a.scale));
  }
  const Tensor color = to_tensor(read_image(a.color, 3));
  const Tensor depth = to_tensor(read_image(a.depth, 1));
  if (color.height() != depth.height() || color.width() != depth.width()) {
    throw DataMismatch("colour image is " + to_string(color.shape()) + " but depth image is " +
                       to_string(depth.shape()));
  }
  const Scale up{a.scale, 1};
  Tensor ycc = bicubic_resize(rgb_to_ycbcr(color), up);
  clamp_unit(ycc);
  Tensor depth_up = bicubic_resize(depth, up);
  clamp_unit(depth_up);

  const Tensor luma = slice_channels(ycc, 0, 1);
  const SrPlanes sr = super_resolve(ck.gen, luma, depth_up);
  const Tensor cb = slice_channels(ycc, 1, 1);
  const Tensor cr = slice_channels(ycc, 2, 1);
  Tensor rgb = ycbcr_to_rgb(concat_channels({&sr.luma, &cb, &cr}));
  clamp_unit(rgb);

  fs::create_directories(a.out);
  const fs::path color_out = fs::path(a.out) / "color_sr.png";
  const fs::path depth_out = fs::path(a.out) / "depth_sr.png";
  write_png(color_out, to_image8(rgb));
  write_png(depth_out, to_image8(sr.depth));
  std::cout << color_out.string() << ' ' << rgb.width() << 'x' << rgb.height() << '\n'
            << depth_out.string() << ' ' << sr.depth.width() << 'x' << sr.depth.height() << '\n';
  return kOk;
}

int cmd_eval(const EvalArgs& a) {
  std::vector<Method> methods;
  for (const auto& m : a.methods) {
    if (m == "cdcgan") {
      methods.push_back(Method::CDcGAN);
    } else if (m == "bicubic") {
      methods.push_back(Method::Bicubic);
    } else {
      throw ConfigError("unknown method \"" + m + "\" (expected cdcgan or bicubic)");
    }
  }
  check_scale(a.scale);
  const Manifest manifest = read_manifest(a.manifest);
  std::optional<fs::path> dump;
  if (!a.dump.empty()) dump = a.dump;
  EvalReport report;
  try {
    report = evaluate(a.checkpoint, manifest, a.scale, methods, dump);
  } catch (const ScaleMismatch& e) {
    throw DataMismatch(e.what());
  }
  std::cout << format_report_table(report);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw IoError(a.csv, "cannot open report for writing");
    write_report_csv(out, report);
  }
  return kOk;
}

int cmd_gradcheck(const GradArgs& a) {
  GradCheckOptions opts;
  opts.seed = a.seed;
  opts.probes = a.probes;
  opts.mutate = a.mutate;
  const auto results = run_gradcheck_suite(opts);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-22s max_rel_err %.3e probes %4zu skipped %2zu %s\n", r.name.c_str(),
                r.max_relative_error, r.probes, r.skipped, r.passed() ? "PASS" : "FAIL");
    if (!r.passed()) {
      ok = false;
      std::fprintf(stderr, "gradcheck failed: %s (%.3e >= %.0e)\n", r.name.c_str(),
                   r.max_relative_error, kGradCheckTolerance);
    }
  }
  std::printf("%zu components, %s\n", results.size(), ok ? "all passed" : "FAILED");
  return ok ? kOk : kCheckFailed;
}

int cmd_make_manifest(const ManifestArgs& a) {
  const fs::path root = a.root.empty() ? fs::path(a.out).parent_path() : fs::path(a.root);
  const Manifest m = make_manifest(a.color_dir, a.depth_dir, root);
  if (m.entries.empty()) throw DataMismatch("no colour/depth pairs share a file stem");
  write_manifest(a.out, m);
  std::cout << m.entries.size() << " pairs written to " << a.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Colour/depth joint super-resolution with a conditional GAN"};
  app.require_subcommand(1, 1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train generator and discriminator");
  train_cmd->add_option("--config", train_args.config, "JSON training configuration")->required();
  train_cmd->add_option("--manifest", train_args.manifest, "Tab-separated colour/depth pair list")
      ->required();
  train_cmd->add_option("--resume", train_args.resume, "Checkpoint to resume from");

  SrArgs sr_args;
  auto* sr_cmd = app.add_subcommand("sr", "Super-resolve one low-resolution colour/depth pair");
  sr_cmd->add_option("--checkpoint", sr_args.checkpoint)->required();
  sr_cmd->add_option("--color", sr_args.color, "Low-resolution colour image")->required();
  sr_cmd->add_option("--depth", sr_args.depth, "Low-resolution depth image")->required();
  sr_cmd->add_option("--scale", sr_args.scale)->required();
  sr_cmd->add_option("--out", sr_args.out, "Output directory")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compare the generator against bicubic");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint);
  eval_cmd->add_option("--manifest", eval_args.manifest)->required();
  eval_cmd->add_option("--scale", eval_args.scale)->required();
  eval_cmd->add_option("--methods", eval_args.methods)->delimiter(',');
  eval_cmd->add_option("--csv", eval_args.csv, "Write the long-format CSV report here");
  eval_cmd->add_option("--dump", eval_args.dump, "Directory for SR and ground-truth PNGs");

  GradArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  grad_cmd->add_option("--seed", grad_args.seed);
  grad_cmd->add_option("--probes", grad_args.probes, "Coordinates probed per buffer");
  grad_cmd->add_option("--mutate", grad_args.mutate)->group("");

  ManifestArgs man_args;
  auto* man_cmd = app.add_subcommand("make-manifest", "Pair colour and depth files by stem");
  man_cmd->add_option("--color-dir", man_args.color_dir)->required();
  man_cmd->add_option("--depth-dir", man_args.depth_dir)->required();
  man_cmd->add_option("--out", man_args.out)->required();
  man_cmd->add_option("--root", man_args.root, "Directory paths are written relative to");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*sr_cmd) return cmd_sr(sr_args);
    if (*eval_cmd) {
      if (eval_args.checkpoint.empty() &&
          std::find(eval_args.methods.begin(), eval_args.methods.end(), "cdcgan") !=
              eval_args.methods.end()) {
        throw ConfigError("eval: --checkpoint is required for the cdcgan method");
      }
      return cmd_eval(eval_args);
    }
    if (*grad_cmd) return cmd_gradcheck(grad_args);
    if (*man_cmd) return cmd_make_manifest(man_args);
  } catch (const DataMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataMismatch;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataMismatch;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const NonFiniteGradient& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
