// Copyright 2026 The RSIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// rsic command-line tool.

#include <cstdio>
#include <sstream>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsic/autoencoder.hpp"
#include "rsic/bytes.hpp"
#include "rsic/checkpoint.hpp"
#include "rsic/diffusion.hpp"
#include "rsic/entropy_coder.hpp"
#include "rsic/evaluation.hpp"
#include "rsic/hsvlc.hpp"
#include "rsic/image_io.hpp"
#include "rsic/metrics.hpp"
#include "rsic/pipeline.hpp"
#include "rsic/toy_data.hpp"

namespace fs = std::filesystem;
using namespace rsic;

namespace {

void log_line(const std::string& s) { std::cerr << s << std::endl; }

void log_config(const std::string& command, const nlohmann::json& config) {
  log_line(command + " config " + config.dump());
}

struct MakeToyDataArgs {
  fs::path out;
  int count = 1000;
  int size = 128;
  std::uint64_t seed = 1;
};

int run_make_toy_data(const MakeToyDataArgs& a) {
  log_config("make-toy-data", {{"out", a.out.string()}, {"count", a.count}, {"size", a.size}, {"seed", a.seed}});
  write_toy_dataset(a.out, a.count, a.seed, a.size);
  return 0;
}

struct TrainAutoencoderArgs {
  fs::path data;
  fs::path models;
  fs::path out;
  bool json = false;
  AutoencoderConfig config;
};

int run_train_autoencoder(TrainAutoencoderArgs a) {
  const auto& c = a.config;
  if (a.out.empty()) {
    if (a.models.empty()) throw InvalidArgument("train-autoencoder needs --models or --out");
    fs::create_directories(a.models);
    a.out = a.models / kAutoencoderFile;
  }
  log_config("train-autoencoder", {{"data", a.data.string()},
                                   {"models", a.models.string()},
                                   {"out", a.out.string()},
                                   {"seed", c.seed},
                                   {"epochs", c.epochs},
                                   {"learning_rate", c.learning_rate},
                                   {"batch_size", c.batch_size},
                                   {"crop", c.crop}});
  const auto images = load_dataset_images(read_dataset_index(a.data));
  AutoencoderReport report;
  const Autoencoder ae = train_autoencoder(images, c, &report, log_line);
  write_file(a.out, serialize_checkpoint(ae.to_checkpoint()));
  log_line("held-out reconstruction PSNR " + std::to_string(report.heldout_psnr) + " dB");
  if (a.json) {
    std::cout << nlohmann::json{{"checkpoint", a.out.string()},
                                {"epoch_loss", report.epoch_loss},
                                {"heldout_mse", report.heldout_mse},
                                {"heldout_psnr", report.heldout_psnr}}
                     .dump(2)
              << std::endl;
  }
  return 0;
}

struct TrainCodecArgs {
  fs::path data;
  fs::path models;
  bool single_scale = false;
  bool json = false;
  CodecTrainConfig config;
};

std::vector<Tensor> encode_dataset(const Autoencoder& ae, const std::vector<DatasetImage>& images) {
  std::vector<Tensor> latents;
  latents.reserve(images.size());
  for (const auto& img : images) latents.push_back(ae.encode(img.tensor()));
  return latents;
}

int run_train_codec(TrainCodecArgs a) {
  auto& c = a.config;
  c.codec.single_scale = a.single_scale;
  const fs::path out = a.models / (a.single_scale ? "codec_single.ckpt" : "codec.ckpt");
  log_config("train-codec", {{"data", a.data.string()},
                             {"models", a.models.string()},
                             {"out", out.string()},
                             {"seed", c.seed},
                             {"epochs", c.epochs},
                             {"learning_rate", c.learning_rate},
                             {"batch_size", c.batch_size},
                             {"distortion_weight", c.distortion_weight},
                             {"channels", c.codec.channels},
                             {"single_scale", c.codec.single_scale}});
  const Autoencoder ae = Autoencoder::from_checkpoint(parse_checkpoint(read_file(a.models / "autoencoder.ckpt")));
  const auto latents = encode_dataset(ae, load_dataset_images(read_dataset_index(a.data)));
  CodecReport report;
  const Codec codec = train_codec(latents, c, &report, log_line);
  write_file(out, serialize_checkpoint(codec.to_checkpoint()));
  log_line("held-out rd loss " + std::to_string(report.heldout_loss_init) + " -> " +
           std::to_string(report.heldout_loss));
  if (a.json) {
    std::cout << nlohmann::json{{"checkpoint", out.string()},
                                {"epoch_loss", report.epoch_loss},
                                {"heldout_loss_init", report.heldout_loss_init},
                                {"heldout_loss", report.heldout_loss}}
                     .dump(2)
              << std::endl;
  }
  return 0;
}

struct TrainDiffusionArgs {
  fs::path data;
  fs::path models;
  std::string schedule = "linear";
  bool json = false;
  EpsilonTrainConfig config;
};

int run_train_diffusion(TrainDiffusionArgs a) {
  auto& c = a.config;
  c.schedule = parse_schedule_kind(a.schedule);
  const fs::path out = a.models / "diffusion.ckpt";
  log_config("train-diffusion", {{"data", a.data.string()},
                                 {"models", a.models.string()},
                                 {"out", out.string()},
                                 {"seed", c.seed},
                                 {"epochs", c.epochs},
                                 {"learning_rate", c.learning_rate},
                                 {"batch_size", c.batch_size},
                                 {"condition_dropout", c.condition_dropout},
                                 {"T_train", c.T_train},
                                 {"schedule", a.schedule},
                                 {"channels", c.model.channels},
                                 {"embed_dim", c.model.embed_dim}});
  const Autoencoder ae = Autoencoder::from_checkpoint(parse_checkpoint(read_file(a.models / "autoencoder.ckpt")));
  const auto entries = read_dataset_index(a.data);
  std::vector<std::string> captions;
  for (const auto& e : entries) captions.push_back(e.caption);
  const auto latents = encode_dataset(ae, load_dataset_images(entries));
  EpsilonReport report;
  const EpsilonModel model = train_epsilon(latents, captions, c, &report, log_line);
  write_file(out, serialize_checkpoint(model.to_checkpoint()));
  log_line("held-out noise mse " + std::to_string(report.heldout_mse_init) + " -> " +
           std::to_string(report.heldout_mse));
  if (a.json) {
    std::cout << nlohmann::json{{"checkpoint", out.string()},
                                {"epoch_loss", report.epoch_loss},
                                {"epoch_null_loss", report.epoch_null_loss},
                                {"heldout_mse_init", report.heldout_mse_init},
                                {"heldout_mse", report.heldout_mse}}
                     .dump(2)
              << std::endl;
  }
  return 0;
}

struct EncodeArgs {
  fs::path input;
  fs::path out;
  fs::path models;
  fs::path mask;
  std::string caption;
  std::vector<std::string> regions;
  double background = 0.0;
  int levels = kMaxLevels;
  bool single_scale = false;
  bool no_latent = false;
  bool json = false;
  std::uint64_t seed = 0;
};

nlohmann::json bpp_json(const BppBreakdown& b) {
  return {{"header", b.header},
          {"description", b.description},
          {"map", b.map},
          {"scales", b.scales},
          {"latent", b.latent()},
          {"total", b.total},
          {"total_bytes", b.total_bytes}};
}

int run_encode(const EncodeArgs& a) {
  log_config("encode", {{"input", a.input.string()},
                        {"out", a.out.string()},
                        {"models", a.models.string()},
                        {"mask", a.mask.string()},
                        {"caption", a.caption},
                        {"regions", a.regions},
                        {"background", a.background},
                        {"levels", a.levels},
                        {"single_scale", a.single_scale},
                        {"no_latent", a.no_latent},
                        {"seed", a.seed}});
  const Tensor image = read_png_rgb(a.input);
  const ImageDims dims{image.height(), image.width()};
  std::vector<RegionSpec> regions;
  if (a.background > 0.0) regions.push_back({Rect{0, 0, dims.width, dims.height}, a.background});
  for (const auto& r : a.regions) regions.push_back(parse_region(r));
  WeightMap map(dims, a.levels);
  if (!a.mask.empty()) {
    if (!a.regions.empty()) throw InvalidArgument("use either --region or --mask, not both");
    map = build_from_mask(read_png_gray(a.mask), a.levels);
  } else {
    map = build_from_regions(dims, regions, a.levels);
  }
  const ModelSet models = ModelSet::load(a.models);
  const EncodeResult r =
      encode_image(models, image, map, {.caption = a.caption, .single_scale = a.single_scale, .latent = !a.no_latent});
  write_file(a.out, r.bytes);
  if (a.json) {
    std::cout << nlohmann::json{{"output", a.out.string()}, {"bpp", bpp_json(r.bpp)}}.dump(2) << std::endl;
  } else {
    const auto& b = r.bpp;
    std::printf("wrote %s (%zu bytes)\n", a.out.string().c_str(), b.total_bytes);
    std::printf("bpp header %.6f description %.6f map %.6f latent %.6f [%.6f %.6f %.6f %.6f] total %.6f\n", b.header,
                b.description, b.map, b.latent(), b.scales[0], b.scales[1], b.scales[2], b.scales[3], b.total);
  }
  return 0;
}

struct DecodeArgs {
  fs::path input;
  fs::path out;
  fs::path models;
  GuidanceConfig config;
  bool json = false;
};

int run_decode(const DecodeArgs& a) {
  const auto& c = a.config;
  log_config("decode", {{"input", a.input.string()},
                        {"out", a.out.string()},
                        {"models", a.models.string()},
                        {"steps", c.T},
                        {"recurrence", c.T_r},
                        {"gamma", c.gamma_base},
                        {"seed", c.seed}});
  c.validate();
  const RsicContainer container = unpack_container(read_file(a.input));
  const ModelSet models = ModelSet::load(a.models);
  const DecodeResult r = decode_container(models, container, c);
  write_png(a.out, r.image);
  if (a.json) {
    std::cout << nlohmann::json{{"output", a.out.string()},
                                {"description", r.description},
                                {"width", r.image.width()},
                                {"height", r.image.height()}}
                     .dump(2)
              << std::endl;
  } else {
    std::printf("wrote %s (%dx%d) description \"%s\"\n", a.out.string().c_str(), r.image.width(),
                r.image.height(), r.description.c_str());
  }
  return 0;
}

struct EvalArgs {
  fs::path ref;
  fs::path test;
  fs::path mask;
  std::string metrics = "psnr,fpsnr,ssim,fssim";
  bool json = false;
};

int run_eval(const EvalArgs& a) {
  log_config("eval", {{"ref", a.ref.string()}, {"test", a.test.string()}, {"mask", a.mask.string()},
                      {"metrics", a.metrics}});
  const Tensor ref = read_png_rgb(a.ref);
  const Tensor test = read_png_rgb(a.test);
  std::vector<std::string> names;
  std::stringstream ss(a.metrics);
  for (std::string m; std::getline(ss, m, ',');) names.push_back(m);
  Tensor mask;
  nlohmann::json out = nlohmann::json::object();
  for (const auto& m : names) {
    const bool masked = m == "fpsnr" || m == "fssim";
    if (masked && mask.empty()) {
      if (a.mask.empty()) throw InvalidArgument("metric " + m + " needs --mask");
      mask = read_png_gray(a.mask);
    }
    double v;
    if (m == "psnr") {
      v = psnr(ref, test);
    } else if (m == "ssim") {
      v = ssim(ref, test);
    } else if (m == "fpsnr") {
      v = masked_psnr(ref, test, mask);
    } else if (m == "fssim") {
      v = masked_ssim(ref, test, mask);
    } else {
      throw InvalidArgument("unknown metric '" + m + "' (expected psnr, fpsnr, ssim, fssim)");
    }
    out[m] = v;
  }
  if (a.json) {
    std::cout << out.dump(2) << std::endl;
  } else {
    for (const auto& m : names) std::printf("%s %.6f\n", m.c_str(), out[m].get<double>());
  }
  return 0;
}

struct AblateArgs {
  fs::path data;
  fs::path models;
  int count = 10;
  GuidanceConfig config;
  bool json = false;
};

int run_ablate(const AblateArgs& a) {
  const auto& c = a.config;
  log_config("ablate", {{"data", a.data.string()},
                        {"models", a.models.string()},
                        {"count", a.count},
                        {"steps", c.T},
                        {"recurrence", c.T_r},
                        {"gamma", c.gamma_base},
                        {"seed", c.seed}});
  c.validate();
  const ModelSet models = ModelSet::load(a.models);
  const auto rows = run_ablation(models, load_eval_samples(a.data, a.count), c, log_line);
  if (a.json) {
    std::cout << ablation_json(rows).dump(2) << std::endl;
  } else {
    std::cout << ablation_table(rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Referring semantic image compression at desk scale"};
  app.require_subcommand(1);

  MakeToyDataArgs toy;
  auto* cmd_toy = app.add_subcommand("make-toy-data", "Generate the procedural toy corpus");
  cmd_toy->add_option("--out", toy.out, "Output directory")->required();
  cmd_toy->add_option("--count", toy.count, "Number of images")->check(CLI::PositiveNumber);
  cmd_toy->add_option("--size", toy.size, "Image side in pixels (multiple of 64)");
  cmd_toy->add_option("--seed", toy.seed, "Random seed");

  TrainAutoencoderArgs tae;
  auto* cmd_tae = app.add_subcommand("train-autoencoder", "Train the latent autoencoder");
  cmd_tae->add_option("--data", tae.data, "Dataset directory")->required();
  cmd_tae->add_option("--models", tae.models, "Model directory (writes autoencoder.ckpt)");
  cmd_tae->add_option("--out", tae.out, "Checkpoint path (overrides --models)");
  cmd_tae->add_flag("--json", tae.json, "Print the training report as JSON");
  cmd_tae->add_option("--seed", tae.config.seed, "Random seed");
  cmd_tae->add_option("--epochs", tae.config.epochs, "Training epochs");
  cmd_tae->add_option("--lr", tae.config.learning_rate, "Learning rate");
  cmd_tae->add_option("--batch", tae.config.batch_size, "Batch size");

  TrainCodecArgs tcd;
  auto* cmd_tcd = app.add_subcommand("train-codec", "Train the hierarchical latent codec");
  cmd_tcd->add_option("--data", tcd.data, "Dataset directory")->required();
  cmd_tcd->add_option("--models", tcd.models, "Model directory (reads autoencoder.ckpt)")->required();
  cmd_tcd->add_option("--seed", tcd.config.seed, "Random seed");
  cmd_tcd->add_option("--epochs", tcd.config.epochs, "Training epochs");
  cmd_tcd->add_option("--lr", tcd.config.learning_rate, "Learning rate");
  cmd_tcd->add_option("--batch", tcd.config.batch_size, "Batch size");
  cmd_tcd->add_option("--distortion-weight", tcd.config.distortion_weight, "Distortion weight K");
  cmd_tcd->add_option("--channels", tcd.config.codec.channels, "Feature channels");
  cmd_tcd->add_flag("--single-scale", tcd.single_scale, "Train the one-scale variant");
  cmd_tcd->add_flag("--json", tcd.json, "Print the training report as JSON");

  TrainDiffusionArgs tdf;
  auto* cmd_tdf = app.add_subcommand("train-diffusion", "Train the latent noise predictor");
  cmd_tdf->add_option("--data", tdf.data, "Dataset directory")->required();
  cmd_tdf->add_option("--models", tdf.models, "Model directory (reads autoencoder.ckpt)")->required();
  cmd_tdf->add_option("--seed", tdf.config.seed, "Random seed");
  cmd_tdf->add_option("--epochs", tdf.config.epochs, "Training epochs");
  cmd_tdf->add_option("--lr", tdf.config.learning_rate, "Learning rate");
  cmd_tdf->add_option("--batch", tdf.config.batch_size, "Batch size");
  cmd_tdf->add_option("--dropout", tdf.config.condition_dropout, "Condition dropout probability");
  cmd_tdf->add_option("--train-steps", tdf.config.T_train, "Training schedule length");
  cmd_tdf->add_option("--schedule", tdf.schedule, "Noise schedule: cosine or linear");
  cmd_tdf->add_option("--channels", tdf.config.model.channels, "Base feature channels");
  cmd_tdf->add_flag("--json", tdf.json, "Print the training report as JSON");

  EncodeArgs enc;
  auto* cmd_enc = app.add_subcommand("encode", "Compress an image into a .rsic container");
  cmd_enc->add_option("--input", enc.input, "PNG image")->required();
  cmd_enc->add_option("--out", enc.out, "Output .rsic path")->required();
  cmd_enc->add_option("--models", enc.models, "Model directory")->required();
  cmd_enc->add_option("--caption", enc.caption, "Global description (empty when omitted)");
  cmd_enc->add_option("--region", enc.regions, "Referred region x,y,w,h:weight (repeatable)");
  cmd_enc->add_option("--mask", enc.mask, "Referring mask PNG (alternative to --region)");
  cmd_enc->add_option("--background", enc.background, "Weight outside the referred regions")->check(CLI::Range(0.0, 1.0));
  cmd_enc->add_option("--levels", enc.levels, "Weight-map levels (1..8)");
  cmd_enc->add_flag("--single-scale", enc.single_scale, "Use the one-scale codec variant");
  cmd_enc->add_flag("--no-latent", enc.no_latent, "Write the description and map only");
  cmd_enc->add_option("--seed", enc.seed, "Random seed (encoding is deterministic)");
  cmd_enc->add_flag("--json", enc.json, "Print the bpp breakdown as JSON");

  DecodeArgs dec;
  auto* cmd_dec = app.add_subcommand("decode", "Reconstruct an image from a .rsic container");
  cmd_dec->add_option("--input", dec.input, "Input .rsic path")->required();
  cmd_dec->add_option("--out", dec.out, "Output PNG path")->required();
  cmd_dec->add_option("--models", dec.models, "Model directory")->required();
  cmd_dec->add_option("--steps", dec.config.T, "Diffusion sampling steps T");
  cmd_dec->add_option("--recurrence", dec.config.T_r, "Self-recurrence steps T_r");
  cmd_dec->add_option("--gamma", dec.config.gamma_base, "Referring guidance scale base");
  cmd_dec->add_option("--seed", dec.config.seed, "Random seed");
  cmd_dec->add_flag("--json", dec.json, "Print a JSON summary");

  EvalArgs ev;
  auto* cmd_ev = app.add_subcommand("eval", "Compare a reconstruction with its reference");
  cmd_ev->add_option("--ref", ev.ref, "Reference PNG")->required();
  cmd_ev->add_option("--test", ev.test, "Reconstructed PNG")->required();
  cmd_ev->add_option("--mask", ev.mask, "Foreground mask PNG for fpsnr/fssim");
  cmd_ev->add_option("--metrics", ev.metrics, "Comma-separated: psnr,fpsnr,ssim,fssim");
  cmd_ev->add_flag("--json", ev.json, "Print JSON");

  AblateArgs abl;
  auto* cmd_abl = app.add_subcommand("ablate", "Run the ablation table on a dataset");
  cmd_abl->add_option("--data", abl.data, "Dataset directory")->required();
  cmd_abl->add_option("--models", abl.models, "Model directory")->required();
  cmd_abl->add_option("--count", abl.count, "Number of images")->check(CLI::PositiveNumber);
  cmd_abl->add_option("--steps", abl.config.T, "Diffusion sampling steps for the full row");
  cmd_abl->add_option("--recurrence", abl.config.T_r, "Self-recurrence steps T_r");
  cmd_abl->add_option("--gamma", abl.config.gamma_base, "Referring guidance scale base");
  cmd_abl->add_option("--seed", abl.config.seed, "Random seed");
  cmd_abl->add_flag("--json", abl.json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*cmd_toy) return run_make_toy_data(toy);
    if (*cmd_tae) return run_train_autoencoder(tae);
    if (*cmd_tcd) return run_train_codec(tcd);
    if (*cmd_tdf) return run_train_diffusion(tdf);
    if (*cmd_enc) return run_encode(enc);
    if (*cmd_dec) return run_decode(dec);
    if (*cmd_ev) return run_eval(ev);
    if (*cmd_abl) return run_ablate(abl);
  } catch (const InvalidArgument& e) {
    log_line(std::string("error: ") + e.what());
    return 1;
  } catch (const ModelMismatch& e) {
    log_line(std::string("error: ") + e.what());
    return 1;
  } catch (const CorruptStream& e) {
    log_line(std::string("error: corrupt container: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log_line(std::string("internal error: ") + e.what());
    return 2;
  }
  return 2;
}
