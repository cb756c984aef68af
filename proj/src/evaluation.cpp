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


#include "rsic/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "rsic/image_io.hpp"
#include "rsic/metrics.hpp"

namespace rsic {

std::vector<EvalSample> load_eval_samples(const std::filesystem::path& dir, int count) {
  auto entries = read_dataset_index(dir);
  if (count > 0 && static_cast<std::size_t>(count) < entries.size()) entries.resize(static_cast<std::size_t>(count));
  std::vector<EvalSample> out;
  for (const auto& e : entries) {
    out.push_back({e.name, read_png_rgb(e.image_path), read_png_gray(e.mask_path), e.caption, e.block});
  }
  return out;
}

WeightMap referring_map(ImageDims dims, const Rect& box, int levels) {
  const RegionSpec region{box, 1.0};
  return build_from_regions(dims, std::span<const RegionSpec>(&region, 1), levels);
}

QualityScores score_reconstruction(const Tensor& reference, const Tensor& decoded, const Tensor& mask, double bpp) {
  const Tensor q = quantize_8bit(decoded);
  return {bpp, psnr(reference, q), masked_psnr(reference, q, mask), masked_ssim(reference, q, mask)};
}

namespace {

struct Variant {
  std::string name;
  bool empty_caption = false;
  bool no_latent = false;
  bool single_scale = false;
  int steps = 0;  // 0 keeps the base value
};

}  // namespace

std::vector<AblationRow> run_ablation(const ModelSet& models, const std::vector<EvalSample>& samples,
                                      const GuidanceConfig& base, const LogFn& log) {
  const std::vector<Variant> variants = {{"full"},
                                         {"w/o GDE", true},
                                         {"w/o RGE", false, true},
                                         {"w/o HSVLC", false, false, true},
                                         {"T=10", false, false, false, 10},
                                         {"T=30", false, false, false, 30},
                                         {"T=50", false, false, false, 50}};
  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    AblationRow row;
    row.name = v.name;
    try {
      if (samples.empty()) throw InvalidArgument("no evaluation images");
      GuidanceConfig cfg = base;
      if (v.steps > 0) cfg.T = v.steps;
      QualityScores sum;
      for (const EvalSample& s : samples) {
        const ImageDims dims{s.image.height(), s.image.width()};
        const WeightMap map = v.no_latent ? WeightMap(dims, 1) : referring_map(dims, s.block);
        const EncodeOptions opts{.caption = v.empty_caption ? "" : s.caption,
                                 .single_scale = v.single_scale,
                                 .latent = !v.no_latent};
        const EncodeResult enc = encode_image(models, s.image, map, opts);
        const DecodeResult dec = decode_container(models, enc.container, cfg);
        const QualityScores q = score_reconstruction(s.image, dec.image, s.mask, enc.bpp.total);
        sum.bpp += q.bpp;
        sum.psnr += q.psnr;
        sum.fpsnr += q.fpsnr;
        sum.fssim += q.fssim;
        ++row.images;
      }
      const double n = row.images;
      row.mean = {sum.bpp / n, sum.psnr / n, sum.fpsnr / n, sum.fssim / n};
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (log) {
      log("ablation row " + v.name + (row.ok ? " done" : " failed: " + row.error));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "method       bpp       PSNR    f-PSNR  f-SSIM\n";
  char line[160];
  for (const auto& r : rows) {
    if (r.ok) {
      std::snprintf(line, sizeof line, "%-12s %-9.5f %-7.3f %-7.3f %-7.4f\n", r.name.c_str(), r.mean.bpp, r.mean.psnr,
                    r.mean.fpsnr, r.mean.fssim);
    } else {
      std::snprintf(line, sizeof line, "%-12s unavailable: %s\n", r.name.c_str(), r.error.c_str());
    }
    out += line;
  }
  return out;
}

nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"method", r.name}, {"ok", r.ok}, {"images", r.images}};
    if (r.ok) {
      j["bpp"] = r.mean.bpp;
      j["psnr"] = r.mean.psnr;
      j["fpsnr"] = r.mean.fpsnr;
      j["fssim"] = r.mean.fssim;
    } else {
      j["error"] = r.error;
    }
    out.push_back(j);
  }
  return out;
}

}  // namespace rsic
