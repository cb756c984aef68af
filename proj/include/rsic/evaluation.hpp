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


// Dataset-level evaluation: referring maps from object boxes, quality scores
// and the ablation table.

#ifndef RSIC_EVALUATION_HPP_
#define RSIC_EVALUATION_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsic/pipeline.hpp"

namespace rsic {

struct EvalSample {
  std::string name;
  Tensor image;  // (3, H, W)
  Tensor mask;   // (1, H, W)
  std::string caption;
  Rect block;
};

// First `count` entries of a dataset directory (all when count <= 0).
std::vector<EvalSample> load_eval_samples(const std::filesystem::path& dir, int count);

// Top level on the blocks covered by `box`, level 0 elsewhere.
WeightMap referring_map(ImageDims dims, const Rect& box, int levels = kMaxLevels);

struct QualityScores {
  double bpp = 0.0;
  double psnr = 0.0;
  double fpsnr = 0.0;
  double fssim = 0.0;
};

// Scores of the 8-bit quantised reconstruction.
QualityScores score_reconstruction(const Tensor& reference, const Tensor& decoded, const Tensor& mask, double bpp);

struct AblationRow {
  std::string name;
  bool ok = false;
  std::string error;
  int images = 0;
  QualityScores mean;
};

// Rows: full, w/o GDE, w/o RGE, w/o HSVLC, T=10, T=30, T=50. A failing row
// records its error and the remaining rows still run.
std::vector<AblationRow> run_ablation(const ModelSet& models, const std::vector<EvalSample>& samples,
                                      const GuidanceConfig& base, const LogFn& log = {});

std::string ablation_table(const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

}  // namespace rsic

#endif  // RSIC_EVALUATION_HPP_
