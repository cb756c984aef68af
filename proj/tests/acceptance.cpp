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

// Acceptance run: one PASS/FAIL line per criterion. Criteria 5, 7, 8 and 9
// need a trained model directory and a held-out dataset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "rsic/bitstream.hpp"
#include "rsic/entropy_coder.hpp"
#include "rsic/evaluation.hpp"
#include "rsic/guided_decoder.hpp"
#include "rsic/metrics.hpp"
#include "rsic/pipeline.hpp"
#include "rsic/rng.hpp"
#include "rsic/weight_map.hpp"

using namespace rsic;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path models_dir;
  fs::path data_dir;
  int count = 20;
  int quality_count = 10;
  std::optional<ModelSet> models;
  std::vector<EvalSample> samples;

  const ModelSet& need_models() {
    if (!models) models = ModelSet::load(models_dir);
    return *models;
  }
  const std::vector<EvalSample>& need_samples() {
    if (samples.empty()) samples = load_eval_samples(data_dir, count);
    if (samples.empty()) throw InvalidArgument("no samples in " + data_dir.string());
    return samples;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

Outcome map_budget(Context&) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const ImageDims dims{64 * rng.uniform_int(1, 40), 64 * rng.uniform_int(1, 40)};
    const WeightMap map(dims, 8);
    const long long bits = static_cast<long long>(map.rows()) * map.cols() * bits_per_cell(8);
    const long long pixels = static_cast<long long>(dims.height) * dims.width;
    if (bits * 4096 != 3 * pixels) return {false, fmt("%dx%d: %lld bits over %lld pixels", dims.height, dims.width, bits, pixels)};
    if (bpp_of(map) != 3.0 / 4096.0) return {false, fmt("bpp_of %.9g", bpp_of(map))};
  }
  const double bpp = 3.0 / 4096.0;
  return {bpp < 0.00074, fmt("map bpp = 3/4096 = %.7f on 1000 random sizes", bpp)};
}

Outcome formula_constants(Context&) {
  const double lam = lambda_of(1.0);
  const bool lam_ok = std::abs(lam - 0.01 * std::exp(7.0)) < 1e-4 && std::abs(lam - 10.966331584) < 1e-4;
  const bool omega_ok = omega_of(0.0) == 3.0 && std::abs(omega_of(1.0) - 0.9) < 1e-12 &&
                        omega_of(0.5) < omega_of(0.25);
  bool tiers_ok = true;
  const double eps = 1e-12;
  const std::vector<std::pair<double, int>> cases = {{0.0, 1},       {0.5 - eps, 1}, {0.5, 2}, {0.75 - eps, 2},
                                                     {0.75, 3},      {0.875 - eps, 3}, {0.875, 4}, {1.0, 4}};
  for (const auto& [m, n] : cases) tiers_ok = tiers_ok && scales_enabled(m) == n;
  const bool gamma_ok = guidance_scale(GuidanceConfig{}.gamma_base, 0.37, 0.37) == 1000.0;
  return {lam_ok && omega_ok && tiers_ok && gamma_ok,
          fmt("lambda(1)=%.6f omega in [%.3f, %.3f] tiers %s gamma(1)=%.1f", lam, omega_of(1.0), omega_of(0.0),
              tiers_ok ? "1/2,3/4,7/8" : "wrong", guidance_scale(GuidanceConfig{}.gamma_base, 0.37, 0.37))};
}

// Inverse-CDF sampling from oracle probabilities.
std::vector<int> sample_from(const std::vector<double>& p, int min_symbol, std::size_t n, Rng& rng) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = acc += p[i];
  std::vector<int> out(n);
  for (auto& s : out) {
    const double u = rng.uniform() * acc;
    const auto idx = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), p.size() - 1);
    s = min_symbol + static_cast<int>(idx);
  }
  return out;
}

Outcome coder_optimality(Context&) {
  Rng rng(3);
  const std::size_t n = 100000;
  struct Source {
    std::string name;
    std::vector<double> p;
    int min_symbol;
    SymbolDistribution model;
  };
  std::vector<double> gauss = oracle::gaussian_bins_by_quadrature(2.0, 20);
  std::vector<Source> sources;
  sources.push_back({"uniform-256", std::vector<double>(256, 1.0 / 256.0), 0, SymbolDistribution::uniform(0, 256)});
  const std::vector<double> bern = {0.9, 0.1};
  sources.push_back({"bernoulli-0.1", bern, 0, SymbolDistribution::from_weights(0, bern)});
  sources.push_back({"gaussian-2", gauss, -20, SymbolDistribution::discretized_gaussian(2.0, 20)});
  bool ok = true;
  std::string detail;
  for (const auto& src : sources) {
    const auto symbols = sample_from(src.p, src.min_symbol, n, rng);
    const std::vector<SymbolDistribution> dists(n, src.model);
    const auto bytes = encode_symbols(symbols, dists);
    const double actual = 8.0 * static_cast<double>(bytes.size());
    const double ideal = static_cast<double>(n) * oracle::shannon_entropy_bits(src.p);
    const bool within = std::abs(actual - ideal) <= 0.01 * ideal + 256.0;
    const bool lossless = decode_symbols(bytes, dists, n) == symbols;
    ok = ok && within && lossless;
    detail += fmt("%s %.0f/%.0f bits; ", src.name.c_str(), actual, ideal);
  }
  const auto& bank = GaussianBank::instance();
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = rng.below(300);
    std::vector<const SymbolDistribution*> dists(len);
    std::vector<int> s(len);
    for (std::size_t i = 0; i < len; ++i) {
      const int pick = static_cast<int>(rng.below(4));
      dists[i] = pick < 3 ? &sources[pick].model : &bank.distribution(static_cast<int>(rng.below(bank.size())));
      s[i] = dists[i]->min_symbol() + static_cast<int>(rng.below(static_cast<std::uint64_t>(dists[i]->count())));
    }
    if (decode_symbols(encode_symbols(s, dists), dists, len) != s) ++failures;
  }
  ok = ok && failures == 0;
  detail += fmt("%d/1000 round-trip failures", failures);
  return {ok, detail};
}

Outcome inverse_identity(Context&) {
  Rng rng(4);
  const auto grid = sampling_grid(1000, 50);
  double worst = 0.0;
  for (ScheduleKind kind : {ScheduleKind::kLinear, ScheduleKind::kCosine}) {
    const NoiseSchedule s = make_schedule(1000, kind);
    for (int trial = 0; trial < 10; ++trial) {
      const double k = rng.uniform(-1.5, 1.5);
      const NoisePredictor eps = [k](const Tensor& z, int) { return Tensor(z.shape(), k); };
      const Tensor z0 = rng.normal_like({4, 8, 8});
      const auto traj = ddim_invert(s, eps, z0, grid);
      Tensor z = traj.back();
      for (int step = 50; step >= 1; --step) {
        z = denoise_step(s, eps, nullptr, z, step, grid, WeightMap({64, 64}, 8), Tensor(), 0.0);
      }
      worst = std::max(worst, oracle::relative_error(z, z0));
    }
  }
  return {worst <= 1e-6, fmt("worst relative error %.3g over 20 latents, T=50", worst)};
}

Outcome guidance_gradient_check(Context& ctx) {
  const ModelSet& models = ctx.need_models();
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const WeightMap map = WeightMap::constant({64, 64}, 8, static_cast<int>(rng.below(8)));
    const Tensor z = rng.normal_like({4, 8, 8});
    const Tensor target = rng.normal_like(z.shape());
    auto f = [&](const Tensor& x) { return l2_distance(models.codec.apply_differentiable(x, map), target); };
    const Tensor g = guidance_gradient(models.codec, z, target, map);
    worst = std::max(worst, oracle::relative_error(g, oracle::central_difference(f, z, 1e-4)));
  }
  return {worst < 1e-3, fmt("worst relative error %.3g over 20 latents of 4x8x8", worst)};
}

Outcome self_recurrence(Context&) {
  Rng rng(6);
  const int draws = 10000;
  double worst = 0.0;
  for (double ratio : {0.95, 0.6, 0.2}) {
    const double a_prev = 0.8;
    const double a_t = ratio * a_prev;
    const double prior_var = 2.25;
    std::vector<double> out(draws);
    for (int i = 0; i < draws; ++i) {
      Tensor z(Shape{1, 1, 1});
      z[0] = std::sqrt(prior_var) * rng.normal();
      out[i] = self_recur(z, a_t, a_prev, rng)[0];
    }
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= draws;
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    var /= draws - 1;
    const double expected = ratio * prior_var + (1.0 - ratio);
    worst = std::max(worst, std::abs(var / expected - 1.0));
  }
  return {worst <= 0.03, fmt("worst relative variance gap %.4f over 3 ratios x %d draws", worst, draws)};
}

Outcome monotonicity(Context& ctx) {
  const ModelSet& models = ctx.need_models();
  const auto& samples = ctx.need_samples();
  const std::vector<int> levels = {0, 3, 5, 7};
  const std::size_t L = levels.size();
  std::vector<double> mean_rate(L, 0.0), mean_mse(L, 0.0);
  int pairs = 0, violations = 0;
  for (const auto& s : samples) {
    const Tensor z0 = encode_latent(models.autoencoder, s.image);
    const ImageDims dims{s.image.height(), s.image.width()};
    std::vector<double> rate(L), mse(L);
    for (std::size_t i = 0; i < L; ++i) {
      const WeightMap map = WeightMap::constant(dims, 8, levels[i]);
      const LatentBitstream bits = models.codec.compress(z0, map);
      double b = 0.0;
      for (const auto& st : bits.streams) b += 8.0 * static_cast<double>(st.size());
      rate[i] = b;
      mse[i] = mean_squared_error(models.codec.decompress(bits, map), z0);
      mean_rate[i] += b / static_cast<double>(samples.size());
      mean_mse[i] += mse[i] / static_cast<double>(samples.size());
    }
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = i + 1; j < L; ++j) {
        ++pairs;
        if (rate[j] < rate[i] || mse[j] > mse[i]) ++violations;
      }
    }
  }
  bool aggregate = true;
  std::string detail = "mean bits/mse:";
  for (std::size_t i = 0; i < L; ++i) {
    detail += fmt(" L%d %.0f/%.4f", levels[i], mean_rate[i], mean_mse[i]);
    if (i > 0) aggregate = aggregate && mean_rate[i] >= mean_rate[i - 1] && mean_mse[i] <= mean_mse[i - 1];
  }
  const double frac = static_cast<double>(violations) / pairs;
  detail += fmt("; %d/%d pair violations (%.1f%%) over %zu images", violations, pairs, 100.0 * frac, samples.size());
  return {samples.size() >= 20 && aggregate && frac <= 0.05, detail};
}

struct Point {
  double bpp = 0.0;
  double fpsnr = 0.0;
};

Point encode_decode(const ModelSet& models, const EvalSample& s, const WeightMap& map) {
  const EncodeResult enc = encode_image(models, s.image, map, {.caption = s.caption});
  const DecodeResult dec = decode_container(models, enc.container, GuidanceConfig{});
  const QualityScores q = score_reconstruction(s.image, dec.image, s.mask, enc.bpp.total);
  return {q.bpp, q.fpsnr};
}

// The referring side uses the top level on the referred block. The global
// side gives every image a constant level; it starts from the highest level
// whose mean bpp does not exceed the referring mean and upgrades images to
// the next level (best f-PSNR gain per bit first) while its mean bpp stays
// within +10% of the referring mean.
Outcome referring_efficacy(Context& ctx) {
  const ModelSet& models = ctx.need_models();
  auto samples = ctx.need_samples();
  if (samples.size() > static_cast<std::size_t>(ctx.quality_count)) samples.resize(ctx.quality_count);
  const std::size_t n = samples.size();
  auto dims_of = [](const EvalSample& s) { return ImageDims{s.image.height(), s.image.width()}; };

  std::vector<Point> ref(n);
  double ref_bpp = 0.0, ref_fpsnr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ref[i] = encode_decode(models, samples[i], referring_map(dims_of(samples[i]), samples[i].block));
    ref_bpp += ref[i].bpp / static_cast<double>(n);
    ref_fpsnr += ref[i].fpsnr / static_cast<double>(n);
  }

  std::vector<double> level_bpp(8, 0.0);
  for (int g = 0; g < 8; ++g) {
    for (const auto& s : samples) {
      const WeightMap map = WeightMap::constant(dims_of(s), 8, g);
      level_bpp[g] += encode_image(models, s.image, map, {.caption = s.caption}).bpp.total / static_cast<double>(n);
    }
  }
  int lo = 0;
  for (int g = 0; g < 8; ++g) {
    if (level_bpp[g] <= ref_bpp) lo = g;
  }
  const int hi = std::min(lo + 1, 7);
  std::vector<Point> low(n), high(n);
  for (std::size_t i = 0; i < n; ++i) {
    low[i] = encode_decode(models, samples[i], WeightMap::constant(dims_of(samples[i]), 8, lo));
    high[i] = hi == lo ? low[i] : encode_decode(models, samples[i], WeightMap::constant(dims_of(samples[i]), 8, hi));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto gain_per_bit = [&](std::size_t i) {
    const double cost = std::max(high[i].bpp - low[i].bpp, 1e-12);
    return (high[i].fpsnr - low[i].fpsnr) / cost;
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gain_per_bit(a) > gain_per_bit(b); });
  std::vector<Point> chosen = low;
  auto mean = [&](const std::vector<Point>& v, double Point::*f) {
    double sum = 0.0;
    for (const auto& p : v) sum += p.*f;
    return sum / static_cast<double>(n);
  };
  int upgraded = 0;
  for (std::size_t i : order) {
    if (hi == lo || high[i].fpsnr <= low[i].fpsnr) continue;
    std::vector<Point> trial = chosen;
    trial[i] = high[i];
    if (mean(trial, &Point::bpp) > 1.10 * ref_bpp) continue;
    chosen = trial;
    ++upgraded;
  }
  const double glob_bpp = mean(chosen, &Point::bpp);
  const double glob_fpsnr = mean(chosen, &Point::fpsnr);
  const double gap = std::abs(glob_bpp / ref_bpp - 1.0);
  progress(fmt("criterion 8: global levels %d/%d, %d of %zu images at level %d", lo, hi, upgraded, n, hi));
  return {n >= 10 && gap <= 0.10 && ref_fpsnr >= glob_fpsnr + 0.5,
          fmt("referring f-PSNR %.3f dB at %.4f bpp vs global %.3f dB at %.4f bpp (gap %.1f%%, %zu images)",
              ref_fpsnr, ref_bpp, glob_fpsnr, glob_bpp, 100.0 * gap, n)};
}

Outcome ablation_orderings(Context& ctx) {
  const ModelSet& models = ctx.need_models();
  auto samples = ctx.need_samples();
  if (samples.size() > static_cast<std::size_t>(ctx.quality_count)) samples.resize(ctx.quality_count);
  const auto rows = run_ablation(models, samples, GuidanceConfig{}, progress);
  std::fprintf(stderr, "%s", ablation_table(rows).c_str());
  auto find = [&](const std::string& name) -> const AblationRow* {
    for (const auto& r : rows) {
      if (r.name == name && r.ok) return &r;
    }
    return nullptr;
  };
  const AblationRow* full = find("full");
  const AblationRow* no_rge = find("w/o RGE");
  const AblationRow* no_hsvlc = find("w/o HSVLC");
  const AblationRow* t10 = find("T=10");
  const AblationRow* t50 = find("T=50");
  if (!full || !no_rge || !no_hsvlc || !t10 || !t50) return {false, "a required ablation row failed"};
  bool lowest = true;
  for (const auto& r : rows) {
    if (r.ok && &r != no_rge) lowest = lowest && no_rge->mean.bpp < r.mean.bpp;
  }
  const bool beats = full->mean.fpsnr > no_rge->mean.fpsnr && full->mean.fpsnr > no_hsvlc->mean.fpsnr;
  const bool steps = t10->mean.fpsnr < t50->mean.fpsnr;
  return {lowest && beats && steps,
          fmt("w/o RGE bpp %.4f lowest=%s; f-PSNR full %.3f, w/o RGE %.3f, w/o HSVLC %.3f; T=10 %.3f vs T=50 %.3f",
              no_rge->mean.bpp, lowest ? "yes" : "no", full->mean.fpsnr, no_rge->mean.fpsnr, no_hsvlc->mean.fpsnr,
              t10->mean.fpsnr, t50->mean.fpsnr)};
}

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) {
  std::vector<std::uint8_t> b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

std::string random_utf8(Rng& rng) {
  static const char* pieces[] = {"a ", "red ", "bicycle ", "caf\xc3\xa9 ", "\xe6\x9d\xb1\xe4\xba\xac ",
                                 "\xf0\x9f\x90\x95 ", "on the ", "street, ", "near ", "Z9 "};
  std::string s;
  const int n = static_cast<int>(rng.below(40));
  for (int i = 0; i < n; ++i) s += pieces[rng.below(10)];
  return s;
}

Outcome container_conformance(Context&) {
  Rng rng(10);
  int bad_bijection = 0, bad_description = 0, bad_sum = 0;
  for (int i = 0; i < 1000; ++i) {
    RsicContainer c;
    c.dims = {rng.uniform_int(1, 2000), rng.uniform_int(1, 2000)};
    c.levels = rng.uniform_int(1, 8);
    for (auto& b : c.model_hash) b = static_cast<std::uint8_t>(rng.below(256));
    const std::string text = random_utf8(rng);
    c.description = compress_description(text);
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(map_rows(c.dims.height)) * map_cols(c.dims.width));
    for (auto& g : grid) g = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(c.levels)));
    c.map_bytes = pack(WeightMap(c.dims, c.levels, grid));
    for (auto& s : c.streams) s = random_bytes(rng, rng.below(400));
    const auto bytes = pack_container(c);
    const RsicContainer back = unpack_container(bytes);
    if (!(back == c) || pack_container(back) != bytes) ++bad_bijection;
    if (decompress_description(back.description) != text) ++bad_description;
    const BppBreakdown b = total_bpp(c);
    std::size_t parts = b.header_bytes + b.description_bytes + b.map_bytes;
    for (auto s : b.scale_bytes) parts += s;
    const double sum = b.header + b.description + b.map + b.latent();
    if (parts != b.total_bytes || b.total_bytes != bytes.size() || std::abs(sum - b.total) > 1e-12 * b.total ||
        b.total != 8.0 * static_cast<double>(bytes.size()) / (static_cast<double>(c.dims.height) * c.dims.width)) {
      ++bad_sum;
    }
  }
  return {bad_bijection == 0 && bad_description == 0 && bad_sum == 0,
          fmt("1000 containers: %d bijection, %d description, %d breakdown failures", bad_bijection, bad_description,
              bad_sum)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSIC acceptance criteria"};
  Context ctx;
  std::vector<int> only;
  app.add_option("--models", ctx.models_dir, "Trained model directory");
  app.add_option("--data", ctx.data_dir, "Held-out dataset directory");
  app.add_option("--count", ctx.count, "Images for the rate/fidelity sweep")->check(CLI::PositiveNumber);
  app.add_option("--quality-count", ctx.quality_count, "Images for decoded-quality criteria")
      ->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome(Context&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "weight-map budget", map_budget},
      {2, "formula constants", formula_constants},
      {3, "entropy coder optimality", coder_optimality},
      {4, "DDIM inverse identity", inverse_identity},
      {5, "guidance gradient", guidance_gradient_check},
      {6, "self-recurrence statistics", self_recurrence},
      {7, "rate/fidelity monotonicity", monotonicity},
      {8, "referring-mode efficacy", referring_efficacy},
      {9, "ablation orderings", ablation_orderings},
      {10, "container conformance", container_conformance},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
