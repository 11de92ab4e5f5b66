// Copyright 2026 The LanePerf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEPERF_MODEL_HPP
#define LANEPERF_MODEL_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "types.hpp"

namespace laneperf {

// Deterministic sample -> fixed-dimension image feature.
class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> embed(const Sample& s) const = 0;
};

// Reads the embedding stored in the sample record; missing embeddings fall
// back to the zero vector with a warning on stderr.
class PrecomputedEmbedder : public ImageEmbedder {
 public:
  explicit PrecomputedEmbedder(int d_img) : d_img_(d_img) {}
  int dim() const override { return d_img_; }
  std::vector<double> embed(const Sample& s) const override;

 private:
  int d_img_;
};

// Handcrafted 88-dim embedding: 8x8 mean-pooled grayscale (64 dims) plus a
// per-channel 8-bin color histogram (24 dims); both blocks L2-normalized.
// Samples without a readable image get the zero vector and a warning.
class BuiltinEmbedder : public ImageEmbedder {
 public:
  static constexpr int kDim = 88;
  explicit BuiltinEmbedder(std::string base_dir) : base_dir_(std::move(base_dir)) {}
  int dim() const override { return kDim; }
  std::vector<double> embed(const Sample& s) const override;

  static std::vector<double> embed_rgb(const std::vector<uint8_t>& rgb, int w, int h);

 private:
  std::string base_dir_;
};

// Minimal binary PPM (P6) image I/O for the synthetic corpus.
struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major
};
PpmImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const PpmImage& img);

struct Affine {
  int in = 0, out = 0;
  std::vector<double> w;  // [out][in], row-major
  std::vector<double> b;  // [out]
};

// Lane-set encoder (two affine+ReLU layers, mean pooled, with a learnable
// default token for empty sets) and a two-layer head over the pooled lane
// representation concatenated with the image embedding; sigmoid output.
struct NetworkWeights {
  int d_lane = 0, d_img = 0, h1 = 0, h2 = 0, h3 = 0;
  Affine enc1, enc2, head1, head2;
  std::vector<double> default_token;  // d_lane
  uint64_t seed = 0;
};

struct TrainConfig {
  double learning_rate = 5e-3;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  int epochs = 50;
  uint64_t seed = 0;
  int h1 = 128, h2 = 64, h3 = 128;
  // When true, each step regresses the mean prediction of a mini-dataset
  // onto its dataset-level F1 instead of per-sample targets.
  bool dataset_level = false;
};

NetworkWeights init_weights(const TrainConfig& cfg, int d_lane, int d_img);

double forward_sample(const NetworkWeights& w, const Sample& s,
                      const std::vector<double>& embedding);

// Gradients share the tensor layout of the weights.
struct Gradients {
  Affine enc1, enc2, head1, head2;
  std::vector<double> default_token;
};

// Mean squared error over the batch plus 0.5 * weight_decay * ||W||^2 over
// weight matrices and the default token (biases excluded). The token only
// receives a data gradient from zero-lane samples.
struct BatchItem {
  const Sample* sample;
  const std::vector<double>* embedding;
  double target;
};
double loss_and_gradients(const NetworkWeights& w,
                          const std::vector<BatchItem>& batch,
                          double weight_decay, Gradients& grads);

struct TrainResult {
  NetworkWeights weights;
  std::vector<double> loss_curve;  // mean per-step loss per epoch
};

// SGD with momentum over per-sample steps, shuffled each epoch with the
// seeded generator. Targets are per_sample_f1 of each labeled sample.
TrainResult train(const std::vector<MiniDataset>& labeled_sets,
                  const ImageEmbedder& embedder, const TrainConfig& cfg,
                  const Manifest& m);

// Mean of forward_sample over the mini-dataset.
double laneperf_estimate(const NetworkWeights& w, const MiniDataset& d,
                         const ImageEmbedder& embedder);

std::string weights_to_text(const NetworkWeights& w, const TrainConfig& cfg,
                            const std::string& manifest_fp);
NetworkWeights weights_from_text(const std::string& text, const Manifest& m);

// Compares analytic gradients against central finite differences
// (eps = 1e-5) on randomly drawn weights and batches. `corrupt` perturbs one
// analytic entry and must make the check fail (negative control).
struct GradCheckResult {
  double max_rel_error = 0.0;
  bool pass = false;
};
GradCheckResult gradient_check(uint64_t seed, int trials, bool corrupt = false);

}  // namespace laneperf

#endif  // LANEPERF_MODEL_HPP
