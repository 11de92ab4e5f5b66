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

#include "laneperf_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "core.hpp"
#include "lane_eval.hpp"
#include "rng.hpp"

namespace laneperf {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Embedders

std::vector<double> PrecomputedEmbedder::embed(const Sample& s) const {
  if (s.image_embedding) {
    if (static_cast<int>(s.image_embedding->size()) != d_img_)
      throw DataError("image_embedding dimension mismatch in '" + s.sample_id + "'");
    return *s.image_embedding;
  }
  std::cerr << "warning: sample '" << s.sample_id
            << "' has no precomputed embedding; using zero vector\n";
  return std::vector<double>(d_img_, 0.0);
}

PpmImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw DataError("not a binary PPM (P6) image: " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255)
    throw DataError("unsupported PPM header in " + path);
  in.get();  // single whitespace after header
  PpmImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw DataError("truncated PPM data in " + path);
  return img;
}

void write_ppm(const std::string& path, const PpmImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
}

std::vector<double> BuiltinEmbedder::embed_rgb(const std::vector<uint8_t>& rgb,
                                               int w, int h) {
  std::vector<double> out(kDim, 0.0);
  // 8x8 grid of mean grayscale values.
  for (int gy = 0; gy < 8; ++gy) {
    for (int gx = 0; gx < 8; ++gx) {
      int x0 = gx * w / 8, x1 = (gx + 1) * w / 8;
      int y0 = gy * h / 8, y1 = (gy + 1) * h / 8;
      if (x1 <= x0) x1 = x0 + 1;
      if (y1 <= y0) y1 = y0 + 1;
      double sum = 0.0;
      for (int y = y0; y < y1 && y < h; ++y)
        for (int x = x0; x < x1 && x < w; ++x) {
          size_t i = (static_cast<size_t>(y) * w + x) * 3;
          sum += 0.299 * rgb[i] + 0.587 * rgb[i + 1] + 0.114 * rgb[i + 2];
        }
      out[gy * 8 + gx] = sum / (255.0 * (x1 - x0) * (y1 - y0));
    }
  }
  // Per-channel 8-bin histograms.
  for (size_t i = 0; i + 2 < rgb.size(); i += 3)
    for (int c = 0; c < 3; ++c) out[64 + c * 8 + rgb[i + c] / 32] += 1.0;

  auto l2_normalize = [&](int begin, int len) {
    double norm = 0.0;
    for (int i = begin; i < begin + len; ++i) norm += out[i] * out[i];
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (int i = begin; i < begin + len; ++i) out[i] /= norm;
  };
  l2_normalize(0, 64);
  l2_normalize(64, 24);
  return out;
}

std::vector<double> BuiltinEmbedder::embed(const Sample& s) const {
  if (s.image_ref) {
    fs::path p(*s.image_ref);
    if (p.is_relative() && !base_dir_.empty()) p = fs::path(base_dir_) / p;
    PpmImage img = read_ppm(p.string());
    return embed_rgb(img.rgb, img.width, img.height);
  }
  if (s.image_embedding && static_cast<int>(s.image_embedding->size()) == kDim)
    return *s.image_embedding;
  std::cerr << "warning: sample '" << s.sample_id
            << "' has no image and no usable embedding; using zero vector\n";
  return std::vector<double>(kDim, 0.0);
}

// ---------------------------------------------------------------------------
// Network

namespace {

Affine make_affine(int in, int out) {
  Affine a;
  a.in = in;
  a.out = out;
  a.w.assign(static_cast<size_t>(in) * out, 0.0);
  a.b.assign(out, 0.0);
  return a;
}

void affine_init(Affine& a, Rng& rng) {
  double bound = std::sqrt(6.0 / a.in);
  for (double& v : a.w) v = rng.uniform(-bound, bound);
  // biases stay zero
}

void affine_forward(const Affine& a, const double* x, double* y) {
  for (int o = 0; o < a.out; ++o) {
    double s = a.b[o];
    const double* row = &a.w[static_cast<size_t>(o) * a.in];
    for (int i = 0; i < a.in; ++i) s += row[i] * x[i];
    y[o] = s;
  }
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }
inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct LaneTrace {
  std::vector<double> input;  // d_lane
  std::vector<double> pre1, act1;  // h1
  std::vector<double> pre2, act2;  // h2
};

struct ForwardTrace {
  std::vector<LaneTrace> lanes;  // one per lane, or one token trace
  bool used_token = false;
  std::vector<double> pooled;  // h2
  std::vector<double> cat;     // h2 + d_img
  std::vector<double> pre3, act3;  // h3
  double logit = 0.0;
  double output = 0.0;
};

void encode_lane(const NetworkWeights& w, const std::vector<double>& feat,
                 LaneTrace& t) {
  t.input = feat;
  t.pre1.resize(w.h1);
  t.act1.resize(w.h1);
  affine_forward(w.enc1, feat.data(), t.pre1.data());
  for (int i = 0; i < w.h1; ++i) t.act1[i] = relu(t.pre1[i]);
  t.pre2.resize(w.h2);
  t.act2.resize(w.h2);
  affine_forward(w.enc2, t.act1.data(), t.pre2.data());
  for (int i = 0; i < w.h2; ++i) t.act2[i] = relu(t.pre2[i]);
}

ForwardTrace forward_trace(const NetworkWeights& w, const Sample& s,
                           const std::vector<double>& embedding) {
  if (static_cast<int>(embedding.size()) != w.d_img)
    throw DataError("image embedding dimension mismatch");
  ForwardTrace t;
  if (s.pred_lanes.empty()) {
    // Empty set: the learnable token passes through the same lane encoder
    // as a singleton.
    t.used_token = true;
    t.lanes.emplace_back();
    encode_lane(w, w.default_token, t.lanes.back());
  } else {
    // Encode in a canonical (lexicographic) feature order so the pooled sum,
    // and therefore the output, is bit-identical under lane permutation.
    std::vector<size_t> order(s.pred_lanes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return s.pred_lanes[a].feature < s.pred_lanes[b].feature;
    });
    for (size_t i : order) {
      const auto& lane = s.pred_lanes[i];
      if (static_cast<int>(lane.feature.size()) != w.d_lane)
        throw DataError("lane feature dimension mismatch in '" + s.sample_id + "'");
      t.lanes.emplace_back();
      encode_lane(w, lane.feature, t.lanes.back());
    }
  }
  t.pooled.assign(w.h2, 0.0);
  for (const auto& lt : t.lanes)
    for (int i = 0; i < w.h2; ++i) t.pooled[i] += lt.act2[i];
  double inv = 1.0 / static_cast<double>(t.lanes.size());
  for (double& v : t.pooled) v *= inv;

  t.cat.resize(w.h2 + w.d_img);
  std::copy(t.pooled.begin(), t.pooled.end(), t.cat.begin());
  std::copy(embedding.begin(), embedding.end(), t.cat.begin() + w.h2);

  t.pre3.resize(w.h3);
  t.act3.resize(w.h3);
  affine_forward(w.head1, t.cat.data(), t.pre3.data());
  for (int i = 0; i < w.h3; ++i) t.act3[i] = relu(t.pre3[i]);
  double logit = 0.0;
  affine_forward(w.head2, t.act3.data(), &logit);
  t.logit = logit;
  t.output = sigmoid(logit);
  return t;
}

// Accumulates d(loss)/d(params) for one sample given d(loss)/d(output).
void backward_sample(const NetworkWeights& w, const ForwardTrace& t,
                     double d_output, Gradients& g) {
  double d_logit = d_output * t.output * (1.0 - t.output);

  // head2 (h3 -> 1)
  for (int i = 0; i < w.h3; ++i)
    g.head2.w[i] += d_logit * t.act3[i];
  g.head2.b[0] += d_logit;
  std::vector<double> d_act3(w.h3);
  for (int i = 0; i < w.h3; ++i) d_act3[i] = d_logit * w.head2.w[i];

  // head1 (cat -> h3), ReLU
  std::vector<double> d_cat(t.cat.size(), 0.0);
  for (int o = 0; o < w.h3; ++o) {
    if (t.pre3[o] <= 0.0) continue;
    double dv = d_act3[o];
    double* grow = &g.head1.w[static_cast<size_t>(o) * w.head1.in];
    const double* wrow = &w.head1.w[static_cast<size_t>(o) * w.head1.in];
    for (size_t i = 0; i < t.cat.size(); ++i) {
      grow[i] += dv * t.cat[i];
      d_cat[i] += dv * wrow[i];
    }
    g.head1.b[o] += dv;
  }

  // Mean pooling: each lane trace receives d_pooled / M.
  double inv = 1.0 / static_cast<double>(t.lanes.size());
  for (const auto& lt : t.lanes) {
    std::vector<double> d_act2(w.h2);
    for (int i = 0; i < w.h2; ++i) d_act2[i] = d_cat[i] * inv;

    std::vector<double> d_act1(w.h1, 0.0);
    for (int o = 0; o < w.h2; ++o) {
      if (lt.pre2[o] <= 0.0) continue;
      double dv = d_act2[o];
      double* grow = &g.enc2.w[static_cast<size_t>(o) * w.h1];
      const double* wrow = &w.enc2.w[static_cast<size_t>(o) * w.h1];
      for (int i = 0; i < w.h1; ++i) {
        grow[i] += dv * lt.act1[i];
        d_act1[i] += dv * wrow[i];
      }
      g.enc2.b[o] += dv;
    }

    std::vector<double> d_input(w.d_lane, 0.0);
    for (int o = 0; o < w.h1; ++o) {
      if (lt.pre1[o] <= 0.0) continue;
      double dv = d_act1[o];
      double* grow = &g.enc1.w[static_cast<size_t>(o) * w.d_lane];
      const double* wrow = &w.enc1.w[static_cast<size_t>(o) * w.d_lane];
      for (int i = 0; i < w.d_lane; ++i) {
        grow[i] += dv * lt.input[i];
        d_input[i] += dv * wrow[i];
      }
      g.enc1.b[o] += dv;
    }

    if (t.used_token)
      for (int i = 0; i < w.d_lane; ++i) g.default_token[i] += d_input[i];
  }
}

Gradients zero_gradients(const NetworkWeights& w) {
  Gradients g;
  g.enc1 = make_affine(w.enc1.in, w.enc1.out);
  g.enc2 = make_affine(w.enc2.in, w.enc2.out);
  g.head1 = make_affine(w.head1.in, w.head1.out);
  g.head2 = make_affine(w.head2.in, w.head2.out);
  g.default_token.assign(w.d_lane, 0.0);
  return g;
}

// Flat views over all parameters / gradients, used by the update loop and
// the finite-difference check.
std::vector<double*> param_view(NetworkWeights& w) {
  std::vector<double*> out;
  for (Affine* a : {&w.enc1, &w.enc2, &w.head1, &w.head2}) {
    for (double& v : a->w) out.push_back(&v);
    for (double& v : a->b) out.push_back(&v);
  }
  for (double& v : w.default_token) out.push_back(&v);
  return out;
}

std::vector<double*> grad_view(Gradients& g) {
  std::vector<double*> out;
  for (Affine* a : {&g.enc1, &g.enc2, &g.head1, &g.head2}) {
    for (double& v : a->w) out.push_back(&v);
    for (double& v : a->b) out.push_back(&v);
  }
  for (double& v : g.default_token) out.push_back(&v);
  return out;
}

// True for weight-matrix and token entries (weight decay applies), false for
// biases; same ordering as the views above.
std::vector<bool> decay_mask(const NetworkWeights& w) {
  std::vector<bool> out;
  for (const Affine* a : {&w.enc1, &w.enc2, &w.head1, &w.head2}) {
    out.insert(out.end(), a->w.size(), true);
    out.insert(out.end(), a->b.size(), false);
  }
  out.insert(out.end(), w.default_token.size(), true);
  return out;
}

}  // namespace

NetworkWeights init_weights(const TrainConfig& cfg, int d_lane, int d_img) {
  NetworkWeights w;
  w.d_lane = d_lane;
  w.d_img = d_img;
  w.h1 = cfg.h1;
  w.h2 = cfg.h2;
  w.h3 = cfg.h3;
  w.seed = cfg.seed;
  w.enc1 = make_affine(d_lane, cfg.h1);
  w.enc2 = make_affine(cfg.h1, cfg.h2);
  w.head1 = make_affine(cfg.h2 + d_img, cfg.h3);
  w.head2 = make_affine(cfg.h3, 1);
  w.default_token.assign(d_lane, 0.0);
  Rng rng(cfg.seed);
  affine_init(w.enc1, rng);
  affine_init(w.enc2, rng);
  affine_init(w.head1, rng);
  affine_init(w.head2, rng);
  return w;
}

double forward_sample(const NetworkWeights& w, const Sample& s,
                      const std::vector<double>& embedding) {
  return forward_trace(w, s, embedding).output;
}

double loss_and_gradients(const NetworkWeights& w,
                          const std::vector<BatchItem>& batch,
                          double weight_decay, Gradients& grads) {
  if (batch.empty()) throw DataError("loss_and_gradients: empty batch");
  grads = zero_gradients(w);
  double loss = 0.0;
  double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& item : batch) {
    if (item.target < 0.0 || item.target > 1.0)
      throw DataError("training target outside [0,1]");
    ForwardTrace t = forward_trace(w, *item.sample, *item.embedding);
    double err = t.output - item.target;
    loss += err * err * inv_b;
    backward_sample(w, t, 2.0 * err * inv_b, grads);
  }
  if (weight_decay > 0.0) {
    auto wc = const_cast<NetworkWeights&>(w);
    auto params = param_view(wc);
    auto gs = grad_view(grads);
    auto mask = decay_mask(w);
    for (size_t i = 0; i < params.size(); ++i) {
      if (!mask[i]) continue;
      loss += 0.5 * weight_decay * (*params[i]) * (*params[i]);
      *gs[i] += weight_decay * (*params[i]);
    }
  }
  return loss;
}

TrainResult train(const std::vector<MiniDataset>& labeled_sets,
                  const ImageEmbedder& embedder, const TrainConfig& cfg,
                  const Manifest& m) {
  if (cfg.learning_rate <= 0.0) throw DataError("learning rate must be > 0");
  if (cfg.epochs < 1) throw DataError("epochs must be >= 1");

  // Precompute embeddings and supervision targets once.
  struct Unit {  // one optimization step: a sample, or a whole mini-dataset
    std::vector<const Sample*> samples;
    std::vector<const std::vector<double>*> embeddings;
    double target;
  };
  std::vector<std::vector<double>> emb_storage;
  std::vector<Unit> units;
  size_t total_samples = 0;
  for (const auto& d : labeled_sets) total_samples += d.samples.size();
  emb_storage.reserve(total_samples);
  for (const auto& d : labeled_sets) {
    Unit dataset_unit;
    for (const auto& s : d.samples) {
      if (!s.gt_lanes)
        throw DataError("train: sample '" + s.sample_id + "' has no ground truth");
      emb_storage.push_back(embedder.embed(s));
      if (cfg.dataset_level) {
        dataset_unit.samples.push_back(&s);
        dataset_unit.embeddings.push_back(&emb_storage.back());
      } else {
        units.push_back({{&s}, {&emb_storage.back()}, per_sample_f1(s, m)});
      }
    }
    if (cfg.dataset_level) {
      dataset_unit.target = dataset_f1(d, m).f1;
      units.push_back(std::move(dataset_unit));
    }
  }
  if (units.empty()) throw DataError("train: no labeled samples");

  TrainResult result;
  result.weights = init_weights(cfg, m.d_lane, embedder.dim());
  NetworkWeights& w = result.weights;
  Gradients velocity = zero_gradients(w);
  auto params = param_view(w);
  auto vel = grad_view(velocity);

  Rng rng(cfg.seed ^ 0x5DEECE66Dull);
  std::vector<size_t> order(units.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Gradients grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t idx : order) {
      const Unit& u = units[idx];
      if (cfg.dataset_level) {
        // Mean prediction of the mini-dataset regressed onto its dataset F1.
        std::vector<ForwardTrace> traces;
        traces.reserve(u.samples.size());
        double mean_out = 0.0;
        for (size_t i = 0; i < u.samples.size(); ++i) {
          traces.push_back(forward_trace(w, *u.samples[i], *u.embeddings[i]));
          mean_out += traces.back().output;
        }
        mean_out /= static_cast<double>(u.samples.size());
        double err = mean_out - u.target;
        grads = zero_gradients(w);
        double d_each = 2.0 * err / static_cast<double>(u.samples.size());
        for (const auto& t : traces) backward_sample(w, t, d_each, grads);
        epoch_loss += err * err;
        auto gs = grad_view(grads);
        auto mask = decay_mask(w);
        for (size_t i = 0; i < params.size(); ++i) {
          double g = *gs[i] + (mask[i] ? cfg.weight_decay * (*params[i]) : 0.0);
          *vel[i] = cfg.momentum * (*vel[i]) - cfg.learning_rate * g;
          *params[i] += *vel[i];
        }
      } else {
        std::vector<BatchItem> batch{{u.samples[0], u.embeddings[0], u.target}};
        epoch_loss += loss_and_gradients(w, batch, cfg.weight_decay, grads);
        auto gs = grad_view(grads);
        for (size_t i = 0; i < params.size(); ++i) {
          *vel[i] = cfg.momentum * (*vel[i]) - cfg.learning_rate * (*gs[i]);
          *params[i] += *vel[i];
        }
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(units.size()));
  }
  return result;
}

double laneperf_estimate(const NetworkWeights& w, const MiniDataset& d,
                         const ImageEmbedder& embedder) {
  if (d.samples.empty()) throw DataError("laneperf_estimate: empty dataset");
  // Summing in sorted order makes the mean bit-identical under any
  // permutation of the samples.
  std::vector<double> vals;
  vals.reserve(d.samples.size());
  for (const auto& s : d.samples) vals.push_back(forward_sample(w, s, embedder.embed(s)));
  std::sort(vals.begin(), vals.end());
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / static_cast<double>(vals.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json affine_to_json(const Affine& a) {
  return json{{"in", a.in}, {"out", a.out}, {"w", a.w}, {"b", a.b}};
}

Affine affine_from_json(const json& j) {
  Affine a;
  a.in = j.at("in").get<int>();
  a.out = j.at("out").get<int>();
  a.w = j.at("w").get<std::vector<double>>();
  a.b = j.at("b").get<std::vector<double>>();
  if (a.w.size() != static_cast<size_t>(a.in) * a.out ||
      a.b.size() != static_cast<size_t>(a.out))
    throw DataError("weight file: tensor shape mismatch");
  return a;
}

}  // namespace

std::string weights_to_text(const NetworkWeights& w, const TrainConfig& cfg,
                            const std::string& manifest_fp) {
  json j;
  j["version"] = 1;
  j["manifest_fingerprint"] = manifest_fp;
  j["seed"] = w.seed;
  j["config"] = {{"learning_rate", cfg.learning_rate},
                 {"momentum", cfg.momentum},
                 {"weight_decay", cfg.weight_decay},
                 {"epochs", cfg.epochs},
                 {"h1", cfg.h1},
                 {"h2", cfg.h2},
                 {"h3", cfg.h3},
                 {"dataset_level", cfg.dataset_level}};
  j["d_lane"] = w.d_lane;
  j["d_img"] = w.d_img;
  j["h1"] = w.h1;
  j["h2"] = w.h2;
  j["h3"] = w.h3;
  j["enc1"] = affine_to_json(w.enc1);
  j["enc2"] = affine_to_json(w.enc2);
  j["head1"] = affine_to_json(w.head1);
  j["head2"] = affine_to_json(w.head2);
  j["default_token"] = w.default_token;
  return j.dump(2) + "\n";
}

NetworkWeights weights_from_text(const std::string& text, const Manifest& m) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("weight file is not valid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw DataError("unsupported weight file version");
  std::string fp = j.at("manifest_fingerprint").get<std::string>();
  if (fp != manifest_fingerprint(m))
    throw DataError("weight file fingerprint " + fp +
                    " does not match manifest fingerprint " + manifest_fingerprint(m));
  NetworkWeights w;
  w.seed = j.at("seed").get<uint64_t>();
  w.d_lane = j.at("d_lane").get<int>();
  w.d_img = j.at("d_img").get<int>();
  w.h1 = j.at("h1").get<int>();
  w.h2 = j.at("h2").get<int>();
  w.h3 = j.at("h3").get<int>();
  if (w.d_lane != m.d_lane)
    throw DataError("weight file d_lane does not match manifest");
  w.enc1 = affine_from_json(j.at("enc1"));
  w.enc2 = affine_from_json(j.at("enc2"));
  w.head1 = affine_from_json(j.at("head1"));
  w.head2 = affine_from_json(j.at("head2"));
  w.default_token = j.at("default_token").get<std::vector<double>>();
  if (static_cast<int>(w.default_token.size()) != w.d_lane ||
      w.enc1.in != w.d_lane || w.enc1.out != w.h1 || w.enc2.in != w.h1 ||
      w.enc2.out != w.h2 || w.head1.in != w.h2 + w.d_img ||
      w.head1.out != w.h3 || w.head2.in != w.h3 || w.head2.out != 1)
    throw DataError("weight file: inconsistent tensor shapes");
  return w;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckResult gradient_check(uint64_t seed, int trials, bool corrupt) {
  GradCheckResult result;
  const double eps = 1e-5;
  // A draw whose ReLU pre-activation sits within this margin of zero is
  // rejected: the central difference would straddle the kink, where the
  // analytic subgradient and the secant slope legitimately disagree.
  const double kink_margin = 1e-3;
  auto min_abs_pre = [](const NetworkWeights& w,
                        const std::vector<BatchItem>& batch) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& item : batch) {
      ForwardTrace t = forward_trace(w, *item.sample, *item.embedding);
      for (const auto& lt : t.lanes) {
        for (double v : lt.pre1) m = std::min(m, std::abs(v));
        for (double v : lt.pre2) m = std::min(m, std::abs(v));
      }
      for (double v : t.pre3) m = std::min(m, std::abs(v));
    }
    return m;
  };

  for (int trial = 0; trial < trials; ++trial) {
    NetworkWeights w;
    std::vector<Sample> samples;
    std::vector<std::vector<double>> embeddings;
    std::vector<BatchItem> batch;
    for (uint64_t attempt = 0;; ++attempt) {
      Rng rng(Rng::derive(seed, static_cast<uint64_t>(trial) * 1009 + attempt));
      int d_lane = 4 + static_cast<int>(rng.int_range(0, 2));
      int d_img = 3 + static_cast<int>(rng.int_range(0, 2));
      TrainConfig cfg;
      cfg.h1 = 8;
      cfg.h2 = 6;
      cfg.h3 = 7;
      cfg.seed = rng.next_u64();
      w = init_weights(cfg, d_lane, d_img);
      // Randomize biases and the token too so every block is exercised.
      for (double* p : param_view(w)) *p += 0.05 * rng.normal();

      samples.assign(3, Sample{});
      embeddings.clear();
      batch.clear();
      for (int i = 0; i < 3; ++i) {
        samples[i].sample_id = "gc" + std::to_string(i);
        int n_lanes = i == 0 ? 0 : static_cast<int>(rng.int_range(1, 3));
        for (int k = 0; k < n_lanes; ++k) {
          Lane lane;
          lane.points = {{0.0, 0.0}, {1.0, 1.0}};
          lane.confidence = 0.5;
          lane.feature.resize(d_lane);
          for (double& v : lane.feature) v = rng.normal();
          samples[i].pred_lanes.push_back(std::move(lane));
        }
        std::vector<double> emb(d_img);
        for (double& v : emb) v = rng.normal();
        embeddings.push_back(std::move(emb));
      }
      for (int i = 0; i < 3; ++i)
        batch.push_back({&samples[i], &embeddings[i], rng.uniform()});
      if (min_abs_pre(w, batch) >= kink_margin || attempt >= 100) break;
    }

    double weight_decay = 1e-4;
    Gradients grads;
    loss_and_gradients(w, batch, weight_decay, grads);
    if (corrupt) grads.enc1.w[0] += 1e-2;

    auto params = param_view(w);
    auto gs = grad_view(grads);
    for (size_t i = 0; i < params.size(); ++i) {
      double orig = *params[i];
      *params[i] = orig + eps;
      Gradients scratch;
      double lp = loss_and_gradients(w, batch, weight_decay, scratch);
      *params[i] = orig - eps;
      double lm = loss_and_gradients(w, batch, weight_decay, scratch);
      *params[i] = orig;
      double numeric = (lp - lm) / (2.0 * eps);
      double analytic = *gs[i];
      double rel = std::abs(analytic - numeric) /
                   std::max(1e-6, std::abs(analytic) + std::abs(numeric));
      result.max_rel_error = std::max(result.max_rel_error, rel);
    }
  }
  result.pass = result.max_rel_error < 1e-4;
  return result;
}

}  // namespace laneperf
