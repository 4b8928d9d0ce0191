// Copyright 2026 The usqz Authors
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

#include "usqz/segmenter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "usqz/error.hpp"
#include "usqz/io.hpp"

namespace usqz::segment {
namespace {

constexpr std::string_view kModelMagic = "USQZ-MODEL";
constexpr int kModelVersion = 1;

int circular_median(std::span<const int> v, int t, int width) {
  const int n = static_cast<int>(v.size());
  const int half = width / 2;
  std::vector<int> w;
  w.reserve(width);
  for (int k = -half; k <= half; ++k) w.push_back(v[((t + k) % n + n) % n]);
  std::nth_element(w.begin(), w.begin() + half, w.end());
  return w[half];
}

// Majority vote over a depth window; background is left alone and does not
// vote. Ties keep the centre label if it is among the winners.
std::vector<ClassId> majority_filter(const std::vector<ClassId>& ray, int width) {
  const int n = static_cast<int>(ray.size());
  const int half = width / 2;
  std::vector<ClassId> out(ray);
  for (int r = 0; r < n; ++r) {
    if (ray[r] == kBackground) continue;
    std::array<int, kClassTable.size()> votes{};
    for (int k = std::max(0, r - half); k <= std::min(n - 1, r + half); ++k)
      if (ray[k] < votes.size()) ++votes[ray[k]];
    int best = ray[r] < votes.size() ? votes[ray[r]] : 0;
    ClassId winner = ray[r];
    for (std::size_t c = 0; c < votes.size(); ++c) {
      if (votes[c] > best) {
        best = votes[c];
        winner = static_cast<ClassId>(c);
      }
    }
    out[r] = winner;
  }
  return out;
}

struct StepFit {
  int lumen_end = 0;
  int media_end = 0;
};

// Nested three-segment fit minimising disagreements:
//   cost(a, b) = #[0,a) not lumen + #[a,b) not media + #[b,n) not external
// with background samples free everywhere. O(n) via a running minimum.
StepFit fit_steps(const std::vector<ClassId>& ray) {
  const int n = static_cast<int>(ray.size());
  std::vector<int> not_lumen(n + 1, 0), not_media(n + 1, 0), not_external(n + 1, 0);
  for (int r = 0; r < n; ++r) {
    const ClassId c = ray[r];
    const bool tissue = c != kBackground;
    not_lumen[r + 1] = not_lumen[r] + (tissue && c != kLumen);
    not_media[r + 1] = not_media[r] + (tissue && c != kMedia);
    not_external[r + 1] = not_external[r] + (tissue && c != kExternal);
  }
  const int total_not_external = not_external[n];

  StepFit best;
  int best_cost = std::numeric_limits<int>::max();
  int best_a = 0;
  int best_a_score = std::numeric_limits<int>::max();
  for (int b = 0; b <= n; ++b) {
    const int a_score = not_lumen[b] - not_media[b];
    if (a_score < best_a_score) {
      best_a_score = a_score;
      best_a = b;
    }
    const int cost = best_a_score + not_media[b] + total_not_external - not_external[b];
    if (cost < best_cost) {
      best_cost = cost;
      best = {best_a, b};
    }
  }
  return best;
}

// Same fit with real-valued per-sample costs, cost[k][r] for class k.
StepFit fit_steps(const std::array<std::vector<double>, 3>& cost) {
  const int n = static_cast<int>(cost[0].size());
  std::array<std::vector<double>, 3> cum;
  for (int k = 0; k < 3; ++k) {
    cum[k].assign(n + 1, 0.0);
    for (int r = 0; r < n; ++r) cum[k][r + 1] = cum[k][r] + cost[k][r];
  }
  StepFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  int best_a = 0;
  double best_a_score = std::numeric_limits<double>::infinity();
  for (int b = 0; b <= n; ++b) {
    const double a_score = cum[0][b] - cum[1][b];
    if (a_score < best_a_score) {
      best_a_score = a_score;
      best_a = b;
    }
    const double c = best_a_score + cum[1][b] + cum[2][n] - cum[2][b];
    if (c < best_cost) {
      best_cost = c;
      best = {best_a, b};
    }
  }
  return best;
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

double get_f64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | in[at + b];
  return std::bit_cast<double>(bits);
}

}  // namespace

void ClassifierModel::validate() const {
  if (window < 3 || window % 2 == 0) throw Error(ErrorCode::kBadModel, "window must be odd and >= 3");
  if (classes.empty()) throw Error(ErrorCode::kBadModel, "model has no classes");
  double prior_sum = 0.0;
  for (const auto& c : classes) {
    if (!(c.prior >= 0.0)) throw Error(ErrorCode::kBadModel, "negative prior");
    prior_sum += c.prior;
    for (std::size_t f = 0; f < c.variance.size(); ++f) {
      if (!(c.variance[f] > 0.0) || !std::isfinite(c.variance[f]) || !std::isfinite(c.mean[f]))
        throw Error(ErrorCode::kBadModel, "class " + c.name + " has invalid moments");
    }
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) throw Error(ErrorCode::kBadModel, "priors do not sum to 1");
  for (double o : boundary_offset)
    if (!std::isfinite(o) || std::abs(o) > 1000.0)
      throw Error(ErrorCode::kBadModel, "boundary offset out of range");
}

ClassifierModel train_classifier(std::span<const speckle::FeatureStack> stacks,
                                 std::span<const LabelMap> labels) {
  if (stacks.empty() || stacks.size() != labels.size())
    throw Error(ErrorCode::kInvalidArgument, "need one label map per feature stack");
  const int window = stacks.front().window;
  constexpr int kF = speckle::kNumFeatures;
  constexpr std::size_t kK = kClassTable.size();

  std::array<std::int64_t, kK> count{};
  std::array<FeatureVector, kK> sum{};
  FeatureVector pooled_sum{};
  std::int64_t pooled_count = 0;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const auto& st = stacks[i];
    const auto& lm = labels[i];
    if (st.window != window) throw Error(ErrorCode::kInvalidArgument, "feature windows differ");
    if (st.geometry.samples_per_line != lm.geometry.samples_per_line ||
        st.geometry.num_scan_lines != lm.geometry.num_scan_lines)
      throw Error(ErrorCode::kGeometryMismatch, "features and labels differ in size");
    for (int r = 0; r < lm.labels.rows(); ++r) {
      for (int t = 0; t < lm.labels.cols(); ++t) {
        const ClassId id = lm.labels(r, t);
        if (id >= kK) continue;
        const auto x = st.at(r, t);
        ++count[id];
        ++pooled_count;
        for (int f = 0; f < kF; ++f) {
          sum[id][f] += x[f];
          pooled_sum[f] += x[f];
        }
      }
    }
  }
  for (const auto& c : kClassTable)
    if (count[c.id] == 0)
      throw Error(ErrorCode::kMissingClass, "no training pixels for " + std::string(c.name));

  ClassifierModel model;
  model.window = window;
  model.classes.resize(kK);
  FeatureVector pooled_mean{};
  for (int f = 0; f < kF; ++f) pooled_mean[f] = pooled_sum[f] / static_cast<double>(pooled_count);
  for (std::size_t k = 0; k < kK; ++k) {
    model.classes[k].id = kClassTable[k].id;
    model.classes[k].name = std::string(kClassTable[k].name);
    model.classes[k].prior = static_cast<double>(count[k]) / static_cast<double>(pooled_count);
    for (int f = 0; f < kF; ++f) model.classes[k].mean[f] = sum[k][f] / static_cast<double>(count[k]);
  }

  std::array<FeatureVector, kK> dev{};
  FeatureVector pooled_dev{};
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const auto& st = stacks[i];
    const auto& lm = labels[i];
    for (int r = 0; r < lm.labels.rows(); ++r) {
      for (int t = 0; t < lm.labels.cols(); ++t) {
        const ClassId id = lm.labels(r, t);
        if (id >= kK) continue;
        const auto x = st.at(r, t);
        for (int f = 0; f < kF; ++f) {
          const double d = x[f] - model.classes[id].mean[f];
          dev[id][f] += d * d;
          const double p = x[f] - pooled_mean[f];
          pooled_dev[f] += p * p;
        }
      }
    }
  }
  for (std::size_t k = 0; k < kK; ++k) {
    for (int f = 0; f < kF; ++f) {
      const double scale = pooled_dev[f] / static_cast<double>(pooled_count);
      const double floor = std::max(kVarianceFloor * scale, std::numeric_limits<double>::min());
      model.classes[k].variance[f] = std::max(dev[k][f] / static_cast<double>(count[k]), floor);
    }
  }

  std::array<double, 2> offset_sum{};
  std::int64_t offset_count = 0;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    ContourSet truth, found;
    try {
      truth = extract_contours(labels[i]);
      ExtractOptions options;
      options.pooling_width = kPoolingWidth;
      found = extract_contours(classify(stacks[i], adapt_means(stacks[i], model, kAdaptIterations)),
                               options);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTopologyFailure) throw;
      continue;
    }
    for (int b = 0; b < 2; ++b)
      for (std::size_t t = 0; t < truth.boundaries[b].radii.size(); ++t)
        offset_sum[b] += truth.boundaries[b].radii[t] - found.boundaries[b].radii[t];
    offset_count += static_cast<std::int64_t>(truth.boundaries[0].radii.size());
  }
  if (offset_count > 0)
    for (int b = 0; b < 2; ++b) model.boundary_offset[b] = offset_sum[b] / static_cast<double>(offset_count);
  return model;
}

LabelMap PosteriorMap::argmax() const {
  LabelMap out(geometry, kBackground);
  for (int r = 0; r < geometry.samples_per_line; ++r) {
    for (int t = 0; t < geometry.num_scan_lines; ++t) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < posteriors.size(); ++k)
        if (posteriors[k](r, t) > posteriors[best](r, t)) best = k;
      out.labels(r, t) = class_ids[best];
    }
  }
  return out;
}

PosteriorMap classify(const speckle::FeatureStack& stack, const ClassifierModel& model) {
  model.validate();
  if (stack.window != model.window)
    throw Error(ErrorCode::kInvalidArgument, "feature window " + std::to_string(stack.window) +
                                                 " differs from model window " +
                                                 std::to_string(model.window));
  const ProbeGeometry& g = stack.geometry;
  const std::size_t kK = model.classes.size();

  PosteriorMap out;
  out.geometry = g;
  std::vector<double> log_norm(kK);
  for (std::size_t k = 0; k < kK; ++k) {
    const auto& c = model.classes[k];
    out.class_ids.push_back(c.id);
    out.posteriors.emplace_back(g.samples_per_line, g.num_scan_lines, 0.0);
    double v = c.prior > 0.0 ? std::log(c.prior) : -std::numeric_limits<double>::infinity();
    for (double var : c.variance) v -= 0.5 * std::log(2.0 * std::numbers::pi * var);
    log_norm[k] = v;
  }

  std::vector<double> lp(kK);
  for (int r = 0; r < g.samples_per_line; ++r) {
    for (int t = 0; t < g.num_scan_lines; ++t) {
      const auto x = stack.at(r, t);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < kK; ++k) {
        const auto& c = model.classes[k];
        double v = log_norm[k];
        for (std::size_t f = 0; f < x.size(); ++f) {
          const double d = x[f] - c.mean[f];
          v -= 0.5 * d * d / c.variance[f];
        }
        lp[k] = v;
        peak = std::max(peak, v);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < kK; ++k) {
        lp[k] = std::exp(lp[k] - peak);
        z += lp[k];
      }
      for (std::size_t k = 0; k < kK; ++k) out.posteriors[k](r, t) = lp[k] / z;
    }
  }
  return out;
}

LabelMap segment_frame(const PolarFrame& frame, const ClassifierModel& model) {
  return classify(speckle::feature_map(frame, model.window, model.dynamic_range_db), model).argmax();
}

namespace {

void check_options(const ExtractOptions& options) {
  if (options.majority_width < 1 || options.majority_width % 2 == 0 || options.median_width < 1 ||
      options.median_width % 2 == 0 || options.pooling_width < 1 || options.pooling_width % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "filter widths must be odd and positive");
}

// Shared tail of both extractors: smoothing across scan lines, the topology
// check against the filtered rays, offsets and encodability.
ContourSet finish_contours(const std::vector<std::vector<ClassId>>& rays,
                           const std::vector<int>& lumen_end, const std::vector<int>& media_end,
                           const ExtractOptions& options, int nr) {
  const int nt = static_cast<int>(rays.size());
  std::vector<int> lumen(nt), media(nt);
  for (int t = 0; t < nt; ++t) {
    lumen[t] = circular_median(lumen_end, t, options.median_width);
    media[t] = circular_median(media_end, t, options.median_width);
  }

  for (int t = 0; t < nt; ++t) {
    int lumen_votes = 0;
    int tissue = 0;
    for (int r = 0; r < lumen[t]; ++r) {
      if (rays[t][r] == kBackground) continue;
      ++tissue;
      lumen_votes += rays[t][r] == kLumen;
    }
    if (lumen[t] == 0 || lumen_votes == 0 || 2 * lumen_votes <= tissue)
      throw Error(ErrorCode::kTopologyFailure,
                  "scan line " + std::to_string(t) + " has no lumen run");
  }

  for (int t = 0; t < nt; ++t) {
    lumen[t] = std::clamp(lumen[t] + options.boundary_offset[0], 1, nr - 1);
    media[t] = std::clamp(media[t] + options.boundary_offset[1], lumen[t], nr - 1);
  }

  ContourSet out;
  const std::vector<int> lumen_fit = make_encodable(lumen, {}, nr - 1);
  const std::vector<int> media_fit = make_encodable(media, lumen_fit, nr - 1);
  out.boundaries.push_back({kLumen, lumen_fit});
  out.boundaries.push_back({kMedia, media_fit});
  return out;
}

}  // namespace

ContourSet extract_contours(const LabelMap& labels, const ExtractOptions& options) {
  const ProbeGeometry& g = labels.geometry;
  g.validate();
  check_options(options);
  const int nr = g.samples_per_line;
  const int nt = g.num_scan_lines;

  std::vector<std::vector<ClassId>> rays(nt);
  std::vector<int> lumen_end(nt), media_end(nt);
  for (int t = 0; t < nt; ++t) {
    std::vector<ClassId> ray(nr);
    for (int r = 0; r < nr; ++r) ray[r] = labels.labels(r, t);
    rays[t] = majority_filter(ray, options.majority_width);
    const StepFit fit = fit_steps(rays[t]);
    lumen_end[t] = fit.lumen_end;
    media_end[t] = fit.media_end;
  }
  return finish_contours(rays, lumen_end, media_end, options, nr);
}

ContourSet extract_contours(const PosteriorMap& posteriors, const ExtractOptions& options) {
  const ProbeGeometry& g = posteriors.geometry;
  g.validate();
  check_options(options);
  std::array<const Array2D<double>*, 3> p{};
  for (std::size_t k = 0; k < posteriors.class_ids.size(); ++k)
    if (posteriors.class_ids[k] < p.size()) p[posteriors.class_ids[k]] = &posteriors.posteriors[k];
  for (const auto* q : p)
    if (q == nullptr) throw Error(ErrorCode::kMissingClass, "posterior map lacks a tissue class");

  const int nr = g.samples_per_line;
  const int nt = g.num_scan_lines;
  const LabelMap hard = posteriors.argmax();
  constexpr double kFloor = 1e-12;
  // cost[k](r, t) = -log p_k at (r, t), then pooled over neighbouring lines.
  std::array<Array2D<double>, 3> cost;
  for (int k = 0; k < 3; ++k) {
    cost[k] = Array2D<double>(nr, nt, 0.0);
    for (int r = 0; r < nr; ++r)
      for (int t = 0; t < nt; ++t) cost[k](r, t) = -std::log(std::max((*p[k])(r, t), kFloor));
  }
  const int half = options.pooling_width / 2;
  std::vector<std::vector<ClassId>> rays(nt);
  std::vector<int> lumen_end(nt), media_end(nt);
  std::array<std::vector<double>, 3> pooled;
  for (auto& c : pooled) c.resize(nr);
  for (int t = 0; t < nt; ++t) {
    std::vector<ClassId> ray(nr);
    for (int r = 0; r < nr; ++r) ray[r] = hard.labels(r, t);
    for (int k = 0; k < 3; ++k) {
      for (int r = 0; r < nr; ++r) {
        double v = 0.0;
        for (int d = -half; d <= half; ++d) v += cost[k](r, ((t + d) % nt + nt) % nt);
        pooled[k][r] = v;
      }
    }
    rays[t] = majority_filter(ray, options.majority_width);
    const StepFit fit = fit_steps(pooled);
    lumen_end[t] = fit.lumen_end;
    media_end[t] = fit.media_end;
  }
  return finish_contours(rays, lumen_end, media_end, options, nr);
}

ClassifierModel adapt_means(const speckle::FeatureStack& stack, const ClassifierModel& model,
                            int iterations) {
  ClassifierModel out = model;
  const std::size_t kK = model.classes.size();
  for (int it = 0; it < iterations; ++it) {
    const PosteriorMap post = classify(stack, out);
    std::vector<double> weight(kK, 0.0);
    std::vector<FeatureVector> sum(kK, FeatureVector{});
    for (int r = 0; r < stack.geometry.samples_per_line; ++r) {
      for (int t = 0; t < stack.geometry.num_scan_lines; ++t) {
        const auto x = stack.at(r, t);
        for (std::size_t k = 0; k < kK; ++k) {
          const double w = post.posteriors[k](r, t);
          weight[k] += w;
          for (std::size_t f = 0; f < x.size(); ++f) sum[k][f] += w * x[f];
        }
      }
    }
    for (std::size_t k = 0; k < kK; ++k) {
      if (!(weight[k] > 0.0)) continue;
      for (std::size_t f = 0; f < sum[k].size(); ++f) out.classes[k].mean[f] = sum[k][f] / weight[k];
    }
  }
  return out;
}

ContourSet frame_contours(const PolarFrame& frame, const ClassifierModel& model) {
  ExtractOptions options;
  options.pooling_width = kPoolingWidth;
  for (int b = 0; b < 2; ++b)
    options.boundary_offset[b] = static_cast<int>(std::lround(model.boundary_offset[b]));
  const auto stack = speckle::feature_map(frame, model.window, model.dynamic_range_db);
  return extract_contours(classify(stack, adapt_means(stack, model, kAdaptIterations)), options);
}

std::vector<std::uint8_t> serialize_model(const ClassifierModel& model) {
  model.validate();
  std::ostringstream head;
  head << kModelMagic << " " << kModelVersion << "\n";
  head << "window " << model.window << "\n";
  head.precision(17);
  head << "dynamic_range_db " << model.dynamic_range_db << "\n";
  head << "features " << speckle::kNumFeatures;
  for (auto n : speckle::kFeatureNames) head << " " << n;
  head << "\n";
  head << "boundary_offset " << model.boundary_offset[0] << " " << model.boundary_offset[1] << "\n";
  head << "classes " << model.classes.size() << "\n";
  for (const auto& c : model.classes) head << "class " << int(c.id) << " " << c.name << "\n";
  head << "data float64-le prior mean[" << speckle::kNumFeatures << "] variance["
       << speckle::kNumFeatures << "]\n";
  head << "end\n";

  const std::string text = head.str();
  std::vector<std::uint8_t> out(text.begin(), text.end());
  for (const auto& c : model.classes) {
    put_f64(out, c.prior);
    for (double v : c.mean) put_f64(out, v);
    for (double v : c.variance) put_f64(out, v);
  }
  return out;
}

ClassifierModel deserialize_model(std::span<const std::uint8_t> bytes) {
  const std::string_view all(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto end = all.find("\nend\n");
  if (end == std::string_view::npos) throw Error(ErrorCode::kBadModel, "missing header terminator");
  std::istringstream head{std::string(all.substr(0, end + 1))};
  const std::size_t data_at = end + 5;

  auto expect = [&](const std::string& want) {
    std::string got;
    if (!(head >> got) || got != want)
      throw Error(ErrorCode::kBadModel, "expected '" + want + "', found '" + got + "'");
  };
  ClassifierModel model;
  int version = 0;
  expect(std::string(kModelMagic));
  if (!(head >> version) || version != kModelVersion)
    throw Error(ErrorCode::kBadModel, "unsupported model version");
  expect("window");
  head >> model.window;
  expect("dynamic_range_db");
  head >> model.dynamic_range_db;
  expect("features");
  int nf = 0;
  head >> nf;
  if (nf != speckle::kNumFeatures) throw Error(ErrorCode::kBadModel, "feature count mismatch");
  for (auto n : speckle::kFeatureNames) expect(std::string(n));
  expect("boundary_offset");
  head >> model.boundary_offset[0] >> model.boundary_offset[1];
  expect("classes");
  std::size_t nk = 0;
  head >> nk;
  if (!head || nk == 0 || nk > 255) throw Error(ErrorCode::kBadModel, "bad class count");
  model.classes.resize(nk);
  for (auto& c : model.classes) {
    expect("class");
    int id = -1;
    head >> id >> c.name;
    if (!head || id < 0 || id > 254) throw Error(ErrorCode::kBadModel, "bad class entry");
    c.id = static_cast<ClassId>(id);
  }

  const std::size_t per_class = 1 + 2 * speckle::kNumFeatures;
  if (bytes.size() != data_at + nk * per_class * 8)
    throw Error(ErrorCode::kBadModel, "model data has wrong length");
  std::size_t at = data_at;
  for (auto& c : model.classes) {
    c.prior = get_f64(bytes, at);
    at += 8;
    for (double& v : c.mean) { v = get_f64(bytes, at); at += 8; }
    for (double& v : c.variance) { v = get_f64(bytes, at); at += 8; }
  }
  model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const ClassifierModel& model) {
  io::write_bytes(path, serialize_model(model));
}

ClassifierModel load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_bytes(path));
}

}  // namespace usqz::segment
