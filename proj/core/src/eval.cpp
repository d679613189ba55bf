#include "skeladapt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace skeladapt {

using json = nlohmann::json;

double pck(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt, double alpha,
           std::vector<double>* per_keypoint) {
  if (pred.size() != gt.size() || pred.empty()) throw std::invalid_argument("pck: batch mismatch");
  if (alpha <= 0) throw std::invalid_argument("pck: alpha must be positive");
  const size_t k = gt[0].k();
  std::vector<double> hits(k, 0.0);
  size_t total = 0, correct = 0;
  for (size_t n = 0; n < pred.size(); ++n) {
    if (size_t(pred[n].k()) != k || size_t(gt[n].k()) != k)
      throw std::invalid_argument("pck: keypoint count mismatch");
    double lo_x = gt[n].pts[0].x, hi_x = lo_x, lo_y = gt[n].pts[0].y, hi_y = lo_y;
    for (const Vec2& p : gt[n].pts) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
    const double ref = std::max(hi_x - lo_x, hi_y - lo_y);
    const double thr = alpha * ref;
    const double thr2 = thr * thr;
    for (size_t j = 0; j < k; ++j) {
      const Vec2 d = pred[n].pts[j] - gt[n].pts[j];
      ++total;
      if (dot(d, d) <= thr2) {
        ++correct;
        hits[j] += 1.0;
      }
    }
  }
  if (per_keypoint) {
    per_keypoint->resize(k);
    for (size_t j = 0; j < k; ++j) (*per_keypoint)[j] = hits[j] / double(pred.size());
  }
  return double(correct) / double(total);
}

double mse(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt) {
  if (pred.size() != gt.size() || pred.empty()) throw std::invalid_argument("mse: batch mismatch");
  double acc = 0;
  size_t count = 0;
  for (size_t n = 0; n < pred.size(); ++n) {
    if (pred[n].k() != gt[n].k()) throw std::invalid_argument("mse: keypoint count mismatch");
    for (int j = 0; j < gt[n].k(); ++j) {
      const Vec2 d = pred[n].pts[j] - gt[n].pts[j];
      acc += d.x * d.x + d.y * d.y;
      count += 2;
    }
  }
  return acc / double(count);
}

double collapse_score(const std::vector<KeypointSet>& pred) {
  if (pred.size() < 2) throw std::invalid_argument("collapse_score: need a batch of >= 2");
  const int k = pred[0].k();
  const double n = double(pred.size());
  double acc = 0;
  for (int j = 0; j < k; ++j) {
    // deviations are taken from the first sample so a constant batch yields
    // exactly zero regardless of rounding in the mean
    const Vec2 o = pred[0].pts[j];
    double mx = 0, my = 0;
    for (const KeypointSet& s : pred) {
      if (s.k() != k) throw std::invalid_argument("collapse_score: keypoint count mismatch");
      mx += s.pts[j].x - o.x;
      my += s.pts[j].y - o.y;
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0;
    for (const KeypointSet& s : pred) {
      vx += (s.pts[j].x - o.x - mx) * (s.pts[j].x - o.x - mx);
      vy += (s.pts[j].y - o.y - my) * (s.pts[j].y - o.y - my);
    }
    acc += (vx + vy) / n;
  }
  return acc / double(k);
}

std::string EvalReport::to_json() const {
  json j{{"pck", pck},       {"mse", mse},          {"collapse", collapse},
         {"samples", samples}, {"alpha", alpha},    {"config_hash", config_hash},
         {"checkpoint_id", checkpoint_id}, {"per_keypoint_pck", per_keypoint_pck}};
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  json j = json::parse(text);
  EvalReport r;
  r.pck = j.at("pck").get<double>();
  r.mse = j.at("mse").get<double>();
  r.collapse = j.at("collapse").get<double>();
  r.samples = j.at("samples").get<int>();
  r.alpha = j.at("alpha").get<double>();
  r.config_hash = j.value("config_hash", uint64_t(0));
  r.checkpoint_id = j.value("checkpoint_id", std::string());
  if (j.contains("per_keypoint_pck")) r.per_keypoint_pck = j["per_keypoint_pck"].get<std::vector<double>>();
  return r;
}

EvalReport evaluate(KeypointNet<float>& net, SampleStore& data, const SoftArgmaxConfig& readout, double alpha,
                    int max_samples, int batch_size) {
  const size_t n = max_samples > 0 ? std::min<size_t>(max_samples, data.size()) : data.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty store");
  std::vector<KeypointSet> pred, gt;
  pred.reserve(n);
  gt.reserve(n);
  for (size_t at = 0; at < n; at += size_t(batch_size)) {
    std::vector<size_t> idx(std::min<size_t>(batch_size, n - at));
    std::iota(idx.begin(), idx.end(), at);
    Tensor x = data.batch_images(idx);
    TensorT<float> h = net.forward_heatmaps(x, data.domain(), nn::Mode::kEval);
    std::vector<KeypointSet> coords = soft_argmax(h, readout);
    for (size_t b = 0; b < idx.size(); ++b) {
      pred.push_back(std::move(coords[b]));
      gt.push_back(data.label(idx[b]));
    }
  }
  EvalReport r;
  r.alpha = alpha;
  r.samples = int(n);
  r.pck = pck(pred, gt, alpha, &r.per_keypoint_pck);
  r.mse = mse(pred, gt);
  r.collapse = pred.size() >= 2 ? collapse_score(pred) : 0.0;
  return r;
}

}  // namespace skeladapt
