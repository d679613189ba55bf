#include "skeladapt/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace skeladapt {

using json = nlohmann::json;

SkeletonTopology stick_figure_topology() {
  SkeletonTopology t;
  t.name = "stick12";
  t.k = kStickJointCount;
  t.edges = {{kHead, kNeck},       {kNeck, kChest},      {kChest, kPelvis},     {kNeck, kLeftElbow},
             {kLeftElbow, kLeftWrist},  {kNeck, kRightElbow}, {kRightElbow, kRightWrist},
             {kPelvis, kLeftKnee}, {kLeftKnee, kLeftAnkle},   {kPelvis, kRightKnee}, {kRightKnee, kRightAnkle}};
  return t;
}

DomainShiftConfig default_shift_config() {
  DomainShiftConfig cfg;
  cfg.name = "default-shift";
  cfg.source.pose.torso_lean = 0.10;
  cfg.source.pose.arm_base = 0.45;
  cfg.source.pose.arm_range = 0.25;
  cfg.source.pose.elbow_range = 0.35;
  cfg.source.pose.leg_base = 0.18;
  cfg.source.pose.leg_range = 0.12;
  cfg.source.pose.knee_range = 0.25;
  cfg.source.texture.background_base = 0.85;
  cfg.source.texture.background_amp = 0.06;
  cfg.source.texture.noise_std = 0.015;
  cfg.source.texture.figure_intensity = 0.08;
  cfg.target.pose.torso_lean = 0.30;
  cfg.target.pose.arm_base = 0.90;
  cfg.target.pose.arm_range = 0.60;
  cfg.target.pose.elbow_range = 0.80;
  cfg.target.pose.leg_base = 0.30;
  cfg.target.pose.leg_range = 0.30;
  cfg.target.pose.knee_range = 0.50;
  cfg.target.texture.background_base = 0.18;
  cfg.target.texture.background_amp = 0.10;
  cfg.target.texture.noise_std = 0.06;
  cfg.target.texture.figure_intensity = 0.92;
  return cfg;
}

// ---------------------------------------------------------------------------
// Config (de)serialization.

namespace {

json pose_to_json(const PoseConfig& p) {
  return json{{"torso_len", p.torso_len},   {"head_len", p.head_len},       {"upper_arm", p.upper_arm},
              {"fore_arm", p.fore_arm},     {"thigh", p.thigh},             {"shin", p.shin},
              {"torso_lean", p.torso_lean}, {"arm_base", p.arm_base},       {"arm_range", p.arm_range},
              {"elbow_range", p.elbow_range}, {"leg_base", p.leg_base},     {"leg_range", p.leg_range},
              {"knee_range", p.knee_range}, {"scale_min", p.scale_min},     {"scale_max", p.scale_max},
              {"center_jitter", p.center_jitter}};
}

PoseConfig pose_from_json(const json& j) {
  PoseConfig p;
  p.torso_len = j.value("torso_len", p.torso_len);
  p.head_len = j.value("head_len", p.head_len);
  p.upper_arm = j.value("upper_arm", p.upper_arm);
  p.fore_arm = j.value("fore_arm", p.fore_arm);
  p.thigh = j.value("thigh", p.thigh);
  p.shin = j.value("shin", p.shin);
  p.torso_lean = j.value("torso_lean", p.torso_lean);
  p.arm_base = j.value("arm_base", p.arm_base);
  p.arm_range = j.value("arm_range", p.arm_range);
  p.elbow_range = j.value("elbow_range", p.elbow_range);
  p.leg_base = j.value("leg_base", p.leg_base);
  p.leg_range = j.value("leg_range", p.leg_range);
  p.knee_range = j.value("knee_range", p.knee_range);
  p.scale_min = j.value("scale_min", p.scale_min);
  p.scale_max = j.value("scale_max", p.scale_max);
  p.center_jitter = j.value("center_jitter", p.center_jitter);
  return p;
}

json tex_to_json(const TextureConfig& t) {
  return json{{"background_base", t.background_base}, {"background_amp", t.background_amp},
              {"noise_std", t.noise_std},             {"figure_intensity", t.figure_intensity},
              {"limb_halfwidth", t.limb_halfwidth},   {"head_radius", t.head_radius},
              {"edge_softness", t.edge_softness}};
}

TextureConfig tex_from_json(const json& j) {
  TextureConfig t;
  t.background_base = j.value("background_base", t.background_base);
  t.background_amp = j.value("background_amp", t.background_amp);
  t.noise_std = j.value("noise_std", t.noise_std);
  t.figure_intensity = j.value("figure_intensity", t.figure_intensity);
  t.limb_halfwidth = j.value("limb_halfwidth", t.limb_halfwidth);
  t.head_radius = j.value("head_radius", t.head_radius);
  t.edge_softness = j.value("edge_softness", t.edge_softness);
  return t;
}

}  // namespace

std::string shift_config_to_json(const DomainShiftConfig& cfg) {
  json j{{"name", cfg.name},
         {"source", {{"pose", pose_to_json(cfg.source.pose)}, {"texture", tex_to_json(cfg.source.texture)}}},
         {"target", {{"pose", pose_to_json(cfg.target.pose)}, {"texture", tex_to_json(cfg.target.texture)}}}};
  return j.dump(2);
}

DomainShiftConfig shift_config_from_json(const std::string& text) {
  json j = json::parse(text);
  DomainShiftConfig cfg;
  cfg.name = j.value("name", cfg.name);
  if (j.contains("source")) {
    cfg.source.pose = pose_from_json(j["source"].value("pose", json::object()));
    cfg.source.texture = tex_from_json(j["source"].value("texture", json::object()));
  }
  if (j.contains("target")) {
    cfg.target.pose = pose_from_json(j["target"].value("pose", json::object()));
    cfg.target.texture = tex_from_json(j["target"].value("texture", json::object()));
  }
  return cfg;
}

DomainShiftConfig load_shift_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open shift config: " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return shift_config_from_json(text);
}

// ---------------------------------------------------------------------------
// Figure synthesis.

namespace {

Vec2 polar_down(double angle, double len) { return {std::sin(angle) * len, std::cos(angle) * len}; }

KeypointSet pose_from_rng(const PoseConfig& p, std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double scale = uni(p.scale_min, p.scale_max);
  const Vec2 center{uni(-p.center_jitter, p.center_jitter), uni(-p.center_jitter, p.center_jitter)};
  const double lean = uni(-p.torso_lean, p.torso_lean);

  KeypointSet y;
  y.pts.resize(kStickJointCount);
  const Vec2 pelvis = center + Vec2{0.0, 0.10};
  const Vec2 up = -1.0 * polar_down(lean, 1.0);  // spine direction
  const Vec2 neck = pelvis + (p.torso_len * scale) * up;
  y.pts[kPelvis] = pelvis;
  y.pts[kNeck] = neck;
  y.pts[kChest] = pelvis + 0.55 * (neck - pelvis);
  y.pts[kHead] = neck + (p.head_len * scale) * up;

  const struct { int elbow, wrist; double side; } arms[2] = {{kLeftElbow, kLeftWrist, -1.0},
                                                             {kRightElbow, kRightWrist, +1.0}};
  for (const auto& a : arms) {
    const double upper = a.side * (p.arm_base + uni(-p.arm_range, p.arm_range));
    const double lower = upper + uni(-p.elbow_range, p.elbow_range);
    y.pts[a.elbow] = neck + polar_down(upper, p.upper_arm * scale);
    y.pts[a.wrist] = y.pts[a.elbow] + polar_down(lower, p.fore_arm * scale);
  }
  const struct { int knee, ankle; double side; } legs[2] = {{kLeftKnee, kLeftAnkle, -1.0},
                                                            {kRightKnee, kRightAnkle, +1.0}};
  for (const auto& l : legs) {
    const double hip = l.side * (p.leg_base + uni(-p.leg_range, p.leg_range));
    const double lower = hip + uni(-p.knee_range, p.knee_range);
    y.pts[l.knee] = pelvis + polar_down(hip, p.thigh * scale);
    y.pts[l.ankle] = y.pts[l.knee] + polar_down(lower, p.shin * scale);
  }
  return y;
}

uint64_t domain_salt(DomainTag d) { return d == DomainTag::kSource ? 0x5eed50u : 0x5eed7au; }

Tensor rasterize_figure(const KeypointSet& y, const SkeletonTopology& topo, const TextureConfig& tex,
                        std::mt19937_64& rng) {
  const int r = kInputResolution;
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);
  // low-frequency background pattern parameters
  const double f1 = uni(2.0, 6.0), f2 = uni(2.0, 6.0), f3 = uni(1.5, 4.0);
  const double p1 = uni(0.0, 6.28), p2 = uni(0.0, 6.28), p3 = uni(0.0, 6.28);

  Tensor img(1, 1, r, r);
  float* dst = img.data();
  for (int py = 0; py < r; ++py)
    for (int px = 0; px < r; ++px) {
      const Vec2 u = normalize_coord({double(px), double(py)}, r, r);
      double d = std::numeric_limits<double>::max();
      for (const auto& [i, j] : topo.edges) d = std::min(d, point_segment_distance(u, y.pts[i], y.pts[j]));
      const double alpha_limb = std::clamp((tex.limb_halfwidth - d) / tex.edge_softness + 0.5, 0.0, 1.0);
      const double dh = norm(u - y.pts[kHead]);
      const double alpha_head = std::clamp((tex.head_radius - dh) / tex.edge_softness + 0.5, 0.0, 1.0);
      const double alpha = std::max(alpha_limb, alpha_head);
      const double pattern = std::sin(f1 * u.x + p1) * std::sin(f2 * u.y + p2) + 0.5 * std::sin(f3 * (u.x + u.y) + p3);
      const double bg = tex.background_base + tex.background_amp * pattern + tex.noise_std * gauss(rng);
      const double v = std::clamp((1.0 - alpha) * bg + alpha * tex.figure_intensity, 0.0, 1.0);
      dst[py * r + px] = float(std::lround(v * 255.0)) / 255.0f;
    }
  return img;
}

}  // namespace

KeypointSet generate_pose(uint64_t seed, const DomainShiftConfig& cfg, DomainTag domain) {
  std::mt19937_64 rng(mix_seed(seed, domain_salt(domain)));
  return pose_from_rng(cfg.profile(domain).pose, rng);
}

FigureSample generate_figure(uint64_t seed, const DomainShiftConfig& cfg, DomainTag domain) {
  std::mt19937_64 rng(mix_seed(seed, domain_salt(domain)));
  const DomainProfile& prof = cfg.profile(domain);
  FigureSample s;
  s.domain = domain;
  s.keypoints = pose_from_rng(prof.pose, rng);
  s.image = rasterize_figure(s.keypoints, stick_figure_topology(), prof.texture, rng);
  return s;
}

// ---------------------------------------------------------------------------
// Dataset files.

namespace {

cv::Mat tensor_to_u8(const Tensor& img) {
  cv::Mat m(img.h(), img.w(), CV_8UC1);
  const float* src = img.data();
  for (int y = 0; y < img.h(); ++y)
    for (int x = 0; x < img.w(); ++x)
      m.at<uint8_t>(y, x) = uint8_t(std::clamp(std::lround(double(src[y * img.w() + x]) * 255.0), 0l, 255l));
  return m;
}

Tensor u8_to_tensor(const cv::Mat& m) {
  Tensor img(1, 1, m.rows, m.cols);
  float* dst = img.data();
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) dst[y * m.cols + x] = float(m.at<uint8_t>(y, x)) / 255.0f;
  return img;
}

json topology_to_json(const SkeletonTopology& topo) {
  json edges = json::array();
  for (const auto& [i, j] : topo.edges) edges.push_back(json::array({i, j}));
  return json{{"name", topo.name}, {"k", topo.k}, {"edges", edges}};
}

SkeletonTopology topology_from_json(const json& j) {
  SkeletonTopology t;
  t.name = j.at("name").get<std::string>();
  t.k = j.at("k").get<int>();
  for (const auto& e : j.at("edges")) t.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return t;
}

struct CropBox {
  double x0, y0, side;
};

/// Keypoint extent grown 20% per side, square-padded around its center.
CropBox loose_crop(const KeypointSet& kps_px, int img_w, int img_h) {
  double lo_x = kps_px.pts[0].x, hi_x = lo_x, lo_y = kps_px.pts[0].y, hi_y = lo_y;
  for (const Vec2& p : kps_px.pts) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const double w = hi_x - lo_x, h = hi_y - lo_y;
  const double side = std::max(w, h) * 1.4;  // 20% margin per side on the long axis
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  CropBox box{cx - side / 2, cy - side / 2, side};
  (void)img_w;
  (void)img_h;
  return box;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<FigureSample>& samples,
                   const SkeletonTopology& topo) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "imgs");
  std::ofstream ann(dir / "annotations.jsonl");
  if (!ann) throw std::runtime_error("cannot write " + (dir / "annotations.jsonl").string());
  for (size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "imgs/%06zu.png", i);
    const Tensor& img = samples[i].image;
    if (!cv::imwrite((dir / name).string(), tensor_to_u8(img)))
      throw std::runtime_error("cannot write image " + (dir / name).string());
    json rec;
    rec["image"] = name;
    rec["k"] = int(samples[i].keypoints.k());
    json kp = json::array();
    for (const Vec2& p : samples[i].keypoints.pts) {
      const Vec2 px = denormalize_coord(p, img.w(), img.h());
      kp.push_back(json::array({px.x, px.y}));
    }
    rec["keypoints"] = kp;
    rec["topology"] = topo.name;
    ann << rec.dump() << "\n";
  }
  const DomainTag d = samples.empty() ? DomainTag::kSource : samples.front().domain;
  json manifest{{"topology", topology_to_json(topo)},
                {"domain", to_string(d)},
                {"count", samples.size()},
                {"image_dir", "imgs"}};
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

namespace {

struct RawRecord {
  std::string image_rel;
  KeypointSet kps_px;
};

std::pair<std::vector<RawRecord>, SkeletonTopology> read_annotation_files(const std::filesystem::path& dir,
                                                                          DomainTag* domain_out) {
  namespace fs = std::filesystem;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("missing manifest: " + (dir / "manifest.json").string());
  json manifest = json::parse(mf);
  SkeletonTopology topo = topology_from_json(manifest.at("topology"));
  const TopologyReport rep = validate_topology(topo);
  if (!rep.ok) throw std::runtime_error("invalid topology in manifest: " + rep.violations.front());
  if (domain_out && manifest.contains("domain"))
    *domain_out = manifest["domain"] == "target" ? DomainTag::kTarget : DomainTag::kSource;

  std::vector<RawRecord> out;
  std::ifstream ann(dir / "annotations.jsonl");
  if (!ann) throw std::runtime_error("missing annotations: " + (dir / "annotations.jsonl").string());
  std::string line;
  int lineno = 0;
  while (std::getline(ann, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("annotations.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    RawRecord raw;
    try {
      raw.image_rel = rec.at("image").get<std::string>();
      const int k = rec.at("k").get<int>();
      if (k != topo.k)
        throw std::runtime_error("k=" + std::to_string(k) + " does not match topology " + topo.name + " (k=" +
                                 std::to_string(topo.k) + ")");
      if (rec.at("topology").get<std::string>() != topo.name) throw std::runtime_error("topology name mismatch");
      for (const auto& p : rec.at("keypoints")) raw.kps_px.pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      if (int(raw.kps_px.k()) != k) throw std::runtime_error("keypoint list length differs from k");
    } catch (const json::exception& e) {
      throw std::runtime_error("annotations.jsonl line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("annotations.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(raw));
  }
  return {std::move(out), std::move(topo)};
}

Tensor crop_and_resize(const cv::Mat& m, const CropBox& box, int out_res) {
  cv::Mat patch(int(std::lround(box.side)), int(std::lround(box.side)), CV_8UC1, cv::Scalar(0));
  // clip against the image; areas outside read as black padding
  const int sx = int(std::lround(box.x0)), sy = int(std::lround(box.y0)), side = patch.cols;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const int ix = sx + x, iy = sy + y;
      if (ix >= 0 && ix < m.cols && iy >= 0 && iy < m.rows) patch.at<uint8_t>(y, x) = m.at<uint8_t>(iy, ix);
    }
  cv::Mat resized;
  cv::resize(patch, resized, cv::Size(out_res, out_res), 0, 0, cv::INTER_LINEAR);
  return u8_to_tensor(resized);
}

KeypointSet crop_keypoints(const KeypointSet& kps_px, const CropBox& box, int out_res) {
  // integer-snapped origin and pixel-center mapping, matching
  // crop_and_resize's pixel copy followed by INTER_LINEAR resize
  const double sx = std::lround(box.x0), sy = std::lround(box.y0);
  const double side = std::lround(box.side);
  KeypointSet out;
  for (const Vec2& p : kps_px.pts) {
    const double cx = (p.x - sx + 0.5) * (out_res / side) - 0.5;
    const double cy = (p.y - sy + 0.5) * (out_res / side) - 0.5;
    out.pts.push_back(normalize_coord({cx, cy}, out_res, out_res));
  }
  return out;
}

}  // namespace

std::vector<LoadedSample> load_annotations(const std::filesystem::path& dir, SkeletonTopology* topo_out) {
  DomainTag domain = DomainTag::kSource;
  auto [records, topo] = read_annotation_files(dir, &domain);
  if (topo_out) *topo_out = topo;
  std::vector<LoadedSample> out;
  for (const RawRecord& raw : records) {
    const auto img_path = dir / raw.image_rel;
    cv::Mat m = cv::imread(img_path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw std::runtime_error("missing or unreadable image: " + img_path.string());
    const CropBox box = loose_crop(raw.kps_px, m.cols, m.rows);
    LoadedSample s;
    s.image = crop_and_resize(m, box, kInputResolution);
    s.keypoints = crop_keypoints(raw.kps_px, box, kInputResolution);
    s.domain = domain;
    s.image_path = img_path.string();
    s.crop_x0 = std::lround(box.x0);
    s.crop_y0 = std::lround(box.y0);
    s.crop_side = std::lround(box.side);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SampleStore.

SampleStore SampleStore::synthetic(const DomainShiftConfig& cfg, DomainTag domain, int n, uint64_t seed) {
  SampleStore st;
  st.domain_ = domain;
  st.topo_ = stick_figure_topology();
  st.resolution_ = kInputResolution;
  double mean_acc = 0;
  for (int i = 0; i < n; ++i) {
    FigureSample s = generate_figure(mix_seed(seed, uint64_t(i)), cfg, domain);
    st.labels_.push_back(s.keypoints);
    std::vector<uint8_t> buf(size_t(s.image.h()) * s.image.w());
    const float* src = s.image.data();
    double m = 0;
    for (size_t j = 0; j < buf.size(); ++j) {
      buf[j] = uint8_t(std::clamp(std::lround(double(src[j]) * 255.0), 0l, 255l));
      m += src[j];
    }
    mean_acc += m / double(buf.size());
    st.pixels_.push_back(std::move(buf));
  }
  st.background_mean_ = n > 0 ? mean_acc / n : 0.5;
  return st;
}

SampleStore SampleStore::from_dataset_dir(const std::filesystem::path& dir, DomainTag domain) {
  SampleStore st;
  st.domain_ = domain;
  DomainTag manifest_domain = domain;
  auto [records, topo] = read_annotation_files(dir, &manifest_domain);
  st.domain_ = manifest_domain;
  st.topo_ = topo;
  st.resolution_ = kInputResolution;
  double mean_acc = 0;
  int mean_n = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    const CropBox box = loose_crop(records[i].kps_px, 0, 0);
    st.labels_.push_back(crop_keypoints(records[i].kps_px, box, kInputResolution));
    st.image_files_.push_back(dir / records[i].image_rel);
    st.crops_.push_back({double(std::lround(box.x0)), double(std::lround(box.y0)), double(std::lround(box.side))});
    // A small subsample estimates the fill level without counting as
    // training-time image access (counter starts after construction).
    if (i % std::max<size_t>(1, records.size() / 16) == 0) {
      cv::Mat m = cv::imread(st.image_files_.back().string(), cv::IMREAD_GRAYSCALE);
      if (m.empty()) throw std::runtime_error("missing or unreadable image: " + st.image_files_.back().string());
      mean_acc += cv::mean(m)[0] / 255.0;
      ++mean_n;
    }
  }
  st.background_mean_ = mean_n > 0 ? mean_acc / mean_n : 0.5;
  return st;
}

Tensor SampleStore::image(size_t i) {
  if (i >= size()) throw std::out_of_range("SampleStore::image index");
  ++image_reads_;
  if (!pixels_.empty()) {
    Tensor img(1, 1, resolution_, resolution_);
    float* dst = img.data();
    const std::vector<uint8_t>& buf = pixels_[i];
    for (size_t j = 0; j < buf.size(); ++j) dst[j] = float(buf[j]) / 255.0f;
    return img;
  }
  cv::Mat m = cv::imread(image_files_[i].string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw std::runtime_error("missing or unreadable image: " + image_files_[i].string());
  const CropBox box{crops_[i][0], crops_[i][1], crops_[i][2]};
  return crop_and_resize(m, box, resolution_);
}

Tensor SampleStore::batch_images(const std::vector<size_t>& idx) {
  if (idx.empty()) throw std::invalid_argument("batch_images: empty index list");
  Tensor out(int(idx.size()), 1, resolution_, resolution_);
  for (size_t b = 0; b < idx.size(); ++b) {
    Tensor one = image(idx[b]);
    std::copy(one.data(), one.data() + one.size(), out.plane(int(b), 0));
  }
  return out;
}

std::vector<KeypointSet> SampleStore::batch_labels(const std::vector<size_t>& idx) const {
  std::vector<KeypointSet> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(label(i));
  return out;
}

// ---------------------------------------------------------------------------
// Priors.

PriorSet build_prior_synthetic(const DomainShiftConfig& cfg, DomainTag domain, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("build_prior_synthetic: need n >= 1");
  PriorSet ps;
  ps.topo = stick_figure_topology();
  ps.provenance = "synthetic(" + cfg.name + "," + to_string(domain) + ",n=" + std::to_string(n) + ")";
  for (int i = 0; i < n; ++i) {
    PriorElement e;
    e.keypoints = generate_pose(mix_seed(seed, uint64_t(i)), cfg, domain);
    ps.items.push_back(std::move(e));
  }
  return ps;
}

PriorSet build_prior_from_annotations(const std::filesystem::path& dir) {
  auto [records, topo] = read_annotation_files(dir, nullptr);
  if (records.empty()) throw std::runtime_error("build_prior_from_annotations: empty annotation set in " + dir.string());
  PriorSet ps;
  ps.topo = topo;
  ps.provenance = "annotations(" + dir.string() + ")";
  for (const RawRecord& raw : records) {
    const CropBox box = loose_crop(raw.kps_px, 0, 0);
    PriorElement e;
    e.keypoints = crop_keypoints(raw.kps_px, box, kInputResolution);
    ps.items.push_back(std::move(e));
  }
  return ps;
}

PriorSet build_prior_from_rasters(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("missing manifest: " + (dir / "manifest.json").string());
  json manifest = json::parse(mf);
  PriorSet ps;
  ps.topo = topology_from_json(manifest.at("topology"));
  ps.raster_payload = true;
  ps.provenance = "rasters(" + dir.string() + ")";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    cv::Mat m = cv::imread(f.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw std::runtime_error("unreadable raster prior: " + f.string());
    PriorElement e;
    e.is_raster = true;
    e.raster = u8_to_tensor(m);
    ps.items.push_back(std::move(e));
  }
  if (ps.items.empty()) throw std::runtime_error("build_prior_from_rasters: no .png files in " + dir.string());
  return ps;
}

}  // namespace skeladapt
