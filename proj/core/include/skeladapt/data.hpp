#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skeladapt/renderer.hpp"
#include "skeladapt/tensor.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

/// Fixed 12-joint articulated figure: head, neck, chest, pelvis, then
/// elbow/wrist and knee/ankle per side. 11 bones.
SkeletonTopology stick_figure_topology();

enum StickJoint {
  kHead = 0,
  kNeck,
  kChest,
  kPelvis,
  kLeftElbow,
  kLeftWrist,
  kRightElbow,
  kRightWrist,
  kLeftKnee,
  kLeftAnkle,
  kRightKnee,
  kRightAnkle,
  kStickJointCount
};

/// Joint-angle distribution and limb proportions, all in normalized units /
/// radians. Angles are drawn uniformly from the stated ranges.
struct PoseConfig {
  double torso_len = 0.52;
  double head_len = 0.18;
  double upper_arm = 0.26;
  double fore_arm = 0.24;
  double thigh = 0.30;
  double shin = 0.28;
  double torso_lean = 0.10;   // spine tilt from vertical, +- range
  double arm_base = 0.45;     // mean arm angle from straight down
  double arm_range = 0.25;
  double elbow_range = 0.35;  // forearm deviation from the upper arm
  double leg_base = 0.18;
  double leg_range = 0.12;
  double knee_range = 0.25;
  double scale_min = 0.85;
  double scale_max = 1.05;
  double center_jitter = 0.06;
};

struct TextureConfig {
  double background_base = 0.85;
  double background_amp = 0.06;  // low-frequency pattern amplitude
  double noise_std = 0.015;
  double figure_intensity = 0.08;
  double limb_halfwidth = 0.0167;
  double head_radius = 0.035;
  double edge_softness = 0.004;
};

struct DomainProfile {
  PoseConfig pose;
  TextureConfig texture;
};

struct DomainShiftConfig {
  std::string name = "default-shift";
  DomainProfile source;
  DomainProfile target;

  const DomainProfile& profile(DomainTag d) const { return d == DomainTag::kSource ? source : target; }
};

/// Dark narrow-posed figure on a light calm background vs. light wide-posed
/// figure on a dark noisy background.
DomainShiftConfig default_shift_config();

std::string shift_config_to_json(const DomainShiftConfig& cfg);
DomainShiftConfig shift_config_from_json(const std::string& json_text);
DomainShiftConfig load_shift_config(const std::filesystem::path& file);

struct FigureSample {
  Tensor image;  // 1x1xRxR, values in [0,1] quantized to 8-bit levels
  KeypointSet keypoints;
  DomainTag domain = DomainTag::kSource;
};

/// Deterministic in (seed, cfg, domain): forward-kinematics a stick figure
/// from the domain's pose distribution and rasterizes it with the domain's
/// texture. Ground truth is the exact joint positions.
FigureSample generate_figure(uint64_t seed, const DomainShiftConfig& cfg, DomainTag domain);

/// Keypoints only (no rasterization), for priors and pose statistics.
KeypointSet generate_pose(uint64_t seed, const DomainShiftConfig& cfg, DomainTag domain);

// ---------------------------------------------------------------------------
// Dataset files. Layout: DIR/manifest.json, DIR/annotations.jsonl,
// DIR/imgs/NNNNNN.png. Annotation record fields, in order: "image" (path
// relative to DIR), "k", "keypoints" ([[col,row], ...] pixels, sub-pixel),
// "topology" (name).

void write_dataset(const std::filesystem::path& dir, const std::vector<FigureSample>& samples,
                   const SkeletonTopology& topo);

struct LoadedSample {
  Tensor image;
  KeypointSet keypoints;  // normalized, in the cropped frame
  DomainTag domain = DomainTag::kSource;
  std::string image_path;
  // crop applied to the stored image, in its pixel units
  double crop_x0 = 0, crop_y0 = 0, crop_side = 0;
};

/// Reads a dataset directory and preprocesses each record: keypoint-extent
/// bounding box expanded 20% per side, square-padded, then resized to the
/// working resolution.
std::vector<LoadedSample> load_annotations(const std::filesystem::path& dir, SkeletonTopology* topo_out = nullptr);

// ---------------------------------------------------------------------------

/// Sample access layer with an image-fetch counter, so runs can prove they
/// never touched a domain's pixels. Label access is not counted: annotations
/// are separate from image files.
class SampleStore {
public:
  SampleStore() = default;

  /// All samples generated up front and held in memory.
  static SampleStore synthetic(const DomainShiftConfig& cfg, DomainTag domain, int n, uint64_t seed);

  /// Images stay on disk; every image() call performs a file read.
  static SampleStore from_dataset_dir(const std::filesystem::path& dir, DomainTag domain);

  size_t size() const { return labels_.size(); }
  DomainTag domain() const { return domain_; }
  const SkeletonTopology& topology() const { return topo_; }

  Tensor image(size_t i);  // counted
  const KeypointSet& label(size_t i) const { return labels_[i]; }

  Tensor batch_images(const std::vector<size_t>& idx);  // counted per element
  std::vector<KeypointSet> batch_labels(const std::vector<size_t>& idx) const;

  uint64_t image_reads() const { return image_reads_; }
  void reset_image_reads() { image_reads_ = 0; }

  /// Mean pixel value over (a subsample of) the dataset; used as the
  /// out-of-frame fill when rotating images.
  double background_mean() const { return background_mean_; }

private:
  DomainTag domain_ = DomainTag::kSource;
  SkeletonTopology topo_;
  std::vector<KeypointSet> labels_;
  std::vector<std::vector<uint8_t>> pixels_;       // in-memory variant, RxR bytes each
  std::vector<std::filesystem::path> image_files_; // disk variant
  std::vector<std::array<double, 3>> crops_;       // disk variant: x0, y0, side
  int resolution_ = kInputResolution;
  double background_mean_ = 0.5;
  uint64_t image_reads_ = 0;
};

// ---------------------------------------------------------------------------

struct PriorSet {
  std::vector<PriorElement> items;
  SkeletonTopology topo;
  std::string provenance;
  bool raster_payload = false;
};

/// Draws n keypoint configurations from the given domain's pose
/// distribution; no images are generated or touched.
PriorSet build_prior_synthetic(const DomainShiftConfig& cfg, DomainTag domain, int n, uint64_t seed);

/// Keypoint sets from a dataset's annotation records; image files ignored.
PriorSet build_prior_from_annotations(const std::filesystem::path& dir);

/// Grayscale image files as raster payloads (manifest.json declares the
/// topology name).
PriorSet build_prior_from_rasters(const std::filesystem::path& dir);

}  // namespace skeladapt
