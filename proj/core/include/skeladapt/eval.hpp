#pragma once

#include <string>
#include <vector>

#include "skeladapt/data.hpp"
#include "skeladapt/model.hpp"
#include "skeladapt/types.hpp"

namespace skeladapt {

/// Fraction of keypoints within alpha * max(gt bbox width, height) of ground
/// truth (boundary inclusive; compared on squared distances). Optionally
/// fills a per-keypoint breakdown.
double pck(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt, double alpha,
           std::vector<double>* per_keypoint = nullptr);

/// Mean over samples, keypoints and both coordinates of the squared error,
/// in normalized units.
double mse(const std::vector<KeypointSet>& pred, const std::vector<KeypointSet>& gt);

/// Mean over keypoints of the per-keypoint spatial variance (x plus y)
/// across the batch. Near zero when predictions degenerate to one spot.
double collapse_score(const std::vector<KeypointSet>& pred);

struct EvalReport {
  double pck = 0;
  double mse = 0;
  double collapse = 0;
  std::vector<double> per_keypoint_pck;
  int samples = 0;
  double alpha = 0.1;
  uint64_t config_hash = 0;
  std::string checkpoint_id;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// Runs the model over (up to max_samples of) a store in eval mode with the
/// store's domain tag and aggregates the metrics.
EvalReport evaluate(KeypointNet<float>& net, SampleStore& data, const SoftArgmaxConfig& readout, double alpha = 0.1,
                    int max_samples = 0, int batch_size = 16);

}  // namespace skeladapt
