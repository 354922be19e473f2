#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "eon/network.hpp"
#include "eon/scene.hpp"
#include "eon/suspension.hpp"

namespace eon {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { kBaseline, kEon, kPreEon, kFullEon, kIon };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct LossWeights {
  double vote = 1.0;
  double segmentation = 1.0;
  double orientation = 1.0;
  double objectness = 1.0;
  double center = 1.0;
  double size = 1.0;
  double yaw = 1.0;
  double classification = 1.0;
};

struct OptimizerConfig {
  std::string kind = "sgd_momentum";  // "sgd" | "sgd_momentum"
  double learning_rate = 0.02;
  double momentum = 0.9;
  // Piecewise-constant overrides: from each epoch on, use the given rate.
  std::vector<std::pair<int, double>> schedule;

  double rate_at(int epoch) const;
};

struct DetectorConfig {
  Variant variant = Variant::kEon;
  int group_order = 4;
  RegionRule region_rule = RegionRule::kMode;
  bool oracle_orientation = false;
  bool oracle_segmentation = false;

  BackboneSpec backbone;
  int head_hidden = 16;
  int vote_hidden = 32;
  int region_channels = 64;
  int region_hidden = 64;

  int num_regions = 12;
  double cluster_radius = 0.6;
  double nms_iou = 0.25;
  double delta_pos = 0.3;  // objectness positive radius
  double delta_neg = 0.6;  // objectness negative radius
  LossWeights loss_weights;

  int num_classes = 3;
  std::vector<Vec3> class_sizes;  // box extents per class id

  double objaug_degrees = 0.0;  // training-time object rotation augmentation
  OptimizerConfig optimizer;
  int epochs = 30;
  int batch_size = 8;
  uint64_t seed = 1;
  std::string checkpoint_dtype = "f32";

  // The baseline variant is the group-order-1 run of the shared code path.
  int effective_group_order() const {
    return variant == Variant::kBaseline ? 1 : group_order;
  }
  void validate() const;  // throws ConfigError
};

// Registers every parameter the variant needs and initializes from the seed.
ParamStore build_params(const DetectorConfig& cfg);

struct RegionInfo {
  int center_seed = -1;      // seed index whose vote anchors the region
  std::vector<int> members;  // seed indices of member votes
  GroupElement orientation;
  bool low_confidence = false;
  Vec3 center;  // scene-frame region center used for assembly
};

struct ForwardResult {
  std::vector<int> seed_point_indices;  // into scene.points
  PointCloud seed_positions;
  Tensor seed_orbit;                    // backbone output [S, C, N]
  std::vector<int> seed_orientation;    // g-tilde per seed, -1 undefined
  std::vector<uint8_t> seed_foreground;
  Tensor orientation_scores;            // [S, N] (per-anchor for pre_eon)
  PointCloud votes;

  std::vector<RegionInfo> regions;
  std::vector<OrientedBox> proposals;  // scene frame, pre-NMS
  std::vector<uint8_t> proposal_low_confidence;
  std::vector<OrientedBox> detections;  // post-NMS

  std::map<std::string, double> losses;
  double total_loss = 0.0;
};

// Full forward pass (losses included; they are cheap and every scene carries
// labels). Empty scenes produce an empty detection set.
ForwardResult run_variant(const DetectorConfig& cfg, const Scene& scene,
                          const ParamStore& params);

struct SceneGradients {
  std::vector<Tensor> grads;  // one per ParamStore entry
  std::map<std::string, double> losses;
  double total_loss = 0.0;
};

// Builds the graph, runs backward, harvests gradients.
SceneGradients scene_gradients(const DetectorConfig& cfg, const Scene& scene,
                               const ParamStore& params);

// Greedy descending-score suppression with rotated IoU; ties by score, then
// unflagged-first, then index.
std::vector<int> nms_keep(const std::vector<OrientedBox>& detections,
                          const std::vector<uint8_t>& low_confidence,
                          double iou_threshold);

int64_t count_parameters(const ParamStore& params);
// Median wall-clock seconds over `runs` forward passes.
double measure_forward_time(const DetectorConfig& cfg, const Scene& scene,
                            const ParamStore& params, int runs = 5);

// --- training ----------------------------------------------------------------

struct TrainResult {
  std::string checkpoint_dir;
  std::vector<std::map<std::string, double>> epoch_losses;
  bool aborted_non_finite = false;
};

// Deterministic minibatch training over the manifest's train split.
// Writes checkpoint (manifest.json + params.bin + config.json echo) and
// train_log.jsonl into out_dir. On a non-finite loss the last good checkpoint
// is kept and TrainingError is thrown.
TrainResult train(const DetectorConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir);

// Reconstructs a config from its JSON echo (used by eval/verify/resume).
nlohmann::json detector_config_to_json(const DetectorConfig& cfg);
DetectorConfig detector_config_from_json(const nlohmann::json& j);

}  // namespace eon
