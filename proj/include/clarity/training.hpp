#ifndef CLARITY_TRAINING_HPP
#define CLARITY_TRAINING_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "clarity/checkpoint.hpp"
#include "clarity/config.hpp"
#include "clarity/imagedata.hpp"
#include "clarity/losses.hpp"
#include "clarity/networks.hpp"

namespace clarity {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Var> params, const AdamConfig& cfg);

  void step();  // consumes the gradients accumulated on the parameters
  int64_t t() const { return t_; }
  const std::vector<Tensor>& m() const { return m_; }
  const std::vector<Tensor>& v() const { return v_; }
  void restore_state(std::vector<Tensor> m, std::vector<Tensor> v, int64_t t);

 private:
  std::vector<Var> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

struct TrainLogRecord {
  int64_t iteration = 0;
  int epoch = 0;
  std::vector<std::pair<std::string, double>> losses;
  double wallclock_s = 0.0;
  double schedule_weight = 0.0;  // current alpha1 (kt) / lambda1 (da)
};

void write_log_csv(const std::vector<TrainLogRecord>& log, const std::string& path);

struct TrainOutput {
  CheckpointData checkpoint;
  std::vector<TrainLogRecord> log;
  std::map<std::string, double> metrics;  // held-out validation summary
};

// Called at every epoch boundary with the would-be checkpoint.
using EpochCallback = std::function<void(const CheckpointData&, int epoch)>;

// Supervised pretraining of one per-kind specialist: minimizes the mean
// absolute error against the clean targets. Records held-out PSNR for the
// restored and the raw degraded images.
TrainOutput train_teacher(const DegradationKind& kind, const PairedDataset& data,
                          const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr);

// Transfer stage: frozen per-kind specialists supervise one unified student
// through the pixel term plus the multi-grained contrastive terms.
TrainOutput train_kt(const std::vector<CheckpointData>& teachers,
                     const std::vector<PairedDataset>& data, const TrainConfig& cfg,
                     const EpochCallback& on_epoch = nullptr);

// Adaptation stage: adversarial fine-tuning on unpaired degraded/clear
// corpora with the identity term and the extended contrastive terms.
TrainOutput train_da(const CheckpointData& student, const UnpairedDataset& data,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr);

// Checkpoint plumbing shared by the stages and the CLI.
Backbone backbone_from_checkpoint(const CheckpointData& ck);
CheckpointData make_checkpoint(const std::string& stage, const std::string& kind,
                               const Backbone& net, const Adam* opt,
                               const Discriminator* disc, const Adam* disc_opt,
                               int epoch, int64_t iteration, uint64_t cfg_hash,
                               const std::string& rng_state,
                               const std::vector<TrainLogRecord>& log_tail);

// (N,3,H,W) from a list of (3,H,W) images; all must share one shape.
Tensor stack_images(const std::vector<Tensor>& images);
Tensor batch_row_image(const Tensor& batch, int i);

}  // namespace clarity

#endif
