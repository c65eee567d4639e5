#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "medsum/checkpoint.hpp"
#include "medsum/model.hpp"

namespace medsum {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 4;
  real base_lr = 0.15;
  int warmup_steps = 20;
  real momentum = 0.9;
  int early_stop_patience = 10;
  real clip_norm = 5.0;
  real coverage_weight = 1.0;    // lambda in the training objective
  real distill_temperature = 2.0;
  real distill_mix = 0.5;        // beta: weight of the hard cross-entropy term
  int mlm_steps = 0;             // masked-token pretraining steps before training
  real mask_prob = 0.15;
  int jobs = 1;                  // fan-out for cross-validation folds
  std::uint64_t seed = 1234;

  void validate() const;
};

struct EncodedPair {
  std::string id;
  TokenSequence source;  // plain ids
  TokenSequence target;  // BOS ... EOS
};

struct EpochRow {
  int epoch = 0;
  real train_loss = 0.0;
  real val_loss = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double recall = 0.0;
  real lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRow> rows;
};

// Teacher-forced objective: mean cross-entropy over all target positions
// plus lambda * mean coverage loss when lambda > 0. Built on `tape`.
TensorRef compute_loss(Tape& tape, const std::vector<EncodedPair>& batch,
                       const ModelParams& params, const ModelConfig& config, real lambda);
// Convenience: value only, on a private tape.
real compute_loss_value(const std::vector<EncodedPair>& batch, const ModelParams& params,
                        const ModelConfig& config, real lambda);

// Linear warmup to base_lr, then inverse-square-root decay.
real lr_schedule(long long step, const TrainConfig& config);

// Halt iff the best (lowest) value occurred more than `patience` entries
// before the latest one; ties resolve to the earliest best.
bool early_stop_check(const std::vector<real>& val_losses, int patience);

// SGD with momentum and global-norm gradient clipping. Velocities persist
// across steps; gradients are zeroed after a successful step.
class SgdMomentum {
 public:
  explicit SgdMomentum(const ModelParams& params);
  // Throws NonFinite (leaving parameters untouched) if any gradient is NaN/Inf.
  void step(real lr, real momentum, real clip_norm);

 private:
  std::vector<TensorRef> params_;
  std::vector<std::vector<real>> velocity_;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
  int best_epoch = 0;       // 1-based epoch index of the returned checkpoint
  bool aborted = false;     // true when a numeric error stopped training early
  std::string abort_reason;
};

// Epoch loop of seeded shuffled minibatches with the schedule + optimizer
// above; per-epoch validation loss and ROUGE metrics are appended to the
// history and the checkpoint of the best validation epoch is returned.
TrainResult train(const std::vector<EncodedPair>& train_set,
                  const std::vector<EncodedPair>& val_set, const Vocabulary& vocab,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::unordered_set<std::string>& stoplist);

// Knowledge distillation: per position beta * CE(student, gold) +
// (1 - beta) * T^2 * KL(teacher_softened || student_softened), teacher
// frozen, same loop as train(). Throws VocabMismatch when the teacher's
// vocabulary differs from `vocab`.
TrainResult distill(const Checkpoint& teacher, const ModelConfig& student_config,
                    const std::vector<EncodedPair>& train_set,
                    const std::vector<EncodedPair>& val_set, const Vocabulary& vocab,
                    const TrainConfig& train_config,
                    const std::unordered_set<std::string>& stoplist);

// Runs `steps` masked-token pretraining updates on the encoder + output
// layer over the given sequences. Returns (first loss, last loss).
std::pair<real, real> mlm_pretrain(ModelParams& params, const ModelConfig& config,
                                   const std::vector<TokenSequence>& sequences, int steps,
                                   const TrainConfig& train_config);

struct PipelineOptions {
  int min_freq = 1;
  int max_vocab = 5000;
  std::unordered_set<std::string> stoplist;
  std::vector<std::string> domain_terms;
};

// Encodes records against a vocabulary (stopword filter on the source side).
std::vector<EncodedPair> encode_records(const std::vector<DocumentRecord>& records,
                                        const Vocabulary& vocab,
                                        const std::unordered_set<std::string>& stoplist);

struct FoldRow {
  int fold = 0;  // 1-based
  bool failed = false;
  std::string error;
  real val_loss = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double recall = 0.0;
};

struct CrossValResult {
  std::vector<FoldRow> folds;
  FoldRow mean;    // over successful folds
  FoldRow stddev;  // population standard deviation over successful folds
};

// k-fold cross-validation over raw records: per fold builds the vocabulary
// from that fold's training records, trains and scores the held-out chunk.
// A failed fold is reported in its row; the others still complete.
CrossValResult cross_validate(const std::vector<DocumentRecord>& records, int k,
                              ModelConfig model_config, const TrainConfig& train_config,
                              const PipelineOptions& pipeline);

}  // namespace medsum
