#include "medsum/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "medsum/metrics.hpp"
#include "medsum/rng.hpp"

namespace medsum {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

long long count_positions(const std::vector<EncodedPair>& batch) {
  long long positions = 0;
  for (const auto& pair : batch) {
    for (std::size_t t = 1; t < pair.target.size(); ++t) {
      if (pair.target[t] != Vocabulary::kPad) ++positions;
    }
  }
  return positions;
}

void validate_target(const EncodedPair& pair, const ModelConfig& config) {
  if (pair.target.size() < 2 || pair.target.front() != Vocabulary::kBos ||
      pair.target.back() != Vocabulary::kEos) {
    throw DataError("target sequence for \"" + pair.id + "\" must be BOS...EOS wrapped");
  }
  const int body = static_cast<int>(pair.target.size()) - 2;
  if (body > config.max_target_len) {
    throw LengthOverflow("target for \"" + pair.id + "\" has " + std::to_string(body) +
                         " tokens; max_target_len is " +
                         std::to_string(config.max_target_len));
  }
}

std::vector<real> softened_distribution(const TensorRef& logits, real temperature) {
  const int n = logits->size();
  std::vector<real> p(static_cast<std::size_t>(n));
  real mx = -kInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, logits->at(i) / temperature);
  real total = 0.0;
  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(logits->at(i) / temperature - mx);
    total += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw DataError("train config: epochs and batch_size must be >= 1");
  if (base_lr <= 0.0) throw DataError("train config: base_lr must be positive");
  if (warmup_steps < 1) throw DataError("train config: warmup_steps must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw DataError("train config: momentum must be in [0, 1)");
  if (early_stop_patience < 1) throw DataError("train config: early_stop_patience must be >= 1");
  if (clip_norm <= 0.0) throw DataError("train config: clip_norm must be positive");
  if (coverage_weight < 0.0) throw DataError("train config: coverage_weight must be >= 0");
  if (distill_temperature < 1.0) throw DataError("train config: distill_temperature must be >= 1");
  if (distill_mix < 0.0 || distill_mix > 1.0) throw DataError("train config: distill_mix must be in [0, 1]");
  if (mlm_steps < 0) throw DataError("train config: mlm_steps must be >= 0");
  if (mask_prob <= 0.0 || mask_prob >= 1.0) throw DataError("train config: mask_prob must be in (0, 1)");
  if (jobs < 1) throw DataError("train config: jobs must be >= 1");
}

TensorRef compute_loss(Tape& tape, const std::vector<EncodedPair>& batch,
                       const ModelParams& params, const ModelConfig& config, real lambda) {
  if (batch.empty()) throw EmptyBatch("compute_loss: empty batch");
  std::vector<TensorRef> ce_terms;
  std::vector<TensorRef> cov_terms;
  for (const auto& pair : batch) {
    validate_target(pair, config);
    EncoderOutput enc = encode(tape, pair.source, params, config);
    DecoderState state = init_decoder_state(tape, enc, config);
    for (std::size_t t = 0; t + 1 < pair.target.size(); ++t) {
      AttentionResult attn = attention_step(tape, enc, state, params, config);
      TensorRef coverage_before = state.coverage;
      if (lambda > 0.0) {
        cov_terms.push_back(coverage_loss(tape, attn.weights, coverage_before));
      }
      TensorRef logits = decoder_step(tape, pair.target[t], state, attn.context,
                                      attn.weights, params, config);
      if (pair.target[t + 1] == Vocabulary::kPad) continue;  // masked position
      ce_terms.push_back(tape.cross_entropy(tape.softmax(logits), pair.target[t + 1]));
    }
  }
  TensorRef loss = tape.scale(tape.add_n(ce_terms),
                              1.0 / static_cast<real>(ce_terms.size()));
  if (lambda > 0.0 && !cov_terms.empty()) {
    loss = tape.add(loss, tape.scale(tape.add_n(cov_terms),
                                     lambda / static_cast<real>(cov_terms.size())));
  }
  return loss;
}

real compute_loss_value(const std::vector<EncodedPair>& batch, const ModelParams& params,
                        const ModelConfig& config, real lambda) {
  Tape tape;
  return compute_loss(tape, batch, params, config, lambda)->values[0];
}

real lr_schedule(long long step, const TrainConfig& config) {
  if (step < 1) throw DataError("lr_schedule: step must be >= 1");
  const real warmup = static_cast<real>(config.warmup_steps);
  if (step <= config.warmup_steps) {
    return config.base_lr * static_cast<real>(step) / warmup;
  }
  return config.base_lr * std::sqrt(warmup / static_cast<real>(step));
}

bool early_stop_check(const std::vector<real>& val_losses, int patience) {
  if (patience < 1) throw DataError("early_stop_check: patience must be >= 1");
  if (val_losses.empty()) return false;
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[best]) best = i;  // earliest best wins ties
  }
  return (val_losses.size() - 1 - best) > static_cast<std::size_t>(patience);
}

SgdMomentum::SgdMomentum(const ModelParams& params) : params_(params.all()) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) {
    velocity_.emplace_back(static_cast<std::size_t>(p->size()), 0.0);
  }
}

void SgdMomentum::step(real lr, real momentum, real clip_norm) {
  real sq_norm = 0.0;
  for (std::size_t t = 0; t < params_.size(); ++t) {
    for (real g : params_[t]->grad) {
      if (!std::isfinite(g)) {
        throw NonFinite("optimizer step aborted: non-finite gradient in parameter tensor " +
                        std::to_string(t) + " " + params_[t]->shape_str());
      }
      sq_norm += g * g;
    }
  }
  const real norm = std::sqrt(sq_norm);
  const real scale = (norm > clip_norm) ? clip_norm / norm : 1.0;
  for (std::size_t t = 0; t < params_.size(); ++t) {
    Tensor& p = *params_[t];
    std::vector<real>& v = velocity_[t];
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum * v[i] + scale * p.grad[i];
      p.values[i] -= lr * v[i];
    }
    p.zero_grad();
  }
}

namespace {

using BatchLossFn = std::function<TensorRef(Tape&, const std::vector<EncodedPair>&,
                                            const ModelParams&)>;

// Epoch loop shared by train() and distill(). Validation always uses the
// plain objective so histories from both are directly comparable.
TrainResult run_training_loop(ModelParams params, const std::vector<EncodedPair>& train_set,
                              const std::vector<EncodedPair>& val_set,
                              const Vocabulary& vocab, const ModelConfig& model_config,
                              const TrainConfig& train_config,
                              const std::unordered_set<std::string>& stoplist,
                              const BatchLossFn& batch_loss) {
  TrainResult result;
  SgdMomentum optimizer(params);
  Lcg64 shuffle_rng(train_config.seed);
  ModelParams best_params;
  real best_val = kInf;
  int best_epoch = 0;
  long long global_step = 1;
  std::vector<real> val_losses;

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    real weighted_loss = 0.0;
    long long total_positions = 0;
    real last_lr = 0.0;
    bool numeric_abort = false;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_config.batch_size)) {
      std::vector<EncodedPair> batch;
      for (std::size_t i = start;
           i < std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));
           ++i) {
        batch.push_back(train_set[order[i]]);
      }
      try {
        Tape tape;
        TensorRef loss = batch_loss(tape, batch, params);
        tape.backward(loss);
        const long long positions = count_positions(batch);
        weighted_loss += loss->values[0] * static_cast<real>(positions);
        total_positions += positions;
        last_lr = lr_schedule(global_step, train_config);
        optimizer.step(last_lr, train_config.momentum, train_config.clip_norm);
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        numeric_abort = true;
        break;
      }
      ++global_step;
    }
    if (numeric_abort) break;

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = total_positions > 0 ? weighted_loss / total_positions : 0.0;
    row.lr = last_lr;
    try {
      row.val_loss = compute_loss_value(val_set, params, model_config,
                                        train_config.coverage_weight);
      MetricTriple r1{}, r2{}, rl{};
      double rec = 0.0;
      for (const auto& pair : val_set) {
        const TokenSequence decoded = greedy_decode(pair.source, params, model_config);
        const auto cand = decode_tokens(decoded, vocab);
        const auto ref = decode_tokens(pair.target, vocab);
        r1.f1 += rouge_n(cand, ref, 1).f1;
        r2.f1 += rouge_n(cand, ref, 2).f1;
        rl.f1 += rouge_l(cand, ref).f1;
        rec += recall_metric(cand, ref, stoplist);
      }
      const double inv = 1.0 / static_cast<double>(val_set.size());
      row.rouge1 = r1.f1 * inv;
      row.rouge2 = r2.f1 * inv;
      row.rougeL = rl.f1 * inv;
      row.recall = rec * inv;
    } catch (const NumericError& e) {
      // Validation blew up; keep the completed epochs as partial history.
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
    result.history.rows.push_back(row);
    val_losses.push_back(row.val_loss);

    if (row.val_loss < best_val) {
      best_val = row.val_loss;
      best_epoch = epoch;
      best_params = params.clone();
    }
    if (early_stop_check(val_losses, train_config.early_stop_patience)) break;
  }

  result.best_epoch = best_epoch;
  result.checkpoint = make_checkpoint(best_epoch > 0 ? best_params : params,
                                      model_config, vocab);
  return result;
}

}  // namespace

TrainResult train(const std::vector<EncodedPair>& train_set,
                  const std::vector<EncodedPair>& val_set, const Vocabulary& vocab,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::unordered_set<std::string>& stoplist) {
  model_config.validate();
  train_config.validate();
  if (train_set.empty() || val_set.empty()) {
    throw EmptyBatch("train: training and validation sets must be nonempty");
  }
  ModelParams params = init_params(model_config);
  if (train_config.mlm_steps > 0) {
    std::vector<TokenSequence> sequences;
    sequences.reserve(train_set.size());
    for (const auto& pair : train_set) sequences.push_back(pair.source);
    mlm_pretrain(params, model_config, sequences, train_config.mlm_steps, train_config);
  }
  const real lambda = train_config.coverage_weight;
  auto batch_loss = [&model_config, lambda](Tape& tape, const std::vector<EncodedPair>& batch,
                                            const ModelParams& p) {
    return compute_loss(tape, batch, p, model_config, lambda);
  };
  return run_training_loop(std::move(params), train_set, val_set, vocab, model_config,
                           train_config, stoplist, batch_loss);
}

TrainResult distill(const Checkpoint& teacher, const ModelConfig& student_config,
                    const std::vector<EncodedPair>& train_set,
                    const std::vector<EncodedPair>& val_set, const Vocabulary& vocab,
                    const TrainConfig& train_config,
                    const std::unordered_set<std::string>& stoplist) {
  student_config.validate();
  train_config.validate();
  if (teacher.vocab.tokens != vocab.tokens) {
    throw VocabMismatch("distill: teacher vocabulary differs from the student's");
  }
  if (train_set.empty() || val_set.empty()) {
    throw EmptyBatch("distill: training and validation sets must be nonempty");
  }

  ModelParams student = init_params(student_config);
  const real beta = train_config.distill_mix;
  const real temperature = train_config.distill_temperature;
  const real lambda = train_config.coverage_weight;

  if (beta == 1.0) {
    // The distillation term vanishes; run the exact plain-training graph so
    // the trace matches train() bit for bit.
    auto batch_loss = [&student_config, lambda](Tape& tape,
                                                const std::vector<EncodedPair>& batch,
                                                const ModelParams& p) {
      return compute_loss(tape, batch, p, student_config, lambda);
    };
    return run_training_loop(std::move(student), train_set, val_set, vocab, student_config,
                             train_config, stoplist, batch_loss);
  }

  const ModelParams teacher_params = params_from_checkpoint(teacher);
  const ModelConfig teacher_config = teacher.config;

  auto batch_loss = [&, beta, temperature, lambda](Tape& tape,
                                                   const std::vector<EncodedPair>& batch,
                                                   const ModelParams& p) {
    std::vector<TensorRef> position_terms;
    std::vector<TensorRef> cov_terms;
    for (const auto& pair : batch) {
      validate_target(pair, student_config);
      // Teacher pass on its own tape; only the softened distributions are
      // kept, as constants.
      std::vector<std::vector<real>> soft_targets;
      {
        Tape teacher_tape;
        EncoderOutput enc = encode(teacher_tape, pair.source, teacher_params, teacher_config);
        DecoderState state = init_decoder_state(teacher_tape, enc, teacher_config);
        for (std::size_t t = 0; t + 1 < pair.target.size(); ++t) {
          AttentionResult attn = attention_step(teacher_tape, enc, state, teacher_params,
                                                teacher_config);
          TensorRef logits = decoder_step(teacher_tape, pair.target[t], state, attn.context,
                                          attn.weights, teacher_params, teacher_config);
          soft_targets.push_back(softened_distribution(logits, temperature));
        }
      }

      EncoderOutput enc = encode(tape, pair.source, p, student_config);
      DecoderState state = init_decoder_state(tape, enc, student_config);
      for (std::size_t t = 0; t + 1 < pair.target.size(); ++t) {
        AttentionResult attn = attention_step(tape, enc, state, p, student_config);
        TensorRef coverage_before = state.coverage;
        if (lambda > 0.0) {
          cov_terms.push_back(coverage_loss(tape, attn.weights, coverage_before));
        }
        TensorRef logits = decoder_step(tape, pair.target[t], state, attn.context,
                                        attn.weights, p, student_config);
        if (pair.target[t + 1] == Vocabulary::kPad) continue;
        TensorRef hard = tape.cross_entropy(tape.softmax(logits), pair.target[t + 1]);
        TensorRef soft = tape.kl_from_const(
            soft_targets[t], tape.softmax(tape.scale(logits, 1.0 / temperature)));
        position_terms.push_back(tape.add(
            tape.scale(hard, beta),
            tape.scale(soft, (1.0 - beta) * temperature * temperature)));
      }
    }
    TensorRef loss = tape.scale(tape.add_n(position_terms),
                                1.0 / static_cast<real>(position_terms.size()));
    if (lambda > 0.0 && !cov_terms.empty()) {
      loss = tape.add(loss, tape.scale(tape.add_n(cov_terms),
                                       lambda / static_cast<real>(cov_terms.size())));
    }
    return loss;
  };
  return run_training_loop(std::move(student), train_set, val_set, vocab, student_config,
                           train_config, stoplist, batch_loss);
}

std::pair<real, real> mlm_pretrain(ModelParams& params, const ModelConfig& config,
                                   const std::vector<TokenSequence>& sequences, int steps,
                                   const TrainConfig& train_config) {
  if (sequences.empty()) throw EmptyBatch("mlm_pretrain: no sequences");
  SgdMomentum optimizer(params);
  real first_loss = 0.0, last_loss = 0.0;
  const std::size_t n = sequences.size();
  for (int step = 1; step <= steps; ++step) {
    std::vector<TokenSequence> batch;
    const std::size_t width = std::min<std::size_t>(
        n, static_cast<std::size_t>(train_config.batch_size));
    const std::size_t start =
        (static_cast<std::size_t>(step - 1) * width) % n;
    for (std::size_t i = 0; i < width; ++i) batch.push_back(sequences[(start + i) % n]);

    Tape tape;
    TensorRef loss = mlm_pretrain_step(tape, batch, params, config, train_config.mask_prob,
                                       train_config.seed + static_cast<std::uint64_t>(step));
    tape.backward(loss);
    if (step == 1) first_loss = loss->values[0];
    last_loss = loss->values[0];
    optimizer.step(lr_schedule(step, train_config), train_config.momentum,
                   train_config.clip_norm);
  }
  return {first_loss, last_loss};
}

std::vector<EncodedPair> encode_records(const std::vector<DocumentRecord>& records,
                                        const Vocabulary& vocab,
                                        const std::unordered_set<std::string>& stoplist) {
  std::vector<EncodedPair> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    EncodedPair pair;
    pair.id = rec.id;
    pair.source = encode(source_tokens(rec, stoplist), vocab, false);
    if (pair.source.empty()) pair.source.push_back(Vocabulary::kUnk);
    pair.target = encode(reference_tokens(rec), vocab, true);
    out.push_back(std::move(pair));
  }
  return out;
}

CrossValResult cross_validate(const std::vector<DocumentRecord>& records, int k,
                              ModelConfig model_config, const TrainConfig& train_config,
                              const PipelineOptions& pipeline) {
  train_config.validate();
  const std::vector<FoldPair> folds = make_folds(records, k, train_config.seed);
  CrossValResult result;
  result.folds.resize(static_cast<std::size_t>(k));

  auto run_fold = [&](int i) {
    FoldRow& row = result.folds[static_cast<std::size_t>(i)];
    row.fold = i + 1;
    try {
      Vocabulary vocab = build_vocabulary(folds[static_cast<std::size_t>(i)].train,
                                          pipeline.min_freq, pipeline.max_vocab);
      if (!pipeline.domain_terms.empty()) {
        vocab = extend_vocabulary(std::move(vocab), pipeline.domain_terms);
      }
      ModelConfig fold_config = model_config;
      fold_config.vocab_size = vocab.size();
      const auto train_set =
          encode_records(folds[static_cast<std::size_t>(i)].train, vocab, pipeline.stoplist);
      const auto val_set = encode_records(folds[static_cast<std::size_t>(i)].validation,
                                          vocab, pipeline.stoplist);
      TrainResult r = train(train_set, val_set, vocab, fold_config, train_config,
                            pipeline.stoplist);
      if (r.aborted || r.best_epoch == 0) {
        row.failed = true;
        row.error = r.aborted ? r.abort_reason : "no epoch completed";
        return;
      }
      const EpochRow& best = r.history.rows[static_cast<std::size_t>(r.best_epoch - 1)];
      row.val_loss = best.val_loss;
      row.rouge1 = best.rouge1;
      row.rouge2 = best.rouge2;
      row.rougeL = best.rougeL;
      row.recall = best.recall;
    } catch (const MedsumError& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  const int jobs = std::min(train_config.jobs, k);
  if (jobs <= 1) {
    for (int i = 0; i < k; ++i) run_fold(i);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w]() {
        for (int i = w; i < k; i += jobs) run_fold(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  int ok = 0;
  for (const auto& row : result.folds) {
    if (row.failed) continue;
    ++ok;
    result.mean.val_loss += row.val_loss;
    result.mean.rouge1 += row.rouge1;
    result.mean.rouge2 += row.rouge2;
    result.mean.rougeL += row.rougeL;
    result.mean.recall += row.recall;
  }
  if (ok > 0) {
    result.mean.val_loss /= ok;
    result.mean.rouge1 /= ok;
    result.mean.rouge2 /= ok;
    result.mean.rougeL /= ok;
    result.mean.recall /= ok;
    for (const auto& row : result.folds) {
      if (row.failed) continue;
      auto sq = [](double d) { return d * d; };
      result.stddev.val_loss += sq(row.val_loss - result.mean.val_loss);
      result.stddev.rouge1 += sq(row.rouge1 - result.mean.rouge1);
      result.stddev.rouge2 += sq(row.rouge2 - result.mean.rouge2);
      result.stddev.rougeL += sq(row.rougeL - result.mean.rougeL);
      result.stddev.recall += sq(row.recall - result.mean.recall);
    }
    result.stddev.val_loss = std::sqrt(result.stddev.val_loss / ok);
    result.stddev.rouge1 = std::sqrt(result.stddev.rouge1 / ok);
    result.stddev.rouge2 = std::sqrt(result.stddev.rouge2 / ok);
    result.stddev.rougeL = std::sqrt(result.stddev.rougeL / ok);
    result.stddev.recall = std::sqrt(result.stddev.recall / ok);
  }
  return result;
}

}  // namespace medsum
