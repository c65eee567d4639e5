#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "medsum/tape.hpp"
#include "medsum/text_pipeline.hpp"

namespace medsum {

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 32;
  int hidden_dim = 64;
  int encoder_layers = 2;
  int attention_dim = 32;
  int max_source_len = 64;
  int max_target_len = 24;
  bool attention_enabled = true;  // false = uniform attention baseline
  bool coverage_enabled = true;
  real coverage_weight = 1.0;
  int beam_width = 1;
  std::uint64_t seed = 1234;

  void validate() const;
};

struct EncoderLayerParams {
  TensorRef wq, wk, wv;      // [hidden x hidden]
  TensorRef ff1_w, ff1_b;    // [hidden x hidden], [hidden]
  TensorRef ff2_w, ff2_b;
};

// Every trainable tensor of the summarizer. `named()` fixes the canonical
// parameter order used by checkpoints.
struct ModelParams {
  TensorRef embedding;             // [vocab x embed]
  TensorRef input_w, input_b;      // embed -> hidden projection
  std::vector<EncoderLayerParams> layers;
  TensorRef attn_wh, attn_ws;      // [attention x hidden]
  TensorRef attn_b, attn_v;        // [attention]
  TensorRef attn_wc;               // [attention], coverage projection
  TensorRef dec_wz, dec_wr, dec_wc;  // [hidden x (embed + 2*hidden)]
  TensorRef dec_bz, dec_br, dec_bc;  // [hidden]
  TensorRef out_w;                 // [vocab x hidden]
  TensorRef out_b;                 // [vocab]

  std::vector<std::pair<std::string, TensorRef>> named() const;
  std::vector<TensorRef> all() const;
  ModelParams clone() const;
  void zero_grad() const;
};

// Seeded uniform init in +/- sqrt(6 / (fan_in + fan_out)); bias vectors zero.
ModelParams init_params(const ModelConfig& config);

struct EncoderOutput {
  TensorRef h;                  // [n x hidden]
  std::vector<int> source_ids;  // for reference
  int length() const { return h->shape[0]; }
};

// Bidirectional contextual encoder: embeddings + sinusoidal positions,
// projected to hidden width, then encoder_layers blocks of single-head
// scaled dot-product self-attention and a position-wise feed-forward,
// each with a residual add.
EncoderOutput encode(Tape& tape, const TokenSequence& source, const ModelParams& params,
                     const ModelConfig& config);

struct DecoderState {
  TensorRef s;         // [hidden]
  TensorRef coverage;  // [n], running sum of past attention weights
  int t = 0;
};

// s_0 = tanh(mean of encoder rows); coverage starts at zero.
DecoderState init_decoder_state(Tape& tape, const EncoderOutput& enc,
                                const ModelConfig& config);

struct AttentionResult {
  TensorRef weights;  // alpha, softmax of scores
  TensorRef scores;   // e
  TensorRef context;  // [hidden]
};

// e_i = v^T tanh(W_h h_i + W_s s + b_a [+ w_c * c_i]); alpha = softmax(e);
// context = sum_i alpha_i h_i. With attention disabled alpha is uniform.
AttentionResult attention_step(Tape& tape, const EncoderOutput& enc,
                               const DecoderState& state, const ModelParams& params,
                               const ModelConfig& config);

// Gated recurrent update over [embedding | context | state]; returns the
// logits W_o s_t + b. Mutates the state: s replaced, coverage += alpha,
// t incremented.
TensorRef decoder_step(Tape& tape, int prev_token, DecoderState& state,
                       const TensorRef& context, const TensorRef& alpha,
                       const ModelParams& params, const ModelConfig& config);

// sum_i min(alpha_i, coverage_i); the coverage argument is the running sum
// BEFORE alpha is added.
TensorRef coverage_loss(Tape& tape, const TensorRef& alpha, const TensorRef& coverage);

// Argmax decoding from BOS; ties break to the lowest id. Stops at EOS or
// after max_target_len generated tokens (EOS is then appended). When
// coverage is enabled, any token that would complete a trigram already
// present in the generated prefix is masked out before the argmax.
TokenSequence greedy_decode(const TokenSequence& source, const ModelParams& params,
                            const ModelConfig& config);

// Length-normalized beam search (score = sum logprob / generated length)
// with the same trigram blocking. beam_width = 1 reproduces greedy_decode
// token for token.
TokenSequence beam_decode(const TokenSequence& source, const ModelParams& params,
                          const ModelConfig& config, int beam_width);

// Normalized score of a decoded sequence under the model (used by tests and
// the beam search itself).
real sequence_score(const TokenSequence& decoded, const TokenSequence& source,
                    const ModelParams& params, const ModelConfig& config);

// Masked-token pretraining loss: ceil(mask_prob * len) seeded positions per
// sequence are replaced with UNK; the encoder output at those positions is
// pushed through the output layer to predict the original ids. Returns the
// mean cross-entropy over masked positions, as a node on `tape`.
TensorRef mlm_pretrain_step(Tape& tape, const std::vector<TokenSequence>& batch,
                            const ModelParams& params, const ModelConfig& config,
                            real mask_prob, std::uint64_t seed);

}  // namespace medsum
