#include "medsum/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "medsum/rng.hpp"

namespace medsum {

namespace {

constexpr real kNegInf = -std::numeric_limits<real>::infinity();

TensorRef init_matrix(Lcg64& rng, int rows, int cols) {
  const real limit = std::sqrt(6.0 / (rows + cols));
  TensorRef t = make_tensor({rows, cols});
  for (auto& v : t->values) v = rng.uniform(-limit, limit);
  return t;
}

TensorRef init_vector(Lcg64& rng, int len) {
  const real limit = std::sqrt(6.0 / (len + 1));
  TensorRef t = make_tensor({len});
  for (auto& v : t->values) v = rng.uniform(-limit, limit);
  return t;
}

TensorRef zero_vector(int len) { return make_tensor({len}); }

// Sinusoidal position encodings, [n x dim].
TensorRef position_encoding(Tape& tape, int n, int dim) {
  TensorRef pe = tape.leaf({n, dim});
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const real exponent = static_cast<real>(2 * (i / 2)) / dim;
      const real angle = pos / std::pow(10000.0, exponent);
      pe->at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 4) throw DataError("model config: vocab_size must cover the special tokens");
  if (embed_dim <= 0 || hidden_dim <= 0 || attention_dim <= 0 || encoder_layers < 1) {
    throw DataError("model config: dimensions must be positive");
  }
  if (max_source_len < 2 || max_target_len < 2) {
    throw DataError("model config: max lengths must be >= 2");
  }
  if (coverage_weight < 0.0) throw DataError("model config: coverage_weight must be >= 0");
  if (beam_width < 1) throw DataError("model config: beam_width must be >= 1");
}

std::vector<std::pair<std::string, TensorRef>> ModelParams::named() const {
  std::vector<std::pair<std::string, TensorRef>> out;
  out.emplace_back("embedding", embedding);
  out.emplace_back("input_w", input_w);
  out.emplace_back("input_b", input_b);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "enc" + std::to_string(i) + ".";
    out.emplace_back(p + "wq", layers[i].wq);
    out.emplace_back(p + "wk", layers[i].wk);
    out.emplace_back(p + "wv", layers[i].wv);
    out.emplace_back(p + "ff1_w", layers[i].ff1_w);
    out.emplace_back(p + "ff1_b", layers[i].ff1_b);
    out.emplace_back(p + "ff2_w", layers[i].ff2_w);
    out.emplace_back(p + "ff2_b", layers[i].ff2_b);
  }
  out.emplace_back("attn_wh", attn_wh);
  out.emplace_back("attn_ws", attn_ws);
  out.emplace_back("attn_b", attn_b);
  out.emplace_back("attn_v", attn_v);
  out.emplace_back("attn_wc", attn_wc);
  out.emplace_back("dec_wz", dec_wz);
  out.emplace_back("dec_bz", dec_bz);
  out.emplace_back("dec_wr", dec_wr);
  out.emplace_back("dec_br", dec_br);
  out.emplace_back("dec_wc", dec_wc);
  out.emplace_back("dec_bc", dec_bc);
  out.emplace_back("out_w", out_w);
  out.emplace_back("out_b", out_b);
  return out;
}

std::vector<TensorRef> ModelParams::all() const {
  std::vector<TensorRef> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  auto deep = [](TensorRef& t) { t = make_tensor(t->shape, t->values); };
  deep(copy.embedding);
  deep(copy.input_w);
  deep(copy.input_b);
  for (auto& layer : copy.layers) {
    deep(layer.wq);
    deep(layer.wk);
    deep(layer.wv);
    deep(layer.ff1_w);
    deep(layer.ff1_b);
    deep(layer.ff2_w);
    deep(layer.ff2_b);
  }
  deep(copy.attn_wh);
  deep(copy.attn_ws);
  deep(copy.attn_b);
  deep(copy.attn_v);
  deep(copy.attn_wc);
  deep(copy.dec_wz);
  deep(copy.dec_wr);
  deep(copy.dec_wc);
  deep(copy.dec_bz);
  deep(copy.dec_br);
  deep(copy.dec_bc);
  deep(copy.out_w);
  deep(copy.out_b);
  return copy;
}

void ModelParams::zero_grad() const {
  for (const auto& t : all()) t->zero_grad();
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  Lcg64 rng(config.seed);
  ModelParams p;
  const int e = config.embed_dim, h = config.hidden_dim, a = config.attention_dim;
  const int v = config.vocab_size;
  const int gru_in = e + 2 * h;

  p.embedding = init_matrix(rng, v, e);
  p.input_w = init_matrix(rng, h, e);
  p.input_b = zero_vector(h);
  p.layers.resize(static_cast<std::size_t>(config.encoder_layers));
  for (auto& layer : p.layers) {
    layer.wq = init_matrix(rng, h, h);
    layer.wk = init_matrix(rng, h, h);
    layer.wv = init_matrix(rng, h, h);
    layer.ff1_w = init_matrix(rng, h, h);
    layer.ff1_b = zero_vector(h);
    layer.ff2_w = init_matrix(rng, h, h);
    layer.ff2_b = zero_vector(h);
  }
  p.attn_wh = init_matrix(rng, a, h);
  p.attn_ws = init_matrix(rng, a, h);
  p.attn_b = zero_vector(a);
  p.attn_v = init_vector(rng, a);
  p.attn_wc = init_vector(rng, a);
  p.dec_wz = init_matrix(rng, h, gru_in);
  p.dec_bz = zero_vector(h);
  p.dec_wr = init_matrix(rng, h, gru_in);
  p.dec_br = zero_vector(h);
  p.dec_wc = init_matrix(rng, h, gru_in);
  p.dec_bc = zero_vector(h);
  p.out_w = init_matrix(rng, v, h);
  p.out_b = zero_vector(v);
  return p;
}

EncoderOutput encode(Tape& tape, const TokenSequence& source, const ModelParams& params,
                     const ModelConfig& config) {
  const int n = static_cast<int>(source.size());
  if (n == 0) throw EmptySource("encode: source sequence is empty");
  if (n > config.max_source_len) {
    throw SourceTooLong("encode: source length " + std::to_string(n) + " exceeds max " +
                        std::to_string(config.max_source_len));
  }
  for (int id : source) {
    if (id < 0 || id >= config.vocab_size) {
      throw TokenOutOfRange("encode: token id " + std::to_string(id) + " out of range");
    }
  }

  // Embeddings are scaled by sqrt(embed_dim) so they do not drown under the
  // unit-amplitude position encodings.
  TensorRef x = tape.scale(tape.gather_rows(params.embedding, source),
                           std::sqrt(static_cast<real>(config.embed_dim)));
  x = tape.add(x, position_encoding(tape, n, config.embed_dim));
  // Project to hidden width.
  TensorRef h = tape.add_rowvec(tape.matmul_nt(x, params.input_w), params.input_b);

  const real inv_sqrt = 1.0 / std::sqrt(static_cast<real>(config.hidden_dim));
  for (const auto& layer : params.layers) {
    TensorRef q = tape.matmul_nt(h, layer.wq);
    TensorRef k = tape.matmul_nt(h, layer.wk);
    TensorRef v = tape.matmul_nt(h, layer.wv);
    TensorRef scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt);
    TensorRef attn = tape.row_softmax(scores);
    h = tape.add(h, tape.matmul(attn, v));
    TensorRef ff = tape.tanh_elem(
        tape.add_rowvec(tape.matmul_nt(h, layer.ff1_w), layer.ff1_b));
    h = tape.add(h, tape.add_rowvec(tape.matmul_nt(ff, layer.ff2_w), layer.ff2_b));
  }
  return EncoderOutput{h, source};
}

DecoderState init_decoder_state(Tape& tape, const EncoderOutput& enc,
                                const ModelConfig& config) {
  (void)config;
  DecoderState state;
  state.s = tape.tanh_elem(tape.mean_rows(enc.h));
  state.coverage = tape.leaf({enc.length()});
  state.t = 0;
  return state;
}

AttentionResult attention_step(Tape& tape, const EncoderOutput& enc,
                               const DecoderState& state, const ModelParams& params,
                               const ModelConfig& config) {
  const int n = enc.length();
  AttentionResult result;
  if (!config.attention_enabled) {
    // Degenerate uniform attention: the no-attention baseline still consumes
    // a context vector, but it carries no alignment information.
    result.scores = tape.leaf({n});
    result.weights = tape.leaf({n}, std::vector<real>(static_cast<std::size_t>(n), 1.0 / n));
    result.context = tape.weighted_rows(enc.h, result.weights);
    return result;
  }
  if (state.s->size() != params.attn_ws->shape[1]) {
    throw ShapeMismatch("attention_step: state width " + state.s->shape_str() +
                        " does not match W_s " + params.attn_ws->shape_str());
  }
  // scores[i] = v . tanh(W_h h_i + W_s s + b_a [+ w_c c_i])
  TensorRef pre = tape.add_rowvec(tape.matmul_nt(enc.h, params.attn_wh),
                                  tape.affine(params.attn_ws, state.s, params.attn_b));
  if (config.coverage_enabled) {
    pre = tape.add_outer(pre, state.coverage, params.attn_wc);
  }
  result.scores = tape.matvec(tape.tanh_elem(pre), params.attn_v);
  result.weights = tape.softmax(result.scores);
  result.context = tape.weighted_rows(enc.h, result.weights);
  return result;
}

TensorRef decoder_step(Tape& tape, int prev_token, DecoderState& state,
                       const TensorRef& context, const TensorRef& alpha,
                       const ModelParams& params, const ModelConfig& config) {
  if (prev_token < 0 || prev_token >= config.vocab_size) {
    throw TokenOutOfRange("decoder_step: token id " + std::to_string(prev_token) +
                          " out of range");
  }
  TensorRef emb = tape.scale(tape.row(params.embedding, prev_token),
                             std::sqrt(static_cast<real>(config.embed_dim)));
  TensorRef u = tape.concat({emb, context, state.s});
  TensorRef z = tape.sigmoid_elem(tape.affine(params.dec_wz, u, params.dec_bz));
  TensorRef r = tape.sigmoid_elem(tape.affine(params.dec_wr, u, params.dec_br));
  TensorRef u2 = tape.concat({emb, context, tape.mul_elem(r, state.s)});
  TensorRef cand = tape.tanh_elem(tape.affine(params.dec_wc, u2, params.dec_bc));
  state.s = tape.add(tape.mul_elem(tape.one_minus(z), state.s), tape.mul_elem(z, cand));
  state.coverage = tape.add(state.coverage, alpha);
  state.t += 1;
  return tape.affine(params.out_w, state.s, params.out_b);
}

TensorRef coverage_loss(Tape& tape, const TensorRef& alpha, const TensorRef& coverage) {
  if (alpha->shape != coverage->shape) {
    throw ShapeMismatch("coverage_loss: alpha " + alpha->shape_str() + " vs coverage " +
                        coverage->shape_str());
  }
  return tape.sum(tape.min_elem(alpha, coverage));
}

namespace {

struct StepDistribution {
  std::vector<real> log_probs;
};

// Token ids whose selection would complete a trigram already present in
// `generated`. Only meaningful once two tokens exist.
std::set<int> blocked_tokens(const std::vector<int>& generated) {
  std::set<int> blocked;
  const std::size_t n = generated.size();
  if (n < 2) return blocked;
  const int a = generated[n - 2], b = generated[n - 1];
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (generated[i] == a && generated[i + 1] == b) {
      blocked.insert(generated[i + 2]);
    }
  }
  return blocked;
}

// Shared per-step machinery for both decoders: runs attention plus the
// recurrent cell and returns the log-probabilities with blocking applied.
StepDistribution decode_step(Tape& tape, int prev_token, DecoderState& state,
                             const EncoderOutput& enc, const std::vector<int>& generated,
                             const ModelParams& params, const ModelConfig& config) {
  AttentionResult attn = attention_step(tape, enc, state, params, config);
  TensorRef logits = decoder_step(tape, prev_token, state, attn.context, attn.weights,
                                  params, config);
  TensorRef probs = tape.softmax(logits);
  StepDistribution dist;
  dist.log_probs.resize(static_cast<std::size_t>(probs->size()));
  for (int i = 0; i < probs->size(); ++i) {
    dist.log_probs[static_cast<std::size_t>(i)] = std::log(std::max(probs->at(i), 1e-12));
  }
  if (config.coverage_enabled) {
    for (int id : blocked_tokens(generated)) {
      dist.log_probs[static_cast<std::size_t>(id)] = kNegInf;
    }
  }
  return dist;
}

int argmax_lowest_id(const std::vector<real>& xs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(xs.size()); ++i) {
    if (xs[static_cast<std::size_t>(i)] > xs[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

TokenSequence wrap_generated(const std::vector<int>& generated, bool has_eos) {
  TokenSequence out;
  out.reserve(generated.size() + 2);
  out.push_back(Vocabulary::kBos);
  out.insert(out.end(), generated.begin(), generated.end());
  if (!has_eos) out.push_back(Vocabulary::kEos);
  return out;
}

}  // namespace

TokenSequence greedy_decode(const TokenSequence& source, const ModelParams& params,
                            const ModelConfig& config) {
  config.validate();
  Tape tape;
  EncoderOutput enc = encode(tape, source, params, config);
  DecoderState state = init_decoder_state(tape, enc, config);
  std::vector<int> generated;
  int prev = Vocabulary::kBos;
  bool has_eos = false;
  while (static_cast<int>(generated.size()) < config.max_target_len) {
    StepDistribution dist = decode_step(tape, prev, state, enc, generated, params, config);
    const int tok = argmax_lowest_id(dist.log_probs);
    generated.push_back(tok);
    if (tok == Vocabulary::kEos) {
      has_eos = true;
      break;
    }
    prev = tok;
  }
  return wrap_generated(generated, has_eos);
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;  // generated ids, BOS excluded
  DecoderState state;
  real sum_logprob = 0.0;
  bool finished = false;

  real score() const {
    return tokens.empty() ? 0.0 : sum_logprob / static_cast<real>(tokens.size());
  }
};

}  // namespace

TokenSequence beam_decode(const TokenSequence& source, const ModelParams& params,
                          const ModelConfig& config, int beam_width) {
  config.validate();
  if (beam_width < 1) throw DataError("beam_decode: beam_width must be >= 1");

  Tape tape;
  EncoderOutput enc = encode(tape, source, params, config);

  std::vector<Hypothesis> alive;
  {
    Hypothesis root;
    root.state = init_decoder_state(tape, enc, config);
    alive.push_back(std::move(root));
  }
  std::vector<Hypothesis> finished;

  for (int step = 0; step < config.max_target_len && !alive.empty(); ++step) {
    struct Candidate {
      std::size_t parent;
      int token;
      real sum_logprob;
      DecoderState state;
    };
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      Hypothesis& hyp = alive[h];
      const int prev = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
      DecoderState state = hyp.state;  // shared tensors; decode_step rebinds them
      StepDistribution dist = decode_step(tape, prev, state, enc, hyp.tokens, params, config);
      for (int tok = 0; tok < static_cast<int>(dist.log_probs.size()); ++tok) {
        const real lp = dist.log_probs[static_cast<std::size_t>(tok)];
        if (lp == kNegInf) continue;
        candidates.push_back(Candidate{h, tok, hyp.sum_logprob + lp, state});
      }
    }
    if (candidates.empty()) break;

    // Rank by length-normalized score; ties break toward the earlier parent
    // and the lower token id so the search is deterministic.
    const real new_len = static_cast<real>(
        alive[0].tokens.size() + 1);  // all alive hyps share the same length
    std::stable_sort(candidates.begin(), candidates.end(),
                     [new_len](const Candidate& a, const Candidate& b) {
                       const real sa = a.sum_logprob / new_len;
                       const real sb = b.sum_logprob / new_len;
                       if (sa != sb) return sa > sb;
                       if (a.parent != b.parent) return a.parent < b.parent;
                       return a.token < b.token;
                     });
    if (static_cast<int>(candidates.size()) > beam_width) {
      candidates.resize(static_cast<std::size_t>(beam_width));
    }

    std::vector<Hypothesis> next;
    for (const Candidate& cand : candidates) {
      Hypothesis hyp;
      hyp.tokens = alive[cand.parent].tokens;
      hyp.tokens.push_back(cand.token);
      hyp.sum_logprob = cand.sum_logprob;
      hyp.state = cand.state;
      if (cand.token == Vocabulary::kEos) {
        hyp.finished = true;
        finished.push_back(std::move(hyp));
      } else {
        next.push_back(std::move(hyp));
      }
    }
    alive = std::move(next);
  }

  // Hypotheses that hit the length cap compete with the EOS-finished ones.
  for (Hypothesis& hyp : alive) finished.push_back(std::move(hyp));
  if (finished.empty()) return wrap_generated({}, false);

  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (finished[i].score() > finished[best].score()) best = i;
  }
  return wrap_generated(finished[best].tokens, finished[best].finished);
}

real sequence_score(const TokenSequence& decoded, const TokenSequence& source,
                    const ModelParams& params, const ModelConfig& config) {
  if (decoded.size() < 2 || decoded.front() != Vocabulary::kBos) {
    throw DataError("sequence_score: expected a BOS-wrapped sequence");
  }
  Tape tape;
  EncoderOutput enc = encode(tape, source, params, config);
  DecoderState state = init_decoder_state(tape, enc, config);
  std::vector<int> generated;
  real sum = 0.0;
  for (std::size_t t = 1; t < decoded.size(); ++t) {
    const int prev = decoded[t - 1];
    StepDistribution dist = decode_step(tape, prev, state, enc, generated, params, config);
    sum += dist.log_probs[static_cast<std::size_t>(decoded[t])];
    generated.push_back(decoded[t]);
  }
  return sum / static_cast<real>(decoded.size() - 1);
}

TensorRef mlm_pretrain_step(Tape& tape, const std::vector<TokenSequence>& batch,
                            const ModelParams& params, const ModelConfig& config,
                            real mask_prob, std::uint64_t seed) {
  if (batch.empty()) throw EmptyBatch("mlm_pretrain_step: empty batch");
  if (mask_prob <= 0.0 || mask_prob >= 1.0) {
    throw DataError("mlm_pretrain_step: mask_prob must be in (0, 1)");
  }
  Lcg64 rng(seed);
  std::vector<TensorRef> losses;
  for (const TokenSequence& seq : batch) {
    if (seq.empty()) throw EmptySource("mlm_pretrain_step: empty sequence in batch");
    const int len = static_cast<int>(seq.size());
    const int n_mask = static_cast<int>(std::ceil(mask_prob * len));
    std::vector<int> positions(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
    rng.shuffle(positions);
    positions.resize(static_cast<std::size_t>(n_mask));
    std::sort(positions.begin(), positions.end());

    TokenSequence masked = seq;
    for (int pos : positions) masked[static_cast<std::size_t>(pos)] = Vocabulary::kUnk;

    EncoderOutput enc = encode(tape, masked, params, config);
    for (int pos : positions) {
      TensorRef logits =
          tape.affine(params.out_w, tape.row(enc.h, pos), params.out_b);
      losses.push_back(
          tape.cross_entropy(tape.softmax(logits), seq[static_cast<std::size_t>(pos)]));
    }
  }
  return tape.scale(tape.add_n(losses), 1.0 / static_cast<real>(losses.size()));
}

}  // namespace medsum
