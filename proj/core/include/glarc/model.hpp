#pragma once

#include <string>
#include <vector>

#include "glarc/corpus.hpp"
#include "glarc/params.hpp"
#include "glarc/rng.hpp"
#include "glarc/tensor.hpp"

namespace glarc {

// How the localization weights m_i are produced: none = all ones (pure
// global attention), hard = SDP indicator mask, soft = learned BiGRU+sigmoid
// network trained against the SDP indicator.
enum class LocalizationMode { None, Hard, Soft };

const char* to_string(LocalizationMode mode);
LocalizationMode parse_localization_mode(const std::string& s);

struct ModelConfig {
  int d_e = 50;   // word-embedding dim
  int d_p = 5;    // position-embedding dim
  int d_h = 100;  // encoder GRU hidden size
  int d_l = 0;    // localization GRU hidden size; 0 means "use d_h"
  double gamma = 0.5;
  LocalizationMode mode = LocalizationMode::Soft;
  int clip = 30;  // position window, table has 2*clip+1 rows
  int n_classes = 19;
  double dropout_rate = 0.5;
  double mask_floor = 1e-8;    // applied only on imminent denominator underflow
  bool entity_dropout = true;  // entity GRU consumes post-dropout embedding rows
  int vocab_size = 0;

  int input_dim() const { return d_e + 2 * d_p; }
  int pos_rows() const { return 2 * clip + 1; }
  int loc_hidden() const { return d_l > 0 ? d_l : d_h; }
  void validate() const;  // throws UsageError on any violated invariant
};

struct GruCellIds {
  int Wz = -1, Uz = -1, bz = -1;
  int Wr = -1, Ur = -1, br = -1;
  int Wh = -1, Uh = -1, bh = -1;
};

struct ModelIds {
  int wv = -1, pv1 = -1, pv2 = -1;
  GruCellIds enc_fwd, enc_bwd;  // encoder BiGRU, hidden d_h
  GruCellIds entity;            // attention-vector GRU, hidden 2*d_h
  GruCellIds loc_fwd, loc_bwd;  // soft mode only, hidden loc_hidden()
  int loc_W = -1, loc_b = -1;   // soft mode only
  int cls_W = -1, cls_b = -1;
};

inline constexpr double kInitStd = 0.1;

// Registers every trainable tensor in a fixed, documented order (this order
// is the rng draw order and the checkpoint order). Weight matrices are
// N(0, kInitStd^2), biases zero. word_embeddings, when non-empty, becomes
// embed.word and must be vocab_size x d_e.
ModelIds init_parameters(ParamStore& store, const ModelConfig& cfg, Rng& rng,
                         Tensor word_embeddings = Tensor());

// Resolves parameter ids by name against an existing store (e.g. a loaded
// checkpoint) and validates every shape against the config.
ModelIds bind_parameters(const ParamStore& store, const ModelConfig& cfg);

struct ForwardTrace {
  Tensor H;  // l x 2*d_h
  Tensor c;  // 2*d_h
  Tensor m;  // length l, entries in [0,1]
  Tensor alpha_g, alpha_l, alpha;  // length-l probability vectors
  Tensor s;      // 2*d_h
  Tensor probs;  // n_classes simplex vector
};

struct ForwardResult {
  ForwardTrace trace;
  bool has_loss = false;  // set when the example carries a gold label
  double loss = 0.0, loss_cls = 0.0, loss_loc = 0.0;
};

// Full pass over one prepared example. When `grads` is non-null the backward
// sweep accumulates dJ/dtheta into it (requires a gold label). Dropout masks
// are drawn from `dropout_rng` only when training with dropout_rate > 0, in
// a fixed order: one mask per token row, then one for s.
ForwardResult forward(const PreparedExample& ex, const ParamStore& params,
                      const ModelIds& ids, const ModelConfig& cfg,
                      bool training = false, Rng* dropout_rng = nullptr,
                      GradStore* grads = nullptr);

// Inverted-dropout mask: entries are 0 with probability `rate`, else
// 1/(1-rate), so inference needs no rescaling.
Tensor dropout_mask(int n, double rate, Rng& rng);

// --- standalone layer functions ---
// Forward-only building blocks exercising the same arithmetic as forward();
// used by tests and the attention dump path.

struct GruWeights {
  Tensor Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  static GruWeights zeros(int input_dim, int hidden);
  static GruWeights random(int input_dim, int hidden, double stddev, Rng& rng);
  int hidden() const { return bz.dim(0); }
};

// Row i = word-vec || pos1-vec || pos2-vec per the prepared indices.
Tensor embed_input(const PreparedExample& ex, const Tensor& wv,
                   const Tensor& pv1, const Tensor& pv2);

// Update gate z, reset gate r, candidate state, convex update.
Tensor gru_step(const GruWeights& cell, const Tensor& x, const Tensor& h_prev);

// Forward scan and backward scan from zero states; row i = [h_i^f || h_i^b].
Tensor bigru_forward(const GruWeights& fwd, const GruWeights& bwd,
                     const Tensor& inputs);

// c = second hidden state of a unidirectional GRU run over (w_e1, w_e2).
Tensor entity_attention_vector(const GruWeights& cell, const Tensor& w_e1,
                               const Tensor& w_e2);

// Softmax over scores H_i . c.
Tensor global_attention(const Tensor& H, const Tensor& c);

// Weighted softmax m_i * exp(H_i . c) / sum; the floor kicks in only when
// the denominator would underflow below 1e-300. All-zero mask is a data
// error.
Tensor local_attention(const Tensor& H, const Tensor& c, const Tensor& m,
                       double mask_floor = 1e-8);

// m_i = sigmoid(W_l . H_l,i + b_l) over a dedicated BiGRU's states.
Tensor soft_localization(const GruWeights& fwd, const GruWeights& bwd,
                         const Tensor& Wl, double bl, const Tensor& inputs);

// Summed binary cross-entropy of m against the 0/1 SDP indicator.
double localization_loss(const Tensor& m, const Tensor& sdp);

// alpha = gamma * alpha_g + (1 - gamma) * alpha_l.
Tensor hybrid(const Tensor& alpha_g, const Tensor& alpha_l, double gamma);

struct ClassifyResult {
  Tensor s, probs;
};
ClassifyResult classify(const Tensor& H, const Tensor& alpha, const Tensor& Wc,
                        const Tensor& bc);

// J_cls = -log probs[gold]; soft mode adds j_loc, other modes ignore it.
double total_loss(const Tensor& probs, int gold, double j_loc,
                  LocalizationMode mode);

}  // namespace glarc
