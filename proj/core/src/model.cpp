#include "glarc/model.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "glarc/errors.hpp"
#include "glarc/tape.hpp"

namespace glarc {

const char* to_string(LocalizationMode mode) {
  switch (mode) {
    case LocalizationMode::None: return "none";
    case LocalizationMode::Hard: return "hard";
    case LocalizationMode::Soft: return "soft";
  }
  return "?";
}

LocalizationMode parse_localization_mode(const std::string& s) {
  if (s == "none") return LocalizationMode::None;
  if (s == "hard") return LocalizationMode::Hard;
  if (s == "soft") return LocalizationMode::Soft;
  throw UsageError("unknown localization mode '" + s + "' (expected none|hard|soft)");
}

void ModelConfig::validate() const {
  if (d_e < 1 || d_p < 1 || d_h < 1 || d_l < 0 || clip < 1)
    throw UsageError("model dims must be >= 1 (d_l may be 0 for default)");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw UsageError("gamma must lie in [0,1]");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw UsageError("dropout rate must lie in [0,1)");
  if (!(mask_floor >= 0.0 && mask_floor <= 1e-3))
    throw UsageError("mask floor must lie in [0, 1e-3]");
  if (n_classes < 2) throw UsageError("need at least 2 classes");
  if (vocab_size < 2) throw UsageError("vocabulary not set on model config");
}

namespace {

GruCellIds add_gru(ParamStore& store, const std::string& prefix, int in,
                   int hidden, Rng& rng) {
  auto w = [&](const char* name, int r, int c) {
    return store.add(prefix + name, gaussian_init({r, c}, kInitStd, rng),
                     ParamKind::Weight);
  };
  auto b = [&](const char* name) {
    return store.add(prefix + name, Tensor({hidden}), ParamKind::Bias);
  };
  GruCellIds ids;
  ids.Wz = w("Wz", hidden, in);
  ids.Uz = w("Uz", hidden, hidden);
  ids.bz = b("bz");
  ids.Wr = w("Wr", hidden, in);
  ids.Ur = w("Ur", hidden, hidden);
  ids.br = b("br");
  ids.Wh = w("Wh", hidden, in);
  ids.Uh = w("Uh", hidden, hidden);
  ids.bh = b("bh");
  return ids;
}

GruCellIds bind_gru(const ParamStore& store, const std::string& prefix, int in,
                    int hidden) {
  auto get = [&](const char* name, int r, int c) {
    int id = store.find(prefix + name);
    if (id < 0) throw DataError("checkpoint is missing parameter " + prefix + name);
    const Tensor& t = store.tensor(id);
    bool ok = (c == 0) ? (t.rank() == 1 && t.dim(0) == r)
                       : (t.rank() == 2 && t.dim(0) == r && t.dim(1) == c);
    if (!ok)
      throw DataError("parameter " + prefix + name + " has shape " +
                      t.shape_str() + ", config expects another");
    return id;
  };
  GruCellIds ids;
  ids.Wz = get("Wz", hidden, in);
  ids.Uz = get("Uz", hidden, hidden);
  ids.bz = get("bz", hidden, 0);
  ids.Wr = get("Wr", hidden, in);
  ids.Ur = get("Ur", hidden, hidden);
  ids.br = get("br", hidden, 0);
  ids.Wh = get("Wh", hidden, in);
  ids.Uh = get("Uh", hidden, hidden);
  ids.bh = get("bh", hidden, 0);
  return ids;
}

}  // namespace

ModelIds init_parameters(ParamStore& store, const ModelConfig& cfg, Rng& rng,
                         Tensor word_embeddings) {
  cfg.validate();
  ModelIds ids;
  if (word_embeddings.numel() > 0) {
    if (word_embeddings.rank() != 2 || word_embeddings.dim(0) != cfg.vocab_size ||
        word_embeddings.dim(1) != cfg.d_e)
      throw UsageError("word embedding table shape does not match config");
    ids.wv = store.add("embed.word", std::move(word_embeddings), ParamKind::Embedding);
  } else {
    Tensor wv = gaussian_init({cfg.vocab_size, cfg.d_e}, kInitStd, rng);
    for (int c = 0; c < cfg.d_e; ++c) wv.at(0, c) = 0.0;  // padding row stays zero
    ids.wv = store.add("embed.word", std::move(wv), ParamKind::Embedding);
  }
  ids.pv1 = store.add("embed.pos1", gaussian_init({cfg.pos_rows(), cfg.d_p}, kInitStd, rng),
                      ParamKind::Embedding);
  ids.pv2 = store.add("embed.pos2", gaussian_init({cfg.pos_rows(), cfg.d_p}, kInitStd, rng),
                      ParamKind::Embedding);
  ids.enc_fwd = add_gru(store, "enc.fwd.", cfg.input_dim(), cfg.d_h, rng);
  ids.enc_bwd = add_gru(store, "enc.bwd.", cfg.input_dim(), cfg.d_h, rng);
  ids.entity = add_gru(store, "ent.", cfg.input_dim(), 2 * cfg.d_h, rng);
  if (cfg.mode == LocalizationMode::Soft) {
    ids.loc_fwd = add_gru(store, "loc.fwd.", cfg.input_dim(), cfg.loc_hidden(), rng);
    ids.loc_bwd = add_gru(store, "loc.bwd.", cfg.input_dim(), cfg.loc_hidden(), rng);
    ids.loc_W = store.add("loc.W", gaussian_init({1, 2 * cfg.loc_hidden()}, kInitStd, rng),
                          ParamKind::Weight);
    ids.loc_b = store.add("loc.b", Tensor({1}), ParamKind::Bias);
  }
  ids.cls_W = store.add("cls.W", gaussian_init({cfg.n_classes, 2 * cfg.d_h}, kInitStd, rng),
                        ParamKind::Weight);
  ids.cls_b = store.add("cls.b", Tensor({cfg.n_classes}), ParamKind::Bias);
  return ids;
}

ModelIds bind_parameters(const ParamStore& store, const ModelConfig& cfg) {
  cfg.validate();
  auto get = [&](const char* name, int r, int c) {
    int id = store.find(name);
    if (id < 0) throw DataError(std::string("checkpoint is missing parameter ") + name);
    const Tensor& t = store.tensor(id);
    bool ok = (c == 0) ? (t.rank() == 1 && t.dim(0) == r)
                       : (t.rank() == 2 && t.dim(0) == r && t.dim(1) == c);
    if (!ok)
      throw DataError(std::string("parameter ") + name + " has shape " +
                      t.shape_str() + ", config expects another");
    return id;
  };
  ModelIds ids;
  ids.wv = get("embed.word", cfg.vocab_size, cfg.d_e);
  ids.pv1 = get("embed.pos1", cfg.pos_rows(), cfg.d_p);
  ids.pv2 = get("embed.pos2", cfg.pos_rows(), cfg.d_p);
  ids.enc_fwd = bind_gru(store, "enc.fwd.", cfg.input_dim(), cfg.d_h);
  ids.enc_bwd = bind_gru(store, "enc.bwd.", cfg.input_dim(), cfg.d_h);
  ids.entity = bind_gru(store, "ent.", cfg.input_dim(), 2 * cfg.d_h);
  if (cfg.mode == LocalizationMode::Soft) {
    ids.loc_fwd = bind_gru(store, "loc.fwd.", cfg.input_dim(), cfg.loc_hidden());
    ids.loc_bwd = bind_gru(store, "loc.bwd.", cfg.input_dim(), cfg.loc_hidden());
    ids.loc_W = get("loc.W", 1, 2 * cfg.loc_hidden());
    ids.loc_b = get("loc.b", 1, 0);
  }
  ids.cls_W = get("cls.W", cfg.n_classes, 2 * cfg.d_h);
  ids.cls_b = get("cls.b", cfg.n_classes, 0);
  return ids;
}

Tensor dropout_mask(int n, double rate, Rng& rng) {
  Tensor m({n});
  double keep = 1.0 / (1.0 - rate);
  for (int64_t i = 0; i < m.numel(); ++i)
    m[i] = (rng.uniform01() < rate) ? 0.0 : keep;
  return m;
}

namespace {

Tensor stack_rows(const Tape& t, const std::vector<Val>& rows) {
  int l = static_cast<int>(rows.size());
  int d = static_cast<int>(t.val(rows[0]).numel());
  Tensor out({l, d});
  for (int i = 0; i < l; ++i) {
    const Tensor& r = t.val(rows[i]);
    for (int j = 0; j < d; ++j) out.at(i, j) = r[j];
  }
  return out;
}

// Weighted attention numerator m .* e with the underflow guard: the floor is
// applied only when the denominator would drop below 1e-300, so hard-mode
// zeros stay exact in the common case.
Val masked_weights(Tape& t, Val m, Val e, double floor, int example_id) {
  Val weighted = t.mul(m, e);
  double sum = 0.0;
  const Tensor& wv = t.val(weighted);
  for (int64_t i = 0; i < wv.numel(); ++i) sum += wv[i];
  if (sum >= 1e-300) return weighted;
  const Tensor& mv = t.val(m);
  bool all_zero = true;
  for (int64_t i = 0; i < mv.numel(); ++i)
    if (mv[i] != 0.0) { all_zero = false; break; }
  if (all_zero) {
    std::string where = example_id >= 0 ? " for example " + std::to_string(example_id) : "";
    throw DataError("attention mask is all zero" + where);
  }
  return t.mul(t.max_const(m, floor), e);
}

}  // namespace

ForwardResult forward(const PreparedExample& ex, const ParamStore& params,
                      const ModelIds& ids, const ModelConfig& cfg,
                      bool training, Rng* dropout_rng, GradStore* grads) {
  cfg.validate();
  const int l = static_cast<int>(ex.tokens.size());
  if (l < 1) throw DataError("example " + std::to_string(ex.id) + " has no tokens");
  if (grads != nullptr && ex.gold < 0)
    throw UsageError("gradients require a gold label");
  const bool use_dropout = training && cfg.dropout_rate > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw UsageError("training with dropout requires an rng");
  if (cfg.mode == LocalizationMode::Hard && ex.sdp.m.numel() != l)
    throw DataError("SDP mask length mismatch on example " + std::to_string(ex.id));

  Tape t(params, grads);
  auto cell_vals = [&](const GruCellIds& c) {
    return GruCellVals{t.param(c.Wz), t.param(c.Uz), t.param(c.bz),
                       t.param(c.Wr), t.param(c.Ur), t.param(c.br),
                       t.param(c.Wh), t.param(c.Uh), t.param(c.bh)};
  };

  std::vector<Val> raw(l), w(l);
  for (int i = 0; i < l; ++i) {
    Val word = t.table_row(ids.wv, ex.tokens[static_cast<size_t>(i)]);
    Val p1 = t.table_row(ids.pv1, ex.pos1[static_cast<size_t>(i)]);
    Val p2 = t.table_row(ids.pv2, ex.pos2[static_cast<size_t>(i)]);
    raw[i] = t.concat(t.concat(word, p1), p2);
    w[i] = use_dropout
               ? t.mul(raw[i], t.input(dropout_mask(cfg.input_dim(), cfg.dropout_rate, *dropout_rng)))
               : raw[i];
  }

  GruCellVals enc_f = cell_vals(ids.enc_fwd);
  GruCellVals enc_b = cell_vals(ids.enc_bwd);
  std::vector<Val> H = bigru_scan(t, enc_f, enc_b, w, cfg.d_h);

  GruCellVals ent = cell_vals(ids.entity);
  Val h0 = t.input(Tensor({2 * cfg.d_h}));
  Val we1 = cfg.entity_dropout ? w[static_cast<size_t>(ex.e1)] : raw[static_cast<size_t>(ex.e1)];
  Val we2 = cfg.entity_dropout ? w[static_cast<size_t>(ex.e2)] : raw[static_cast<size_t>(ex.e2)];
  Val c = gru_step(t, ent, we2, gru_step(t, ent, we1, h0));

  Val m;
  switch (cfg.mode) {
    case LocalizationMode::None:
      m = t.input(Tensor::full({l}, 1.0));
      break;
    case LocalizationMode::Hard:
      m = t.input(ex.sdp.m);
      break;
    case LocalizationMode::Soft: {
      GruCellVals loc_f = cell_vals(ids.loc_fwd);
      GruCellVals loc_b = cell_vals(ids.loc_bwd);
      std::vector<Val> Hl = bigru_scan(t, loc_f, loc_b, w, cfg.loc_hidden());
      Val Wl = t.param(ids.loc_W);
      Val bl = t.param(ids.loc_b);
      std::vector<Val> ms(static_cast<size_t>(l));
      for (int i = 0; i < l; ++i)
        ms[static_cast<size_t>(i)] = t.sigmoid(t.add(t.matvec(Wl, Hl[static_cast<size_t>(i)]), bl));
      m = t.concat_n(ms);
      break;
    }
  }

  Val scores = t.dots(H, c);
  Val e = t.exp_shift(scores);
  Val alpha_g = t.normalize(e);
  Val alpha_l = t.normalize(masked_weights(t, m, e, cfg.mask_floor, ex.id));
  Val alpha = t.add(t.scale(alpha_g, cfg.gamma), t.scale(alpha_l, 1.0 - cfg.gamma));

  Val s = t.lincomb(alpha, H);
  Val s_in = use_dropout
                 ? t.mul(s, t.input(dropout_mask(2 * cfg.d_h, cfg.dropout_rate, *dropout_rng)))
                 : s;
  Val logits = t.add(t.matvec(t.param(ids.cls_W), s_in), t.param(ids.cls_b));
  Val probs = t.softmax(logits);

  ForwardResult out;
  out.trace.H = stack_rows(t, H);
  out.trace.c = t.val(c);
  out.trace.m = t.val(m);
  out.trace.alpha_g = t.val(alpha_g);
  out.trace.alpha_l = t.val(alpha_l);
  out.trace.alpha = t.val(alpha);
  out.trace.s = t.val(s);
  out.trace.probs = t.val(probs);

  if (ex.gold >= 0) {
    if (ex.gold >= cfg.n_classes)
      throw DataError("gold label index out of range on example " + std::to_string(ex.id));
    Val j_cls = t.cross_entropy_logits(logits, ex.gold);
    Val j = j_cls;
    double j_loc = 0.0;
    if (cfg.mode == LocalizationMode::Soft) {
      if (ex.sdp.m.numel() != l)
        throw DataError("SDP mask length mismatch on example " + std::to_string(ex.id));
      Val loc = t.bce_sum(m, ex.sdp.m);
      j_loc = t.scalar(loc);
      j = t.add(j_cls, loc);
    }
    out.has_loss = true;
    out.loss_cls = t.scalar(j_cls);
    out.loss_loc = j_loc;
    out.loss = t.scalar(j);
    if (grads != nullptr) t.backward(j);
  }
  return out;
}

// --- standalone layer functions ---

namespace {

GruCellVals load_cell(Tape& t, const GruWeights& w) {
  return GruCellVals{t.input(w.Wz), t.input(w.Uz), t.input(w.bz),
                     t.input(w.Wr), t.input(w.Ur), t.input(w.br),
                     t.input(w.Wh), t.input(w.Uh), t.input(w.bh)};
}

std::vector<Val> input_rows(Tape& t, const Tensor& mat) {
  if (mat.rank() != 2) throw UsageError("expected a matrix of row vectors");
  std::vector<Val> rows(static_cast<size_t>(mat.rows()));
  for (int i = 0; i < mat.rows(); ++i) {
    Tensor r({mat.cols()});
    std::copy(mat.row(i), mat.row(i) + mat.cols(), r.data());
    rows[static_cast<size_t>(i)] = t.input(std::move(r));
  }
  return rows;
}

const ParamStore& empty_params() {
  static const ParamStore store;
  return store;
}

}  // namespace

GruWeights GruWeights::zeros(int input_dim, int hidden) {
  GruWeights w;
  w.Wz = Tensor({hidden, input_dim});
  w.Uz = Tensor({hidden, hidden});
  w.bz = Tensor({hidden});
  w.Wr = Tensor({hidden, input_dim});
  w.Ur = Tensor({hidden, hidden});
  w.br = Tensor({hidden});
  w.Wh = Tensor({hidden, input_dim});
  w.Uh = Tensor({hidden, hidden});
  w.bh = Tensor({hidden});
  return w;
}

GruWeights GruWeights::random(int input_dim, int hidden, double stddev, Rng& rng) {
  GruWeights w = zeros(input_dim, hidden);
  w.Wz = gaussian_init({hidden, input_dim}, stddev, rng);
  w.Uz = gaussian_init({hidden, hidden}, stddev, rng);
  w.Wr = gaussian_init({hidden, input_dim}, stddev, rng);
  w.Ur = gaussian_init({hidden, hidden}, stddev, rng);
  w.Wh = gaussian_init({hidden, input_dim}, stddev, rng);
  w.Uh = gaussian_init({hidden, hidden}, stddev, rng);
  return w;
}

Tensor embed_input(const PreparedExample& ex, const Tensor& wv,
                   const Tensor& pv1, const Tensor& pv2) {
  const int l = static_cast<int>(ex.tokens.size());
  if (l < 1) throw DataError("example has no tokens");
  const int d_e = wv.cols();
  const int d_p = pv1.cols();
  Tensor out({l, d_e + 2 * d_p});
  auto copy_row = [&](const Tensor& table, int row, int i, int off) {
    if (row < 0 || row >= table.rows())
      throw UsageError("embedding row index out of bounds (vocab/config mismatch)");
    for (int j = 0; j < table.cols(); ++j) out.at(i, off + j) = table.at(row, j);
  };
  for (int i = 0; i < l; ++i) {
    copy_row(wv, ex.tokens[static_cast<size_t>(i)], i, 0);
    copy_row(pv1, ex.pos1[static_cast<size_t>(i)], i, d_e);
    copy_row(pv2, ex.pos2[static_cast<size_t>(i)], i, d_e + d_p);
  }
  return out;
}

Tensor gru_step(const GruWeights& cell, const Tensor& x, const Tensor& h_prev) {
  Tape t(empty_params(), nullptr);
  return t.val(gru_step(t, load_cell(t, cell), t.input(x), t.input(h_prev)));
}

Tensor bigru_forward(const GruWeights& fwd, const GruWeights& bwd,
                     const Tensor& inputs) {
  Tape t(empty_params(), nullptr);
  std::vector<Val> rows = input_rows(t, inputs);
  return stack_rows(t, bigru_scan(t, load_cell(t, fwd), load_cell(t, bwd), rows,
                                  fwd.hidden()));
}

Tensor entity_attention_vector(const GruWeights& cell, const Tensor& w_e1,
                               const Tensor& w_e2) {
  Tape t(empty_params(), nullptr);
  GruCellVals c = load_cell(t, cell);
  Val h0 = t.input(Tensor({cell.hidden()}));
  return t.val(gru_step(t, c, t.input(w_e2), gru_step(t, c, t.input(w_e1), h0)));
}

Tensor global_attention(const Tensor& H, const Tensor& c) {
  Tape t(empty_params(), nullptr);
  return t.val(t.softmax(t.dots(input_rows(t, H), t.input(c))));
}

Tensor local_attention(const Tensor& H, const Tensor& c, const Tensor& m,
                       double mask_floor) {
  if (m.numel() != H.rows())
    throw UsageError("mask length does not match the number of hidden states");
  for (int64_t i = 0; i < m.numel(); ++i)
    if (!(m[i] >= 0.0 && m[i] <= 1.0))
      throw UsageError("mask entries must lie in [0,1]");
  Tape t(empty_params(), nullptr);
  Val e = t.exp_shift(t.dots(input_rows(t, H), t.input(c)));
  return t.val(t.normalize(masked_weights(t, t.input(m), e, mask_floor, -1)));
}

Tensor soft_localization(const GruWeights& fwd, const GruWeights& bwd,
                         const Tensor& Wl, double bl, const Tensor& inputs) {
  Tape t(empty_params(), nullptr);
  std::vector<Val> rows = input_rows(t, inputs);
  std::vector<Val> Hl = bigru_scan(t, load_cell(t, fwd), load_cell(t, bwd), rows,
                                   fwd.hidden());
  Val wl = t.input(Wl);
  Val b = t.input(Tensor::vec({bl}));
  std::vector<Val> ms(Hl.size());
  for (size_t i = 0; i < Hl.size(); ++i)
    ms[i] = t.sigmoid(t.add(t.matvec(wl, Hl[i]), b));
  return t.val(t.concat_n(ms));
}

double localization_loss(const Tensor& m, const Tensor& sdp) {
  if (m.numel() != sdp.numel())
    throw UsageError("localization loss: mask/indicator length mismatch");
  Tape t(empty_params(), nullptr);
  return t.scalar(t.bce_sum(t.input(m), sdp));
}

Tensor hybrid(const Tensor& alpha_g, const Tensor& alpha_l, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("gamma must lie in [0,1]");
  if (!alpha_g.same_shape(alpha_l))
    throw UsageError("attention vectors differ in length");
  return add(scale(alpha_g, gamma), scale(alpha_l, 1.0 - gamma));
}

ClassifyResult classify(const Tensor& H, const Tensor& alpha, const Tensor& Wc,
                        const Tensor& bc) {
  Tape t(empty_params(), nullptr);
  Val s = t.lincomb(t.input(alpha), input_rows(t, H));
  Val probs = t.softmax(t.add(t.matvec(t.input(Wc), s), t.input(bc)));
  return ClassifyResult{t.val(s), t.val(probs)};
}

double total_loss(const Tensor& probs, int gold, double j_loc,
                  LocalizationMode mode) {
  if (gold < 0 || gold >= probs.numel())
    throw UsageError("gold class index out of range");
  double j_cls = -std::log(probs[gold]);
  return mode == LocalizationMode::Soft ? j_cls + j_loc : j_cls;
}

}  // namespace glarc
