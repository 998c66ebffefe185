#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glarc/corpus.hpp"
#include "glarc/model.hpp"
#include "glarc/params.hpp"

namespace glarc {

struct AdadeltaState {
  double rho = 0.95, eps = 1e-6, lr = 1.0;
  std::vector<Tensor> sq_grad;   // E[g^2], one per parameter
  std::vector<Tensor> sq_delta;  // E[dx^2], one per parameter

  AdadeltaState() = default;
  explicit AdadeltaState(const ParamStore& params, double rho = 0.95,
                         double eps = 1e-6, double lr = 1.0);
};

// One accumulated-gradient step:
//   E[g^2]  <- rho E[g^2] + (1-rho) g^2
//   delta    = -lr * sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps) * g
//   E[dx^2] <- rho E[dx^2] + (1-rho) delta^2
//   param   += delta
// Throws NumericError (leaving params and state untouched) on non-finite
// gradients.
void adadelta_step(ParamStore& params, const GradStore& grads, AdadeltaState& state);

// When step % period == 0, rescales every row of every Weight-kind tensor
// whose Euclidean norm exceeds cap back to norm = cap. Biases and embedding
// tables are exempt; other steps are exact no-ops.
void maxnorm_project(ParamStore& params, double cap, int step, int period);

struct EpochStats {
  int epoch = 0;
  double j = 0.0, j_cls = 0.0, j_loc = 0.0;  // per-example means
  std::optional<double> f1;
};

struct FitOptions {
  int epochs = 50;
  int batch = 10;  // gradient-accumulation group size
  std::uint64_t seed = 1;
  double maxnorm_cap = 3.0;
  int maxnorm_period = 5;
  // Invoked after each epoch (checkpointing, logging, test-set scoring);
  // a returned value is recorded as the epoch's F1.
  std::function<std::optional<double>(const ParamStore&, const ModelIds&,
                                      const EpochStats&)>
      on_epoch;
};

struct FitResult {
  ParamStore params;
  ModelIds ids;
  AdadeltaState opt;
  std::vector<EpochStats> history;
  int epochs_run = 0;
  // Set when an epoch produced a non-finite loss or gradient; params/opt are
  // rolled back to the end of the last completed epoch.
  bool diverged = false;
};

// Deterministic training loop: one seeded rng drives init, per-epoch
// shuffling, and dropout. word_embeddings, when non-empty, seeds embed.word.
FitResult fit(const std::vector<PreparedExample>& train, ModelConfig cfg,
              const FitOptions& opts, Tensor word_embeddings = Tensor());

// --- checkpointing ---

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  ModelConfig model;
  std::vector<std::string> vocab_tokens;  // vocab entries from index 2 on
  std::vector<std::string> labels;        // class names in index order
  int epoch = 0;
  ParamStore params;
  bool has_opt = false;
  AdadeltaState opt;

  Vocab vocab() const;
  LabelSet label_set() const { return LabelSet::from_labels(labels); }
};

// Binary layout: magic, u32 version, length-prefixed key-value config text
// block, then per tensor: u32 name length + bytes, u32 rank, u32 dims, raw
// little-endian 64-bit floats. Optimizer tensors, when present, follow in
// the same record format. Writes are atomic (temp file + rename);
// load(save(x)) is bit-exact.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// --- gamma sweep ---

struct SweepTrial {
  std::uint64_t seed = 0;
  double best_f1 = 0.0;
  int best_epoch = 0;
};

struct SweepRow {
  double gamma = 0.0;
  double best_f1 = 0.0;  // max over trials of (max over epochs)
  double mean_f1 = 0.0;  // mean over trials of (max over epochs)
  std::vector<SweepTrial> trials;
};

struct SweepOptions {
  std::vector<double> gammas;
  int trials = 1;
  int jobs = 1;  // independent trainings run on this many threads
  std::uint64_t seed = 1;  // trial t uses seed + t
  FitOptions fit;          // epochs/batch/max-norm; seed and on_epoch overridden
};

// Trains one model per (gamma, trial) with otherwise identical configs and
// scores the test set after every epoch. Output order follows opts.gammas
// regardless of scheduling.
std::vector<SweepRow> gamma_sweep(const std::vector<PreparedExample>& train,
                                  const std::vector<PreparedExample>& test,
                                  const LabelSet& labels, const ModelConfig& base,
                                  const SweepOptions& opts,
                                  Tensor word_embeddings = Tensor());

// Machine-readable table: one "<gamma>\t<best>\t<mean>\t<trials>" row per
// gamma after "trial" detail lines.
std::string render_sweep(const std::vector<SweepRow>& rows);

}  // namespace glarc
