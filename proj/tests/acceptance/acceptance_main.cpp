// End-to-end acceptance checks. Each criterion prints exactly one line:
//   [PASS] criterion N: <name> — <measured detail>
//   [FAIL] criterion N: <name> — <what broke>
// The process exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "glarc/corpus.hpp"
#include "glarc/errors.hpp"
#include "glarc/eval.hpp"
#include "glarc/gradcheck.hpp"
#include "glarc/model.hpp"
#include "glarc/params.hpp"
#include "glarc/rng.hpp"
#include "glarc/tensor.hpp"
#include "glarc/train.hpp"

using namespace glarc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double s = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = (rng.uniform01() - 0.5) * 2.0 * s;
  return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) && std::equal(a.data(), a.data() + a.numel(), b.data());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  check(a.same_shape(b), "shape mismatch in comparison");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

PreparedExample demo_example(const ModelConfig& cfg, int l, int gold,
                             const std::vector<double>& mask) {
  PreparedExample ex;
  ex.id = 1;
  for (int i = 0; i < l; ++i) ex.tokens.push_back(2 + i % (cfg.vocab_size - 2));
  ex.e1 = 0;
  ex.e2 = l - 1;
  ex.pos1 = relative_positions(l, ex.e1, cfg.clip);
  ex.pos2 = relative_positions(l, ex.e2, cfg.clip);
  ex.gold = gold;
  ex.sdp.m = Tensor::vec(mask);
  ex.sdp.source = SdpMask::Source::Hard;
  return ex;
}

// --- shared synthetic pipeline ------------------------------------------------

struct Prepared {
  SyntheticData raw;
  Vocab vocab;
  LabelSet labels = LabelSet::from_labels({});
  std::vector<PreparedExample> train, test;
};

Prepared prepare_synthetic(const SyntheticSpec& spec, int clip) {
  Prepared out;
  out.raw = make_synthetic(spec);
  VocabPlan plan = build_vocab(out.raw.train, nullptr);
  out.vocab = plan.vocab;
  out.labels = LabelSet::from_labels(out.raw.labels);
  for (const Example& ex : out.raw.train)
    out.train.push_back(prepare(ex, out.vocab, out.labels, clip));
  for (const Example& ex : out.raw.test)
    out.test.push_back(prepare(ex, out.vocab, out.labels, clip));
  return out;
}

// Token index of the planted keyword in a raw sentence.
int keyword_index(const Example& ex, const std::vector<std::string>& keywords) {
  for (int i = 0; i < ex.length(); ++i)
    for (const std::string& k : keywords)
      if (ex.tokens[static_cast<size_t>(i)] == k) return i;
  throw CheckFailure("synthetic example lacks a keyword");
}

// --- criterion 1 ---------------------------------------------------------------

std::string criterion_gradients() {
  Clock::time_point t0 = Clock::now();
  std::ostringstream detail;
  for (LocalizationMode mode :
       {LocalizationMode::None, LocalizationMode::Hard, LocalizationMode::Soft}) {
    ModelConfig cfg;
    cfg.d_e = 8;
    cfg.d_p = 3;
    cfg.d_h = 6;
    cfg.gamma = 0.5;
    cfg.mode = mode;
    cfg.clip = 8;
    cfg.n_classes = 5;
    cfg.dropout_rate = 0.0;
    cfg.vocab_size = 10;

    ParamStore store;
    Rng rng(44);
    ModelIds ids = init_parameters(store, cfg, rng);
    // At init scale (std 0.1) some gradient coordinates sit below the
    // finite-difference noise floor and fail the relative test for spurious
    // reasons; check at a larger-magnitude generic point instead.
    for (int i = 0; i < store.size(); ++i) {
      Tensor& t = store.tensor(i);
      for (std::int64_t k = 0; k < t.numel(); ++k) t[k] *= 6.0;
    }
    PreparedExample ex = demo_example(cfg, 5, 2, {1, 0, 1, 0, 1});

    LossFn loss = [&](const ParamStore& p, GradStore* g) {
      return forward(ex, p, ids, cfg, false, nullptr, g).loss;
    };
    GradCheckOptions opts;
    opts.h = 1e-5;
    opts.tol = 1e-4;
    GradReport rep = grad_check(loss, store, opts);
    check(rep.pass, std::string("mode ") + to_string(mode) + ": max rel err " +
                        fmt(rep.max_rel_err) + " at " + rep.worst().name);
    detail << to_string(mode) << "=" << fmt(rep.max_rel_err, 3) << " ";
  }
  double dt = seconds_since(t0);
  check(dt < 30.0, "took " + fmt(dt) + " s (limit 30)");
  return "max rel errs " + detail.str() + "in " + fmt(dt, 3) + " s (tol 1e-4, h 1e-5)";
}

// --- criterion 2 ---------------------------------------------------------------

std::string criterion_degeneracies() {
  double worst = 0.0;
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    // free-standing attention identities on random states
    int l = 2 + static_cast<int>(rng.below(7));
    int d = 2 + static_cast<int>(rng.below(5));
    Tensor H = random_tensor({l, d}, rng, 1.5);
    Tensor c = random_tensor({d}, rng, 1.5);
    Tensor ag = global_attention(H, c);
    Tensor al_ones = local_attention(H, c, Tensor::full({l}, 1.0));
    worst = std::max(worst, max_abs_diff(ag, al_ones));

    Tensor some_local = softmax(random_tensor({l}, rng, 2.0));
    worst = std::max(worst, max_abs_diff(hybrid(ag, some_local, 1.0), ag));
    worst = std::max(worst, max_abs_diff(hybrid(ag, some_local, 0.0), some_local));
  }

  // whole-model trace: hard mode under an all-ones fallback mask vs mode none
  ModelConfig hard;
  hard.d_e = 6;
  hard.d_p = 2;
  hard.d_h = 5;
  hard.gamma = 0.37;
  hard.mode = LocalizationMode::Hard;
  hard.clip = 6;
  hard.n_classes = 4;
  hard.dropout_rate = 0.0;
  hard.vocab_size = 9;
  ParamStore store;
  Rng prng(43);
  ModelIds ids = init_parameters(store, hard, prng);
  ModelConfig none = hard;
  none.mode = LocalizationMode::None;

  for (int trial = 0; trial < 25; ++trial) {
    int l = 2 + static_cast<int>(rng.below(6));
    PreparedExample ex = demo_example(hard, l, 1, std::vector<double>(static_cast<size_t>(l), 1.0));
    ex.sdp.source = SdpMask::Source::Fallback;
    ForwardResult rh = forward(ex, store, ids, hard);
    ForwardResult rn = forward(ex, store, ids, none);
    worst = std::max(worst, max_abs_diff(rh.trace.alpha, rn.trace.alpha));
    worst = std::max(worst, max_abs_diff(rh.trace.alpha_l, rn.trace.alpha_l));
    worst = std::max(worst, max_abs_diff(rh.trace.alpha_g, rn.trace.alpha_g));
    worst = std::max(worst, max_abs_diff(rh.trace.probs, rn.trace.probs));
    worst = std::max(worst, std::abs(rh.loss - rn.loss));

    ModelConfig g1 = hard;
    g1.gamma = 1.0;
    ForwardResult r1 = forward(ex, store, ids, g1);
    worst = std::max(worst, max_abs_diff(r1.trace.alpha, r1.trace.alpha_g));
  }

  check(worst <= 1e-15, "worst elementwise deviation " + fmt(worst));
  return "worst elementwise deviation " + fmt(worst, 3) + " (limit 1e-15)";
}

// --- criterion 3 ---------------------------------------------------------------

std::string criterion_simplex() {
  Rng rng(44);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int l = 2 + static_cast<int>(rng.below(7));
    int d = 2 + static_cast<int>(rng.below(5));
    Tensor H = random_tensor({l, d}, rng, 2.0);
    Tensor c = random_tensor({d}, rng, 2.0);

    // mask per mode: none / hard indicator / soft weights in (0,1)
    Tensor m({l});
    int mode = static_cast<int>(rng.below(3));
    if (mode == 0) {
      m = Tensor::full({l}, 1.0);
    } else if (mode == 1) {
      bool any = false;
      for (int i = 0; i < l; ++i) {
        m[i] = rng.below(2) ? 1.0 : 0.0;
        any |= m[i] == 1.0;
      }
      if (!any) m[static_cast<int>(rng.below(static_cast<std::uint64_t>(l)))] = 1.0;
    } else {
      for (int i = 0; i < l; ++i) m[i] = 0.05 + 0.9 * rng.uniform01();
    }
    double gamma = rng.uniform01();
    if (trial % 5 == 0) gamma = 0.0;  // exercise the endpoint regularly

    Tensor ag = global_attention(H, c);
    Tensor al = local_attention(H, c, m);
    Tensor a = hybrid(ag, al, gamma);
    Tensor Wc = random_tensor({4, d}, rng);
    Tensor bc = random_tensor({4}, rng);
    Tensor probs = classify(H, a, Wc, bc).probs;

    for (const Tensor* v : {&ag, &al, &a, &probs}) {
      double sum = 0.0;
      for (std::int64_t i = 0; i < v->numel(); ++i) {
        check((*v)[i] >= 0.0, "negative attention/probability weight");
        sum += (*v)[i];
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }

    if (mode == 1) {
      for (int i = 0; i < l; ++i) {
        if (m[i] == 0.0) {
          check(al[i] == 0.0, "hard-mode local weight off the mask is nonzero");
          if (gamma == 0.0) check(a[i] == 0.0, "gamma=0 hybrid weight off the mask is nonzero");
        }
      }
    }

    // shift invariance: adding a constant to every score must not move the
    // weights beyond 1e-12 (scores enter through a 1-column H and unit c)
    Tensor scores = random_tensor({l}, rng, 10.0);
    double shift_v = (rng.uniform01() - 0.5) * 400.0;
    Tensor shifted = scores;
    for (int i = 0; i < l; ++i) shifted[i] += shift_v;
    Tensor h1({l, 1}), h2({l, 1});
    for (int i = 0; i < l; ++i) {
      h1.at(i, 0) = scores[i];
      h2.at(i, 0) = shifted[i];
    }
    Tensor unit = Tensor::vec({1.0});
    worst_shift = std::max(worst_shift,
                           max_abs_diff(global_attention(h1, unit), global_attention(h2, unit)));
    worst_shift =
        std::max(worst_shift, max_abs_diff(local_attention(h1, unit, m), local_attention(h2, unit, m)));
  }
  check(worst_sum <= 1e-9, "worst simplex deviation " + fmt(worst_sum));
  check(worst_shift <= 1e-12, "worst shift deviation " + fmt(worst_shift));
  return "1000 configs: simplex dev " + fmt(worst_sum, 3) + " (limit 1e-9), shift dev " +
         fmt(worst_shift, 3) + " (limit 1e-12)";
}

// --- criterion 4 ---------------------------------------------------------------

std::vector<int> bfs_path_mask(const std::vector<int>& heads, int e1, int e2) {
  const int n = static_cast<int>(heads.size());
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (heads[static_cast<size_t>(i)] >= 0) {
      adj[static_cast<size_t>(i)].push_back(heads[static_cast<size_t>(i)]);
      adj[static_cast<size_t>(heads[static_cast<size_t>(i)])].push_back(i);
    }
  }
  std::vector<int> prev(static_cast<size_t>(n), -2);
  std::deque<int> queue{e1};
  prev[static_cast<size_t>(e1)] = -1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<size_t>(u)])
      if (prev[static_cast<size_t>(v)] == -2) {
        prev[static_cast<size_t>(v)] = u;
        queue.push_back(v);
      }
  }
  if (prev[static_cast<size_t>(e2)] == -2) return {};
  std::vector<int> mask(static_cast<size_t>(n), 0);
  for (int u = e2; u != -1; u = prev[static_cast<size_t>(u)]) mask[static_cast<size_t>(u)] = 1;
  return mask;
}

std::string criterion_sdp() {
  Rng rng(45);
  int fallbacks = 0, exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(rng.below(19));
    std::vector<int> heads(static_cast<size_t>(n), -1);
    for (int i = 1; i < n; ++i) {
      bool extra_root = trial % 2 == 1 && rng.below(7) == 0;
      heads[static_cast<size_t>(i)] =
          extra_root ? -1 : static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    }
    int e1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int e2 = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

    SdpMask got = shortest_dependency_path(heads, n, e1, e2);
    std::vector<int> oracle = bfs_path_mask(heads, e1, e2);
    if (oracle.empty()) {
      check(got.source == SdpMask::Source::Fallback,
            "cross-component pair did not fall back");
      for (int i = 0; i < n; ++i) check(got.m[i] == 1.0, "fallback mask not all ones");
      ++fallbacks;
    } else {
      check(got.source == SdpMask::Source::Hard, "connected pair fell back");
      for (int i = 0; i < n; ++i)
        check(got.m[i] == static_cast<double>(oracle[static_cast<size_t>(i)]),
              "path mask deviates from the BFS oracle");
      ++exact;
    }
  }
  check(fallbacks > 0, "generator produced no cross-component cases");
  return fmt(exact, 6) + " exact matches, " + fmt(fallbacks, 6) +
         " fallbacks, all agreeing with the BFS oracle";
}

// --- criterion 5 ---------------------------------------------------------------

double oracle_macro_f1(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred, const LabelSet& labels) {
  std::map<std::pair<int, int>, int> confusion;
  for (size_t i = 0; i < gold.size(); ++i)
    ++confusion[{labels.index_of(gold[i]), labels.index_of(pred[i])}];
  double f1_sum = 0.0;
  std::vector<std::string> types = labels.relation_types();
  for (const std::string& type : types) {
    int tp = 0, predicted = 0, gold_count = 0;
    for (const auto& [cell, count] : confusion) {
      const std::string& g = labels.name(cell.first);
      const std::string& p = labels.name(cell.second);
      if (LabelSet::type_of(g) == type && cell.first == cell.second) tp += count;
      if (LabelSet::type_of(p) == type) predicted += count;
      if (LabelSet::type_of(g) == type) gold_count += count;
    }
    double precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    double recall = gold_count > 0 ? static_cast<double>(tp) / gold_count : 0.0;
    f1_sum += (precision + recall) > 0.0
                  ? 2.0 * precision * recall / (precision + recall)
                  : 0.0;
  }
  return f1_sum / static_cast<double>(types.size());
}

std::string criterion_scorer() {
  LabelSet labels = LabelSet::semeval();
  Rng rng(46);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + static_cast<int>(rng.below(80));
    std::vector<std::string> gold, pred;
    for (int i = 0; i < n; ++i) {
      gold.push_back(labels.name(static_cast<int>(rng.below(19))));
      pred.push_back(labels.name(static_cast<int>(rng.below(19))));
    }
    double got = macro_f1(gold, pred, labels).macro_f1;
    double want = oracle_macro_f1(gold, pred, labels);
    check(got == want, "scorer deviates from the counting oracle: " + fmt(got, 17) +
                           " vs " + fmt(want, 17));
  }

  LabelSet ab = LabelSet::from_labels({"A(e1,e2)", "B(e1,e2)", "Other"});
  EvalReport rep = macro_f1(
      {"A(e1,e2)", "A(e1,e2)", "A(e2,e1)", "B(e1,e2)", "Other", "Other"},
      {"A(e1,e2)", "A(e2,e1)", "A(e2,e1)", "Other", "B(e1,e2)", "Other"}, ab);
  check(rep.macro_f1 == 1.0 / 3.0,
        "six-example case gives " + fmt(rep.macro_f1, 17) + ", want exactly 1/3");
  return "500 random assignments exact, six-example case = 1/3 exactly";
}

// --- criterion 6 ---------------------------------------------------------------

std::string criterion_optimizer() {
  ParamStore p;
  Rng rng(47);
  p.add("w", gaussian_init({4, 3}, 0.5, rng), ParamKind::Weight);
  p.add("b", gaussian_init({6}, 0.5, rng), ParamKind::Bias);
  AdadeltaState st(p);

  std::vector<std::vector<double>> vals(2), eg(2), ed(2);
  for (int i = 0; i < 2; ++i) {
    const Tensor& t = p.tensor(i);
    vals[static_cast<size_t>(i)].assign(t.data(), t.data() + t.numel());
    eg[static_cast<size_t>(i)].assign(static_cast<size_t>(t.numel()), 0.0);
    ed[static_cast<size_t>(i)].assign(static_cast<size_t>(t.numel()), 0.0);
  }
  Rng grng(48);
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    GradStore g(p);
    for (int i = 0; i < 2; ++i)
      for (std::int64_t k = 0; k < g.tensor(i).numel(); ++k)
        g.tensor(i)[k] = (grng.uniform01() - 0.5) * 4.0;
    adadelta_step(p, g, st);
    for (int i = 0; i < 2; ++i) {
      auto& v = vals[static_cast<size_t>(i)];
      auto& egi = eg[static_cast<size_t>(i)];
      auto& edi = ed[static_cast<size_t>(i)];
      for (size_t k = 0; k < v.size(); ++k) {
        double gv = g.tensor(i)[static_cast<std::int64_t>(k)];
        egi[k] = 0.95 * egi[k] + 0.05 * gv * gv;
        double delta = -std::sqrt(edi[k] + 1e-6) / std::sqrt(egi[k] + 1e-6) * gv;
        edi[k] = 0.95 * edi[k] + 0.05 * delta * delta;
        v[k] += delta;
        worst = std::max(worst,
                         std::abs(p.tensor(i)[static_cast<std::int64_t>(k)] - v[k]));
      }
    }
  }
  check(worst <= 1e-12, "replay deviation " + fmt(worst) + " after 100 steps");

  // max-norm: projection caps weight rows when it fires, does nothing otherwise
  ParamStore mp;
  Rng mrng(49);
  mp.add("w1", random_tensor({5, 4}, mrng, 4.0), ParamKind::Weight);
  mp.add("w2", random_tensor({3, 6}, mrng, 4.0), ParamKind::Weight);
  mp.add("emb", random_tensor({4, 4}, mrng, 9.0), ParamKind::Embedding);
  mp.add("b", random_tensor({5}, mrng, 9.0), ParamKind::Bias);

  for (int step = 1; step <= 10; ++step) {
    ParamStore before = mp;
    maxnorm_project(mp, 3.0, step, 5);
    if (step % 5 != 0) {
      for (int i = 0; i < mp.size(); ++i)
        check(bit_equal(mp.tensor(i), before.tensor(i)),
              "non-firing step mutated a tensor");
    } else {
      for (int i : {0, 1}) {
        const Tensor& w = mp.tensor(i);
        for (int r = 0; r < w.rows(); ++r) {
          double sq = 0.0;
          for (int c = 0; c < w.cols(); ++c) sq += w.at(r, c) * w.at(r, c);
          check(std::sqrt(sq) <= 3.0 + 1e-9,
                "row norm " + fmt(std::sqrt(sq)) + " exceeds the cap");
        }
      }
      check(bit_equal(mp.tensor(2), before.tensor(2)), "embedding was projected");
      check(bit_equal(mp.tensor(3), before.tensor(3)), "bias was projected");
    }
    // refresh a row past the cap so later firing steps have work to do
    mp.tensor(0).at(1, 0) = 5.0;
  }
  return "replay deviation " + fmt(worst, 3) +
         " (limit 1e-12); row norms capped at firing steps, bit-exact no-ops otherwise";
}

// --- criterion 7 ---------------------------------------------------------------

std::string criterion_synthetic_end_to_end() {
  Clock::time_point t0 = Clock::now();
  SyntheticSpec spec;
  spec.classes = 4;
  spec.train_count = 500;
  spec.test_count = 200;
  spec.vocab = 120;
  spec.min_len = 6;
  spec.max_len = 12;
  spec.seed = 3;
  Prepared data = prepare_synthetic(spec, 10);

  ModelConfig cfg;
  cfg.d_e = 16;
  cfg.d_p = 4;
  cfg.d_h = 32;
  cfg.gamma = 0.5;
  cfg.mode = LocalizationMode::Hard;
  cfg.clip = 10;
  cfg.n_classes = data.labels.size();
  cfg.dropout_rate = 0.0;
  cfg.vocab_size = data.vocab.size();

  FitOptions opts;
  opts.epochs = 30;
  opts.batch = 10;
  opts.seed = 1;
  opts.on_epoch = [&](const ParamStore& params, const ModelIds& ids, const EpochStats&) {
    int correct = 0;
    for (const PreparedExample& ex : data.test) {
      ForwardResult r = forward(ex, params, ids, cfg);
      if (predict_index(r.trace.probs) == ex.gold) ++correct;
    }
    return std::optional<double>(static_cast<double>(correct) /
                                 static_cast<double>(data.test.size()));
  };
  FitResult res = fit(data.train, cfg, opts);
  check(!res.diverged, "training diverged");

  double best_acc = 0.0;
  int best_epoch = 0;
  for (const EpochStats& st : res.history) {
    if (st.f1 && *st.f1 > best_acc) {
      best_acc = *st.f1;
      best_epoch = st.epoch;
    }
  }
  double dt = seconds_since(t0);
  check(best_acc >= 0.95, "best test accuracy " + fmt(best_acc) + " after " +
                              fmt(res.epochs_run, 3) + " epochs (need 0.95)");
  check(dt < 300.0, "took " + fmt(dt) + " s (limit 300)");

  // attention concentration: the hybrid weights must put more mass on the
  // planted keyword than the global weights alone
  double mass_alpha = 0.0, mass_global = 0.0;
  for (size_t i = 0; i < data.test.size(); ++i) {
    int kw = keyword_index(data.raw.test[i], data.raw.keywords);
    ForwardResult r = forward(data.test[i], res.params, res.ids, cfg);
    mass_alpha += r.trace.alpha[kw];
    mass_global += r.trace.alpha_g[kw];
  }
  mass_alpha /= static_cast<double>(data.test.size());
  mass_global /= static_cast<double>(data.test.size());
  check(mass_alpha > mass_global,
        "hybrid keyword mass " + fmt(mass_alpha) + " does not exceed global " +
            fmt(mass_global));
  return "accuracy " + fmt(best_acc, 4) + " at epoch " + fmt(best_epoch, 3) + " in " +
         fmt(dt, 3) + " s; keyword mass " + fmt(mass_alpha, 4) + " hybrid vs " +
         fmt(mass_global, 4) + " global (margin " +
         fmt(mass_alpha - mass_global, 3) + ")";
}

// --- criterion 8 ---------------------------------------------------------------

std::string criterion_soft_localization() {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.train_count = 300;
  spec.test_count = 100;
  spec.vocab = 80;
  spec.min_len = 6;
  spec.max_len = 10;
  spec.seed = 13;
  Prepared data = prepare_synthetic(spec, 10);

  ModelConfig cfg;
  cfg.d_e = 12;
  cfg.d_p = 3;
  cfg.d_h = 16;
  cfg.gamma = 0.5;
  cfg.mode = LocalizationMode::Soft;
  cfg.clip = 10;
  cfg.n_classes = data.labels.size();
  cfg.dropout_rate = 0.0;
  cfg.vocab_size = data.vocab.size();

  FitOptions opts;
  opts.epochs = 12;
  opts.batch = 10;
  opts.seed = 2;
  FitResult res = fit(data.train, cfg, opts);
  check(!res.diverged, "training diverged");
  check(res.history.size() >= 5, "fewer than 5 epochs recorded");
  for (int i = 1; i < 5; ++i) {
    check(res.history[static_cast<size_t>(i)].j_loc <
              res.history[static_cast<size_t>(i - 1)].j_loc,
          "J_loc rose between epochs " + fmt(i, 3) + " and " + fmt(i + 1, 3) + " (" +
              fmt(res.history[static_cast<size_t>(i - 1)].j_loc) + " -> " +
              fmt(res.history[static_cast<size_t>(i)].j_loc) + ")");
  }

  double on_sum = 0.0, off_sum = 0.0;
  std::int64_t on_n = 0, off_n = 0;
  for (const PreparedExample& ex : data.test) {
    ForwardResult r = forward(ex, res.params, res.ids, cfg);
    for (int i = 0; i < static_cast<int>(ex.tokens.size()); ++i) {
      if (ex.sdp.m[i] == 1.0) {
        on_sum += r.trace.m[i];
        ++on_n;
      } else {
        off_sum += r.trace.m[i];
        ++off_n;
      }
    }
  }
  double on_mean = on_sum / static_cast<double>(on_n);
  double off_mean = off_sum / static_cast<double>(off_n);
  check(on_mean - off_mean >= 0.2, "localization separation " + fmt(on_mean - off_mean) +
                                       " below 0.2 (on " + fmt(on_mean) + ", off " +
                                       fmt(off_mean) + ")");
  return "J_loc " + fmt(res.history[0].j_loc, 4) + " -> " + fmt(res.history[4].j_loc, 4) +
         " over 5 epochs (monotone); mean m on-path " + fmt(on_mean, 4) + " vs off-path " +
         fmt(off_mean, 4) + " (separation " + fmt(on_mean - off_mean, 3) + ")";
}

// --- criterion 9 ---------------------------------------------------------------

std::string criterion_recipe_and_sweep() {
  // the full-corpus recipe is documentation: it must exist and pin the
  // reproduction settings
  fs::path readme = fs::path(GLARC_SOURCE_DIR) / "README.md";
  check(fs::exists(readme), "README.md is missing");
  std::ifstream f(readme);
  std::string text((std::istreambuf_iterator<char>(f)), {});
  for (const char* needle : {"--mode soft", "--gamma 0.5", "sweep", "macro-F1", "82.0"})
    check(text.find(needle) != std::string::npos,
          std::string("README lacks the recipe detail '") + needle + "'");

  // the sweep runner must emit a per-gamma table on the desk-scale benchmark
  SyntheticSpec spec;
  spec.classes = 4;
  spec.train_count = 120;
  spec.test_count = 60;
  spec.vocab = 60;
  spec.min_len = 6;
  spec.max_len = 9;
  spec.seed = 17;
  Prepared data = prepare_synthetic(spec, 10);

  ModelConfig base;
  base.d_e = 10;
  base.d_p = 3;
  base.d_h = 8;
  base.mode = LocalizationMode::Hard;
  base.clip = 10;
  base.n_classes = data.labels.size();
  base.dropout_rate = 0.0;
  base.vocab_size = data.vocab.size();

  SweepOptions opts;
  opts.gammas = {0.0, 0.5, 1.0};
  opts.trials = 1;
  opts.jobs = 3;
  opts.seed = 1;
  opts.fit.epochs = 4;
  opts.fit.batch = 10;
  std::vector<SweepRow> rows = gamma_sweep(data.train, data.test, data.labels, base, opts);
  check(rows.size() == 3, "sweep did not produce one row per gamma");
  std::ostringstream table;
  for (size_t i = 0; i < rows.size(); ++i) {
    check(rows[i].gamma == opts.gammas[i], "sweep rows out of order");
    check(std::isfinite(rows[i].best_f1) && rows[i].best_f1 >= 0.0 && rows[i].best_f1 <= 1.0,
          "sweep best F1 out of range");
    table << "gamma " << fmt(rows[i].gamma, 3) << ": best F1 " << fmt(rows[i].best_f1, 4);
    if (i + 1 < rows.size()) table << ", ";
  }
  std::string sweep_text = render_sweep(rows);
  check(sweep_text.find("# gamma") != std::string::npos, "sweep table lacks a summary header");
  return "recipe documented in README.md; sweep table emitted — " + table.str() +
         " (ordering reported, not asserted)";
}

// --- criterion 10 --------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(GLARC_CLI_PATH) + " " + args + " >>" + log.string() +
                    " 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  check(f.good(), "cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// The effective config faithfully echoes --out, which the re-runs vary on
// purpose; everything else must match byte for byte.
std::string without_out_line(std::string text) {
  std::istringstream in(text);
  std::ostringstream kept;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("out=", 0) != 0) kept << line << '\n';
  return kept.str();
}

std::string criterion_determinism() {
  fs::path root = fs::path("acceptance_tmp");
  fs::remove_all(root);
  fs::create_directories(root);
  fs::path log = root / "cli.log";
  auto run = [&](const std::string& args) {
    int code = run_cli(args, log);
    check(code == 0, "CLI exited with " + fmt(code, 3) + " for: " + args +
                         " (see " + log.string() + ")");
  };

  fs::path synth = root / "synth";
  run("synth --classes 2 --train 30 --test 12 --vocab 20 --min-len 5 --max-len 7 --seed 4 --out " +
      synth.string());

  std::string data_flags = " --data " + (synth / "train.txt").string() + " --deps " +
                           (synth / "train.deps").string();
  std::string test_flags = " --test-data " + (synth / "test.txt").string() +
                           " --test-deps " + (synth / "test.deps").string();
  std::string model_flags =
      " --de 6 --dp 2 --dh 4 --mode soft --gamma 0.5 --dropout 0.5 --clip 8";

  for (const char* dir : {"run1", "run2"}) {
    run("train" + data_flags + test_flags + model_flags +
        " --epochs 2 --batch 5 --seed 9 --out " + (root / dir).string());
  }
  check(slurp(root / "run1" / "checkpoint.ckpt") == slurp(root / "run2" / "checkpoint.ckpt"),
        "repeated training produced different checkpoints");
  check(slurp(root / "run1" / "history.txt") == slurp(root / "run2" / "history.txt"),
        "repeated training produced different histories");
  check(without_out_line(slurp(root / "run1" / "effective.cfg")) ==
            without_out_line(slurp(root / "run2" / "effective.cfg")),
        "repeated training produced different effective configs");

  std::string ckpt = (root / "run1" / "checkpoint.ckpt").string();
  std::string eval_flags = " --checkpoint " + ckpt + " --data " +
                           (synth / "test.txt").string() + " --deps " +
                           (synth / "test.deps").string();
  for (const char* dir : {"eval1", "eval2"})
    run("eval" + eval_flags + " --out " + (root / dir).string());
  check(slurp(root / "eval1" / "report.txt") == slurp(root / "eval2" / "report.txt"),
        "repeated evaluation produced different reports");

  for (const char* dir : {"pred1", "pred2"})
    run("predict" + eval_flags + " --out " + (root / dir).string());
  check(slurp(root / "pred1" / "predictions.tsv") == slurp(root / "pred2" / "predictions.tsv"),
        "repeated prediction produced different outputs");

  for (const char* dir : {"dump1", "dump2"})
    run("dump-attention" + eval_flags + " --id 31 --out " + (root / dir).string());
  check(slurp(root / "dump1" / "attention.txt") == slurp(root / "dump2" / "attention.txt"),
        "repeated attention dump produced different traces");

  for (const char* dir : {"sweep1", "sweep2"}) {
    run("sweep" + data_flags + test_flags +
        " --de 6 --dp 2 --dh 4 --mode hard --gammas 0,1 --trials 1 --jobs 2 "
        "--epochs 1 --batch 5 --seed 9 --out " +
        (root / dir).string());
  }
  check(slurp(root / "sweep1" / "sweep.tsv") == slurp(root / "sweep2" / "sweep.tsv"),
        "repeated sweep produced different tables");

  return "train/eval/predict/dump-attention/sweep re-runs are byte-identical "
         "(checkpoint, history, report, predictions, traces, sweep table)";
}

struct Criterion {
  int number;
  std::string name;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness (all modes)", criterion_gradients},
      {2, "degeneracy equivalences", criterion_degeneracies},
      {3, "simplex and shift invariance", criterion_simplex},
      {4, "shortest-path oracle equivalence", criterion_sdp},
      {5, "scorer oracle equivalence", criterion_scorer},
      {6, "optimizer oracle", criterion_optimizer},
      {7, "synthetic end-to-end", criterion_synthetic_end_to_end},
      {8, "soft-localization learning", criterion_soft_localization},
      {9, "full-corpus recipe and gamma sweep", criterion_recipe_and_sweep},
      {10, "seeded determinism through the CLI", criterion_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string verdict, detail;
    try {
      detail = c.run();
      verdict = "[PASS]";
    } catch (const std::exception& e) {
      detail = e.what();
      verdict = "[FAIL]";
      ++failures;
    }
    std::cout << verdict << " criterion " << c.number << ": " << c.name << " — "
              << detail << "\n"
              << std::flush;
  }
  if (failures > 0)
    std::cout << failures << " criterion(s) failed" << std::endl;
  return failures;
}
