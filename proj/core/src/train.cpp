#include "glarc/train.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <utility>

#include "glarc/errors.hpp"
#include "glarc/eval.hpp"

namespace glarc {

AdadeltaState::AdadeltaState(const ParamStore& params, double rho_, double eps_,
                             double lr_)
    : rho(rho_), eps(eps_), lr(lr_) {
  sq_grad.reserve(static_cast<size_t>(params.size()));
  sq_delta.reserve(static_cast<size_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) {
    sq_grad.emplace_back(params.tensor(i).shape());
    sq_delta.emplace_back(params.tensor(i).shape());
  }
}

void adadelta_step(ParamStore& params, const GradStore& grads, AdadeltaState& state) {
  if (grads.size() != params.size() ||
      static_cast<int>(state.sq_grad.size()) != params.size() ||
      static_cast<int>(state.sq_delta.size()) != params.size())
    throw UsageError("optimizer state does not match the parameter store");
  for (int i = 0; i < params.size(); ++i)
    if (!grads.tensor(i).all_finite())
      throw NumericError("non-finite gradient in parameter '" + params.name(i) + "'");
  for (int i = 0; i < params.size(); ++i) {
    Tensor& p = params.tensor(i);
    const Tensor& g = grads.tensor(i);
    Tensor& eg = state.sq_grad[static_cast<size_t>(i)];
    Tensor& ed = state.sq_delta[static_cast<size_t>(i)];
    for (int64_t k = 0; k < p.numel(); ++k) {
      eg[k] = state.rho * eg[k] + (1.0 - state.rho) * g[k] * g[k];
      double delta = -state.lr * std::sqrt(ed[k] + state.eps) /
                     std::sqrt(eg[k] + state.eps) * g[k];
      ed[k] = state.rho * ed[k] + (1.0 - state.rho) * delta * delta;
      p[k] += delta;
    }
  }
}

void maxnorm_project(ParamStore& params, double cap, int step, int period) {
  if (!(cap > 0.0)) throw UsageError("max-norm cap must be positive");
  if (period < 1) throw UsageError("max-norm period must be >= 1");
  if (step % period != 0) return;
  for (int i = 0; i < params.size(); ++i) {
    if (params.kind(i) != ParamKind::Weight) continue;
    Tensor& w = params.tensor(i);
    for (int r = 0; r < w.rows(); ++r) {
      double sq = 0.0;
      for (int c = 0; c < w.cols(); ++c) sq += w.at(r, c) * w.at(r, c);
      double norm = std::sqrt(sq);
      if (norm > cap) {
        double k = cap / norm;
        for (int c = 0; c < w.cols(); ++c) w.at(r, c) *= k;
      }
    }
  }
}

FitResult fit(const std::vector<PreparedExample>& train, ModelConfig cfg,
              const FitOptions& opts, Tensor word_embeddings) {
  if (train.empty()) throw UsageError("training set is empty");
  if (opts.epochs < 1) throw UsageError("epochs must be >= 1");
  if (opts.batch < 1) throw UsageError("batch size must be >= 1");
  cfg.validate();
  for (const PreparedExample& ex : train)
    if (ex.gold < 0)
      throw DataError("unlabeled example " + std::to_string(ex.id) +
                      " in the training set");

  Rng rng(opts.seed);
  FitResult res;
  res.ids = init_parameters(res.params, cfg, rng, std::move(word_embeddings));
  res.opt = AdadeltaState(res.params);
  GradStore grads(res.params);

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  ParamStore last_good = res.params;
  AdadeltaState last_good_opt = res.opt;
  int step = 0;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    shuffle(order, rng);
    double ej = 0.0, ej_cls = 0.0, ej_loc = 0.0;
    bool bad = false;
    int in_batch = 0;
    grads.zero();
    for (size_t k = 0; k < order.size(); ++k) {
      const PreparedExample& ex = train[order[k]];
      ForwardResult r = forward(ex, res.params, res.ids, cfg, true, &rng, &grads);
      if (!std::isfinite(r.loss)) {
        bad = true;
        break;
      }
      ej += r.loss;
      ej_cls += r.loss_cls;
      ej_loc += r.loss_loc;
      if (++in_batch == opts.batch || k + 1 == order.size()) {
        try {
          adadelta_step(res.params, grads, res.opt);
        } catch (const NumericError&) {
          bad = true;
          break;
        }
        ++step;
        maxnorm_project(res.params, opts.maxnorm_cap, step, opts.maxnorm_period);
        grads.zero();
        in_batch = 0;
      }
    }
    if (bad) {
      res.params = std::move(last_good);
      res.opt = std::move(last_good_opt);
      res.diverged = true;
      break;
    }
    double n = static_cast<double>(train.size());
    EpochStats st;
    st.epoch = epoch;
    st.j = ej / n;
    st.j_cls = ej_cls / n;
    st.j_loc = ej_loc / n;
    if (opts.on_epoch) st.f1 = opts.on_epoch(res.params, res.ids, st);
    res.history.push_back(st);
    res.epochs_run = epoch;
    last_good = res.params;
    last_good_opt = res.opt;
  }
  return res;
}

// --- checkpointing ---

namespace {

constexpr char kMagic[8] = {'G', 'L', 'A', 'R', 'C', 'K', 'P', 'T'};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t b = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((b >> (8 * i)) & 0xff));
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int d = 0; d < t.rank(); ++d)
    put_u32(out, static_cast<std::uint32_t>(t.dim(d)));
  for (int64_t i = 0; i < t.numel(); ++i) put_f64(out, t[i]);
}

struct Reader {
  const std::string& buf;
  size_t off = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("checkpoint " + what + " at offset " + std::to_string(off));
  }
  void need(size_t n) const {
    if (off + n > buf.size()) fail("truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
    off += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
    off += 8;
    return std::bit_cast<double>(v);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(off, n);
    off += n;
    return s;
  }
};

std::pair<std::string, Tensor> read_tensor(Reader& r) {
  std::uint32_t name_len = r.u32();
  if (name_len > 4096) r.fail("has an implausible tensor-name length");
  std::string name = r.bytes(name_len);
  std::uint32_t rank = r.u32();
  if (rank < 1 || rank > 8) r.fail("has an implausible tensor rank");
  std::vector<int> dims(rank);
  std::uint64_t numel = 1;
  for (std::uint32_t d = 0; d < rank; ++d) {
    std::uint32_t v = r.u32();
    if (v < 1 || v > (1u << 30)) r.fail("has an implausible tensor dimension");
    dims[d] = static_cast<int>(v);
    numel *= v;
  }
  if (numel > (1ull << 32)) r.fail("has an implausible tensor size");
  Tensor t(dims);
  for (std::uint64_t i = 0; i < numel; ++i) t[static_cast<int64_t>(i)] = r.f64();
  return {std::move(name), std::move(t)};
}

ParamKind infer_kind(const std::string& name) {
  if (name.rfind("embed.", 0) == 0) return ParamKind::Embedding;
  size_t dot = name.find_last_of('.');
  size_t head = dot == std::string::npos ? 0 : dot + 1;
  return (head < name.size() && name[head] == 'b') ? ParamKind::Bias
                                                   : ParamKind::Weight;
}

template <typename It>
std::string join(It first, It last, char sep) {
  std::string out;
  for (It it = first; it != last; ++it) {
    if (it != first) out.push_back(sep);
    out += *it;
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(sep, start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string config_block(const Checkpoint& c) {
  std::ostringstream o;
  o << "d_e=" << c.model.d_e << "\n";
  o << "d_p=" << c.model.d_p << "\n";
  o << "d_h=" << c.model.d_h << "\n";
  o << "d_l=" << c.model.d_l << "\n";
  o << "gamma=" << fmt17(c.model.gamma) << "\n";
  o << "mode=" << to_string(c.model.mode) << "\n";
  o << "clip=" << c.model.clip << "\n";
  o << "n_classes=" << c.model.n_classes << "\n";
  o << "dropout=" << fmt17(c.model.dropout_rate) << "\n";
  o << "mask_floor=" << fmt17(c.model.mask_floor) << "\n";
  o << "entity_dropout=" << (c.model.entity_dropout ? 1 : 0) << "\n";
  o << "vocab_size=" << c.model.vocab_size << "\n";
  o << "epoch=" << c.epoch << "\n";
  o << "labels=" << join(c.labels.begin(), c.labels.end(), '\t') << "\n";
  o << "vocab=" << join(c.vocab_tokens.begin(), c.vocab_tokens.end(), ' ') << "\n";
  o << "tensors=" << c.params.size() << "\n";
  o << "opt=" << (c.has_opt ? 1 : 0) << "\n";
  if (c.has_opt) {
    o << "rho=" << fmt17(c.opt.rho) << "\n";
    o << "eps=" << fmt17(c.opt.eps) << "\n";
    o << "lr=" << fmt17(c.opt.lr) << "\n";
  }
  return o.str();
}

class KeyValues {
 public:
  explicit KeyValues(const std::string& block) {
    size_t start = 0;
    while (start < block.size()) {
      size_t end = block.find('\n', start);
      if (end == std::string::npos) end = block.size();
      std::string line = block.substr(start, end - start);
      start = end + 1;
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw DataError("checkpoint config line without '=': " + line);
      map_[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) throw DataError("checkpoint config is missing key '" + key + "'");
    return it->second;
  }
  int get_int(const std::string& key) const {
    try {
      return std::stoi(get(key));
    } catch (const std::exception&) {
      throw DataError("checkpoint config key '" + key + "' is not an integer");
    }
  }
  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      throw DataError("checkpoint config key '" + key + "' is not a number");
    }
  }

 private:
  std::unordered_map<std::string, std::string> map_;
};

}  // namespace

Vocab Checkpoint::vocab() const {
  Vocab v;
  for (const std::string& tok : vocab_tokens) v.add(tok);
  return v;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, Checkpoint::kVersion);
  std::string cfg = config_block(ckpt);
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  for (int i = 0; i < ckpt.params.size(); ++i)
    put_tensor(out, ckpt.params.name(i), ckpt.params.tensor(i));
  if (ckpt.has_opt) {
    if (static_cast<int>(ckpt.opt.sq_grad.size()) != ckpt.params.size() ||
        static_cast<int>(ckpt.opt.sq_delta.size()) != ckpt.params.size())
      throw UsageError("optimizer state does not match the parameter store");
    for (int i = 0; i < ckpt.params.size(); ++i) {
      put_tensor(out, "g2." + ckpt.params.name(i),
                 ckpt.opt.sq_grad[static_cast<size_t>(i)]);
      put_tensor(out, "dx2." + ckpt.params.name(i),
                 ckpt.opt.sq_delta[static_cast<size_t>(i)]);
    }
  }

  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write checkpoint file " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f.good()) throw DataError("write failed for checkpoint file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec)
    throw DataError("cannot move checkpoint into place at " + target.string() +
                    ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read checkpoint file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string buf = ss.str();

  Reader r{buf};
  std::string magic = r.bytes(sizeof(kMagic));
  if (magic != std::string(kMagic, sizeof(kMagic)))
    throw DataError("not a checkpoint file (bad magic): " + path);
  std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " (supported: " + std::to_string(Checkpoint::kVersion) + ")");
  std::uint32_t cfg_len = r.u32();
  KeyValues kv(r.bytes(cfg_len));

  Checkpoint c;
  c.model.d_e = kv.get_int("d_e");
  c.model.d_p = kv.get_int("d_p");
  c.model.d_h = kv.get_int("d_h");
  c.model.d_l = kv.get_int("d_l");
  c.model.gamma = kv.get_double("gamma");
  c.model.mode = parse_localization_mode(kv.get("mode"));
  c.model.clip = kv.get_int("clip");
  c.model.n_classes = kv.get_int("n_classes");
  c.model.dropout_rate = kv.get_double("dropout");
  c.model.mask_floor = kv.get_double("mask_floor");
  c.model.entity_dropout = kv.get_int("entity_dropout") != 0;
  c.model.vocab_size = kv.get_int("vocab_size");
  c.epoch = kv.get_int("epoch");
  c.labels = split(kv.get("labels"), '\t');
  c.vocab_tokens = split(kv.get("vocab"), ' ');
  int tensors = kv.get_int("tensors");
  c.has_opt = kv.get_int("opt") != 0;

  for (int i = 0; i < tensors; ++i) {
    auto [name, t] = read_tensor(r);
    c.params.add(name, std::move(t), infer_kind(name));
  }
  if (c.has_opt) {
    c.opt = AdadeltaState(c.params, kv.get_double("rho"), kv.get_double("eps"),
                          kv.get_double("lr"));
    for (int i = 0; i < tensors; ++i) {
      auto [gname, gt] = read_tensor(r);
      if (gname != "g2." + c.params.name(i))
        r.fail("has out-of-order optimizer tensor '" + gname + "'");
      auto [dname, dt] = read_tensor(r);
      if (dname != "dx2." + c.params.name(i))
        r.fail("has out-of-order optimizer tensor '" + dname + "'");
      if (!gt.same_shape(c.params.tensor(i)) || !dt.same_shape(c.params.tensor(i)))
        r.fail("has optimizer tensors with mismatched shapes");
      c.opt.sq_grad[static_cast<size_t>(i)] = std::move(gt);
      c.opt.sq_delta[static_cast<size_t>(i)] = std::move(dt);
    }
  }
  if (r.off != buf.size()) r.fail("has trailing bytes");
  return c;
}

// --- gamma sweep ---

std::vector<SweepRow> gamma_sweep(const std::vector<PreparedExample>& train,
                                  const std::vector<PreparedExample>& test,
                                  const LabelSet& labels, const ModelConfig& base,
                                  const SweepOptions& opts,
                                  Tensor word_embeddings) {
  if (opts.gammas.empty()) throw UsageError("gamma sweep needs at least one value");
  if (opts.trials < 1) throw UsageError("trials must be >= 1");
  if (opts.jobs < 1) throw UsageError("jobs must be >= 1");
  if (test.empty()) throw UsageError("gamma sweep needs a labeled test set");
  for (const PreparedExample& ex : test)
    if (ex.gold < 0)
      throw DataError("unlabeled example " + std::to_string(ex.id) + " in the test set");

  std::vector<std::string> gold;
  gold.reserve(test.size());
  for (const PreparedExample& ex : test) gold.push_back(labels.name(ex.gold));

  struct Task {
    size_t gamma_idx;
    int trial;
  };
  std::vector<Task> tasks;
  for (size_t gi = 0; gi < opts.gammas.size(); ++gi)
    for (int t = 0; t < opts.trials; ++t) tasks.push_back({gi, t});

  std::vector<SweepTrial> results(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto run_task = [&](size_t task_idx) {
    const Task& task = tasks[task_idx];
    ModelConfig cfg = base;
    cfg.gamma = opts.gammas[task.gamma_idx];
    FitOptions fo = opts.fit;
    fo.seed = opts.seed + static_cast<std::uint64_t>(task.trial);
    fo.on_epoch = [&](const ParamStore& params, const ModelIds& ids,
                      const EpochStats&) -> std::optional<double> {
      std::vector<std::string> predicted;
      predicted.reserve(test.size());
      for (const PreparedExample& ex : test)
        predicted.push_back(predict(params, ids, cfg, labels, ex));
      return macro_f1(gold, predicted, labels).macro_f1;
    };
    FitResult fr = fit(train, cfg, fo, word_embeddings);
    SweepTrial out;
    out.seed = fo.seed;
    out.best_f1 = 0.0;
    out.best_epoch = 0;
    for (const EpochStats& st : fr.history) {
      if (st.f1 && *st.f1 > out.best_f1) {
        out.best_f1 = *st.f1;
        out.best_epoch = st.epoch;
      }
    }
    results[task_idx] = out;
  };

  auto worker = [&] {
    for (;;) {
      size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      try {
        run_task(idx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  if (opts.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    int n = std::min<int>(opts.jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SweepRow> rows(opts.gammas.size());
  for (size_t gi = 0; gi < opts.gammas.size(); ++gi) {
    rows[gi].gamma = opts.gammas[gi];
    rows[gi].trials.resize(static_cast<size_t>(opts.trials));
  }
  for (size_t i = 0; i < tasks.size(); ++i)
    rows[tasks[i].gamma_idx].trials[static_cast<size_t>(tasks[i].trial)] = results[i];
  for (SweepRow& row : rows) {
    double best = 0.0, sum = 0.0;
    for (const SweepTrial& t : row.trials) {
      best = std::max(best, t.best_f1);
      sum += t.best_f1;
    }
    row.best_f1 = best;
    row.mean_f1 = sum / static_cast<double>(row.trials.size());
  }
  return rows;
}

std::string render_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "# trial\tgamma\tseed\tbest_f1\tbest_epoch\n";
  for (const SweepRow& row : rows)
    for (const SweepTrial& t : row.trials)
      o << "trial\t" << fmt17(row.gamma) << '\t' << t.seed << '\t'
        << fmt17(t.best_f1) << '\t' << t.best_epoch << '\n';
  o << "# gamma\tbest_f1\tmean_f1\ttrials\n";
  for (const SweepRow& row : rows)
    o << fmt17(row.gamma) << '\t' << fmt17(row.best_f1) << '\t'
      << fmt17(row.mean_f1) << '\t' << row.trials.size() << '\n';
  return o.str();
}

}  // namespace glarc
