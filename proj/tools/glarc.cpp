// glarc: global-local attention BiGRU for relation classification.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glarc/corpus.hpp"
#include "glarc/errors.hpp"
#include "glarc/eval.hpp"
#include "glarc/gradcheck.hpp"
#include "glarc/model.hpp"
#include "glarc/params.hpp"
#include "glarc/rng.hpp"
#include "glarc/train.hpp"

namespace fs = std::filesystem;
using namespace glarc;

namespace {

struct Opts {
  std::string out = ".";
  std::string data, deps, test_data, test_deps, embeddings, checkpoint;
  std::uint64_t seed = 1;
  double gamma = 0.5;
  std::string mode = "soft";
  int epochs = 50, batch = 10;
  int de = 50, dp = 5, dh = 100, dl = 0, clip = 30;
  double dropout = 0.5, maxnorm = 3.0, mask_floor = 1e-8;
  int maxnorm_period = 5;
  bool no_entity_dropout = false;
  bool save_epochs = false;
  int trials = 1, jobs = 1;
  std::string gammas = "0,0.5,1";
  // synth
  int classes = 4, train_count = 500, test_count = 200;
  int vocab = 120, min_len = 6, max_len = 12;
  double off_fraction = 0.0;
  // dump-attention / grad-check
  int example_id = -1;
  int tokens = 5;
  int gc_de = 8, gc_dp = 3, gc_dh = 6;  // grad-check model dims
  double gc_h = 4e-4;                   // central-difference step
};

ModelConfig model_config_from(const Opts& o) {
  ModelConfig cfg;
  cfg.d_e = o.de;
  cfg.d_p = o.dp;
  cfg.d_h = o.dh;
  cfg.d_l = o.dl;
  cfg.gamma = o.gamma;
  cfg.mode = parse_localization_mode(o.mode);
  cfg.clip = o.clip;
  cfg.dropout_rate = o.dropout;
  cfg.mask_floor = o.mask_floor;
  cfg.entity_dropout = !o.no_entity_dropout;
  return cfg;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("not a number in list: '" + item + "'");
    }
    if (used != item.size()) throw UsageError("not a number in list: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write file " + path.string());
  f << content;
  if (!f.good()) throw DataError("write failed for file " + path.string());
}

fs::path ensure_out_dir(const Opts& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  return dir;
}

void echo_effective_config(CLI::App* sub, const fs::path& out_dir) {
  write_text(out_dir / "effective.cfg", sub->config_to_str(true, false));
}

std::vector<Example> load_examples(const std::string& data_path,
                                   const std::string& deps_path) {
  if (data_path.empty()) throw UsageError("--data is required");
  std::ifstream f(data_path);
  if (!f) throw DataError("cannot open data file " + data_path);
  std::vector<Example> examples = parse_semeval(f);
  if (!deps_path.empty()) {
    std::ifstream d(deps_path);
    if (!d) throw DataError("cannot open dependency file " + deps_path);
    load_deps_sidecar(d, examples);
  }
  return examples;
}

std::vector<PreparedExample> prepare_all(const std::vector<Example>& examples,
                                         const Vocab& vocab, const LabelSet& labels,
                                         int clip) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) out.push_back(prepare(ex, vocab, labels, clip));
  return out;
}

std::vector<std::string> observed_labels(const std::vector<Example>& examples) {
  std::vector<std::string> labels;
  for (const Example& ex : examples)
    if (ex.label != kUnknownLabel) labels.push_back(ex.label);
  if (labels.empty()) throw DataError("no labeled examples found");
  return labels;
}

struct LoadedModel {
  Checkpoint ckpt;
  ModelIds ids;
  Vocab vocab;
  LabelSet labels;
};

LoadedModel load_model(const std::string& path) {
  if (path.empty()) throw UsageError("--checkpoint is required");
  Checkpoint ckpt = load_checkpoint(path);
  ModelIds ids = bind_parameters(ckpt.params, ckpt.model);
  Vocab vocab = ckpt.vocab();
  LabelSet labels = ckpt.label_set();
  if (vocab.size() != ckpt.model.vocab_size)
    throw DataError("checkpoint vocabulary does not match its config");
  if (labels.size() != ckpt.model.n_classes)
    throw DataError("checkpoint label set does not match its config");
  return LoadedModel{std::move(ckpt), ids, std::move(vocab), std::move(labels)};
}

std::optional<EmbeddingTable> load_pretrained(const Opts& o) {
  if (o.embeddings.empty()) return std::nullopt;
  std::ifstream f(o.embeddings);
  if (!f) throw DataError("cannot open embedding file " + o.embeddings);
  return load_embedding_text(f, o.de);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string history_lines(const std::vector<EpochStats>& history) {
  std::ostringstream o;
  o << "# epoch\tJ\tJ_cls\tJ_loc\tF1\n";
  for (const EpochStats& st : history) {
    o << st.epoch << '\t' << fmt17(st.j) << '\t' << fmt17(st.j_cls) << '\t'
      << fmt17(st.j_loc) << '\t' << (st.f1 ? fmt17(*st.f1) : std::string("-"))
      << '\n';
  }
  return o.str();
}

// SemEval-format record plus sidecar line for generated corpora.
void write_corpus(const fs::path& data_path, const fs::path& deps_path,
                  const std::vector<Example>& examples) {
  std::ostringstream data, deps;
  for (const Example& ex : examples) {
    data << ex.id << "\t\"" << reserialize(ex) << "\"\n" << ex.label << "\n\n";
    deps << ex.id << '\t';
    for (size_t i = 0; i < ex.heads.size(); ++i) {
      if (i) deps << ' ';
      deps << ex.heads[i];
    }
    deps << '\n';
  }
  write_text(data_path, data.str());
  write_text(deps_path, deps.str());
}

// --- commands ---

int cmd_prep(const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  std::vector<Example> examples = load_examples(o.data, o.deps);
  int with_parse = 0, hard = 0, fallback = 0;
  for (const Example& ex : examples) {
    if (!ex.heads.empty()) ++with_parse;
    SdpMask mask = shortest_dependency_path(ex.heads, ex.length(), ex.e1, ex.e2, ex.id);
    (mask.source == SdpMask::Source::Hard ? hard : fallback) += 1;
  }
  std::optional<EmbeddingTable> pretrained = load_pretrained(o);
  VocabPlan plan = build_vocab(examples, pretrained ? &*pretrained : nullptr);

  std::ostringstream report;
  report << "examples=" << examples.size() << "\n";
  report << "with_parse=" << with_parse << "\n";
  report << "sdp_hard=" << hard << "\n";
  report << "sdp_fallback=" << fallback << "\n";
  report << "fallback_share=" << fmt17(static_cast<double>(fallback) /
                                       static_cast<double>(examples.size()))
         << "\n";
  report << "vocab_size=" << plan.vocab.size() << "\n";
  report << "pretrained_rows=" << plan.pretrained_rows << "\n";
  report << "random_rows=" << plan.random_rows << "\n";
  std::cout << report.str();
  write_text(out_dir / "prep.txt", report.str());
  return 0;
}

Checkpoint make_checkpoint(const FitResult& fr, const ModelConfig& cfg,
                           const Vocab& vocab, const LabelSet& labels, int epoch,
                           bool with_opt) {
  Checkpoint c;
  c.model = cfg;
  for (int i = 2; i < vocab.size(); ++i) c.vocab_tokens.push_back(vocab.token(i));
  c.labels = labels.names();
  c.epoch = epoch;
  c.params = fr.params;
  c.has_opt = with_opt;
  if (with_opt) c.opt = fr.opt;
  return c;
}

int cmd_train(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);

  std::vector<Example> raw_train = load_examples(o.data, o.deps);
  LabelSet labels = LabelSet::from_labels(observed_labels(raw_train));
  std::optional<EmbeddingTable> pretrained = load_pretrained(o);
  VocabPlan plan = build_vocab(raw_train, pretrained ? &*pretrained : nullptr);

  ModelConfig cfg = model_config_from(o);
  cfg.n_classes = labels.size();
  cfg.vocab_size = plan.vocab.size();

  Rng emb_rng(o.seed + 1);  // separate stream from the training rng
  Tensor word_embeddings = materialize_embeddings(
      plan, pretrained ? &*pretrained : nullptr, cfg.d_e, kInitStd, emb_rng);

  std::vector<PreparedExample> train_set =
      prepare_all(raw_train, plan.vocab, labels, cfg.clip);

  std::vector<PreparedExample> test_set;
  std::vector<std::string> test_gold;
  if (!o.test_data.empty()) {
    std::vector<Example> raw_test = load_examples(o.test_data, o.test_deps);
    test_set = prepare_all(raw_test, plan.vocab, labels, cfg.clip);
    for (const PreparedExample& ex : test_set) {
      if (ex.gold < 0)
        throw DataError("test example " + std::to_string(ex.id) + " is unlabeled");
      test_gold.push_back(labels.name(ex.gold));
    }
  }

  FitOptions fo;
  fo.epochs = o.epochs;
  fo.batch = o.batch;
  fo.seed = o.seed;
  fo.maxnorm_cap = o.maxnorm;
  fo.maxnorm_period = o.maxnorm_period;
  fo.on_epoch = [&](const ParamStore& params, const ModelIds& ids,
                    const EpochStats& st) -> std::optional<double> {
    std::optional<double> f1;
    if (!test_set.empty()) {
      std::vector<std::string> predicted;
      predicted.reserve(test_set.size());
      for (const PreparedExample& ex : test_set)
        predicted.push_back(predict(params, ids, cfg, labels, ex));
      f1 = macro_f1(test_gold, predicted, labels).macro_f1;
    }
    std::cout << "epoch " << st.epoch << "  J=" << fmt6(st.j)
              << " J_cls=" << fmt6(st.j_cls) << " J_loc=" << fmt6(st.j_loc);
    if (f1) std::cout << " F1=" << fmt6(*f1);
    std::cout << std::endl;
    if (o.save_epochs) {
      FitResult snapshot;
      snapshot.params = params;
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", st.epoch);
      save_checkpoint((out_dir / name).string(),
                      make_checkpoint(snapshot, cfg, plan.vocab, labels, st.epoch,
                                      /*with_opt=*/false));
    }
    return f1;
  };

  FitResult fr = fit(train_set, cfg, fo, std::move(word_embeddings));
  write_text(out_dir / "history.txt", history_lines(fr.history));
  save_checkpoint((out_dir / "checkpoint.ckpt").string(),
                  make_checkpoint(fr, cfg, plan.vocab, labels, fr.epochs_run,
                                  /*with_opt=*/true));
  if (fr.diverged) {
    std::cerr << "training diverged (non-finite loss); last good checkpoint from epoch "
              << fr.epochs_run << " retained" << std::endl;
    return 3;
  }
  std::cout << "checkpoint written to " << (out_dir / "checkpoint.ckpt").string()
            << std::endl;
  return 0;
}

int cmd_eval(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);
  LoadedModel m = load_model(o.checkpoint);
  std::vector<Example> raw = load_examples(o.data, o.deps);
  std::vector<PreparedExample> prepared =
      prepare_all(raw, m.vocab, m.labels, m.ckpt.model.clip);
  std::vector<std::string> gold, predicted;
  for (const PreparedExample& ex : prepared) {
    if (ex.gold < 0)
      throw DataError("example " + std::to_string(ex.id) +
                      " has no gold label; use predict instead");
    gold.push_back(m.labels.name(ex.gold));
    predicted.push_back(predict(m.ckpt.params, m.ids, m.ckpt.model, m.labels, ex));
  }
  EvalReport report = macro_f1(gold, predicted, m.labels);
  std::cout << render_report(report, m.labels);
  write_text(out_dir / "report.txt", report_key_values(report));
  return 0;
}

int cmd_predict(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);
  LoadedModel m = load_model(o.checkpoint);
  std::vector<Example> raw = load_examples(o.data, o.deps);
  std::vector<PreparedExample> prepared =
      prepare_all(raw, m.vocab, m.labels, m.ckpt.model.clip);
  std::ostringstream lines;
  for (const PreparedExample& ex : prepared)
    lines << ex.id << '\t'
          << predict(m.ckpt.params, m.ids, m.ckpt.model, m.labels, ex) << '\n';
  std::cout << lines.str();
  write_text(out_dir / "predictions.tsv", lines.str());
  return 0;
}

int cmd_dump_attention(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);
  LoadedModel m = load_model(o.checkpoint);
  std::vector<Example> raw = load_examples(o.data, o.deps);
  std::ostringstream out;
  bool found = false;
  for (const Example& ex : raw) {
    if (o.example_id >= 0 && ex.id != o.example_id) continue;
    found = true;
    PreparedExample prepared = prepare(ex, m.vocab, m.labels, m.ckpt.model.clip);
    out << "# example " << ex.id << "\n"
        << dump_attention(m.ckpt.params, m.ids, m.ckpt.model, ex, prepared) << "\n";
  }
  if (!found) throw DataError("example id " + std::to_string(o.example_id) +
                              " not present in " + o.data);
  std::cout << out.str();
  write_text(out_dir / "attention.txt", out.str());
  return 0;
}

int cmd_sweep(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);

  std::vector<Example> raw_train = load_examples(o.data, o.deps);
  if (o.test_data.empty()) throw UsageError("--test-data is required for sweep");
  std::vector<Example> raw_test = load_examples(o.test_data, o.test_deps);

  LabelSet labels = LabelSet::from_labels(observed_labels(raw_train));
  std::optional<EmbeddingTable> pretrained = load_pretrained(o);
  VocabPlan plan = build_vocab(raw_train, pretrained ? &*pretrained : nullptr);

  ModelConfig cfg = model_config_from(o);
  cfg.n_classes = labels.size();
  cfg.vocab_size = plan.vocab.size();

  Rng emb_rng(o.seed + 1);
  Tensor word_embeddings = materialize_embeddings(
      plan, pretrained ? &*pretrained : nullptr, cfg.d_e, kInitStd, emb_rng);

  std::vector<PreparedExample> train_set =
      prepare_all(raw_train, plan.vocab, labels, cfg.clip);
  std::vector<PreparedExample> test_set =
      prepare_all(raw_test, plan.vocab, labels, cfg.clip);

  SweepOptions so;
  so.gammas = parse_double_list(o.gammas);
  so.trials = o.trials;
  so.jobs = o.jobs;
  so.seed = o.seed;
  so.fit.epochs = o.epochs;
  so.fit.batch = o.batch;
  so.fit.maxnorm_cap = o.maxnorm;
  so.fit.maxnorm_period = o.maxnorm_period;

  std::vector<SweepRow> rows =
      gamma_sweep(train_set, test_set, labels, cfg, so, std::move(word_embeddings));
  std::string table = render_sweep(rows);
  std::cout << table;
  write_text(out_dir / "sweep.tsv", table);
  return 0;
}

int cmd_synth(CLI::App* sub, const Opts& o) {
  fs::path out_dir = ensure_out_dir(o);
  echo_effective_config(sub, out_dir);
  SyntheticSpec spec;
  spec.classes = o.classes;
  spec.train_count = o.train_count;
  spec.test_count = o.test_count;
  spec.vocab = o.vocab;
  spec.min_len = o.min_len;
  spec.max_len = o.max_len;
  spec.off_fraction = o.off_fraction;
  spec.seed = o.seed;
  SyntheticData data = make_synthetic(spec);
  write_corpus(out_dir / "train.txt", out_dir / "train.deps", data.train);
  write_corpus(out_dir / "test.txt", out_dir / "test.deps", data.test);
  std::cout << "train=" << data.train.size() << " test=" << data.test.size()
            << " classes=" << spec.classes << "\n";
  for (int k = 0; k < spec.classes; ++k)
    std::cout << "class " << k << ": keyword=" << data.keywords[static_cast<size_t>(k)]
              << " label=" << data.labels[static_cast<size_t>(k)] << "\n";
  return 0;
}

int cmd_grad_check(const Opts& o) {
  ModelConfig cfg;
  cfg.d_e = o.gc_de;
  cfg.d_p = o.gc_dp;
  cfg.d_h = o.gc_dh;
  cfg.d_l = o.dl;
  cfg.gamma = o.gamma;
  cfg.mode = parse_localization_mode(o.mode);
  cfg.clip = o.clip;
  cfg.mask_floor = o.mask_floor;
  cfg.dropout_rate = 0.0;  // finite differences need a deterministic loss
  cfg.vocab_size = 12;
  cfg.n_classes = 5;

  const int l = o.tokens;
  if (l < 3) throw UsageError("--tokens must be >= 3");
  Rng rng(o.seed);
  PreparedExample ex;
  ex.id = 1;
  ex.tokens.resize(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i)
    ex.tokens[static_cast<size_t>(i)] =
        2 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.vocab_size - 2)));
  ex.e1 = 1;
  ex.e2 = l - 2;
  ex.pos1 = relative_positions(l, ex.e1, cfg.clip);
  ex.pos2 = relative_positions(l, ex.e2, cfg.clip);
  ex.gold = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_classes)));
  std::vector<int> heads(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) heads[static_cast<size_t>(i)] = i - 1;  // chain, root at 0
  ex.sdp = shortest_dependency_path(heads, l, ex.e1, ex.e2, ex.id);

  ParamStore params;
  ModelIds ids = init_parameters(params, cfg, rng);
  // At init scale (std 0.1) some gradient coordinates sit below the
  // finite-difference noise floor and fail the relative test for spurious
  // reasons; audit at a larger-magnitude generic point instead.
  for (int i = 0; i < params.size(); ++i) {
    Tensor& t = params.tensor(i);
    for (std::int64_t k = 0; k < t.numel(); ++k) t[k] *= 4.0;
  }
  GradCheckOptions gopts;
  gopts.seed = o.seed;
  gopts.h = o.gc_h;
  GradReport report = grad_check(
      [&](const ParamStore& p, GradStore* g) {
        return forward(ex, p, ids, cfg, false, nullptr, g).loss;
      },
      params, gopts);

  for (const GradReport::PerParam& pp : report.params)
    std::cout << "param " << pp.name << "  max_rel_err=" << fmt17(pp.max_rel_err)
              << " coords=" << pp.coords_checked << "\n";
  std::cout << (report.pass ? "grad check PASS" : "grad check FAIL")
            << " (max rel err " << fmt17(report.max_rel_err) << ", tol "
            << fmt17(report.tol) << ", mode " << to_string(cfg.mode) << ")\n";
  if (!report.pass && report.max_rel_err < 1e-2)
    std::cout << "note: marginal failures can come from coordinates whose true "
                 "gradient sits near the finite-difference noise floor; a real "
                 "backward bug fails at every --fd-step and --seed, so retry "
                 "with a few other values before concluding anything\n";
  return report.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"global-local attention BiGRU for relation classification"};
  app.require_subcommand(1);
  Opts o;

  auto add_common = [&](CLI::App* sub) {
    sub->set_config("--config", "", "flat key=value config file; CLI flags override");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "rng seed")->capture_default_str();
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--gamma", o.gamma, "hybrid ratio in [0,1]")->capture_default_str();
    sub->add_option("--mode", o.mode, "localization mode")
        ->check(CLI::IsMember({"none", "hard", "soft"}))
        ->capture_default_str();
    sub->add_option("--de", o.de, "word embedding dim")->capture_default_str();
    sub->add_option("--dp", o.dp, "position embedding dim")->capture_default_str();
    sub->add_option("--dh", o.dh, "encoder hidden size")->capture_default_str();
    sub->add_option("--dl", o.dl, "localization hidden size (0 = dh)")
        ->capture_default_str();
    sub->add_option("--clip", o.clip, "position clip window")->capture_default_str();
    sub->add_option("--dropout", o.dropout, "dropout rate")->capture_default_str();
    sub->add_option("--mask-floor", o.mask_floor, "local attention underflow floor")
        ->capture_default_str();
    sub->add_flag("--no-entity-dropout", o.no_entity_dropout,
                  "entity GRU reads pre-dropout embeddings");
  };
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--epochs", o.epochs, "training epochs")->capture_default_str();
    sub->add_option("--batch", o.batch, "gradient accumulation size")
        ->capture_default_str();
    sub->add_option("--maxnorm", o.maxnorm, "max-norm cap")->capture_default_str();
    sub->add_option("--maxnorm-period", o.maxnorm_period, "steps between projections")
        ->capture_default_str();
    sub->add_option("--embeddings", o.embeddings, "pretrained word2vec text file");
  };
  auto add_data = [&](CLI::App* sub, bool required) {
    CLI::Option* d = sub->add_option("--data", o.data, "SemEval-format data file");
    if (required) d->required();
    sub->add_option("--deps", o.deps, "dependency-heads sidecar");
  };

  CLI::App* prep = app.add_subcommand("prep", "validate data and report SDP statistics");
  add_common(prep);
  add_data(prep, true);
  prep->add_option("--embeddings", o.embeddings, "pretrained word2vec text file");
  prep->add_option("--de", o.de, "word embedding dim")->capture_default_str();

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train);
  add_data(train, true);
  add_model(train);
  add_train(train);
  train->add_option("--test-data", o.test_data, "held-out set scored each epoch");
  train->add_option("--test-deps", o.test_deps, "dependency sidecar for --test-data");
  train->add_flag("--save-epochs", o.save_epochs, "write a checkpoint every epoch");

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on labeled data");
  add_common(eval);
  add_data(eval, true);
  eval->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

  CLI::App* predict = app.add_subcommand("predict", "write id<TAB>label predictions");
  add_common(predict);
  add_data(predict, true);
  predict->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

  CLI::App* dump = app.add_subcommand("dump-attention", "per-token attention traces");
  add_common(dump);
  add_data(dump, true);
  dump->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  dump->add_option("--id", o.example_id, "restrict to one example id")
      ->capture_default_str();

  CLI::App* sweep = app.add_subcommand("sweep", "train across gamma values");
  add_common(sweep);
  add_data(sweep, true);
  add_model(sweep);
  add_train(sweep);
  sweep->add_option("--test-data", o.test_data, "held-out set scored each epoch")
      ->required();
  sweep->add_option("--test-deps", o.test_deps, "dependency sidecar for --test-data");
  sweep->add_option("--gammas", o.gammas, "comma-separated gamma values")
      ->capture_default_str();
  sweep->add_option("--trials", o.trials, "independent trials per gamma")
      ->capture_default_str();
  sweep->add_option("--jobs", o.jobs, "parallel trainings")->capture_default_str();

  CLI::App* synth = app.add_subcommand("synth", "generate the planted-keyword benchmark");
  add_common(synth);
  synth->add_option("--classes", o.classes, "number of classes")->capture_default_str();
  synth->add_option("--train", o.train_count, "training examples")->capture_default_str();
  synth->add_option("--test", o.test_count, "test examples")->capture_default_str();
  synth->add_option("--vocab", o.vocab, "noise vocabulary size")->capture_default_str();
  synth->add_option("--min-len", o.min_len, "shortest sentence")->capture_default_str();
  synth->add_option("--max-len", o.max_len, "longest sentence")->capture_default_str();
  synth->add_option("--off-fraction", o.off_fraction,
                    "share of keywords placed off the pseudo-SDP")
      ->capture_default_str();

  CLI::App* gradcheck = app.add_subcommand(
      "grad-check", "finite-difference gradient check on a small random model");
  add_common(gradcheck);
  gradcheck->add_option("--gamma", o.gamma, "hybrid ratio in [0,1]")
      ->capture_default_str();
  gradcheck->add_option("--mode", o.mode, "localization mode")
      ->check(CLI::IsMember({"none", "hard", "soft"}))
      ->capture_default_str();
  gradcheck->add_option("--de", o.gc_de, "word embedding dim")->capture_default_str();
  gradcheck->add_option("--dp", o.gc_dp, "position embedding dim")
      ->capture_default_str();
  gradcheck->add_option("--dh", o.gc_dh, "encoder hidden size")->capture_default_str();
  gradcheck->add_option("--dl", o.dl, "localization hidden size (0 = dh)")
      ->capture_default_str();
  gradcheck->add_option("--tokens", o.tokens, "sentence length")->capture_default_str();
  gradcheck->add_option("--fd-step", o.gc_h, "central-difference step")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (prep->parsed()) return cmd_prep(o);
    if (train->parsed()) return cmd_train(train, o);
    if (eval->parsed()) return cmd_eval(eval, o);
    if (predict->parsed()) return cmd_predict(predict, o);
    if (dump->parsed()) return cmd_dump_attention(dump, o);
    if (sweep->parsed()) return cmd_sweep(sweep, o);
    if (synth->parsed()) return cmd_synth(synth, o);
    if (gradcheck->parsed()) return cmd_grad_check(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return 3;
  }
  return 1;
}
