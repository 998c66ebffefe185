#include "glarc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "glarc/errors.hpp"

namespace glarc {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

int predict_index(const Tensor& probs) {
  if (probs.numel() < 1) throw UsageError("predict: empty probability vector");
  int best = 0;
  for (int64_t i = 1; i < probs.numel(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  return best;
}

std::string predict(const ParamStore& params, const ModelIds& ids,
                    const ModelConfig& cfg, const LabelSet& labels,
                    const PreparedExample& ex) {
  if (labels.size() != cfg.n_classes)
    throw UsageError("label set size does not match the model's class count");
  ForwardResult r = forward(ex, params, ids, cfg);
  return labels.name(predict_index(r.trace.probs));
}

EvalReport macro_f1(const std::vector<std::string>& gold,
                    const std::vector<std::string>& predicted,
                    const LabelSet& labels) {
  if (gold.empty() || gold.size() != predicted.size())
    throw UsageError("scorer needs equal-length nonempty gold/predicted lists");
  const int n = labels.size();
  EvalReport report;
  report.total = static_cast<int>(gold.size());
  report.confusion.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0);

  auto index_of = [&](const std::string& label) {
    int idx = labels.index_of(label);
    if (idx < 0) throw UsageError("unknown label '" + label + "'");
    return idx;
  };

  int correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    int g = index_of(gold[i]);
    int p = index_of(predicted[i]);
    ++report.confusion[static_cast<size_t>(g * n + p)];
    if (g == p) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);

  // Directional per-type tallies: TP requires an exact label match; the
  // predicted/gold totals pool both directions of the type.
  std::vector<std::string> types = labels.relation_types();
  std::unordered_map<std::string, size_t> type_row;
  report.per_relation.resize(types.size());
  for (size_t t = 0; t < types.size(); ++t) {
    report.per_relation[t].type = types[t];
    type_row[types[t]] = t;
  }
  for (size_t i = 0; i < gold.size(); ++i) {
    std::string gt = LabelSet::type_of(gold[i]);
    std::string pt = LabelSet::type_of(predicted[i]);
    if (auto it = type_row.find(gt); it != type_row.end()) {
      ++report.per_relation[it->second].gold;
      if (gold[i] == predicted[i]) ++report.per_relation[it->second].tp;
    }
    if (auto it = type_row.find(pt); it != type_row.end())
      ++report.per_relation[it->second].predicted;
  }

  double f1_sum = 0.0;
  for (RelationScore& r : report.per_relation) {
    r.precision = r.predicted > 0 ? static_cast<double>(r.tp) / r.predicted : 0.0;
    r.recall = r.gold > 0 ? static_cast<double>(r.tp) / r.gold : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    f1_sum += r.f1;
  }
  report.macro_f1 = report.per_relation.empty()
                        ? 0.0
                        : f1_sum / static_cast<double>(report.per_relation.size());
  return report;
}

std::string render_report(const EvalReport& report, const LabelSet& labels) {
  std::ostringstream out;
  out << "relation scores (directional):\n";
  for (const RelationScore& r : report.per_relation)
    out << "  " << r.type << ": P=" << fmt4(r.precision) << " R=" << fmt4(r.recall)
        << " F1=" << fmt4(r.f1) << " (tp=" << r.tp << " pred=" << r.predicted
        << " gold=" << r.gold << ")\n";
  out << "macro-F1 (excl. " << labels.name(labels.other_index())
      << "): " << fmt4(report.macro_f1) << "\n";
  out << "accuracy (all classes): " << fmt4(report.accuracy) << " over "
      << report.total << " examples\n";
  return out.str();
}

std::string report_key_values(const EvalReport& report) {
  std::ostringstream out;
  out << "macro_f1=" << fmt17(report.macro_f1) << "\n";
  out << "accuracy=" << fmt17(report.accuracy) << "\n";
  out << "total=" << report.total << "\n";
  for (const RelationScore& r : report.per_relation) {
    out << "precision." << r.type << "=" << fmt17(r.precision) << "\n";
    out << "recall." << r.type << "=" << fmt17(r.recall) << "\n";
    out << "f1." << r.type << "=" << fmt17(r.f1) << "\n";
  }
  return out.str();
}

std::string dump_attention(const ParamStore& params, const ModelIds& ids,
                           const ModelConfig& cfg, const Example& raw,
                           const PreparedExample& ex) {
  if (raw.length() != static_cast<int>(ex.tokens.size()))
    throw UsageError("raw/prepared token counts differ");
  ForwardResult r = forward(ex, params, ids, cfg);
  std::ostringstream out;
  out << "# token\talpha_g\talpha_l\talpha\tm\n";
  for (int i = 0; i < raw.length(); ++i) {
    out << raw.tokens[static_cast<size_t>(i)] << '\t'
        << fmt17(r.trace.alpha_g[i]) << '\t' << fmt17(r.trace.alpha_l[i]) << '\t'
        << fmt17(r.trace.alpha[i]) << '\t' << fmt17(r.trace.m[i]) << '\n';
  }
  return out.str();
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw UsageError("synthetic task needs at least 2 classes");
  if (min_len < 3) throw UsageError("synthetic sentences need length >= 3");
  if (max_len < min_len) throw UsageError("synthetic max length below min length");
  if (vocab < 1) throw UsageError("synthetic noise vocabulary must be nonempty");
  if (train_count < 1 || test_count < 1)
    throw UsageError("synthetic train/test counts must be >= 1");
  if (!(off_fraction >= 0.0 && off_fraction <= 1.0))
    throw UsageError("off_fraction must lie in [0,1]");
}

namespace {

std::vector<Example> make_split(const SyntheticSpec& spec,
                                const std::vector<std::string>& keywords,
                                const std::vector<std::string>& labels,
                                int count, int first_id, Rng& rng) {
  std::vector<Example> out;
  out.reserve(static_cast<size_t>(count));
  int n_off = static_cast<int>(std::llround(spec.off_fraction * count));
  for (int i = 0; i < count; ++i) {
    int cls = i % spec.classes;
    bool off_path = i < n_off;
    int l = spec.min_len +
            static_cast<int>(rng.below(static_cast<uint64_t>(spec.max_len - spec.min_len + 1)));

    // three distinct slots; entities keep sentence order, the keyword takes
    // a uniformly chosen slot so position carries no class signal
    int slot[3];
    slot[0] = static_cast<int>(rng.below(static_cast<uint64_t>(l)));
    do {
      slot[1] = static_cast<int>(rng.below(static_cast<uint64_t>(l)));
    } while (slot[1] == slot[0]);
    do {
      slot[2] = static_cast<int>(rng.below(static_cast<uint64_t>(l)));
    } while (slot[2] == slot[0] || slot[2] == slot[1]);
    std::sort(slot, slot + 3);
    int kw_slot = static_cast<int>(rng.below(3));
    int kw = slot[kw_slot];
    int e1 = slot[kw_slot == 0 ? 1 : 0];
    int e2 = slot[kw_slot == 2 ? 1 : 2];

    Example ex;
    ex.id = first_id + i;
    ex.label = labels[static_cast<size_t>(cls)];
    ex.tokens.resize(static_cast<size_t>(l));
    for (int j = 0; j < l; ++j)
      ex.tokens[static_cast<size_t>(j)] = "w" + std::to_string(rng.below(static_cast<uint64_t>(spec.vocab)));
    ex.tokens[static_cast<size_t>(kw)] = keywords[static_cast<size_t>(cls)];
    ex.e1 = ex.e1_first = e1;
    ex.e2 = ex.e2_first = e2;

    // pseudo parse: a 3-node core plus noise leaves hanging off core nodes
    ex.heads.assign(static_cast<size_t>(l), -1);
    if (off_path) {
      // path e1-e2; keyword dangles off e1
      ex.heads[static_cast<size_t>(e2)] = -1;
      ex.heads[static_cast<size_t>(e1)] = e2;
      ex.heads[static_cast<size_t>(kw)] = e1;
    } else {
      // keyword is the root between the entities: path e1-kw-e2
      ex.heads[static_cast<size_t>(kw)] = -1;
      ex.heads[static_cast<size_t>(e1)] = kw;
      ex.heads[static_cast<size_t>(e2)] = kw;
    }
    const int core[3] = {e1, e2, kw};
    for (int j = 0; j < l; ++j) {
      if (j == e1 || j == e2 || j == kw) continue;
      ex.heads[static_cast<size_t>(j)] = core[rng.below(3)];
    }
    out.push_back(std::move(ex));
  }
  shuffle(out, rng);
  return out;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData data;
  data.keywords.reserve(static_cast<size_t>(spec.classes));
  data.labels.reserve(static_cast<size_t>(spec.classes));
  for (int k = 0; k < spec.classes; ++k) {
    data.keywords.push_back("kw" + std::to_string(k));
    std::string type = std::string("K") + static_cast<char>('A' + k / 2);
    data.labels.push_back(type + (k % 2 == 0 ? "(e1,e2)" : "(e2,e1)"));
  }
  Rng rng(spec.seed);
  data.train = make_split(spec, data.keywords, data.labels, spec.train_count, 1, rng);
  data.test = make_split(spec, data.keywords, data.labels, spec.test_count,
                         spec.train_count + 1, rng);
  return data;
}

}  // namespace glarc
