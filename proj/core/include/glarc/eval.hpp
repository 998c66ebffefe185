#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glarc/corpus.hpp"
#include "glarc/model.hpp"
#include "glarc/params.hpp"

namespace glarc {

// Argmax with ties broken toward the lower class index.
int predict_index(const Tensor& probs);

// Label of the argmax class for one prepared example (inference pass).
std::string predict(const ParamStore& params, const ModelIds& ids,
                    const ModelConfig& cfg, const LabelSet& labels,
                    const PreparedExample& ex);

struct RelationScore {
  std::string type;
  int tp = 0, predicted = 0, gold = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  std::vector<RelationScore> per_relation;  // one row per non-Other type
  double macro_f1 = 0.0;  // mean F1 over per_relation, Other excluded
  double accuracy = 0.0;  // exact-label accuracy over all classes
  int total = 0;
  std::vector<int> confusion;  // labels.size()^2, row-major [gold][predicted]
  int confusion_at(int gold_idx, int pred_idx, int n) const {
    return confusion[static_cast<size_t>(gold_idx * n + pred_idx)];
  }
};

// Directional scorer: a prediction counts for type r only when it matches the
// gold label exactly; predicted/gold totals per type merge both directions.
EvalReport macro_f1(const std::vector<std::string>& gold,
                    const std::vector<std::string>& predicted,
                    const LabelSet& labels);

std::string render_report(const EvalReport& report, const LabelSet& labels);
std::string report_key_values(const EvalReport& report);

// Per-token trace: "token<TAB>alpha_g<TAB>alpha_l<TAB>alpha<TAB>m" lines at 17
// significant digits, preceded by a '#' header line.
std::string dump_attention(const ParamStore& params, const ModelIds& ids,
                           const ModelConfig& cfg, const Example& raw,
                           const PreparedExample& ex);

// Planted-keyword benchmark: each sentence carries exactly one keyword that
// determines the class; a pseudo parse tree puts the keyword on the e1-e2
// dependency path for (1 - off_fraction) of the examples.
struct SyntheticSpec {
  int classes = 4;
  int train_count = 500;
  int test_count = 200;
  int vocab = 120;  // noise-token vocabulary
  int min_len = 6;
  int max_len = 12;
  double off_fraction = 0.0;
  std::uint64_t seed = 1;
  void validate() const;
};

struct SyntheticData {
  std::vector<Example> train, test;
  std::vector<std::string> keywords;  // keywords[k] plants class k
  std::vector<std::string> labels;    // label string per class index
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

}  // namespace glarc
