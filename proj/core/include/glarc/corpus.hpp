#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "glarc/rng.hpp"
#include "glarc/tensor.hpp"

namespace glarc {

// Label used for test-set records whose relation line is absent.
inline constexpr const char* kUnknownLabel = "?";

// One sentence with two marked entities. Anchors point at the LAST token of
// each tagged span; span starts are kept so the tagged sentence can be
// re-serialized.
struct Example {
  int id = 0;
  std::vector<std::string> tokens;
  int e1 = -1, e2 = -1;
  int e1_first = -1, e2_first = -1;
  std::vector<int> heads;  // empty = no parse attached; else one head per token, -1 = root
  std::string label = kUnknownLabel;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Whitespace tokenization with leading/trailing ASCII punctuation split off
// as separate tokens (one token per peeled character, order preserved).
std::vector<std::string> tokenize(const std::string& text);

// SemEval-2010 Task 8 distribution format: per record a line
//   <id>\t"<sentence with <e1>..</e1> and <e2>..</e2> inline tags>"
// then an optional relation line, an optional "Comment:" line, and a blank
// separator. Records without a relation line get label "?".
// Throws DataError on malformed tags, bad ids, or duplicate ids.
std::vector<Example> parse_semeval(std::istream& in);

// Tokens joined by single spaces with the entity tags reinserted. A second
// parse/re-serialize pass is the identity.
std::string reserialize(const Example& ex);

// Dependency sidecar: one record per line, "id\tspace-separated-heads",
// -1 marks the root. Attaches heads to the example with the matching id.
// Throws DataError on unknown ids or token-count mismatches.
void load_deps_sidecar(std::istream& in, std::vector<Example>& examples);

// --- vocabulary --------------------------------------------------------------

// token -> index map; index 0 is padding, 1 is the unknown token, real
// tokens start at 2 in first-seen order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  int add(const std::string& token);            // idempotent, returns index
  int lookup(const std::string& token) const;   // kUnk for unseen tokens
  int size() const { return static_cast<int>(tokens_.size()) + 2; }
  const std::string& token(int index) const;    // "<pad>"/"<unk>" for 0/1

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// --- relation labels ---------------------------------------------------------

// Ordered class names: each relation type with both direction tags, then
// "Other" last.
class LabelSet {
 public:
  static LabelSet semeval();  // the fixed 9x2+1 = 19 classes
  // Builds the set from observed labels: types sorted alphabetically, both
  // directions emitted per type, "Other" appended. Rejects labels that are
  // neither "Other" nor "Type(e1,e2)"/"Type(e2,e1)".
  static LabelSet from_labels(const std::vector<std::string>& labels);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_[static_cast<size_t>(index)]; }
  const std::vector<std::string>& names() const { return names_; }
  int index_of(const std::string& name) const;  // -1 if absent
  int other_index() const;

  // Distinct non-Other relation types, in set order.
  std::vector<std::string> relation_types() const;
  static std::string type_of(const std::string& label);  // strips the direction tag

 private:
  explicit LabelSet(std::vector<std::string> names);
  std::vector<std::string> names_;
};

// --- pretrained embeddings ---------------------------------------------------

struct EmbeddingTable {
  std::vector<std::string> tokens;  // file order
  Tensor vectors;                   // tokens.size() x d_e; default-initialized when empty
  std::unordered_map<std::string, int> index;

  int find(const std::string& token) const;  // row, or -1
};

// word2vec text export: optionally a "<count> <dim>" header line, then one
// line per token: the token followed by d_e decimals. Throws DataError with
// the offending line number on malformed lines or dimension mismatches.
EmbeddingTable load_embedding_text(std::istream& in, int d_e);

// --- vocabulary + embedding construction -------------------------------------

struct VocabPlan {
  Vocab vocab;
  // Per vocab row: kZeroRow for padding, kRandomRow for Gaussian init,
  // otherwise an index into the pretrained table.
  static constexpr int kZeroRow = -2;
  static constexpr int kRandomRow = -1;
  std::vector<int> row_source;
  int pretrained_rows = 0;
  int random_rows = 0;  // includes the unknown-token row
};

// Vocabulary over all training tokens; pretrained rows where available.
// pretrained may be null (every row Gaussian). Throws UsageError on an
// empty example list.
VocabPlan build_vocab(const std::vector<Example>& examples,
                      const EmbeddingTable* pretrained);

// Realizes the plan into a |V| x d_e table: zero pad row, pretrained rows
// copied, remaining rows ~ N(0, stddev^2) drawn in row order.
Tensor materialize_embeddings(const VocabPlan& plan, const EmbeddingTable* pretrained,
                              int d_e, double stddev, Rng& rng);

// --- position indices ----------------------------------------------------------

// Offsets i - e clamped to [-clip, clip] and shifted by +clip into
// [0, 2*clip]; the entity itself maps to clip.
std::vector<int> relative_positions(int l, int e, int clip);

// --- shortest dependency path --------------------------------------------------

struct SdpMask {
  enum class Source { Hard, Fallback };
  Tensor m;  // length l; {0,1}-valued when Hard, all ones when Fallback
  Source source = Source::Fallback;
};

// Mask of the unique tree path between e1 and e2 (inclusive). Falls back to
// all-ones when heads are absent or the entities sit in different
// components. Throws DataError (naming example_id) on cyclic heads.
SdpMask shortest_dependency_path(const std::vector<int>& heads, int n_tokens,
                                 int e1, int e2, int example_id = -1);

// --- model-ready form ----------------------------------------------------------

struct PreparedExample {
  int id = 0;
  std::vector<int> tokens;  // vocab indices
  std::vector<int> pos1, pos2;
  int e1 = 0, e2 = 0;
  int gold = -1;  // -1 when the label is unknown
  SdpMask sdp;
};

PreparedExample prepare(const Example& ex, const Vocab& vocab,
                        const LabelSet& labels, int clip);

}  // namespace glarc
