#include "glarc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <set>
#include <unordered_set>

#include "glarc/errors.hpp"

namespace glarc {

namespace {

bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_int(const std::string& s, int* out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, *out);
  return res.ec == std::errc() && res.ptr == e;
}

bool parse_double(const std::string& s, double* out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, *out);
  return res.ec == std::errc() && res.ptr == e;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  for (const std::string& word : split_ws(text)) {
    size_t begin = 0, end = word.size();
    std::vector<std::string> leading, trailing;
    while (begin < end && is_ascii_punct(word[begin])) {
      leading.push_back(std::string(1, word[begin]));
      ++begin;
    }
    while (end > begin && is_ascii_punct(word[end - 1])) {
      trailing.push_back(std::string(1, word[end - 1]));
      --end;
    }
    out.insert(out.end(), leading.begin(), leading.end());
    if (end > begin) out.push_back(word.substr(begin, end - begin));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

namespace {

struct TagSpan {
  size_t open, close;  // offsets of "<eN>" and "</eN>"
};

TagSpan find_tag(const std::string& s, const std::string& open_tag,
                 const std::string& close_tag, int record_id) {
  const std::string where = "record " + std::to_string(record_id) + ": ";
  size_t o = s.find(open_tag);
  if (o == std::string::npos) throw DataError(where + "missing " + open_tag + " tag");
  if (s.find(open_tag, o + 1) != std::string::npos)
    throw DataError(where + "duplicate " + open_tag + " tag");
  size_t c = s.find(close_tag);
  if (c == std::string::npos) throw DataError(where + "unclosed " + open_tag + " tag");
  if (s.find(close_tag, c + 1) != std::string::npos)
    throw DataError(where + "duplicate " + close_tag + " tag");
  if (c < o) throw DataError(where + "malformed " + open_tag + " tag order");
  return TagSpan{o, c};
}

// Splits the tagged sentence into tokens and records both entity spans.
void parse_tagged_sentence(const std::string& sentence, Example* ex) {
  const std::string where = "record " + std::to_string(ex->id) + ": ";
  TagSpan a = find_tag(sentence, "<e1>", "</e1>", ex->id);
  TagSpan b = find_tag(sentence, "<e2>", "</e2>", ex->id);

  // reject nesting/overlap; tags are 4 and 5 bytes long
  const bool a_first = a.close + 5 <= b.open;
  const bool b_first = b.close + 5 <= a.open;
  if (!a_first && !b_first) throw DataError(where + "nested or overlapping entity tags");

  const TagSpan& first = a_first ? a : b;
  const TagSpan& second = a_first ? b : a;

  std::string pre = sentence.substr(0, first.open);
  std::string span1 = sentence.substr(first.open + 4, first.close - (first.open + 4));
  std::string mid = sentence.substr(first.close + 5, second.open - (first.close + 5));
  std::string span2 = sentence.substr(second.open + 4, second.close - (second.open + 4));
  std::string post = sentence.substr(second.close + 5);

  auto push = [&](const std::string& seg) {
    for (auto& t : tokenize(seg)) ex->tokens.push_back(t);
  };

  push(pre);
  int first_begin = static_cast<int>(ex->tokens.size());
  push(span1);
  int first_end = static_cast<int>(ex->tokens.size()) - 1;
  if (first_end < first_begin)
    throw DataError(where + "empty " + (a_first ? "<e1>" : "<e2>") + " span");
  push(mid);
  int second_begin = static_cast<int>(ex->tokens.size());
  push(span2);
  int second_end = static_cast<int>(ex->tokens.size()) - 1;
  if (second_end < second_begin)
    throw DataError(where + "empty " + (a_first ? "<e2>" : "<e1>") + " span");
  push(post);

  if (a_first) {
    ex->e1_first = first_begin;
    ex->e1 = first_end;
    ex->e2_first = second_begin;
    ex->e2 = second_end;
  } else {
    ex->e2_first = first_begin;
    ex->e2 = first_end;
    ex->e1_first = second_begin;
    ex->e1 = second_end;
  }
}

}  // namespace

std::vector<Example> parse_semeval(std::istream& in) {
  std::vector<Example> out;
  std::unordered_set<int> seen_ids;
  std::string line;
  int lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;

    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("line " + std::to_string(lineno) + ": expected <id>\\t\"<sentence>\"");
    Example ex;
    if (!parse_int(line.substr(0, tab), &ex.id))
      throw DataError("line " + std::to_string(lineno) + ": bad record id");
    if (!seen_ids.insert(ex.id).second)
      throw DataError("record " + std::to_string(ex.id) + ": duplicate id");

    std::string rest = line.substr(tab + 1);
    size_t q1 = rest.find('"');
    size_t q2 = rest.rfind('"');
    if (q1 == std::string::npos || q2 <= q1)
      throw DataError("record " + std::to_string(ex.id) + ": sentence is not quoted");
    parse_tagged_sentence(rest.substr(q1 + 1, q2 - q1 - 1), &ex);

    // relation and comment lines, up to the blank separator
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (line.empty()) break;
      if (line.rfind("Comment", 0) == 0) continue;
      if (ex.label != kUnknownLabel)
        throw DataError("record " + std::to_string(ex.id) + ": unexpected extra line: " + line);
      // trim
      size_t b = line.find_first_not_of(" \t");
      size_t e = line.find_last_not_of(" \t");
      ex.label = line.substr(b, e - b + 1);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string reserialize(const Example& ex) {
  std::string s;
  for (int i = 0; i < ex.length(); ++i) {
    if (i > 0) s += ' ';
    if (i == ex.e1_first) s += "<e1>";
    if (i == ex.e2_first) s += "<e2>";
    s += ex.tokens[static_cast<size_t>(i)];
    if (i == ex.e1) s += "</e1>";
    if (i == ex.e2) s += "</e2>";
  }
  return s;
}

void load_deps_sidecar(std::istream& in, std::vector<Example>& examples) {
  std::unordered_map<int, Example*> by_id;
  for (auto& ex : examples) by_id[ex.id] = &ex;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("deps line " + std::to_string(lineno) + ": expected <id>\\t<heads>");
    int id = 0;
    if (!parse_int(line.substr(0, tab), &id))
      throw DataError("deps line " + std::to_string(lineno) + ": bad id");
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("deps record " + std::to_string(id) + ": no matching example");
    Example* ex = it->second;

    std::vector<int> heads;
    for (const std::string& f : split_ws(line.substr(tab + 1))) {
      int h = 0;
      if (!parse_int(f, &h))
        throw DataError("deps record " + std::to_string(id) + ": bad head value '" + f + "'");
      heads.push_back(h);
    }
    if (static_cast<int>(heads.size()) != ex->length())
      throw DataError("deps record " + std::to_string(id) + ": " +
                      std::to_string(heads.size()) + " heads for " +
                      std::to_string(ex->length()) + " tokens");
    const int l = ex->length();
    for (int i = 0; i < l; ++i) {
      if (heads[static_cast<size_t>(i)] < -1 || heads[static_cast<size_t>(i)] >= l)
        throw DataError("deps record " + std::to_string(id) + ": head index out of range");
    }
    ex->heads = std::move(heads);
  }
}

// --- Vocab --------------------------------------------------------------------

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = size();
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int index) const {
  static const std::string pad = "<pad>", unk = "<unk>";
  if (index == kPad) return pad;
  if (index == kUnk) return unk;
  return tokens_[static_cast<size_t>(index - 2)];
}

// --- LabelSet -----------------------------------------------------------------

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {}

std::string LabelSet::type_of(const std::string& label) {
  for (const char* suffix : {"(e1,e2)", "(e2,e1)"}) {
    size_t n = std::string(suffix).size();
    if (label.size() > n && label.compare(label.size() - n, n, suffix) == 0)
      return label.substr(0, label.size() - n);
  }
  return label;
}

LabelSet LabelSet::semeval() {
  static const std::vector<std::string> types = {
      "Cause-Effect",    "Component-Whole",  "Content-Container",
      "Entity-Destination", "Entity-Origin", "Instrument-Agency",
      "Member-Collection", "Message-Topic",  "Product-Producer"};
  std::vector<std::string> names;
  for (const auto& t : types) {
    names.push_back(t + "(e1,e2)");
    names.push_back(t + "(e2,e1)");
  }
  names.push_back("Other");
  return LabelSet(std::move(names));
}

LabelSet LabelSet::from_labels(const std::vector<std::string>& labels) {
  std::set<std::string> types;
  for (const auto& label : labels) {
    if (label == "Other") continue;
    std::string t = type_of(label);
    if (t == label)
      throw DataError("unrecognized relation label: '" + label + "'");
    types.insert(t);
  }
  std::vector<std::string> names;
  for (const auto& t : types) {
    names.push_back(t + "(e1,e2)");
    names.push_back(t + "(e2,e1)");
  }
  names.push_back("Other");
  return LabelSet(std::move(names));
}

int LabelSet::index_of(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

int LabelSet::other_index() const { return index_of("Other"); }

std::vector<std::string> LabelSet::relation_types() const {
  std::vector<std::string> types;
  for (const auto& n : names_) {
    if (n == "Other") continue;
    std::string t = type_of(n);
    if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
  }
  return types;
}

// --- embeddings -----------------------------------------------------------------

int EmbeddingTable::find(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

EmbeddingTable load_embedding_text(std::istream& in, int d_e) {
  if (d_e <= 0) throw UsageError("embedding dimension must be positive");

  EmbeddingTable table;
  std::vector<double> data;
  std::string line;
  int lineno = 0;
  bool first = true;

  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = split_ws(line);

    if (first) {
      first = false;
      int count = 0, dim = 0;
      if (fields.size() == 2 && parse_int(fields[0], &count) && parse_int(fields[1], &dim)) {
        if (dim != d_e)
          throw DataError("embedding header dimension " + std::to_string(dim) +
                          " does not match expected " + std::to_string(d_e));
        continue;  // header consumed
      }
    }

    if (static_cast<int>(fields.size()) != d_e + 1)
      throw DataError("embedding line " + std::to_string(lineno) + ": expected token + " +
                      std::to_string(d_e) + " values, got " +
                      std::to_string(fields.size() - 1));
    for (int i = 0; i < d_e; ++i) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<size_t>(i + 1)], &v))
        throw DataError("embedding line " + std::to_string(lineno) + ": bad value '" +
                        fields[static_cast<size_t>(i + 1)] + "'");
      data.push_back(v);
    }
    table.index.emplace(fields[0], static_cast<int>(table.tokens.size()));
    table.tokens.push_back(fields[0]);
  }

  if (!table.tokens.empty())
    table.vectors = Tensor({static_cast<int>(table.tokens.size()), d_e}, std::move(data));
  return table;
}

VocabPlan build_vocab(const std::vector<Example>& examples,
                      const EmbeddingTable* pretrained) {
  if (examples.empty()) throw UsageError("build_vocab: empty example list");

  VocabPlan plan;
  plan.row_source = {VocabPlan::kZeroRow, VocabPlan::kRandomRow};  // pad, unk
  plan.random_rows = 1;                                            // the unknown row

  for (const auto& ex : examples) {
    for (const auto& tok : ex.tokens) {
      int before = plan.vocab.size();
      int id = plan.vocab.add(tok);
      if (id < before) continue;  // already present
      int src = pretrained ? pretrained->find(tok) : -1;
      if (src >= 0) {
        plan.row_source.push_back(src);
        ++plan.pretrained_rows;
      } else {
        plan.row_source.push_back(VocabPlan::kRandomRow);
        ++plan.random_rows;
      }
    }
  }
  return plan;
}

Tensor materialize_embeddings(const VocabPlan& plan, const EmbeddingTable* pretrained,
                              int d_e, double stddev, Rng& rng) {
  if (pretrained && pretrained->vectors.numel() > 0 && pretrained->vectors.cols() != d_e)
    throw UsageError("pretrained table dimension does not match d_e");

  const int rows = plan.vocab.size();
  Tensor table({rows, d_e});
  for (int r = 0; r < rows; ++r) {
    int src = plan.row_source[static_cast<size_t>(r)];
    if (src == VocabPlan::kZeroRow) continue;
    if (src == VocabPlan::kRandomRow) {
      for (int c = 0; c < d_e; ++c) table.at(r, c) = stddev * rng.normal();
    } else {
      for (int c = 0; c < d_e; ++c) table.at(r, c) = pretrained->vectors.at(src, c);
    }
  }
  return table;
}

// --- positions ------------------------------------------------------------------

std::vector<int> relative_positions(int l, int e, int clip) {
  if (clip < 1) throw UsageError("position clip window must be >= 1");
  if (e < 0 || e >= l) throw UsageError("entity index out of range");
  std::vector<int> out(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) {
    int off = std::clamp(i - e, -clip, clip);
    out[static_cast<size_t>(i)] = off + clip;
  }
  return out;
}

// --- shortest dependency path -----------------------------------------------------

SdpMask shortest_dependency_path(const std::vector<int>& heads, int n_tokens,
                                 int e1, int e2, int example_id) {
  const std::string where =
      example_id >= 0 ? "example " + std::to_string(example_id) + ": " : "";
  if (e1 < 0 || e1 >= n_tokens || e2 < 0 || e2 >= n_tokens)
    throw UsageError(where + "entity index out of range");

  SdpMask mask;
  if (heads.empty()) {
    mask.m = Tensor::full({n_tokens}, 1.0);
    mask.source = SdpMask::Source::Fallback;
    return mask;
  }
  if (static_cast<int>(heads.size()) != n_tokens)
    throw UsageError(where + "heads length does not match token count");

  const int l = n_tokens;
  for (int i = 0; i < l; ++i) {
    if (heads[static_cast<size_t>(i)] < -1 || heads[static_cast<size_t>(i)] >= l)
      throw DataError(where + "head index out of range");
    if (heads[static_cast<size_t>(i)] == i)
      throw DataError(where + "cyclic dependency heads");
  }

  // root of each entity, walking up with a step cap for cycle detection
  auto root_of = [&](int start) {
    int u = start;
    for (int steps = 0; steps <= l; ++steps) {
      int h = heads[static_cast<size_t>(u)];
      if (h == -1) return u;
      u = h;
    }
    throw DataError(where + "cyclic dependency heads");
  };
  // any cycle in the structure is a data error, not only on the entity paths
  for (int i = 0; i < l; ++i) root_of(i);

  if (root_of(e1) != root_of(e2)) {
    mask.m = Tensor::full({l}, 1.0);
    mask.source = SdpMask::Source::Fallback;
    return mask;
  }

  std::unordered_map<int, int> e1_anc;  // node -> distance from e1
  {
    int u = e1, d = 0;
    while (true) {
      e1_anc[u] = d++;
      if (heads[static_cast<size_t>(u)] == -1) break;
      u = heads[static_cast<size_t>(u)];
    }
  }
  int lca = e2;
  while (!e1_anc.count(lca)) lca = heads[static_cast<size_t>(lca)];

  mask.m = Tensor::zeros({l});
  for (int u = e1; u != lca; u = heads[static_cast<size_t>(u)]) mask.m[u] = 1.0;
  for (int u = e2; u != lca; u = heads[static_cast<size_t>(u)]) mask.m[u] = 1.0;
  mask.m[lca] = 1.0;
  mask.source = SdpMask::Source::Hard;
  return mask;
}

// --- prepared form -----------------------------------------------------------------

PreparedExample prepare(const Example& ex, const Vocab& vocab,
                        const LabelSet& labels, int clip) {
  PreparedExample p;
  p.id = ex.id;
  p.tokens.reserve(ex.tokens.size());
  for (const auto& t : ex.tokens) p.tokens.push_back(vocab.lookup(t));
  p.pos1 = relative_positions(ex.length(), ex.e1, clip);
  p.pos2 = relative_positions(ex.length(), ex.e2, clip);
  p.e1 = ex.e1;
  p.e2 = ex.e2;
  if (ex.label == kUnknownLabel) {
    p.gold = -1;
  } else {
    p.gold = labels.index_of(ex.label);
    if (p.gold < 0)
      throw DataError("example " + std::to_string(ex.id) + ": label '" + ex.label +
                      "' not in label set");
  }
  p.sdp = shortest_dependency_path(ex.heads, ex.length(), ex.e1, ex.e2, ex.id);
  return p;
}

}  // namespace glarc
