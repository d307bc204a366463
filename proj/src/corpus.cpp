#include "vagtm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "vagtm/rng.hpp"

namespace vagtm {

std::vector<std::string> tokenize_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) {
    for (char& c : token) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    tokens.push_back(std::move(token));
    token.clear();
  }
  return tokens;
}

std::vector<std::vector<std::string>> read_token_lines(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<std::vector<std::string>> documents;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize_line(line);
    if (!tokens.empty()) documents.push_back(std::move(tokens));
  }
  return documents;
}

Corpus corpus_from_documents(
    const std::vector<std::vector<std::string>>& documents, Index min_df,
    Scalar max_df_fraction) {
  if (max_df_fraction <= 0.0 || max_df_fraction > 1.0) {
    throw std::invalid_argument("max_df_fraction must be in (0, 1]");
  }
  if (documents.empty()) {
    throw std::runtime_error("corpus contains no documents");
  }
  const Scalar n_docs = static_cast<Scalar>(documents.size());

  std::unordered_map<std::string, Index> df;
  for (const auto& doc : documents) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& word : doc) {
      if (!seen[word]) {
        seen[word] = true;
        ++df[word];
      }
    }
  }

  const Scalar df_limit = max_df_fraction * n_docs;
  std::vector<std::string> vocab;
  for (const auto& [word, count] : df) {
    if (count >= min_df && static_cast<Scalar>(count) <= df_limit) {
      vocab.push_back(word);
    }
  }
  if (vocab.empty()) {
    throw std::runtime_error("no vocabulary words survive the df pruning");
  }
  std::sort(vocab.begin(), vocab.end());
  std::unordered_map<std::string, Index> word_index;
  for (Index v = 0; v < static_cast<Index>(vocab.size()); ++v) {
    word_index[vocab[v]] = v;
  }

  Corpus corpus;
  corpus.vocab = std::move(vocab);
  corpus.doc_freq.assign(corpus.vocab.size(), 0);
  for (const auto& doc : documents) {
    std::map<Index, Scalar> counts;
    for (const auto& word : doc) {
      auto it = word_index.find(word);
      if (it != word_index.end()) counts[it->second] += 1.0;
    }
    if (counts.empty()) continue;  // emptied by pruning
    std::vector<std::pair<Index, Scalar>> entries(counts.begin(),
                                                  counts.end());
    for (const auto& [v, count] : entries) ++corpus.doc_freq[v];
    corpus.docs.push_back(std::move(entries));
  }
  if (corpus.docs.empty()) {
    throw std::runtime_error("no documents survive the df pruning");
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, Index min_df,
                   Scalar max_df_fraction) {
  return corpus_from_documents(read_token_lines(path), min_df,
                               max_df_fraction);
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& doc : corpus.docs) {
    bool first = true;
    for (const auto& [v, count] : doc) {
      const auto repeats = static_cast<long long>(std::llround(count));
      for (long long r = 0; r < repeats; ++r) {
        if (!first) out << ' ';
        out << corpus.vocab[v];
        first = false;
      }
    }
    out << '\n';
  }
}

TfidfVector tfidf_vector(const Corpus& corpus, Index doc_index) {
  if (doc_index < 0 || doc_index >= corpus.n_docs()) {
    throw std::out_of_range("tfidf_vector: document index out of range");
  }
  TfidfVector result;
  result.doc_index = doc_index;
  result.values = Vector::Zero(corpus.vocab_size());
  const Scalar n = static_cast<Scalar>(corpus.n_docs());
  for (const auto& [v, count] : corpus.docs[doc_index]) {
    result.values[v] =
        count * std::log(n / static_cast<Scalar>(corpus.doc_freq[v]));
  }
  return result;
}

Vector fallback_embedding(const std::string& word, Index dim) {
  Rng rng(fnv1a64(word));
  Vector row(dim);
  for (Index d = 0; d < dim; ++d) row[d] = 0.1 * rng.normal();
  return row;
}

namespace {

bool parse_double_strict(const std::string& text, Scalar& out) {
  const char* begin = text.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + text.size() && !text.empty();
}

bool is_nonneg_integer(const std::string& text) {
  if (text.empty()) return false;
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

}  // namespace

EmbeddingLoadResult load_embeddings(const std::string& path,
                                    const std::vector<std::string>& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);

  std::unordered_map<std::string, Vector> table;
  Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  bool first_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream stream(line);
    std::vector<std::string> fields;
    std::string field;
    while (stream >> field) fields.push_back(field);
    if (fields.empty()) continue;
    if (first_line) {
      first_line = false;
      // optional `COUNT DIM` header
      if (fields.size() == 2 && is_nonneg_integer(fields[0]) &&
          is_nonneg_integer(fields[1])) {
        continue;
      }
    }
    if (fields.size() < 2) {
      throw std::runtime_error("embedding file line " +
                               std::to_string(line_no) + ": no values");
    }
    const Index d = static_cast<Index>(fields.size()) - 1;
    if (dim < 0) {
      dim = d;
    } else if (d != dim) {
      throw std::runtime_error("embedding file line " +
                               std::to_string(line_no) +
                               ": inconsistent dimension");
    }
    Vector row(d);
    for (Index i = 0; i < d; ++i) {
      if (!parse_double_strict(fields[i + 1], row[i]) ||
          !std::isfinite(row[i])) {
        throw std::runtime_error("embedding file line " +
                                 std::to_string(line_no) +
                                 ": malformed float '" + fields[i + 1] + "'");
      }
    }
    table[fields[0]] = std::move(row);  // duplicates: last occurrence wins
  }
  if (dim < 0) {
    throw std::runtime_error("embedding file has no data lines: " + path);
  }

  EmbeddingLoadResult result;
  result.embeddings.vectors.resize(static_cast<Index>(vocab.size()), dim);
  for (Index v = 0; v < static_cast<Index>(vocab.size()); ++v) {
    auto it = table.find(vocab[v]);
    if (it != table.end()) {
      result.embeddings.vectors.row(v) = it->second.transpose();
    } else {
      result.embeddings.vectors.row(v) =
          fallback_embedding(vocab[v], dim).transpose();
      ++result.n_fallback;
    }
  }
  return result;
}

}  // namespace vagtm
