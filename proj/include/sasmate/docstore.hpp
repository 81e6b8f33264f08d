#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sasmate/error.hpp"
#include "sasmate/models.hpp"

namespace sasmate {

struct DocEntry {
  std::string doc_id;
  std::string title;
  std::string body;
};

struct RetrievalHit {
  std::string doc_id;
  double score = 0.0;
  std::string snippet;  // contiguous substring of the body, at most 400 chars
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Lowercase alphanumeric word tokens, no stemming.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Whole-document BM25 index. Immutable after construction.
class DocIndex {
 public:
  static constexpr std::size_t kSnippetChars = 400;

  explicit DocIndex(std::vector<DocEntry> corpus, Bm25Params params = {})
      : docs_(std::move(corpus)), params_(params) {
    if (docs_.empty()) throw std::invalid_argument("document corpus is empty");
    std::set<std::string> seen;
    for (const auto& d : docs_) {
      if (!seen.insert(d.doc_id).second) throw Error(ErrorCode::DuplicateDocId, d.doc_id);
      if (d.body.empty()) throw std::invalid_argument("document " + d.doc_id + " has an empty body");
    }
    lengths_.resize(docs_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      const auto tokens = tokenize(docs_[i].title + "\n" + docs_[i].body);
      lengths_[i] = tokens.size();
      total += static_cast<double>(tokens.size());
      std::map<std::string, std::size_t> tf;
      for (const auto& t : tokens) ++tf[t];
      for (const auto& [term, count] : tf) postings_[term].push_back({i, count});
    }
    avg_length_ = total / static_cast<double>(docs_.size());
  }

  std::size_t size() const { return docs_.size(); }
  std::size_t vocabulary_size() const { return postings_.size(); }
  double average_length() const { return avg_length_; }
  const std::vector<std::size_t>& lengths() const { return lengths_; }

  /// ln((N - n + 0.5) / (n + 0.5) + 1)
  double idf(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    const double n = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double total = static_cast<double>(docs_.size());
    return std::log((total - n + 0.5) / (n + 0.5) + 1.0);
  }

  /// Top-k documents by BM25 over the distinct query terms; zero scores omitted,
  /// ties broken by doc_id.
  std::vector<RetrievalHit> search(std::string_view query, std::size_t k) const {
    auto terms = tokenize(query);
    if (terms.empty()) throw Error(ErrorCode::EmptyQuery, "query has no word tokens");
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::vector<double> scores(docs_.size(), 0.0);
    std::vector<std::string> best_term(docs_.size());
    std::vector<double> best_contrib(docs_.size(), 0.0);
    for (const auto& term : terms) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      const double w = idf(term);
      for (const auto& [doc, tf] : it->second) {
        const double f = static_cast<double>(tf);
        const double norm = 1.0 - params_.b + params_.b * static_cast<double>(lengths_[doc]) / avg_length_;
        const double contrib = w * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
        scores[doc] += contrib;
        if (contrib > best_contrib[doc]) {
          best_contrib[doc] = contrib;
          best_term[doc] = term;
        }
      }
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < docs_.size(); ++i)
      if (scores[i] > 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return docs_[a].doc_id < docs_[b].doc_id;
    });
    if (order.size() > k) order.resize(k);

    std::vector<RetrievalHit> hits;
    for (std::size_t i : order)
      hits.push_back({docs_[i].doc_id, scores[i], snippet(docs_[i].body, best_term[i])});
    return hits;
  }

  const DocEntry& get_doc(std::string_view doc_id) const {
    for (const auto& d : docs_)
      if (d.doc_id == doc_id) return d;
    throw Error(ErrorCode::UnknownDoc, std::string(doc_id));
  }

  const std::vector<DocEntry>& docs() const { return docs_; }

 private:
  struct Posting {
    std::size_t doc;
    std::size_t tf;
  };

  /// Window of the body centred on the first whole-word occurrence of `term`.
  static std::string snippet(const std::string& body, const std::string& term) {
    std::size_t hit = std::string::npos;
    if (!term.empty()) {
      std::string lower(body.size(), '\0');
      std::transform(body.begin(), body.end(), lower.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
      for (std::size_t pos = lower.find(term); pos != std::string::npos; pos = lower.find(term, pos + 1)) {
        const bool left = pos == 0 || !is_word(lower[pos - 1]);
        const std::size_t end = pos + term.size();
        const bool right = end >= lower.size() || !is_word(lower[end]);
        if (left && right) {
          hit = pos;
          break;
        }
      }
    }
    if (body.size() <= kSnippetChars) return body;
    std::size_t start = 0;
    if (hit != std::string::npos && hit > kSnippetChars / 4) start = hit - kSnippetChars / 4;
    start = std::min(start, body.size() - kSnippetChars);
    return body.substr(start, kSnippetChars);
  }

  std::vector<DocEntry> docs_;
  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::size_t> lengths_;
  double avg_length_ = 0.0;
};

/// Thread-safe holder; ingest() swaps in a new index while searches in flight
/// keep the old one alive.
class DocStore {
 public:
  DocStore() = default;
  explicit DocStore(std::vector<DocEntry> corpus) { ingest(std::move(corpus)); }

  void ingest(std::vector<DocEntry> corpus) {
    auto next = std::make_shared<const DocIndex>(std::move(corpus));
    std::lock_guard lock(mu_);
    index_ = std::move(next);
  }

  std::shared_ptr<const DocIndex> index() const {
    std::lock_guard lock(mu_);
    if (!index_) throw Error(ErrorCode::UnknownDoc, "documentation index is empty");
    return index_;
  }

  std::vector<RetrievalHit> search(std::string_view query, std::size_t k) const {
    return index()->search(query, k);
  }

  DocEntry get_doc(std::string_view doc_id) const { return index()->get_doc(doc_id); }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const DocIndex> index_;
};

/// One document per registered model, generated from its ModelInfo.
inline std::vector<DocEntry> model_docs(const ModelRegistry& reg = ModelRegistry::builtin()) {
  std::vector<DocEntry> out;
  for (const auto& info : reg.list_models())
    out.push_back({info.name, info.name + " model", info.doc_text()});
  return out;
}

/// Plain-text or markdown files from a directory; the filename stem is the doc id.
inline std::vector<DocEntry> load_user_docs(const std::filesystem::path& dir) {
  std::vector<DocEntry> out;
  if (!std::filesystem::is_directory(dir)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".txt" || ext == ".md" || ext == ".rst") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    std::string body = text.str();
    if (body.empty()) continue;
    std::string title = path.stem().string();
    const auto first_line = body.substr(0, body.find('\n'));
    if (!first_line.empty()) title = first_line.substr(first_line.find_first_not_of("# ") == std::string::npos ? 0 : first_line.find_first_not_of("# "));
    out.push_back({path.stem().string(), title, std::move(body)});
  }
  return out;
}

}  // namespace sasmate
