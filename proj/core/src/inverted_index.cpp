#include "qrp/inverted_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "qrp/error.hpp"
#include "qrp/tokenizer.hpp"

namespace qrp {
namespace {

constexpr char kMagic[8] = {'Q', 'R', 'P', 'I', 'D', 'X', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void write_str(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw DataError("truncated index file " + path.string());
    }
    return value;
}

std::string read_str(std::istream& in, const std::filesystem::path& path) {
    const auto n = read_pod<std::uint32_t>(in, path);
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) throw DataError("truncated index file " + path.string());
    return s;
}

}  // namespace

TermWeights query_term_weights(std::string_view text) {
    TermWeights weights;
    for (auto& tok : tokenize(text)) weights[tok] += 1.0;
    return weights;
}

InvertedIndex InvertedIndex::build(std::vector<Document> docs) {
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    InvertedIndex index;
    index.doc_ids_.reserve(docs.size());
    index.texts_.reserve(docs.size());
    index.doc_lengths_.reserve(docs.size());
    std::uint64_t total_length = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto& doc = docs[i];
        if (doc.doc_id.empty()) throw DataError("document with empty doc_id");
        if (i > 0 && index.doc_ids_.back() == doc.doc_id) {
            throw DataError("duplicate doc_id '" + doc.doc_id + "'");
        }
        const auto ordinal = static_cast<std::uint32_t>(i);
        const auto tokens = tokenize(doc.text);
        std::map<std::string_view, std::uint32_t> counts;
        for (const auto& t : tokens) ++counts[t];
        for (const auto& [term, tf] : counts) {
            index.postings_[std::string(term)].push_back(Posting{ordinal, tf});
        }
        index.ordinal_by_id_.emplace(doc.doc_id, ordinal);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();
        index.doc_ids_.push_back(std::move(doc.doc_id));
        index.texts_.push_back(std::move(doc.text));
    }
    if (!index.doc_ids_.empty()) {
        index.avg_doc_length_ =
            static_cast<double>(total_length) / static_cast<double>(index.doc_ids_.size());
    }
    return index;
}

std::optional<std::uint32_t> InvertedIndex::ordinal_of(std::string_view doc_id) const {
    const auto it = ordinal_by_id_.find(std::string(doc_id));
    if (it == ordinal_by_id_.end()) return std::nullopt;
    return it->second;
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

double InvertedIndex::idf(const std::string& term) const {
    const auto n = static_cast<double>(num_docs());
    const auto df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::uint32_t InvertedIndex::term_frequency(const std::string& term, std::uint32_t ordinal) const {
    const auto list = postings(term);
    const auto it = std::lower_bound(list.begin(), list.end(), ordinal,
                                     [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    return (it != list.end() && it->doc == ordinal) ? it->tf : 0;
}

std::map<std::string, std::uint32_t> InvertedIndex::term_counts(std::uint32_t ordinal) const {
    std::map<std::string, std::uint32_t> counts;
    for (auto& tok : tokenize(texts_.at(ordinal))) ++counts[std::move(tok)];
    return counts;
}

std::vector<std::string> InvertedIndex::terms() const {
    std::vector<std::string> out;
    out.reserve(postings_.size());
    for (const auto& [term, _] : postings_) out.push_back(term);
    std::sort(out.begin(), out.end());
    return out;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index file " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_pod<std::uint64_t>(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        write_str(out, doc_ids_[i]);
        write_str(out, texts_[i]);
        write_pod<std::uint32_t>(out, doc_lengths_[i]);
    }
    const auto sorted_terms = terms();
    write_pod<std::uint64_t>(out, sorted_terms.size());
    for (const auto& term : sorted_terms) {
        const auto& list = postings_.at(term);
        write_str(out, term);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            write_pod(out, p.doc);
            write_pod(out, p.tf);
        }
    }
    if (!out) throw DataError("failed writing index file " + path.string());
}

bool InvertedIndex::is_index_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[sizeof kMagic] = {};
    return in.read(magic, sizeof magic) && std::memcmp(magic, kMagic, sizeof kMagic) == 0;
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file " + path.string());
    char magic[sizeof kMagic] = {};
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError(path.string() + " is not a qrp index file");
    }
    InvertedIndex index;
    const auto n = read_pod<std::uint64_t>(in, path);
    std::uint64_t total_length = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        index.doc_ids_.push_back(read_str(in, path));
        index.texts_.push_back(read_str(in, path));
        index.doc_lengths_.push_back(read_pod<std::uint32_t>(in, path));
        total_length += index.doc_lengths_.back();
        index.ordinal_by_id_.emplace(index.doc_ids_.back(), static_cast<std::uint32_t>(i));
    }
    const auto num_terms = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        auto term = read_str(in, path);
        const auto count = read_pod<std::uint32_t>(in, path);
        std::vector<Posting> list(count);
        for (auto& p : list) {
            p.doc = read_pod<std::uint32_t>(in, path);
            p.tf = read_pod<std::uint32_t>(in, path);
            if (p.doc >= n || p.tf == 0) throw DataError("corrupt posting in " + path.string());
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    if (n > 0) index.avg_doc_length_ = static_cast<double>(total_length) / static_cast<double>(n);
    return index;
}

InvertedIndex open_corpus(const std::filesystem::path& path) {
    if (InvertedIndex::is_index_file(path)) return InvertedIndex::load(path);
    return InvertedIndex::build(read_documents_tsv(path));
}

namespace {

// Per-term contribution; shared by the scorer and the accumulator so both
// produce bit-identical sums.
inline double term_score(double weight, double idf, std::uint32_t tf, std::uint32_t len,
                         double avgdl, const Bm25Params& p) {
    const double norm = avgdl > 0.0 ? static_cast<double>(len) / avgdl : 0.0;
    const double f = static_cast<double>(tf);
    return weight * idf * (f * (p.k1 + 1.0)) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

double bm25_score(const InvertedIndex& index, const TermWeights& query, std::uint32_t ordinal,
                  const Bm25Params& params) {
    if (index.num_docs() == 0) throw std::invalid_argument("bm25_score on an empty index");
    if (ordinal >= index.num_docs()) throw std::out_of_range("document ordinal out of range");
    double score = 0.0;
    for (const auto& [term, weight] : query) {
        const auto tf = index.term_frequency(term, ordinal);
        if (tf == 0) continue;
        score += term_score(weight, index.idf(term), tf, index.doc_length(ordinal),
                            index.avg_doc_length(), params);
    }
    return score;
}

RetrievalContext retrieve_topk(const InvertedIndex& index, const TermWeights& query,
                               const RetrievalOptions& options, std::string query_id) {
    if (options.k == 0) throw std::invalid_argument("retrieve_topk requires k >= 1");
    RetrievalContext ctx;
    ctx.query_id = std::move(query_id);
    ctx.k = options.k;
    if (index.num_docs() == 0) return ctx;

    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> seen(index.num_docs(), false);
    const double avgdl = index.avg_doc_length();
    for (const auto& [term, weight] : query) {
        const auto list = index.postings(term);
        if (list.empty()) continue;
        const double idf = index.idf(term);
        for (const auto& p : list) {
            acc[p.doc] += term_score(weight, idf, p.tf, index.doc_length(p.doc), avgdl, options.bm25);
            if (!seen[p.doc]) {
                seen[p.doc] = true;
                touched.push_back(p.doc);
            }
        }
    }

    std::vector<std::uint32_t> hits;
    hits.reserve(touched.size());
    for (auto d : touched) {
        if (acc[d] > 0.0) hits.push_back(d);
    }
    // Ordinals follow doc_id order, so the ordinal is the tie-break.
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return a < b;
    };
    const std::size_t take = std::min(options.k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(),
                      better);
    ctx.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto d = hits[i];
        ctx.entries.push_back(ContextEntry{
            index.doc_id(d), acc[d],
            options.snippet_tokens > 0 ? snippet_of(index.doc_text(d), options.snippet_tokens)
                                       : std::string{}});
    }
    return ctx;
}

RetrievalContext retrieve_topk(const InvertedIndex& index, std::string_view query,
                               const RetrievalOptions& options, std::string query_id) {
    return retrieve_topk(index, query_term_weights(query), options, std::move(query_id));
}

}  // namespace qrp
