#pragma once

// Dense unit-vector embeddings for sentences and sub-symptoms.

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "psysym/common.hpp"
#include "psysym/kg.hpp"

namespace psysym {

using Vector = std::vector<double>;

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return dot;
}

// Sub-symptom embedding ids are "<symptom_id>#<index>".
inline std::string sub_symptom_key(const std::string& symptom_id, std::size_t index) {
    return symptom_id + "#" + std::to_string(index);
}

class EmbeddingStore {
public:
    static constexpr double kNormTolerance = 1e-6;

    EmbeddingStore() = default;
    explicit EmbeddingStore(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw Error("embedding dim must be positive");
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool contains(const std::string& id) const { return entries_.count(id) > 0; }

    const Vector& at(const std::string& id) const {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw Error("no embedding for id '" + id + "'");
        return it->second;
    }

    const std::map<std::string, Vector>& entries() const { return entries_; }

    // Stores v, renormalizing when its norm deviates from 1 by more than 1e-6.
    void add(const std::string& id, Vector v) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_) {
            throw ValidationError("dimension mismatch for '" + id + "': expected " +
                                  std::to_string(dim_) + ", got " + std::to_string(v.size()));
        }
        const double n = l2_norm(v);
        if (n == 0.0 || !std::isfinite(n)) {
            throw ValidationError("zero-norm embedding for '" + id + "'");
        }
        if (std::abs(n - 1.0) > kNormTolerance) {
            for (auto& x : v) x /= n;
        }
        if (!entries_.emplace(id, std::move(v)).second) {
            throw ValidationError("duplicate embedding id '" + id + "'");
        }
    }

private:
    std::size_t dim_ = 0;
    std::map<std::string, Vector> entries_;
};

// TSV: id \t x1 \t ... \t xdim, optional leading "#dim=<n>".
inline EmbeddingStore parse_embeddings(const std::string& text) {
    EmbeddingStore store;
    std::size_t declared = 0;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.rfind("#dim=", 0) == 0) {
            declared = static_cast<std::size_t>(parse_double(line.substr(5), "#dim"));
            if (declared == 0) throw ParseError("#dim must be positive");
            store = EmbeddingStore(declared);
            continue;
        }
        if (line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() < 2) throw ParseError("embedding line " + std::to_string(line_no) +
                                              ": expected id and values");
        Vector v;
        v.reserve(cols.size() - 1);
        for (std::size_t i = 1; i < cols.size(); ++i) {
            v.push_back(parse_double(cols[i], "embedding '" + cols[0] + "'"));
        }
        store.add(cols[0], std::move(v));
    }
    return store;
}

inline EmbeddingStore load_embeddings(const std::string& path) {
    return parse_embeddings(read_file(path));
}

inline std::string serialize_embeddings(const EmbeddingStore& store) {
    std::string out = "#dim=" + std::to_string(store.dim()) + "\n";
    for (const auto& [id, v] : store.entries()) {
        out += id;
        for (double x : v) {
            out += '\t';
            out += format_double(x);
        }
        out += '\n';
    }
    return out;
}

inline void save_embeddings(const EmbeddingStore& store, const std::string& path) {
    write_file(path, serialize_embeddings(store));
}

// Signed feature hashing of character 3..5-grams. Deterministic for (text, dim, seed).
inline Vector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 8) throw Error("hash_embed: dim must be >= 8");
    Vector v(dim, 0.0);
    if (!text.empty()) {
        const std::string padded = " " + to_lower(text) + " ";
        const std::uint64_t basis = splitmix64(seed) | 1ULL;
        for (std::size_t n = 3; n <= 5; ++n) {
            if (padded.size() < n) break;
            for (std::size_t i = 0; i + n <= padded.size(); ++i) {
                const std::uint64_t h = splitmix64(fnv1a64(std::string_view(padded).substr(i, n), basis));
                const double sign = (h >> 63) ? -1.0 : 1.0;
                v[static_cast<std::size_t>((h >> 1) % dim)] += sign;
            }
        }
    }
    const double n = l2_norm(v);
    if (n == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
        return v;
    }
    for (auto& x : v) x /= n;
    return v;
}

// Deterministic random unit vector keyed by a string.
inline Vector keyed_unit_vector(std::string_view key, std::size_t dim, std::uint64_t seed) {
    Rng rng(splitmix64(fnv1a64(key) ^ seed));
    Vector v(dim);
    for (auto& x : v) x = rng.normal();
    const double n = l2_norm(v);
    for (auto& x : v) x /= n;
    return v;
}

// Bag-of-concepts embedder: words listed in a concept table share a direction
// (synonyms land close together); other words get their own direction.
class ConceptEmbedder {
public:
    ConceptEmbedder(std::map<std::string, std::string> concepts, std::size_t dim,
                    std::uint64_t seed, double word_jitter = 0.25)
        : concepts_(std::move(concepts)), dim_(dim), seed_(seed), jitter_(word_jitter) {
        if (dim_ < 8) throw Error("ConceptEmbedder: dim must be >= 8");
    }

    static const std::set<std::string>& stopwords() {
        static const std::set<std::string> words = {
            "a",    "an",   "and",  "are",  "as",   "at",    "be",   "but",   "by",
            "for",  "from", "had",  "has",  "have", "i",     "in",   "is",    "it",
            "its",  "m",    "me",   "my",   "of",   "on",    "or",   "so",    "that",
            "the",  "this", "to",   "was",  "with", "am",    "been", "do",    "s",
            "t",    "very", "just", "all",  "about", "when", "what", "there", "than"};
        return words;
    }

    Vector embed(std::string_view text) const {
        Vector v(dim_, 0.0);
        for (const auto& w : word_tokens(text)) {
            if (stopwords().count(w)) continue;
            auto it = concepts_.find(w);
            if (it != concepts_.end()) {
                add_scaled(v, keyed_unit_vector("concept:" + it->second, dim_, seed_), 1.0);
                add_scaled(v, keyed_unit_vector("word:" + w, dim_, seed_), jitter_);
            } else {
                add_scaled(v, keyed_unit_vector("word:" + w, dim_, seed_), 1.0);
            }
        }
        const double n = l2_norm(v);
        if (n == 0.0) {
            v[0] = 1.0;
            return v;
        }
        for (auto& x : v) x /= n;
        return v;
    }

    const std::map<std::string, std::string>& concepts() const { return concepts_; }

private:
    static void add_scaled(Vector& acc, const Vector& x, double s) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * x[i];
    }

    std::map<std::string, std::string> concepts_;
    std::size_t dim_;
    std::uint64_t seed_;
    double jitter_;
};

// TSV: word \t concept
inline std::map<std::string, std::string> load_concept_table(const std::string& path) {
    std::map<std::string, std::string> table;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw ParseError("concept table line needs 2 columns: " + line);
        table[to_lower(trim(cols[0]))] = trim(cols[1]);
    }
    return table;
}

struct RelevanceScore {
    std::string symptom_id;
    double score = -1.0;
};

// Max cosine over the symptom's sub-symptom embeddings.
inline RelevanceScore symptom_relevance(std::span<const double> sentence_vec,
                                        const Symptom& symptom, const EmbeddingStore& store) {
    RelevanceScore out{symptom.id, -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < symptom.sub_symptoms.size(); ++i) {
        const std::string key = sub_symptom_key(symptom.id, i);
        if (!store.contains(key)) {
            throw Error("missing sub-symptom embedding '" + key + "' (" +
                        symptom.sub_symptoms[i].text + ")");
        }
        out.score = std::max(out.score, cosine(sentence_vec, store.at(key)));
    }
    out.score = std::clamp(out.score, -1.0, 1.0);
    return out;
}

}  // namespace psysym
