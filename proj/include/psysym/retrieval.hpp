#pragma once

// Candidate selection with bounded per-symptom queues, MinHash/LSH
// near-duplicate removal, keyword-lexicon baseline and retrieval evaluation.

#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "psysym/common.hpp"
#include "psysym/embed.hpp"
#include "psysym/kg.hpp"

namespace psysym {

// ---------------------------------------------------------------------------
// Bounded top-k queue

struct QueueEntry {
    std::string sentence_id;
    double score = 0.0;
    std::size_t order = 0;  // arrival position, earlier wins ties
};

class CandidateQueue {
public:
    static constexpr std::size_t kDefaultCapacity = 300;

    CandidateQueue(std::string symptom_id, std::size_t capacity)
        : symptom_id_(std::move(symptom_id)), capacity_(capacity) {
        if (capacity_ == 0) throw Error("queue capacity must be >= 1");
    }

    // Accepts when not full, or when strictly better than the current minimum.
    bool offer(const std::string& sentence_id, double score, std::size_t order) {
        QueueEntry e{sentence_id, score, order};
        if (heap_.size() < capacity_) {
            heap_.push(std::move(e));
            return true;
        }
        if (score > heap_.top().score) {
            heap_.pop();
            heap_.push(std::move(e));
            return true;
        }
        return false;
    }

    const std::string& symptom_id() const { return symptom_id_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return heap_.size(); }

    // Best first; ties by arrival order.
    std::vector<QueueEntry> entries() const {
        auto copy = heap_;
        std::vector<QueueEntry> out;
        while (!copy.empty()) {
            out.push_back(copy.top());
            copy.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    // top() is the entry to evict next: lowest score, latest arrival among ties.
    struct EvictFirst {
        bool operator()(const QueueEntry& a, const QueueEntry& b) const {
            if (a.score != b.score) return a.score > b.score;
            return a.order < b.order;
        }
    };

    std::string symptom_id_;
    std::size_t capacity_;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, EvictFirst> heap_;
};

struct EmbeddedSentence {
    std::string id;
    Vector vec;
};

struct CandidateRow {
    std::string sentence_id;
    std::string symptom_id;
    double score = 0.0;
};

struct CandidateSelection {
    std::vector<CandidateQueue> queues;
    std::set<std::string> sentence_ids;  // union of all queues

    // One row per queue entry, queues in symptom-id order.
    std::vector<CandidateRow> rows() const {
        std::vector<CandidateRow> out;
        for (const auto& q : queues) {
            for (const auto& e : q.entries()) out.push_back({e.sentence_id, q.symptom_id(), e.score});
        }
        return out;
    }
};

inline CandidateSelection select_candidates(const std::vector<EmbeddedSentence>& sentences,
                                            const KnowledgeGraph& kg, const std::string& disease,
                                            const EmbeddingStore& store,
                                            std::size_t capacity = CandidateQueue::kDefaultCapacity) {
    if (capacity == 0) throw Error("select_candidates: capacity must be >= 1");
    CandidateSelection sel;
    for (const auto& sid : kg.typical_symptoms(disease)) sel.queues.emplace_back(sid, capacity);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (auto& q : sel.queues) {
            const auto r = symptom_relevance(sentences[i].vec, kg.symptom(q.symptom_id()), store);
            q.offer(sentences[i].id, r.score, i);
        }
    }
    for (const auto& q : sel.queues) {
        for (const auto& e : q.entries()) sel.sentence_ids.insert(e.sentence_id);
    }
    return sel;
}

inline std::string serialize_candidates(const std::vector<CandidateRow>& rows) {
    std::string out = "sentence_id\tsymptom_id\tscore\n";
    for (const auto& r : rows) {
        out += r.sentence_id + "\t" + r.symptom_id + "\t" + format_double(r.score) + "\n";
    }
    return out;
}

inline std::vector<CandidateRow> parse_candidates(const std::string& text) {
    std::vector<CandidateRow> rows;
    bool header = true;
    for (const auto& line : split(text, '\n')) {
        if (trim(line).empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("sentence_id", 0) == 0) continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw ParseError("candidate row needs 3 columns: " + line);
        rows.push_back({cols[0], cols[1], parse_double(cols[2], "candidate score")});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// MinHash

struct MinHashSignature {
    std::vector<std::uint64_t> values;
    std::size_t shingle_size = 3;
};

namespace detail {

inline constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;

inline std::uint64_t mod_mersenne61(unsigned __int128 x) {
    std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
    std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
    std::uint64_t r = lo + hi;
    while (r >= kMersenne61) r -= kMersenne61;
    return r;
}

}  // namespace detail

inline std::set<std::string> shingles(std::string_view text, std::size_t shingle_size) {
    const std::string t = to_lower(text);
    std::set<std::string> out;
    if (t.size() < shingle_size) {
        out.insert(t);
        return out;
    }
    for (std::size_t i = 0; i + shingle_size <= t.size(); ++i) out.insert(t.substr(i, shingle_size));
    return out;
}

inline double exact_jaccard(std::string_view a, std::string_view b, std::size_t shingle_size = 3) {
    const auto sa = shingles(a, shingle_size);
    const auto sb = shingles(b, shingle_size);
    std::size_t inter = 0;
    for (const auto& s : sa) inter += sb.count(s);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// k universal hash families h_i(x) = (a_i x + b_i) mod (2^61 - 1), all seeded.
inline MinHashSignature minhash_signature(std::string_view text, std::size_t k = 128,
                                          std::size_t shingle_size = 3, std::uint64_t seed = 0) {
    if (k < 16) throw Error("minhash_signature: k must be >= 16");
    if (shingle_size == 0) throw Error("minhash_signature: shingle size must be >= 1");
    std::vector<std::uint64_t> a(k), b(k);
    Rng rng(derive_seed(seed, "minhash"));
    for (std::size_t i = 0; i < k; ++i) {
        a[i] = 1 + rng.next() % (detail::kMersenne61 - 1);
        b[i] = rng.next() % detail::kMersenne61;
    }
    MinHashSignature sig{std::vector<std::uint64_t>(k, detail::kMersenne61), shingle_size};
    for (const auto& sh : shingles(text, shingle_size)) {
        const std::uint64_t x = fnv1a64(sh) % detail::kMersenne61;
        for (std::size_t i = 0; i < k; ++i) {
            const auto h = detail::mod_mersenne61(static_cast<unsigned __int128>(a[i]) * x + b[i]);
            sig.values[i] = std::min(sig.values[i], h);
        }
    }
    return sig;
}

inline double signature_match(const MinHashSignature& x, const MinHashSignature& y) {
    if (x.values.size() != y.values.size()) throw Error("signature length mismatch");
    std::size_t eq = 0;
    for (std::size_t i = 0; i < x.values.size(); ++i) eq += x.values[i] == y.values[i];
    return static_cast<double>(eq) / static_cast<double>(x.values.size());
}

struct DedupConfig {
    std::size_t bands = 32;
    std::size_t rows = 4;
    std::size_t k = 128;
    std::size_t shingle_size = 3;
    double threshold = 0.8;
    std::uint64_t seed = 0;
};

struct TextItem {
    std::string id;
    std::string text;
};

// Band-bucketed candidate pairs, confirmed at signature match >= threshold;
// each connected component keeps its lexicographically smallest id.
inline std::vector<std::string> lsh_dedup(const std::vector<TextItem>& items,
                                          const DedupConfig& cfg = {}) {
    if (cfg.bands * cfg.rows != cfg.k) {
        throw Error("lsh_dedup: bands x rows (" + std::to_string(cfg.bands) + " x " +
                    std::to_string(cfg.rows) + ") must equal k (" + std::to_string(cfg.k) + ")");
    }
    const std::size_t n = items.size();
    std::vector<MinHashSignature> sigs;
    sigs.reserve(n);
    for (const auto& it : items) sigs.push_back(minhash_signature(it.text, cfg.k, cfg.shingle_size, cfg.seed));

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    std::set<std::pair<std::size_t, std::size_t>> checked;
    for (std::size_t band = 0; band < cfg.bands; ++band) {
        std::map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t h = 0x84222325cbf29ce4ULL ^ band;
            for (std::size_t r = 0; r < cfg.rows; ++r) h = splitmix64(h ^ sigs[i].values[band * cfg.rows + r]);
            buckets[h].push_back(i);
        }
        for (const auto& [key, members] : buckets) {
            for (std::size_t x = 0; x < members.size(); ++x) {
                for (std::size_t y = x + 1; y < members.size(); ++y) {
                    const auto pr = std::make_pair(members[x], members[y]);
                    if (!checked.insert(pr).second) continue;
                    if (signature_match(sigs[pr.first], sigs[pr.second]) >= cfg.threshold) {
                        parent[find(pr.first)] = find(pr.second);
                    }
                }
            }
        }
    }

    std::map<std::size_t, std::string> representative;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = representative.emplace(find(i), items[i].id);
        if (!inserted && items[i].id < it->second) it->second = items[i].id;
    }
    std::set<std::string> keep;
    for (const auto& [root, id] : representative) keep.insert(id);
    std::vector<std::string> out;
    std::set<std::string> emitted;
    for (const auto& it : items) {
        if (keep.count(it.id) && emitted.insert(it.id).second) out.push_back(it.id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Keyword lexicon baseline: a sentence is retrieved when any single term hits.

class KeywordLexicon {
public:
    KeywordLexicon() = default;
    explicit KeywordLexicon(const std::vector<std::string>& terms) {
        for (const auto& t : terms) add(t);
    }

    void add(const std::string& term) {
        auto toks = word_tokens(term);
        if (!toks.empty()) terms_.push_back(std::move(toks));
    }

    std::size_t size() const { return terms_.size(); }

    bool matches(std::string_view text) const {
        const auto toks = word_tokens(text);
        for (const auto& term : terms_) {
            if (term.size() > toks.size()) continue;
            for (std::size_t i = 0; i + term.size() <= toks.size(); ++i) {
                if (std::equal(term.begin(), term.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) {
                    return true;
                }
            }
        }
        return false;
    }

private:
    std::vector<std::vector<std::string>> terms_;
};

// One term per line, case-insensitive.
inline KeywordLexicon load_lexicon(const std::string& path) {
    KeywordLexicon lex;
    for (const auto& line : read_lines(path)) {
        const auto t = trim(line);
        if (!t.empty() && t[0] != '#') lex.add(t);
    }
    return lex;
}

// ---------------------------------------------------------------------------
// Retrieval evaluation

using PairKey = std::pair<std::string, std::string>;  // (sentence id, symptom id)

struct SymptomRetrieval {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct RetrievalEval {
    std::map<std::string, SymptomRetrieval> per_symptom;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
};

inline RetrievalEval evaluate_retrieval(const std::map<PairKey, double>& scores,
                                        const std::map<PairKey, bool>& gold, double threshold = 0.5) {
    RetrievalEval ev;
    for (const auto& [key, positive] : gold) {
        auto it = scores.find(key);
        const double s = it == scores.end() ? -1.0 : it->second;
        const bool retrieved = s >= threshold;
        auto& m = ev.per_symptom[key.second];
        if (retrieved && positive) ++m.tp;
        else if (retrieved) ++m.fp;
        else if (positive) ++m.fn;
    }
    double psum = 0.0, rsum = 0.0;
    std::size_t pn = 0, rn = 0;
    for (auto& [sid, m] : ev.per_symptom) {
        if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
        if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
        if (!m.recall) continue;  // no gold positive
        rsum += *m.recall;
        ++rn;
        if (m.precision) {
            psum += *m.precision;
            ++pn;
        }
    }
    ev.macro_precision = pn ? psum / static_cast<double>(pn) : 0.0;
    ev.macro_recall = rn ? rsum / static_cast<double>(rn) : 0.0;
    return ev;
}

}  // namespace psysym
