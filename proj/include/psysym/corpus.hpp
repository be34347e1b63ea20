#pragma once

// Post ingestion, cleaning, sentence splitting, diagnosis pattern matching,
// control-user sampling and dataset splits.

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"
#include "psysym/kg.hpp"

namespace psysym {

struct RawPost {
    std::string id;
    std::string author;
    std::string subreddit;
    std::int64_t created = 0;
    std::string text;
    bool operator==(const RawPost&) const = default;
};

struct Sentence {
    std::string post_id;
    std::size_t index = 0;
    std::string text;

    std::string id() const { return post_id + ":" + std::to_string(index); }
};

// NDJSON: {id, author, subreddit, created_utc, selftext}
inline RawPost post_from_json(const nlohmann::json& j) {
    RawPost p;
    try {
        p.id = j.at("id").get<std::string>();
        p.author = j.value("author", std::string{});
        p.subreddit = j.value("subreddit", std::string{});
        p.created = j.value("created_utc", std::int64_t{0});
        p.text = j.value("selftext", std::string{});
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed post record: ") + ex.what());
    }
    if (p.created < 0) throw ValidationError("post '" + p.id + "' has negative created_utc");
    return p;
}

inline nlohmann::json to_json(const RawPost& p) {
    return {{"id", p.id},
            {"author", p.author},
            {"subreddit", p.subreddit},
            {"created_utc", p.created},
            {"selftext", p.text}};
}

inline std::vector<RawPost> parse_posts(const std::string& text) {
    std::vector<RawPost> posts;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("posts line " + std::to_string(line_no) + ": " + ex.what());
        }
        auto p = post_from_json(j);
        if (!seen.insert(p.id).second) throw ValidationError("duplicate post id '" + p.id + "'");
        posts.push_back(std::move(p));
    }
    return posts;
}

inline std::vector<RawPost> load_posts(const std::string& path) { return parse_posts(read_file(path)); }

inline std::string serialize_posts(const std::vector<RawPost>& posts) {
    std::string out;
    for (const auto& p : posts) out += to_json(p).dump() + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Cleaning

namespace detail {

// Index of the bracket closing the one at `open`, honoring nesting; npos if none.
inline std::size_t matching_close(std::string_view s, std::size_t open, char o, char c) {
    int depth = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == o) ++depth;
        else if (s[i] == c && --depth == 0) return i;
    }
    return std::string_view::npos;
}

inline std::string flatten_links_once(std::string_view s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '[') {
            const auto close = matching_close(s, i, '[', ']');
            if (close != std::string_view::npos && close + 1 < s.size() && s[close + 1] == '(') {
                const auto paren = matching_close(s, close + 1, '(', ')');
                if (paren != std::string_view::npos) {
                    out += flatten_links_once(s.substr(i + 1, close - i - 1));
                    i = paren + 1;
                    continue;
                }
            }
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

}  // namespace detail

// Markdown links "[anchor](url)" become "anchor"; everything else is kept byte for byte.
inline RawPost clean_post(RawPost post) {
    std::string cur = post.text;
    for (;;) {
        std::string next = detail::flatten_links_once(cur);
        if (next == cur) break;
        cur = std::move(next);
    }
    post.text = std::move(cur);
    return post;
}

// ---------------------------------------------------------------------------
// Sentence splitting

inline const std::set<std::string>& abbreviation_guard() {
    static const std::set<std::string> guard = {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
        "e.g", "i.e", "cf", "approx", "no", "vol", "fig", "u.s", "a.m", "p.m"};
    return guard;
}

inline bool is_removed_sentinel(std::string_view s) {
    const auto t = to_lower(trim(s));
    return t == "[removed]" || t == "[deleted]";
}

inline std::vector<std::string> split_text(std::string_view text) {
    std::vector<std::string> out;
    auto flush = [&](std::string_view frag) {
        auto t = trim(frag);
        if (!t.empty() && !is_removed_sentinel(t)) out.push_back(std::move(t));
    };
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            flush(text.substr(start, i - start));
            start = ++i;
            continue;
        }
        if (c == '.' || c == '!' || c == '?') {
            std::size_t j = i;
            while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
            while (j < text.size() && (text[j] == '"' || text[j] == '\'' || text[j] == ')' || text[j] == ']')) ++j;
            const bool boundary = j == text.size() || is_space(text[j]);
            if (boundary && c == '.' && j == i + 1) {
                // Word ending at this period, e.g. "e.g" or "Dr".
                std::size_t w = i;
                while (w > start && !is_space(text[w - 1])) --w;
                std::string word = to_lower(text.substr(w, i - w));
                while (!word.empty() && !is_alnum(word.front())) word.erase(word.begin());
                if (abbreviation_guard().count(word)) {
                    i = j;
                    continue;
                }
            }
            if (boundary) {
                flush(text.substr(start, j - start));
                start = i = j;
                continue;
            }
            i = j;
            continue;
        }
        ++i;
    }
    flush(text.substr(start));
    return out;
}

inline std::vector<Sentence> split_sentences(const RawPost& post) {
    std::vector<Sentence> out;
    for (auto& s : split_text(post.text)) out.push_back({post.id, out.size(), std::move(s)});
    return out;
}

// ---------------------------------------------------------------------------
// Diagnosis pattern matching

struct DiagnosisRule {
    std::vector<std::string> diagnosis_patterns;
    std::map<std::string, std::vector<std::string>> disease_keywords;
    std::size_t window = 40;

    void validate(const KnowledgeGraph* kg = nullptr) const {
        if (window == 0) throw ValidationError("diagnosis window must be > 0");
        if (kg) {
            for (const auto& [d, kws] : disease_keywords) {
                if (!kg->has_disease(d)) throw ValidationError("diagnosis rule names unknown disease '" + d + "'");
            }
        }
    }
};

inline DiagnosisRule rule_from_json(const nlohmann::json& j) {
    DiagnosisRule r;
    try {
        r.diagnosis_patterns = j.at("patterns").get<std::vector<std::string>>();
        r.disease_keywords = j.at("keywords").get<std::map<std::string, std::vector<std::string>>>();
        r.window = j.value("window", std::size_t{40});
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed diagnosis rule: ") + ex.what());
    }
    r.validate();
    return r;
}

inline nlohmann::json to_json(const DiagnosisRule& r) {
    return {{"patterns", r.diagnosis_patterns}, {"keywords", r.disease_keywords}, {"window", r.window}};
}

inline DiagnosisRule load_rule(const std::string& path) {
    try {
        return rule_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& ex) {
        throw ParseError(std::string("diagnosis rule is not valid JSON: ") + ex.what());
    }
}

struct Span {
    std::size_t begin = 0, end = 0;
};

// Case-insensitive occurrences; with whole_word the match must sit on alnum boundaries.
inline std::vector<Span> find_all(std::string_view lowered_text, std::string_view needle, bool whole_word) {
    std::vector<Span> out;
    const std::string n = to_lower(needle);
    if (n.empty()) return out;
    std::size_t pos = lowered_text.find(n);
    while (pos != std::string_view::npos) {
        const std::size_t end = pos + n.size();
        const bool left_ok = pos == 0 || !is_alnum(lowered_text[pos - 1]) || !is_alnum(n.front());
        const bool right_ok = end == lowered_text.size() || !is_alnum(lowered_text[end]) || !is_alnum(n.back());
        if (!whole_word || (left_ok && right_ok)) out.push_back({pos, end});
        pos = lowered_text.find(n, pos + 1);
    }
    return out;
}

// Characters strictly between the nearest edges of two spans; 0 when they overlap.
inline std::size_t span_gap(const Span& a, const Span& b) {
    if (b.begin >= a.end) return b.begin - a.end;
    if (a.begin >= b.end) return a.begin - b.end;
    return 0;
}

struct DiagnosisResult {
    std::map<std::string, std::set<std::string>> user_diseases;
    std::set<std::string> diagnostic_posts;
};

inline std::set<std::string> match_diagnoses(std::string_view text, const DiagnosisRule& rule) {
    std::set<std::string> found;
    const std::string lowered = to_lower(text);
    for (const auto& pat : rule.diagnosis_patterns) {
        for (const auto& p : find_all(lowered, pat, false)) {
            for (const auto& [disease, keywords] : rule.disease_keywords) {
                if (found.count(disease)) continue;
                for (const auto& kw : keywords) {
                    bool hit = false;
                    for (const auto& k : find_all(lowered, kw, true)) {
                        if (span_gap(p, k) <= rule.window) {
                            hit = true;
                            break;
                        }
                    }
                    if (hit) {
                        found.insert(disease);
                        break;
                    }
                }
            }
        }
    }
    return found;
}

inline DiagnosisResult label_diagnosed_users(const std::vector<RawPost>& posts, const DiagnosisRule& rule) {
    rule.validate();
    DiagnosisResult res;
    for (const auto& p : posts) {
        auto ds = match_diagnoses(p.text, rule);
        if (ds.empty()) continue;
        res.diagnostic_posts.insert(p.id);
        res.user_diseases[p.author].insert(ds.begin(), ds.end());
    }
    return res;
}

inline std::vector<RawPost> filter_diagnostic_posts(const std::vector<RawPost>& posts,
                                                    const std::set<std::string>& diagnostic_ids) {
    std::vector<RawPost> out;
    for (const auto& p : posts) {
        if (!diagnostic_ids.count(p.id)) out.push_back(p);
    }
    return out;
}

// Users with no activity in mental-health subreddits and no mental-health term in any post.
inline std::vector<std::string> eligible_control_users(const std::vector<RawPost>& posts,
                                                       const std::set<std::string>& mh_subreddits,
                                                       const std::vector<std::string>& mh_terms) {
    std::set<std::string> subs;
    for (const auto& s : mh_subreddits) subs.insert(to_lower(s));
    std::map<std::string, bool> eligible;
    for (const auto& p : posts) {
        auto [it, inserted] = eligible.emplace(p.author, true);
        if (!it->second) continue;
        if (subs.count(to_lower(p.subreddit))) {
            it->second = false;
            continue;
        }
        const std::string lowered = to_lower(p.text);
        for (const auto& t : mh_terms) {
            if (!find_all(lowered, t, true).empty()) {
                it->second = false;
                break;
            }
        }
    }
    std::vector<std::string> out;
    for (const auto& [u, ok] : eligible) {
        if (ok) out.push_back(u);
    }
    return out;
}

inline std::set<std::string> sample_control_users(const std::vector<RawPost>& posts,
                                                  const std::set<std::string>& mh_subreddits,
                                                  const std::vector<std::string>& mh_terms, std::size_t n,
                                                  std::uint64_t seed) {
    auto pool = eligible_control_users(posts, mh_subreddits, mh_terms);
    if (n > pool.size()) {
        throw ValidationError("insufficient eligible control users: requested " + std::to_string(n) +
                              ", eligible " + std::to_string(pool.size()));
    }
    Rng rng(derive_seed(seed, "control-sample"));
    rng.shuffle(pool);
    return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n)};
}

// ---------------------------------------------------------------------------
// Splits

enum class Split { train, validation, test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ParseError("unknown split '" + s + "'");
}

using SplitAssignment = std::map<std::string, Split>;
using SplitRatios = std::array<double, 3>;

inline constexpr SplitRatios kDefaultRatios = {5.0, 1.0, 4.0};

namespace detail {

inline void cut_group(std::vector<std::string> ids, const SplitRatios& r, Rng& rng, SplitAssignment& out) {
    rng.shuffle(ids);
    const double total = r[0] + r[1] + r[2];
    const double n = static_cast<double>(ids.size());
    const auto c1 = static_cast<std::size_t>(std::floor(n * r[0] / total + 0.5));
    const auto c2 = static_cast<std::size_t>(std::floor(n * (r[0] + r[1]) / total + 0.5));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out[ids[i]] = i < c1 ? Split::train : (i < c2 ? Split::validation : Split::test);
    }
}

}  // namespace detail

// Seeded shuffle and proportional cut, per stratum when strata are given.
inline SplitAssignment split_dataset(const std::vector<std::string>& ids, const SplitRatios& ratios,
                                     std::uint64_t seed,
                                     const std::map<std::string, std::string>* strata = nullptr) {
    if (ids.empty()) throw Error("split_dataset: empty input");
    for (double r : ratios) {
        if (!(r > 0.0)) throw Error("split_dataset: ratios must be positive");
    }
    Rng rng(derive_seed(seed, "split"));
    SplitAssignment out;
    if (!strata) {
        detail::cut_group(ids, ratios, rng, out);
        return out;
    }
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& id : ids) {
        auto it = strata->find(id);
        groups[it == strata->end() ? std::string{} : it->second].push_back(id);
    }
    for (auto& [cls, members] : groups) detail::cut_group(std::move(members), ratios, rng, out);
    return out;
}

inline std::string serialize_splits(const SplitAssignment& s) {
    std::string out;
    for (const auto& [id, sp] : s) out += id + "\t" + to_string(sp) + "\n";
    return out;
}

inline SplitAssignment load_splits(const std::string& path) {
    SplitAssignment s;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw ParseError("split row needs 2 columns: " + line);
        s[cols[0]] = parse_split(trim(cols[1]));
    }
    return s;
}

}  // namespace psysym
