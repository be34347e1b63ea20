#pragma once

// TF-IDF featurization with smoothed idf and L2-normalized rows.

#include <map>
#include <regex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"

namespace psysym {

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by index

struct TfidfConfig {
    std::size_t min_df = 1;
    std::size_t max_features = 0;  // 0 = unlimited
    bool lowercase = true;
    std::string token_pattern = "[A-Za-z0-9']+";
};

class TfidfVectorizer {
public:
    TfidfVectorizer() = default;

    static TfidfVectorizer fit(const std::vector<std::string>& docs, const TfidfConfig& config = {}) {
        TfidfVectorizer v;
        v.config_ = config;
        v.pattern_ = std::regex(config.token_pattern);
        std::map<std::string, std::size_t> df, total;
        std::size_t non_empty = 0;
        for (const auto& d : docs) {
            const auto toks = v.tokenize(d);
            if (!toks.empty()) ++non_empty;
            std::map<std::string, std::size_t> seen;
            for (const auto& t : toks) ++seen[t];
            for (const auto& [t, c] : seen) {
                ++df[t];
                total[t] += c;
            }
        }
        if (non_empty == 0) throw Error("fit_tfidf: empty corpus");

        std::vector<std::string> terms;
        for (const auto& [t, c] : df) {
            if (c >= config.min_df) terms.push_back(t);
        }
        if (config.max_features && terms.size() > config.max_features) {
            std::stable_sort(terms.begin(), terms.end(), [&](const auto& a, const auto& b) {
                return total[a] > total[b];
            });
            terms.resize(config.max_features);
            std::sort(terms.begin(), terms.end());
        }
        const double n = static_cast<double>(docs.size());
        for (std::size_t i = 0; i < terms.size(); ++i) {
            v.vocabulary_.emplace(terms[i], static_cast<std::uint32_t>(i));
            v.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df[terms[i]]))) + 1.0);
        }
        return v;
    }

    SparseVector transform(std::string_view doc) const {
        std::map<std::uint32_t, double> counts;
        for (const auto& t : tokenize(doc)) {
            auto it = vocabulary_.find(t);
            if (it != vocabulary_.end()) counts[it->second] += 1.0;
        }
        SparseVector row;
        double norm = 0.0;
        for (const auto& [idx, c] : counts) {
            const double w = c * idf_[idx];
            row.emplace_back(idx, w);
            norm += w * w;
        }
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (auto& [idx, w] : row) w /= norm;
        }
        return row;
    }

    std::vector<SparseVector> transform_all(const std::vector<std::string>& docs) const {
        std::vector<SparseVector> out;
        out.reserve(docs.size());
        for (const auto& d : docs) out.push_back(transform(d));
        return out;
    }

    std::vector<std::string> tokenize(std::string_view doc) const {
        std::vector<std::string> out;
        const std::string text = config_.lowercase ? to_lower(doc) : std::string(doc);
        for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern_); it != std::sregex_iterator(); ++it) {
            out.push_back(it->str());
        }
        return out;
    }

    std::size_t size() const { return idf_.size(); }
    const std::map<std::string, std::uint32_t>& vocabulary() const { return vocabulary_; }
    const std::vector<double>& idf() const { return idf_; }
    const TfidfConfig& config() const { return config_; }

    nlohmann::json to_json() const {
        std::vector<std::string> terms(idf_.size());
        for (const auto& [t, i] : vocabulary_) terms[i] = t;
        return {{"terms", terms},
                {"idf", idf_},
                {"min_df", config_.min_df},
                {"max_features", config_.max_features},
                {"lowercase", config_.lowercase},
                {"token_pattern", config_.token_pattern}};
    }

    static TfidfVectorizer from_json(const nlohmann::json& j) {
        TfidfVectorizer v;
        v.config_.min_df = j.at("min_df").get<std::size_t>();
        v.config_.max_features = j.at("max_features").get<std::size_t>();
        v.config_.lowercase = j.at("lowercase").get<bool>();
        v.config_.token_pattern = j.at("token_pattern").get<std::string>();
        v.pattern_ = std::regex(v.config_.token_pattern);
        const auto terms = j.at("terms").get<std::vector<std::string>>();
        v.idf_ = j.at("idf").get<std::vector<double>>();
        if (terms.size() != v.idf_.size()) throw ParseError("vectorizer: terms/idf length mismatch");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (!(v.idf_[i] > 0.0)) throw ValidationError("vectorizer: non-positive idf for '" + terms[i] + "'");
            v.vocabulary_.emplace(terms[i], static_cast<std::uint32_t>(i));
        }
        return v;
    }

private:
    TfidfConfig config_;
    std::regex pattern_{"[A-Za-z0-9']+"};
    std::map<std::string, std::uint32_t> vocabulary_;
    std::vector<double> idf_;
};

inline TfidfVectorizer fit_tfidf(const std::vector<std::string>& docs, const TfidfConfig& config = {}) {
    return TfidfVectorizer::fit(docs, config);
}

inline double sparse_dot(const SparseVector& x, std::span<const double> w) {
    double s = 0.0;
    for (const auto& [i, v] : x) s += v * w[i];
    return s;
}

}  // namespace psysym
