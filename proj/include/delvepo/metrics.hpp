#pragma once

// Scoring functions. Text normalization follows the usual reading-comprehension
// convention: lowercase, strip punctuation, drop English articles, collapse
// whitespace. MCC treats one designated label as the positive class.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "delvepo/errors.hpp"

namespace delvepo {

inline std::string normalize_answer(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (unsigned char c : text)
        lowered += std::ispunct(c) ? ' ' : static_cast<char>(std::tolower(c));
    std::string out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        if (word != "a" && word != "an" && word != "the") {
            if (!out.empty()) out += ' ';
            out += word;
        }
        word.clear();
    };
    for (unsigned char c : lowered) {
        if (std::isspace(c)) flush();
        else word += static_cast<char>(c);
    }
    flush();
    return out;
}

inline std::vector<std::string> normalized_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string norm = normalize_answer(text);
    std::string word;
    for (char c : norm) {
        if (c == ' ') {
            if (!word.empty()) tokens.push_back(word);
            word.clear();
        } else {
            word += c;
        }
    }
    if (!word.empty()) tokens.push_back(word);
    return tokens;
}

// Lowercased alphanumeric runs; the tokenization used by the overlap metrics.
inline std::vector<std::string> alnum_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            word += static_cast<char>(std::tolower(c));
        } else if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    }
    if (!word.empty()) tokens.push_back(word);
    return tokens;
}

inline void require_same_length(const std::vector<std::string>& preds,
                                const std::vector<std::string>& golds) {
    if (preds.size() != golds.size() || preds.empty())
        throw LengthMismatch("need equally many predictions and golds (non-zero), got " +
                             std::to_string(preds.size()) + " vs " +
                             std::to_string(golds.size()));
}

inline double metric_accuracy(const std::vector<std::string>& preds,
                              const std::vector<std::string>& golds) {
    require_same_length(preds, golds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (normalize_answer(preds[i]) == normalize_answer(golds[i])) hits++;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// Binary Matthews correlation; anything not matching positive_label counts as
// the negative class. Zero when any confusion-matrix factor is zero.
inline double metric_mcc(const std::vector<std::string>& preds,
                         const std::vector<std::string>& golds,
                         const std::string& positive_label) {
    require_same_length(preds, golds);
    std::string positive = normalize_answer(positive_label);
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool pred_pos = normalize_answer(preds[i]) == positive;
        bool gold_pos = normalize_answer(golds[i]) == positive;
        if (pred_pos && gold_pos) tp++;
        else if (!pred_pos && !gold_pos) tn++;
        else if (pred_pos) fp++;
        else fn++;
    }
    double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

inline double pair_token_f1(const std::string& pred, const std::string& gold) {
    auto p = normalized_tokens(pred);
    auto g = normalized_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> gold_counts;
    for (const auto& t : g) gold_counts[t]++;
    int common = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            common++;
            it->second--;
        }
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

inline double metric_token_f1(const std::vector<std::string>& preds,
                              const std::vector<std::string>& golds) {
    require_same_length(preds, golds);
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += pair_token_f1(preds[i], golds[i]);
    return sum / static_cast<double>(preds.size());
}

namespace detail {

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    std::vector<std::string> grams;
    if (tokens.size() < n) return grams;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (std::size_t j = 1; j < n; ++j) g += "\x1f" + tokens[i + j];
        grams.push_back(std::move(g));
    }
    return grams;
}

inline double overlap_f1(const std::vector<std::string>& pred_units,
                         const std::vector<std::string>& gold_units) {
    if (pred_units.empty() && gold_units.empty()) return 1.0;
    if (pred_units.empty() || gold_units.empty()) return 0.0;
    std::map<std::string, int> gold_counts;
    for (const auto& u : gold_units) gold_counts[u]++;
    int common = 0;
    for (const auto& u : pred_units) {
        auto it = gold_counts.find(u);
        if (it != gold_counts.end() && it->second > 0) {
            common++;
            it->second--;
        }
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(pred_units.size());
    double recall = static_cast<double>(common) / static_cast<double>(gold_units.size());
    return 2.0 * precision * recall / (precision + recall);
}

inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

inline double pair_rouge_n(const std::string& pred, const std::string& gold, std::size_t n) {
    return detail::overlap_f1(detail::ngrams(alnum_tokens(pred), n),
                              detail::ngrams(alnum_tokens(gold), n));
}

inline double pair_rouge_l(const std::string& pred, const std::string& gold) {
    auto p = alnum_tokens(pred);
    auto g = alnum_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    auto lcs = static_cast<double>(detail::lcs_length(p, g));
    if (lcs == 0.0) return 0.0;
    double precision = lcs / static_cast<double>(p.size());
    double recall = lcs / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

// Mean of ROUGE-1, ROUGE-2, and LCS-based ROUGE-L F1, averaged over examples.
inline double metric_rouge_avg(const std::vector<std::string>& preds,
                               const std::vector<std::string>& golds) {
    require_same_length(preds, golds);
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        sum += (pair_rouge_n(preds[i], golds[i], 1) + pair_rouge_n(preds[i], golds[i], 2) +
                pair_rouge_l(preds[i], golds[i])) /
               3.0;
    }
    return sum / static_cast<double>(preds.size());
}

}  // namespace delvepo
