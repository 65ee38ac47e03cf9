#pragma once

// Example records and the files they come from: JSON-lines natively, CSV/TSV
// via a header mapping. A Split pairs a dev set (scored during evolution) with
// a held-out test set and counts reads of each so leak checks stay cheap.

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/errors.hpp"
#include "delvepo/rng.hpp"

namespace delvepo {

struct Example {
    std::string input;
    std::string answer;
    std::vector<std::string> choices;  // optional, classification aids
};

inline Example example_from_json(const nlohmann::json& j) {
    Example ex;
    if (!j.contains("input") || !j.contains("answer"))
        throw ConfigError("example needs 'input' and 'answer' fields");
    ex.input = j.at("input").get<std::string>();
    const auto& ans = j.at("answer");
    if (ans.is_string()) ex.answer = ans.get<std::string>();
    else if (ans.is_number_integer()) ex.answer = std::to_string(ans.get<long>());
    else if (ans.is_number()) ex.answer = std::to_string(ans.get<double>());
    else throw ConfigError("'answer' must be a string or number");
    if (ex.input.empty()) throw ConfigError("example has empty 'input'");
    if (j.contains("choices")) ex.choices = j.at("choices").get<std::vector<std::string>>();
    return ex;
}

inline std::vector<Example> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    std::vector<Example> examples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            examples.push_back(example_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return examples;
}

namespace detail {

// One record per call; handles quoted fields, doubled quotes, and the
// delimiter inside quotes. No multi-line fields.
inline std::vector<std::string> split_delimited(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r' || i + 1 != line.size()) {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace detail

inline std::vector<Example> load_delimited(const std::string& path, char delim,
                                           const std::string& input_col,
                                           const std::string& answer_col) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
    auto header = detail::split_delimited(line, delim);
    auto column = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ConfigError(path + ": no column named '" + name + "' in header");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t input_idx = column(input_col);
    std::size_t answer_idx = column(answer_col);

    std::vector<Example> examples;
    int line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = detail::split_delimited(line, delim);
        if (fields.size() <= std::max(input_idx, answer_idx))
            throw ConfigError(path + ":" + std::to_string(line_no) + ": too few fields");
        Example ex;
        ex.input = fields[input_idx];
        ex.answer = fields[answer_idx];
        if (ex.input.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty input");
        examples.push_back(std::move(ex));
    }
    return examples;
}

// Dataset file dispatch by extension: .jsonl/.json lines, .csv, .tsv.
inline std::vector<Example> load_examples(const std::string& path,
                                          const std::string& input_col = "input",
                                          const std::string& answer_col = "answer") {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "csv") return load_delimited(path, ',', input_col, answer_col);
    if (ext == "tsv") return load_delimited(path, '\t', input_col, answer_col);
    return load_jsonl(path);
}

class Split {
public:
    Split(std::vector<Example> dev, std::vector<Example> test, std::uint64_t seed)
        : dev_(std::move(dev)), test_(std::move(test)), seed_(seed) {}

    // Random split per the usual protocol: draw test_size examples for the
    // held-out test set, the remainder is the dev set.
    static Split random(std::vector<Example> all, std::size_t test_size, std::uint64_t seed) {
        if (test_size >= all.size())
            throw ConfigError("test_size " + std::to_string(test_size) +
                              " leaves no dev examples out of " + std::to_string(all.size()));
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(seed, "split"));
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Example> test, dev;
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < test_size ? test : dev).push_back(std::move(all[order[i]]));
        return Split(std::move(dev), std::move(test), seed);
    }

    const std::vector<Example>& dev() const {
        dev_reads_++;
        return dev_;
    }
    const std::vector<Example>& test() const {
        test_reads_++;
        return test_;
    }
    std::uint64_t seed() const { return seed_; }
    long dev_reads() const { return dev_reads_; }
    long test_reads() const { return test_reads_; }

private:
    std::vector<Example> dev_;
    std::vector<Example> test_;
    std::uint64_t seed_;
    mutable long dev_reads_ = 0;
    mutable long test_reads_ = 0;
};

}  // namespace delvepo
