#pragma once

// Command implementations behind the `delvepo` binary: init (generate value
// pools), run/resume (optimize per seed), eval (score a prompt file on the
// held-out test split), report (tables and plot data from finished runs).
// Commands are plain functions over (config, options, ostream) so tests can
// drive them without a process boundary.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delvepo/config.hpp"
#include "delvepo/dataset.hpp"
#include "delvepo/eval.hpp"
#include "delvepo/http_backend.hpp"
#include "delvepo/meta_prompts.hpp"
#include "delvepo/mock_backend.hpp"
#include "delvepo/report.hpp"
#include "delvepo/runner.hpp"

namespace delvepo {

struct CliOptions {
    std::string config_path;             // --config
    std::vector<std::string> overrides;  // --set key.path=value
    std::vector<std::uint64_t> seeds;    // --seed, may repeat; empty = config seeds
    bool mock = false;                   // --mock
    std::string out_dir;                 // --out; empty = config output.dir
    std::string prompt_file;             // eval's positional argument
    int values_per_type = 0;             // --values-per-type; 0 = config value
};

// Where a run keeps its artifacts, all under one output directory.
struct OutPaths {
    std::string dir;

    explicit OutPaths(std::string d) : dir(std::move(d)) {}

    std::string pools() const { return dir + "/pools.json"; }
    std::string checkpoint(std::uint64_t seed) const {
        return dir + "/checkpoint_seed" + std::to_string(seed) + ".json";
    }
    std::string best_prompt(std::uint64_t seed) const {
        return dir + "/best_prompt_seed" + std::to_string(seed) + ".txt";
    }
    std::string report(std::uint64_t seed) const {
        return dir + "/report_seed" + std::to_string(seed) + ".json";
    }
    std::string curve_csv(std::uint64_t seed) const {
        return dir + "/curve_seed" + std::to_string(seed) + ".csv";
    }
    std::string summary() const { return dir + "/summary.txt"; }
    std::string combined_csv() const { return dir + "/curves.csv"; }
};

inline std::string resolve_out_dir(const nlohmann::json& config, const CliOptions& opts) {
    std::string dir =
        opts.out_dir.empty() ? config.at("output").at("dir").get<std::string>() : opts.out_dir;
    if (dir.empty()) throw ConfigError("output directory must not be empty");
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<std::uint64_t> seeds_from(const nlohmann::json& config,
                                             const CliOptions& opts) {
    std::vector<std::uint64_t> seeds =
        opts.seeds.empty() ? config.at("seeds").get<std::vector<std::uint64_t>>() : opts.seeds;
    if (seeds.empty()) throw ConfigError("no seeds given (config seeds list is empty)");
    return seeds;
}

// The model wiring for one run: a mock when asked for, HTTP backends
// otherwise. Mock runs skip real backoff sleeps — scripted failures should
// not slow tests down.
struct LlmStack {
    std::shared_ptr<MockBackend> mock;  // set in mock mode only
    std::unique_ptr<Gateway> gateway;
};

inline LlmStack make_llm_stack(const nlohmann::json& config, bool mock_mode,
                               std::uint64_t seed) {
    const auto& llm = config.at("llm");
    RetryPolicy retry = retry_from_config(config);
    int max_in_flight = llm.at("max_in_flight").get<int>();
    LlmStack stack;
    if (mock_mode) {
        std::string fixture = llm.at("mock").at("fixture").get<std::string>();
        stack.mock = fixture.empty()
                         ? std::make_shared<MockBackend>(seed, std::vector<MockRule>{})
                         : MockBackend::from_fixture_file(fixture, seed);
        stack.gateway =
            std::make_unique<Gateway>(stack.mock, retry, max_in_flight, [](int) {});
    } else {
        auto optimizer =
            std::make_shared<HttpBackend>(endpoint_from_config(config, LlmRole::Optimizer));
        auto target =
            std::make_shared<HttpBackend>(endpoint_from_config(config, LlmRole::Target));
        stack.gateway = std::make_unique<Gateway>(optimizer, target, retry, max_in_flight);
    }
    if (!llm.at("strip_reasoning").get<bool>())
        stack.gateway->set_reasoning_tags("<think>", "</think>", false);
    return stack;
}

// Every <type>...</type> block in the reply, sanitized and deduplicated in
// order of appearance. An empty tag is a legal candidate: the "omit this
// component" option.
inline std::vector<std::string> parse_pool_reply(const std::string& reply,
                                                 const std::string& type_name,
                                                 const Registry& registry) {
    std::vector<std::string> values;
    std::string open = open_tag(type_name), close = close_tag(type_name);
    std::size_t pos = 0;
    while (true) {
        auto start = reply.find(open, pos);
        if (start == std::string::npos) break;
        auto end = reply.find(close, start + open.size());
        if (end == std::string::npos) break;  // unterminated tail: keep what parsed so far
        std::string inner = reply.substr(start + open.size(), end - start - open.size());
        std::string value = trim(strip_registered_tags(inner, registry));
        if (std::find(values.begin(), values.end(), value) == values.end())
            values.push_back(std::move(value));
        pos = end + close.size();
    }
    return values;
}

inline int cmd_init(const nlohmann::json& config, const CliOptions& opts, std::ostream& out) {
    std::string task_description = config.at("task").at("description").get<std::string>();
    if (task_description.empty())
        throw ConfigError("init needs task.description set in the config");
    Registry registry = registry_from_config(config);
    OutPaths paths(resolve_out_dir(config, opts));
    int per_type = opts.values_per_type > 0
                       ? opts.values_per_type
                       : config.at("init").at("values_per_type").get<int>();
    if (per_type <= 0) throw ConfigError("values per type must be positive");

    LlmStack stack = make_llm_stack(config, opts.mock, seeds_from(config, opts).front());
    ChatRequest req;
    req.system = kOptimizerSystemPrompt;
    req.temperature = config.at("llm").at("temperature").get<double>();
    req.max_output_tokens = config.at("llm").at("meta_max_tokens").get<int>();

    ValuePools pools;
    for (const auto& t : registry.types()) {
        req.user = meta::generate_pool(t, task_description, per_type);
        std::vector<std::string> values;
        int attempts = stack.gateway->retry_policy().max_attempts;
        for (int attempt = 0; attempt < attempts && int(values.size()) < per_type; ++attempt) {
            std::string reply;
            try {
                reply = stack.gateway->generate(req, LlmRole::Optimizer).text;
            } catch (const ContentEmpty&) {
                continue;
            }
            for (auto& v : parse_pool_reply(reply, t.name, registry)) {
                if (int(values.size()) >= per_type) break;
                if (std::find(values.begin(), values.end(), v) == values.end())
                    values.push_back(std::move(v));
            }
        }
        if (int(values.size()) < per_type) {
            // keep everything gathered so far so a rerun can inspect or resume
            if (!values.empty()) pools[t.name] = values;
            atomic_write_file(paths.pools(), nlohmann::json(pools).dump(2) + "\n");
            throw Error("init collected " + std::to_string(values.size()) + "/" +
                        std::to_string(per_type) + " values for '" + t.name + "' after " +
                        std::to_string(attempts) + " attempts; partial pools kept at " +
                        paths.pools());
        }
        pools[t.name] = std::move(values);
        out << t.name << ": " << per_type << " values\n";
    }
    atomic_write_file(paths.pools(), nlohmann::json(pools).dump(2) + "\n");
    out << "pools written to " << paths.pools() << "\n";
    return 0;
}

inline ValuePools load_pools(const std::string& path, const Registry& registry) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("pools file '" + path + "': " + e.what());
    }
    ValuePools pools = j.get<ValuePools>();
    for (const auto& name : registry.names()) {
        auto it = pools.find(name);
        if (it == pools.end() || it->second.empty()) throw EmptyPool(name);
    }
    return pools;
}

inline Split load_split(const nlohmann::json& config) {
    const auto& data = config.at("data");
    const auto& eval = config.at("eval");
    std::uint64_t split_seed = data.at("split_seed").get<std::uint64_t>();
    std::string dev_path = data.at("dev_path").get<std::string>();
    std::string test_path = data.at("test_path").get<std::string>();
    if (!dev_path.empty() && !test_path.empty())
        return Split(load_examples(dev_path), load_examples(test_path), split_seed);
    std::string path = data.at("path").get<std::string>();
    if (path.empty())
        throw ConfigError("config needs data.path, or data.dev_path plus data.test_path");
    return Split::random(load_examples(path), eval.at("test_size").get<std::size_t>(),
                        split_seed);
}

inline std::string format_best_prompt_file(const ScoredPrompt& best, const Registry& registry,
                                           std::uint64_t seed, double test_score) {
    std::ostringstream os;
    os << "# best prompt | seed " << seed << " | dev " << format_score(best.score) << " | test "
       << format_score(test_score) << "\n";
    os << "\n--- continuous ---\n" << best.rendered << "\n";
    os << "\n--- discrete ---\n";
    for (const auto& name : registry.names())
        os << open_tag(name) << best.genome.value_of(name) << close_tag(name) << "\n";
    return os.str();
}

struct SeedOutcome {
    std::uint64_t seed = 0;
    double dev_best = 0.0;
    double test_score = 0.0;
    long total_tokens = 0;
    double cost = 0.0;
};

inline SeedOutcome run_one_seed(const nlohmann::json& config, const CliOptions& opts,
                                const OutPaths& paths, const Registry& registry,
                                const PromptTemplate& tmpl, const ValuePools& pools,
                                const TaskAdapter& adapter, const Split& split,
                                std::uint64_t seed, bool resume, std::ostream& out) {
    LlmStack stack = make_llm_stack(config, opts.mock, seed);
    Gateway& gateway = *stack.gateway;
    EvalOptions eval_opts = eval_options_from_config(config);

    // The dev subsample is drawn once per seed; every child is scored on the
    // same examples so scores stay comparable within a run.
    const std::vector<Example>& dev = split.dev();
    std::size_t subsample = config.at("eval").at("dev_subsample").get<std::size_t>();
    std::size_t k = subsample == 0 ? dev.size() : std::min(subsample, dev.size());
    Rng subsample_rng(derive_seed(seed, "subsample"));
    std::vector<std::size_t> dev_indices = sample_indices(dev.size(), k, subsample_rng);

    EvalFn eval_fn = [&](const ComponentGenome& genome, const std::string& rendered) {
        return evaluate(genome, rendered, dev, dev_indices, adapter, gateway, eval_opts);
    };
    Runner runner(run_config_from_config(config, seed, paths.checkpoint(seed)), registry, tmpl,
                  pools, gateway, eval_fn, stack.mock.get());
    RunResult result = runner.run(resume);

    const std::vector<Example>& test = split.test();
    std::vector<std::size_t> test_indices(test.size());
    std::iota(test_indices.begin(), test_indices.end(), 0);
    double test_score = evaluate(result.best.genome, result.best.rendered, test, test_indices,
                                 adapter, gateway, eval_opts);

    UsageLedger ledger = gateway.ledger_snapshot();
    PriceTable prices = prices_from_config(config);
    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.dev_best = result.best.score;
    outcome.test_score = test_score;
    outcome.total_tokens = ledger.total_tokens();
    outcome.cost = ledger.cost(LlmRole::Optimizer, prices) + ledger.cost(LlmRole::Target, prices);

    atomic_write_file(paths.best_prompt(seed),
                      format_best_prompt_file(result.best, registry, seed, test_score));
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["guided"] = config.at("evolution").at("use_memory").get<bool>();
    doc["report"] = report_to_json(result.report);
    doc["ledger"] = ledger_to_json(ledger);
    doc["prices"] = {{"prompt_per_million", prices.prompt_per_million},
                     {"completion_per_million", prices.completion_per_million}};
    doc["cost"] = outcome.cost;
    doc["test_score"] = test_score;
    doc["config"] = config;
    atomic_write_file(paths.report(seed), doc.dump(2) + "\n");
    atomic_write_file(paths.curve_csv(seed), score_curve_csv(result.report));

    out << "seed " << seed << ": dev best " << format_score(outcome.dev_best) << " | test "
        << format_score(test_score) << " | tokens " << outcome.total_tokens << " | cost "
        << format_score(outcome.cost) << "\n";
    return outcome;
}

inline int cmd_run_impl(const nlohmann::json& config, const CliOptions& opts, std::ostream& out,
                        bool resume) {
    Registry registry = registry_from_config(config);
    PromptTemplate tmpl = template_from_config(config, registry);
    TaskAdapter adapter = adapter_from_config(config);
    OutPaths paths(resolve_out_dir(config, opts));
    ValuePools pools = load_pools(paths.pools(), registry);
    Split split = load_split(config);

    std::vector<SeedOutcome> outcomes;
    for (std::uint64_t seed : seeds_from(config, opts))
        outcomes.push_back(run_one_seed(config, opts, paths, registry, tmpl, pools, adapter,
                                        split, seed, resume, out));

    double mean = 0.0;
    for (const auto& o : outcomes) mean += o.test_score;
    mean /= double(outcomes.size());
    std::ostringstream summary;
    for (const auto& o : outcomes)
        summary << "seed " << o.seed << ": dev " << format_score(o.dev_best) << " test "
                << format_score(o.test_score) << " tokens " << o.total_tokens << " cost "
                << format_score(o.cost) << "\n";
    if (outcomes.size() > 1) {
        double var = 0.0;
        for (const auto& o : outcomes)
            var += (o.test_score - mean) * (o.test_score - mean);
        var /= double(outcomes.size());
        summary << "test score " << format_score(mean) << " (" << format_score(std::sqrt(var))
                << ") over " << outcomes.size() << " seeds\n";
    } else {
        summary << "test score " << format_score(mean) << "\n";
    }
    atomic_write_file(paths.summary(), summary.str());
    out << summary.str();
    return 0;
}

inline int cmd_run(const nlohmann::json& config, const CliOptions& opts, std::ostream& out) {
    return cmd_run_impl(config, opts, out, /*resume=*/false);
}

inline int cmd_resume(const nlohmann::json& config, const CliOptions& opts, std::ostream& out) {
    return cmd_run_impl(config, opts, out, /*resume=*/true);
}

// Scores one saved prompt file on the test split. Split and gateway come in
// from the caller so tests can audit exactly what gets touched.
inline double eval_prompt_on_split(const nlohmann::json& config, const std::string& prompt_path,
                                   const Split& split, Gateway& gateway, std::ostream& out) {
    Registry registry = registry_from_config(config);
    TaskAdapter adapter = adapter_from_config(config);
    std::string text;
    try {
        text = read_file(prompt_path);
    } catch (const Error& e) {
        throw MalformedPromptFile(e.what());
    }
    ComponentGenome genome;
    try {
        genome = parse_genome(text, registry);
    } catch (const MalformedMarkup& e) {
        throw MalformedPromptFile("'" + prompt_path + "': " + e.what());
    }
    bool any_value = false;
    for (const auto& name : registry.names())
        if (!genome.value_of(name).empty()) any_value = true;
    if (!any_value)
        throw MalformedPromptFile("'" + prompt_path + "' holds no component values");

    PromptTemplate tmpl = template_from_config(config, registry);
    std::string rendered = render(genome, tmpl);
    const std::vector<Example>& test = split.test();
    std::vector<std::size_t> indices(test.size());
    std::iota(indices.begin(), indices.end(), 0);
    double score = evaluate(genome, rendered, test, indices, adapter, gateway,
                            eval_options_from_config(config));
    out << "test score " << format_score(score) << " over " << test.size() << " examples\n";
    return score;
}

inline int cmd_eval(const nlohmann::json& config, const CliOptions& opts, std::ostream& out) {
    if (opts.prompt_file.empty()) throw ConfigError("eval needs a prompt file argument");
    Split split = load_split(config);
    LlmStack stack = make_llm_stack(config, opts.mock, seeds_from(config, opts).front());
    long dev_reads_before = split.dev_reads();
    eval_prompt_on_split(config, opts.prompt_file, split, *stack.gateway, out);
    if (split.dev_reads() != dev_reads_before)
        throw Error("internal: eval touched the dev split");  // must stay unreachable
    return 0;
}

inline int cmd_report(const nlohmann::json& config, const CliOptions& opts, std::ostream& out) {
    std::string dir =
        opts.out_dir.empty() ? config.at("output").at("dir").get<std::string>() : opts.out_dir;
    std::vector<nlohmann::json> docs;
    if (std::filesystem::is_directory(dir)) {
        std::vector<std::string> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            std::string name = entry.path().filename().string();
            if (name.rfind("report_seed", 0) == 0 && entry.path().extension() == ".json")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) docs.push_back(nlohmann::json::parse(read_file(f)));
        std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) {
            return a.at("seed").template get<std::uint64_t>() <
                   b.at("seed").template get<std::uint64_t>();
        });
    }
    if (docs.empty()) {
        out << "no run reports found in " << dir << "\n";
        return 0;
    }

    std::ostringstream csv;
    csv << "seed,guided,epoch,best_score,mean_score\n";
    long grand_tokens = 0;
    double grand_cost = 0.0;
    for (const auto& doc : docs) {
        std::uint64_t seed = doc.at("seed").get<std::uint64_t>();
        bool guided = doc.at("guided").get<bool>();
        RunReport report = report_from_json(doc.at("report"));
        out << "seed " << seed << (guided ? " (guided)" : " (unguided)") << ": final best "
            << format_score(report.final_best()) << ", test "
            << format_score(doc.at("test_score").get<double>()) << "\n";
        out << "  best by epoch:";
        for (const auto& ep : report.epochs) out << " " << format_score(ep.best_score);
        out << "\n";
        for (const auto& ep : report.epochs)
            csv << seed << "," << (guided ? 1 : 0) << "," << ep.epoch << ","
                << format_score(ep.best_score) << "," << format_score(ep.mean_score) << "\n";

        UsageLedger ledger = ledger_from_json(doc.at("ledger"));
        PriceTable prices{doc.at("prices").at("prompt_per_million").get<double>(),
                          doc.at("prices").at("completion_per_million").get<double>()};
        out << "  " << usage_summary(ledger, prices);
        grand_tokens += ledger.total_tokens();
        grand_cost += doc.at("cost").get<double>();
    }
    out << "all seeds: total_tokens=" << grand_tokens << " cost=" << format_score(grand_cost)
        << "\n";

    // guided-vs-unguided side by side, when the directory holds both
    std::map<std::uint64_t, std::pair<double, double>> by_seed;  // guided, unguided
    bool has_guided = false, has_unguided = false;
    for (const auto& doc : docs) {
        std::uint64_t seed = doc.at("seed").get<std::uint64_t>();
        double best = report_from_json(doc.at("report")).final_best();
        if (doc.at("guided").get<bool>()) {
            by_seed[seed].first = best;
            has_guided = true;
        } else {
            by_seed[seed].second = best;
            has_unguided = true;
        }
    }
    if (has_guided && has_unguided) {
        out << "guided vs unguided (final best):\n";
        for (const auto& [seed, pair] : by_seed)
            out << "  seed " << seed << ": " << format_score(pair.first) << " vs "
                << format_score(pair.second) << "\n";
    }

    OutPaths paths(dir);
    atomic_write_file(paths.combined_csv(), csv.str());
    out << "curve data written to " << paths.combined_csv() << "\n";
    return 0;
}

inline int dispatch_command(const std::string& command, const CliOptions& opts,
                            std::ostream& out) {
    nlohmann::json config = effective_config(opts.config_path, opts.overrides);
    if (command == "init") return cmd_init(config, opts, out);
    if (command == "run") return cmd_run(config, opts, out);
    if (command == "resume") return cmd_resume(config, opts, out);
    if (command == "eval") return cmd_eval(config, opts, out);
    if (command == "report") return cmd_report(config, opts, out);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace delvepo
