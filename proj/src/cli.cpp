#include "pcib/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcib/cache.hpp"
#include "pcib/classifiers.hpp"
#include "pcib/core.hpp"
#include "pcib/metrics.hpp"
#include "pcib/remote_backend.hpp"
#include "pcib/service.hpp"
#include "pcib/synthetic.hpp"

namespace pcib::app {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataFailure = 2;
constexpr int kExitBackendFailure = 3;

struct CommonOptions {
    bool mock = false;
    std::uint64_t seed = 0;
    std::string config_path;
    std::string lexicon_path;
};

backends::Backends make_backends(const CommonOptions& opts) {
    if (opts.mock) return backends::make_mock_backends(opts.seed);
    return backends::make_remote_backends_from_env();
}

signals::SignalConfig signal_config(const CommonOptions& opts) {
    if (opts.config_path.empty()) return {};
    return load_signal_config(opts.config_path);
}

signals::HedgeLexicon lexicon_of(const CommonOptions& opts) {
    if (opts.lexicon_path.empty()) return signals::HedgeLexicon::builtin();
    return signals::HedgeLexicon::load(opts.lexicon_path);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write file: " + path);
    out << content;
}

struct JoinedSignals {
    std::vector<std::pair<SignalVector, int>> rows;
    std::vector<std::string> ids;
};

// join labeled examples with cached signals by id
JoinedSignals join_cache(const std::vector<LabeledExample>& examples,
                         const SignalCache& cache, FeatureVariant variant) {
    JoinedSignals joined;
    std::vector<std::string> missing;
    for (const auto& ex : examples) {
        const SignalCacheRecord* rec = cache.find_by_id(ex.triple.id);
        // a record extracted from different text is stale, not a match
        if (rec && (rec->question != ex.triple.question ||
                    rec->context != ex.triple.context ||
                    rec->answer != ex.triple.answer)) {
            rec = nullptr;
        }
        if (!rec) {
            missing.push_back(ex.triple.id);
            continue;
        }
        if (variant == FeatureVariant::Improved && !rec->has_improved_fields) {
            throw DataError("cache record " + ex.triple.id +
                            " lacks the improved signal columns; re-extract before "
                            "training an improved-variant model");
        }
        joined.rows.emplace_back(rec->signals, ex.label);
        joined.ids.push_back(ex.triple.id);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            if (i) list += ", ";
            list += missing[i];
        }
        if (missing.size() > 20) list += ", ...";
        throw DataError("cache has no signals for " + std::to_string(missing.size()) +
                        " labeled example(s): " + list);
    }
    return joined;
}

ml::TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    ml::TrainedModel model = ml::deserialize(bytes);
    if (model.feature_names != feature_names(model.variant)) {
        throw DataError("model feature names do not match the " +
                        to_string(model.variant) + " column order");
    }
    return model;
}

int cmd_extract(const std::string& dataset_path, const std::string& cache_path,
                const CommonOptions& opts) {
    auto examples = load_jsonl_dataset(dataset_path);
    auto cfg = signal_config(opts);
    auto lexicon = lexicon_of(opts);
    auto be = make_backends(opts);
    const std::string digest = cfg.digest();
    const std::string model = be.llm->model_name();

    long corrupted = 0;
    SignalCache cache = SignalCache::load(cache_path, &corrupted);

    long hits = 0, extracted = 0, failures = 0;
    for (const auto& ex : examples) {
        if (cache.find(ex.triple, digest, model) != nullptr) {
            ++hits;
            continue;
        }
        try {
            SignalCacheRecord rec;
            rec.id = ex.triple.id;
            rec.question = ex.triple.question;
            rec.context = ex.triple.context;
            rec.answer = ex.triple.answer;
            rec.config_digest = digest;
            rec.model_name = model;
            rec.signals = signals::extract_signals(ex.triple, cfg, be, lexicon);
            rec.content_hash = content_hash(ex.triple, digest, model);
            rec.timestamp = record_timestamp(opts.mock);
            append_record(cache_path, rec);
            cache.add(std::move(rec));
            ++extracted;
        } catch (const CapabilityError& e) {
            std::cerr << "error: backend capability missing: " << e.what() << "\n"
                      << "hint: point PCIB_BACKEND_URL at a completions endpoint "
                         "that supports echo+logprobs, or run with --mock\n";
            return kExitBackendFailure;
        } catch (const Error& e) {
            std::cerr << "error: " << ex.triple.id << ": " << e.what() << "\n";
            ++failures;
        }
    }
    std::cerr << "extract: " << extracted << " extracted, " << hits
              << " cache hits, " << failures << " failed";
    if (corrupted) std::cerr << ", " << corrupted << " corrupted cache line(s) skipped";
    std::cerr << "\n";
    return failures == 0 ? kExitOk : kExitDataFailure;
}

int cmd_train(const std::string& cache_path, const std::string& dataset_path,
              ml::ModelKind kind, FeatureVariant variant, const std::string& out_path,
              const ml::TrainConfig& train_cfg) {
    auto examples = load_jsonl_dataset(dataset_path);
    SignalCache cache = SignalCache::load(cache_path);
    JoinedSignals joined = join_cache(examples, cache, variant);
    FeatureMatrix matrix = to_feature_matrix(joined.rows, variant, joined.ids);

    FoldAssignment folds =
        stratified_folds_from_labels(matrix.labels, train_cfg.folds, train_cfg.seed);
    auto oof = ml::oof_predictions(kind, matrix, folds, train_cfg);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& [p, y] : oof) {
        scores.push_back(p);
        labels.push_back(y);
    }
    metrics::EvalReport report = metrics::evaluate_scores(scores, labels);

    ml::TrainedModel model = ml::train(kind, matrix, train_cfg);
    write_file(out_path, ml::serialize(model));

    std::cout << report.to_json() << "\n";
    std::cerr << "train: wrote " << out_path << " (" << ml::to_string(kind) << ", "
              << to_string(variant) << ", oof auroc " << report.auroc << ")\n";
    return kExitOk;
}

struct AblationRow {
    std::string method;
    std::string variant;
    double accuracy = 0.0;
    double auroc = 0.0;
    double auprc = 0.0;
};

int cmd_eval(const std::string& cache_path, const std::string& dataset_path,
             const std::string& model_path, bool theory_guided, bool ablate,
             const std::string& out_dir, const std::string& variant_flag,
             const ml::TrainConfig& train_cfg) {
    auto examples = load_jsonl_dataset(dataset_path);
    SignalCache cache = SignalCache::load(cache_path);
    std::filesystem::create_directories(out_dir);

    if (ablate) {
        JoinedSignals improved = join_cache(examples, cache, FeatureVariant::Improved);
        std::vector<AblationRow> rows;
        for (ml::ModelKind kind :
             {ml::ModelKind::RandomForest, ml::ModelKind::GradientBoosting,
              ml::ModelKind::LogisticWeighted, ml::ModelKind::Mlp}) {
            for (FeatureVariant variant : {FeatureVariant::Base, FeatureVariant::Improved}) {
                FeatureMatrix matrix = to_feature_matrix(improved.rows, variant, improved.ids);
                FoldAssignment folds = stratified_folds_from_labels(
                    matrix.labels, train_cfg.folds, train_cfg.seed);
                auto oof = ml::oof_predictions(kind, matrix, folds, train_cfg);
                std::vector<double> scores;
                std::vector<int> labels;
                for (const auto& [p, y] : oof) {
                    scores.push_back(p);
                    labels.push_back(y);
                }
                metrics::EvalReport r = metrics::evaluate_scores(scores, labels);
                rows.push_back({ml::to_string(kind), to_string(variant), r.accuracy,
                                r.auroc, r.auprc});
            }
        }
        {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& [v, y] : improved.rows) {
                scores.push_back(signals::risk_score(v));
                labels.push_back(y);
            }
            metrics::EvalReport r = metrics::evaluate_scores(scores, labels);
            rows.push_back({"theory_guided", "-", r.accuracy, r.auroc, r.auprc});
        }
        std::sort(rows.begin(), rows.end(),
                  [](const AblationRow& a, const AblationRow& b) {
                      return a.auroc > b.auroc;
                  });

        json out = json::array();
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %-10s %9s %9s %9s", "method",
                      "variant", "accuracy", "auroc", "auprc");
        std::cout << line << "\n";
        for (const auto& r : rows) {
            std::snprintf(line, sizeof(line), "%-20s %-10s %9.4f %9.4f %9.4f",
                          r.method.c_str(), r.variant.c_str(), r.accuracy, r.auroc,
                          r.auprc);
            std::cout << line << "\n";
            out.push_back({{"method", r.method},
                           {"variant", r.variant},
                           {"accuracy", r.accuracy},
                           {"auroc", r.auroc},
                           {"auprc", r.auprc}});
        }
        write_file(out_dir + "/ablation.json", out.dump(2) + "\n");
        return kExitOk;
    }

    std::vector<double> scores;
    std::vector<int> labels;
    if (theory_guided) {
        JoinedSignals joined = join_cache(examples, cache, FeatureVariant::Base);
        for (const auto& [v, y] : joined.rows) {
            scores.push_back(signals::risk_score(v));
            labels.push_back(y);
        }
    } else {
        ml::TrainedModel model = load_model(model_path);
        if (!variant_flag.empty() &&
            feature_variant_from_string(variant_flag) != model.variant) {
            throw CLI::ValidationError(
                "--variant", "conflicts with the model file (trained as " +
                                 to_string(model.variant) + ")");
        }
        JoinedSignals joined = join_cache(examples, cache, model.variant);
        for (const auto& [v, y] : joined.rows) {
            scores.push_back(model.predict_proba(features_of(v, model.variant)));
            labels.push_back(y);
        }
    }

    metrics::EvalReport report = metrics::evaluate_scores(scores, labels);
    write_file(out_dir + "/report.json", report.to_json() + "\n");
    write_file(out_dir + "/roc.csv", metrics::roc_csv(report.roc_points));
    write_file(out_dir + "/pr.csv", metrics::pr_csv(report.pr_points));
    std::cout << report.to_json() << "\n";
    return kExitOk;
}

std::shared_ptr<Scorer> make_scorer(const std::string& model_path, bool theory_guided,
                                    double threshold, const CommonOptions& opts) {
    auto cfg = signal_config(opts);
    auto be = make_backends(opts);
    if (theory_guided) {
        return std::make_shared<Scorer>(cfg, be, threshold);
    }
    return std::make_shared<Scorer>(load_model(model_path), cfg, be, threshold);
}

int cmd_score(const std::string& question, const std::string& context,
              const std::string& answer, const std::string& model_path,
              bool theory_guided, double threshold, const CommonOptions& opts) {
    auto scorer = make_scorer(model_path, theory_guided, threshold, opts);
    QcaTriple triple{"cli", question, context, answer};
    ScoreResponse resp = scorer->score(triple);
    std::cout << resp.to_json() << "\n";
    return kExitOk;
}

int cmd_serve(const std::string& bind, int port, const std::string& model_path,
              bool theory_guided, double threshold, int max_in_flight,
              const CommonOptions& opts) {
    auto scorer = make_scorer(model_path, theory_guided, threshold, opts);
    ScoreService service(scorer, max_in_flight);
    std::cerr << "serving on " << bind << ":" << port << "\n";
    service.run(bind, port);
    return kExitOk;
}

int cmd_synth(std::uint64_t seed, int n, const std::string& dataset_path,
              const std::string& cache_path) {
    synth::PlantedSpec spec;
    spec.seed = seed;
    spec.n = n;
    auto rows = synth::generate(spec);

    const signals::SignalConfig default_cfg;
    const std::string digest = default_cfg.digest();
    const std::string model = "planted";

    std::vector<LabeledExample> examples;
    std::ofstream cache_out(cache_path);
    if (!cache_out) throw IngestionError("cannot write cache file: " + cache_path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "planted-%04zu", i);
        LabeledExample ex;
        ex.triple.id = idbuf;
        ex.triple.question = std::string("planted question ") + idbuf;
        ex.triple.context = std::string("planted context ") + idbuf;
        ex.triple.answer = std::string("planted answer ") + idbuf;
        ex.label = rows[i].second;
        examples.push_back(ex);

        SignalCacheRecord rec;
        rec.id = ex.triple.id;
        rec.question = ex.triple.question;
        rec.context = ex.triple.context;
        rec.answer = ex.triple.answer;
        rec.config_digest = digest;
        rec.model_name = model;
        rec.signals = rows[i].first;
        rec.content_hash = content_hash(ex.triple, digest, model);
        rec.timestamp = record_timestamp(true);
        cache_out << rec.to_jsonl() << '\n';
    }
    save_jsonl_dataset(examples, dataset_path);
    std::cerr << "synth: wrote " << examples.size() << " examples to " << dataset_path
              << " and signals to " << cache_path << "\n";
    return kExitOk;
}

}  // namespace

signals::SignalConfig load_signal_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IngestionError("config file is not valid JSON: " + std::string(e.what()));
    }
    signals::SignalConfig cfg;
    cfg.k_perturbations = j.value("k_perturbations", cfg.k_perturbations);
    cfg.m_traces = j.value("m_traces", cfg.m_traces);
    cfg.max_claims = j.value("max_claims", cfg.max_claims);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.paraphrase_temperature = j.value("paraphrase_temperature", cfg.paraphrase_temperature);
    cfg.esi_epsilon = j.value("esi_epsilon", cfg.esi_epsilon);
    cfg.context_norm_words = j.value("context_norm_words", cfg.context_norm_words);
    if (j.contains("conflict_aggregation")) {
        cfg.conflict_aggregation = signals::conflict_aggregation_from_string(
            j["conflict_aggregation"].get<std::string>());
    }
    cfg.validate();
    return cfg;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"pcib — interpretable hallucination-risk scoring for (question, context, answer) triples"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string dataset_path, cache_path, model_path, out_path, out_dir = ".";
    std::string kind_str = "rf", variant_str = "improved", variant_flag;
    std::string question, context, answer, bind = "0.0.0.0";
    bool theory_guided = false, ablate = false;
    double threshold = 0.5;
    int port = 8080, max_in_flight = 8, n = 200;
    ml::TrainConfig train_cfg;

    auto add_common = [&](CLI::App* cmd, bool backend_relevant) {
        cmd->add_option("--seed", common.seed, "Deterministic seed");
        if (backend_relevant) {
            cmd->add_flag("--mock", common.mock,
                          "Use the deterministic in-process mock backend");
            cmd->add_option("--config", common.config_path,
                            "Signal configuration JSON file");
            cmd->add_option("--lexicon", common.lexicon_path,
                            "Hedge lexicon file ([definitive]/[hedge] sections)");
        }
    };
    auto add_train_options = [&](CLI::App* cmd) {
        cmd->add_option("--folds", train_cfg.folds, "Cross-validation folds");
        cmd->add_option("--rf-trees", train_cfg.rf_trees, "Random forest size");
        cmd->add_option("--rf-depth", train_cfg.rf_max_depth, "Random forest tree depth");
        cmd->add_option("--gb-rounds", train_cfg.gb_rounds, "Boosting rounds");
        cmd->add_option("--gb-lr", train_cfg.gb_learning_rate, "Boosting learning rate");
        cmd->add_option("--gb-depth", train_cfg.gb_max_depth, "Boosting tree depth");
        cmd->add_option("--mlp-hidden", train_cfg.mlp_hidden, "MLP hidden units");
        cmd->add_option("--mlp-epochs", train_cfg.mlp_epochs, "MLP training epochs");
        cmd->add_option("--mlp-lr", train_cfg.mlp_learning_rate, "MLP learning rate");
    };

    auto* extract = app.add_subcommand("extract", "Extract signals into a cache file");
    extract->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    extract->add_option("--cache", cache_path, "Signal cache JSONL (appended)")->required();
    add_common(extract, true);

    auto* train = app.add_subcommand("train", "Train a classifier on cached signals");
    train->add_option("--cache", cache_path, "Signal cache JSONL")->required();
    train->add_option("--dataset", dataset_path, "Labeled JSONL dataset")->required();
    train->add_option("--kind", kind_str, "rf|gb|logistic|mlp|meta");
    train->add_option("--variant", variant_str, "base|improved");
    train->add_option("--out", out_path, "Output model file")->required();
    add_common(train, false);
    add_train_options(train);

    auto* eval = app.add_subcommand("eval", "Evaluate a model or the theory-guided score");
    eval->add_option("--cache", cache_path, "Signal cache JSONL")->required();
    eval->add_option("--dataset", dataset_path, "Labeled JSONL dataset")->required();
    eval->add_option("--model", model_path, "Model file to evaluate");
    eval->add_flag("--theory-guided", theory_guided, "Evaluate 1 - ESI_harm");
    eval->add_flag("--ablate", ablate, "Run the BASE-vs-IMPROVED grid over all kinds");
    eval->add_option("--variant", variant_flag, "Expected variant (checked against model)");
    eval->add_option("--out-dir", out_dir, "Where report.json/roc.csv/pr.csv go");
    add_common(eval, false);
    add_train_options(eval);

    auto* score = app.add_subcommand("score", "Score one (question, context, answer) triple");
    score->add_option("--question", question, "Question text")->required();
    score->add_option("--context", context, "Context text (may be empty)");
    score->add_option("--answer", answer, "Answer text")->required();
    score->add_option("--model", model_path, "Model file");
    score->add_flag("--theory-guided", theory_guided, "Score with 1 - ESI_harm");
    score->add_option("--threshold", threshold, "Verdict threshold on risk");
    add_common(score, true);

    auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
    serve->add_option("--bind", bind, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--model", model_path, "Model file");
    serve->add_flag("--theory-guided", theory_guided, "Serve the theory-guided score");
    serve->add_option("--threshold", threshold, "Verdict threshold on risk");
    serve->add_option("--max-inflight", max_in_flight, "Concurrent request cap");
    add_common(serve, true);

    auto* synth = app.add_subcommand("synth", "Write a planted dataset + signal cache");
    synth->add_option("--n", n, "Example count (even)");
    synth->add_option("--dataset", dataset_path, "Output dataset JSONL")->required();
    synth->add_option("--cache", cache_path, "Output cache JSONL")->required();
    add_common(synth, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        train_cfg.seed = common.seed;
        if (extract->parsed()) {
            return cmd_extract(dataset_path, cache_path, common);
        }
        if (train->parsed()) {
            return cmd_train(cache_path, dataset_path,
                             ml::model_kind_from_string(kind_str),
                             feature_variant_from_string(variant_str), out_path,
                             train_cfg);
        }
        if (eval->parsed()) {
            if (!theory_guided && !ablate && model_path.empty()) {
                std::cerr << "error: eval needs --model, --theory-guided, or --ablate\n";
                return kExitUsage;
            }
            return cmd_eval(cache_path, dataset_path, model_path, theory_guided,
                            ablate, out_dir, variant_flag, train_cfg);
        }
        if (score->parsed()) {
            if (!theory_guided && model_path.empty()) {
                std::cerr << "error: score needs --model or --theory-guided\n";
                return kExitUsage;
            }
            return cmd_score(question, context, answer, model_path, theory_guided,
                             threshold, common);
        }
        if (serve->parsed()) {
            if (!theory_guided && model_path.empty()) {
                std::cerr << "error: serve needs --model or --theory-guided\n";
                return kExitUsage;
            }
            return cmd_serve(bind, port, model_path, theory_guided, threshold,
                             max_in_flight, common);
        }
        if (synth->parsed()) {
            return cmd_synth(common.seed, n, dataset_path, cache_path);
        }
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TransportError& e) {
        std::cerr << "error: backend failure: " << e.what() << "\n";
        return kExitBackendFailure;
    } catch (const CapabilityError& e) {
        std::cerr << "error: backend capability: " << e.what() << "\n";
        return kExitBackendFailure;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataFailure;
    }
}

}  // namespace pcib::app
