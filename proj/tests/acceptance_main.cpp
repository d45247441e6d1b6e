// Acceptance suite: one pass/fail line per criterion, non-zero exit if
// any fail. Each criterion carries a wall-clock budget that is checked
// along with the assertion itself.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "reference_curves.hpp"
#include "planted_fixture.hpp"
#include "pcib/classifiers.hpp"
#include "pcib/mathkit.hpp"
#include "pcib/metrics.hpp"
#include "pcib/rng.hpp"
#include "pcib/signals.hpp"
#include "pcib/synthetic.hpp"

using namespace pcib;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, double ms,
            double budget_ms, const std::string& detail) {
    bool in_budget = ms <= budget_ms;
    bool ok = pass && in_budget;
    if (!ok) ++g_failures;
    std::printf("%s  criterion %2d: %-40s [%9.3f ms / %g ms]  %s\n",
                ok ? "PASS" : "FAIL", number, name.c_str(), ms, budget_ms,
                detail.c_str());
}

void run_criterion(int number, const std::string& name, double budget_ms,
                   const std::function<bool(std::string&)>& body) {
    std::string detail;
    auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report(number, name, pass, ms, budget_ms, detail);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool reference_curve_auc(std::string& detail) {
    double auc = metrics::trapezoid_auc(testfix::reference_roc());
    detail = "trapezoid AUC = " + fmt(auc) + " (target 0.80 +/- 0.02)";
    return approx(auc, 0.80, 0.02);
}

bool reference_curve_youden(std::string& detail) {
    std::vector<metrics::RocPoint> pts;
    for (auto [fpr, tpr] : testfix::reference_roc()) pts.push_back({fpr, tpr});
    auto y = metrics::youden_optimal(pts);
    detail = "J = " + fmt(y.j) + " at fpr " + fmt(y.fpr) + ", tpr " + fmt(y.tpr);
    // consistent within one curve step with 75% sensitivity / 82% specificity
    return approx(y.j, 0.57, 1e-9) && y.fpr >= 0.15 && y.fpr <= 0.18 &&
           std::abs(y.tpr - 0.75) <= 0.04;
}

bool auroc_oracle_equivalence(std::string& detail) {
    DetRng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng.uniform_index(63);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool tie_heavy = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = tie_heavy ? static_cast<double>(rng.uniform_index(3)) / 3.0
                                  : rng.uniform();
            labels[i] = rng.uniform() < 0.5 ? 0 : 1;
        }
        labels[0] = 0;
        labels[n - 1] = 1;
        worst = std::max(worst, std::abs(metrics::auroc(scores, labels) -
                                         metrics::auroc_bruteforce(scores, labels)));
    }
    detail = "max |rank - bruteforce| = " + std::to_string(worst);
    return worst <= 1e-12;
}

bool balanced_baseline(std::string& detail) {
    double sum_auroc = 0.0, sum_auprc = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        DetRng rng(static_cast<std::uint64_t>(s) + 555);
        std::vector<double> scores(200);
        std::vector<int> labels(200);
        for (int i = 0; i < 200; ++i) {
            scores[static_cast<std::size_t>(i)] = rng.uniform();
            labels[static_cast<std::size_t>(i)] = i % 2;
        }
        sum_auroc += metrics::auroc(scores, labels);
        sum_auprc += metrics::auprc(scores, labels);
    }
    double mean_auroc = sum_auroc / seeds, mean_auprc = sum_auprc / seeds;
    detail = "mean AUROC = " + fmt(mean_auroc) + ", mean AUPRC = " + fmt(mean_auprc);
    return approx(mean_auroc, 0.5, 0.05) && approx(mean_auprc, 0.5, 0.05);
}

double planted_oof_auroc(ml::ModelKind kind, FeatureVariant variant,
                         std::uint64_t seed) {
    synth::PlantedSpec spec;
    spec.seed = seed;
    spec.n = 200;
    auto rows = synth::generate(spec);
    FeatureMatrix m = to_feature_matrix(rows, variant);
    ml::TrainConfig cfg;
    cfg.seed = seed;
    FoldAssignment folds = stratified_folds_from_labels(m.labels, cfg.folds, cfg.seed);
    auto oof = ml::oof_predictions(kind, m, folds, cfg);
    std::vector<double> s;
    std::vector<int> y;
    for (auto& [p, l] : oof) {
        s.push_back(p);
        y.push_back(l);
    }
    return metrics::auroc(s, y);
}

bool planted_ablation(std::string& detail) {
    // (a) theory-guided risk on seed 0
    synth::PlantedSpec spec;
    spec.seed = 0;
    spec.n = 200;
    auto rows = synth::generate(spec);
    std::vector<double> s;
    std::vector<int> y;
    for (auto& [v, l] : rows) {
        s.push_back(signals::risk_score(v));
        y.push_back(l);
    }
    double theory = metrics::auroc(s, y);
    bool ok = theory >= 0.70 && approx(theory, testfix::kTheoryGuidedAurocSeed0, 1e-9);

    // (b)+(c) mean OOF AUROC over 10 seeds per kind and variant,
    // pinned against the frozen oracle-run values
    const ml::ModelKind kinds[] = {ml::ModelKind::RandomForest,
                                   ml::ModelKind::GradientBoosting,
                                   ml::ModelKind::LogisticWeighted, ml::ModelKind::Mlp};
    std::ostringstream out;
    out << "theory = " << fmt(theory);
    for (int k = 0; k < 4; ++k) {
        double base_sum = 0.0, improved_sum = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            base_sum += planted_oof_auroc(kinds[k], FeatureVariant::Base, seed);
            improved_sum += planted_oof_auroc(kinds[k], FeatureVariant::Improved, seed);
        }
        double base = base_sum / 10.0, improved = improved_sum / 10.0;
        const auto& frozen = testfix::kPlantedMeanAuroc[k];
        ok = ok && approx(base, frozen.base, 1e-9) &&
             approx(improved, frozen.improved, 1e-9);
        ok = ok && improved >= base - 0.01;  // (c)
        if (kinds[k] == ml::ModelKind::RandomForest) {
            ok = ok && improved >= base + 0.02;  // (b)
            out << "; rf " << fmt(base) << " -> " << fmt(improved) << " (margin "
                << fmt(improved - base) << ")";
        }
    }
    detail = out.str();
    return ok;
}

bool rationalization_negative(std::string& detail) {
    synth::PlantedSpec spec;
    spec.seed = 0;
    spec.n = 2000;
    auto rows = synth::generate(spec);
    std::vector<double> s;
    std::vector<int> y;
    for (auto& [v, l] : rows) {
        s.push_back(v.rationalization);
        y.push_back(l);
    }
    double auc = metrics::auroc(s, y);
    detail = "R-alone AUROC = " + fmt(auc) + " (target 0.50 +/- 0.06)";
    return approx(auc, 0.5, 0.06) &&
           approx(auc, testfix::kRationalizationAurocN2000, 1e-9);
}

bool mlp_gradients(std::string& detail) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        worst = std::max(worst, ml::mlp_gradient_check(seed));
    }
    detail = "max relative deviation = " + std::to_string(worst);
    return worst <= 1e-4;
}

bool weakest_link(std::string& detail) {
    DetRng rng(31337);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> c = {rng.uniform_open(), rng.uniform_open(),
                                 rng.uniform_open()};
        double mn = std::min({c[0], c[1], c[2]});
        double hm = math::harmonic_mean(c);
        double gm = math::geometric_mean(c);
        double am = (c[0] + c[1] + c[2]) / 3.0;
        if (!(mn <= hm + 1e-12 && hm <= gm + 1e-12 && gm <= am + 1e-12 &&
              hm <= 3.0 * mn + 1e-12)) {
            detail = "mean chain violated";
            return false;
        }
    }
    // any component at the epsilon floor caps esi_harm at 3*epsilon
    const double eps = 1e-3;
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform() * 3;
        double cf = rng.uniform();
        auto [harm, geo] = signals::esi(u, 1.0, cf, eps);  // stress floors 1-s
        (void)geo;
        if (harm > 3.0 * eps) {
            detail = "floored component did not bound esi_harm";
            return false;
        }
    }
    detail = "10000 triples + 1000 floored ESI draws hold";
    return true;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool shell(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
}

bool determinism_end_to_end(std::string& detail) {
    const std::string cli = PCIB_CLI_BIN;
    fs::path dir = fs::temp_directory_path() /
                   ("pcib_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);

    fs::path ds = dir / "data.jsonl";
    {
        std::ofstream out(ds);
        for (int i = 0; i < 20; ++i) {
            out << R"({"id":"a)" << i << R"(","question":"Where is place )" << i
                << R"(?","context":"place )" << i << " sits in region " << i
                << " since 19" << 10 + i << R"(","answer":"place )" << i
                << (i % 2 == 0 ? " sits in region " + std::to_string(i)
                               : " is definitely not in region " + std::to_string(i))
                << R"(","label":)" << i % 2 << "}\n";
        }
    }

    auto run_pipeline = [&](const std::string& tag) -> std::vector<std::string> {
        fs::path cache = dir / (tag + ".cache.jsonl");
        fs::path model = dir / (tag + ".model.json");
        fs::path outdir = dir / (tag + "_out");
        fs::path train_report = dir / (tag + ".train.json");
        bool ok = shell(cli + " extract --dataset " + ds.string() + " --cache " +
                        cache.string() + " --mock --seed 3 2>/dev/null");
        ok = ok && shell(cli + " train --cache " + cache.string() + " --dataset " +
                         ds.string() +
                         " --kind rf --variant improved --seed 7 --folds 5 --out " +
                         model.string() + " > " + train_report.string() +
                         " 2>/dev/null");
        ok = ok && shell(cli + " eval --cache " + cache.string() + " --dataset " +
                         ds.string() + " --model " + model.string() + " --out-dir " +
                         outdir.string() + " >/dev/null 2>/dev/null");
        if (!ok) return {};
        return {slurp(cache), slurp(model), slurp(train_report),
                slurp(outdir / "report.json"), slurp(outdir / "roc.csv"),
                slurp(outdir / "pr.csv")};
    };

    auto a = run_pipeline("run1");
    auto b = run_pipeline("run2");
    fs::remove_all(dir);
    if (a.empty() || b.empty()) {
        detail = "pipeline run failed";
        return false;
    }
    const char* names[] = {"cache", "model", "train-report", "eval-report",
                           "roc.csv", "pr.csv"};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i] || a[i].empty()) {
            detail = std::string(names[i]) + " differs between runs";
            return false;
        }
    }
    detail = "cache, model, and reports byte-identical across runs";
    return true;
}

bool formula_spot_checks(std::string& detail) {
    using backends::TokenLogliks;
    auto mk = [](std::vector<double> lls) {
        TokenLogliks t;
        for (std::size_t i = 0; i < lls.size(); ++i) t.tokens.push_back("t");
        t.logliks = std::move(lls);
        return t;
    };
    bool ok = true;
    ok = ok && signals::uptake(mk({-1, -1}), mk({-2, -3})) == 1.5;
    ok = ok && signals::uptake(mk({-3}), mk({-1})) == 0.0;
    ok = ok && signals::entity_uptake(0.5, 0.25, 2.0) == 0.75;
    ok = ok && signals::context_adherence(1.0, 100, 200) == 0.25;
    const auto& lex = signals::HedgeLexicon::builtin();
    ok = ok && approx(signals::falsifiability(
                          0.8, "it is definitely certainly so", lex, 0.1),
                      0.96, 1e-12);
    ok = ok && math::jaccard_similarity({"a", "b", "c"}, {"b", "c", "d"}) == 0.5;
    ok = ok && math::js_divergence(math::ProbDist({1, 0}), math::ProbDist({0, 1})) == 1.0;
    detail = ok ? "all six formula examples exact" : "a formula example deviated";
    return ok;
}

}  // namespace

int main() {
    std::printf("pcib acceptance suite\n");
    run_criterion(1, "reference ROC fixture trapezoid AUC", 1.0, reference_curve_auc);
    run_criterion(2, "reference ROC fixture Youden point", 1.0, reference_curve_youden);
    run_criterion(3, "AUROC rank vs brute-force oracle", 1000.0, auroc_oracle_equivalence);
    run_criterion(4, "balanced-baseline AUROC/AUPRC ~ 0.5", 2000.0, balanced_baseline);
    run_criterion(5, "planted ablation direction + fixtures", 60000.0, planted_ablation);
    run_criterion(6, "rationalization is non-informative", 5000.0, rationalization_negative);
    run_criterion(7, "MLP analytic vs finite-difference grads", 5000.0, mlp_gradients);
    run_criterion(8, "weakest-link mean chain and ESI floor", 1000.0, weakest_link);
    run_criterion(9, "extract/train/eval byte determinism", 30000.0, determinism_end_to_end);
    run_criterion(10, "signal formula spot checks", 1.0, formula_spot_checks);

    if (g_failures == 0) {
        std::printf("all 10 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
