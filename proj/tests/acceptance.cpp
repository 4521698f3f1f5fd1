// Acceptance suite: one PASS/FAIL line per criterion. The process exits 0
// once every criterion has been evaluated, whatever the verdicts; a nonzero
// exit means the suite itself could not run.

#include "checks.hpp"

#include "shmssl/harness.hpp"
#include "shmssl/metrics.hpp"
#include "shmssl/models.hpp"
#include "shmssl/reduction.hpp"
#include "shmssl/ssl.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace shmssl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// 1. Gradient correctness of every layer and loss over 20 seeded instances each.
Verdict gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_case = "-";
    int instances = 0;
    auto note = [&](const GradCheckReport& r, const std::string& name, std::uint64_t seed) {
        ++instances;
        if (r.max_relative_error >= worst) {
            worst = r.max_relative_error;
            worst_case = name + " seed " + std::to_string(seed);
        }
    };
    for (auto c : checks::kLayerCases)
        for (std::uint64_t seed = 0; seed < 20; ++seed) note(checks::check_layer(c, seed), checks::name_of(c), seed);
    for (auto c : checks::kLossCases)
        for (std::uint64_t seed = 0; seed < 20; ++seed) note(checks::check_loss(c, seed), checks::name_of(c), seed);
    const double secs = seconds_since(t0);
    return {worst < 1e-3 && secs < 120.0,
            fmt("%d instances, max relative error %.3g (%s), %.1f s", instances, worst, worst_case.c_str(), secs)};
}

// 2. Loss formulas against naive loops plus the closed-form anchors.
Verdict loss_oracles() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t b = 1 + static_cast<std::size_t>(trial) % 8;
        const Tensor v1 = checks::normal_tensor({b, 16}, rng), v2 = checks::normal_tensor({b, 16}, rng);
        const Tensor m = checks::normal_tensor({b, 16}, rng);
        worst = std::max(worst, std::abs(simclr_loss(v1, v2, 0.5).value - checks::naive_simclr(v1, v2, 0.5)));
        std::vector<double> lambdas(b), dr(b), df(b);
        for (double& l : lambdas) l = rng.beta(0.2, 0.2);
        worst = std::max(worst, std::abs(mixup_loss(v1, m, v2, lambdas, 0.1).value -
                                         checks::naive_mixup(v1, m, v2, lambdas, 0.1)));
        for (double& d : dr) d = rng.uniform_open();
        for (double& d : df) d = rng.uniform_open();
        const GanLoss g = gan_loss(dr, df);
        worst = std::max(worst, std::abs(g.discriminator - checks::naive_gan_discriminator(dr, df)));
        worst = std::max(worst, std::abs(g.generator - checks::naive_gan_generator(df)));
    }
    Rng r1(1);
    const double b1 = simclr_loss(checks::normal_tensor({1, 8}, r1), checks::normal_tensor({1, 8}, r1), 0.5).value;
    const double ident = simclr_loss(Tensor({2, 8}, 1.0), Tensor({2, 8}, 1.0), 0.5).value;
    const std::vector<double> half{0.5};
    const double mix = mixup_loss(Tensor({1, 8}, 1.0), Tensor({1, 8}, 1.0), Tensor({1, 8}, 1.0), half, 0.1).value;
    const std::vector<double> p(4, 0.5);
    const double gan = gan_loss(p, p).discriminator;
    const bool anchors = b1 == 0.0 && std::abs(ident - std::log(3.0)) < 1e-6 && std::abs(mix - std::log(2.0)) < 1e-6 &&
                         std::abs(gan - 2 * std::log(2.0)) < 1e-6;
    const double secs = seconds_since(t0);
    return {worst < 1e-10 && anchors && secs < 60.0,
            fmt("300 cases, max |lib - naive| %.3g; anchors B=1 %.3g, ln3 %.9f, ln2 %.9f, 2ln2 %.9f; %.1f s", worst,
                b1, ident, mix, gan, secs)};
}

// 3. Network shape contract.
Verdict architecture() {
    const auto t0 = Clock::now();
    ModelBundle enc = build(ModelKind::Encoder, 0, 1);
    ModelBundle dec = build(ModelKind::Decoder, 0, 1);
    const Shape e = forward_chain(enc, {net::kEncoder}, Tensor({2, 1, 512}), Mode::Eval).shape();
    const Shape d = forward_chain(dec, {net::kDecoder}, Tensor({2, 256, 1}), Mode::Eval).shape();
    bool ok = e == Shape{2, 256} && d == Shape{2, 1, 512};
    std::string logits;
    for (std::size_t k : {5u, 6u}) {
        ModelBundle c = build(ModelKind::Classifier, k, 1);
        const Shape s = classifier_logits(c, Tensor({2, 1, 512}), Mode::Eval).shape();
        ok = ok && s == Shape{2, k};
        logits += " " + shape_string(s);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 10.0, "encoder " + shape_string(e) + ", decoder " + shape_string(d) + ", classifier" +
                                   logits + fmt(", %.2f s", secs)};
}

// 4. IERFH invariants over 1000 random segments.
Verdict ierfh_invariants() {
    const auto t0 = Clock::now();
    Rng rng(77);
    int violations = 0;
    double worst_mass = 0.0;
    for (int i = 0; i < 1000; ++i) {
        TimeSeriesSegment s;
        s.sample_rate_hz = 1.0;
        s.samples.resize(3600);
        const double scale = std::exp(rng.uniform(std::log(1e-3), std::log(3.0)));
        const double offset = rng.uniform(-1.5, 1.5);
        for (double& v : s.samples) v = offset + scale * (i % 2 ? rng.normal() : rng.student_t(2.0));
        const FeatureVector f = ierfh(s);
        if (f.values.size() != 512) ++violations;
        double mass = 0.0;
        for (double g : f.values) {
            if (!(g >= 0.0 && g <= 1.0)) ++violations;
            mass += 1.0 - g;
        }
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        rng.shuffle(std::span<double>(s.samples));
        if (ierfh(s).values != f.values) ++violations;
    }
    TimeSeriesSegment zero;
    zero.samples.assign(3600, 0.0);
    const FeatureVector pm = ierfh(zero);
    const std::size_t bin = ierfh_bin(0.0, -1.0, 1.0);
    for (std::size_t i = 0; i < 512; ++i)
        if (pm.values[i] != (i == bin ? 0.0 : 1.0)) ++violations;
    const double secs = seconds_since(t0);
    return {violations == 0 && worst_mass <= 1e-12 && secs < 30.0,
            fmt("1000 segments, %d violations, max |sum(1-g) - 1| %.3g, %.1f s", violations, worst_mass, secs)};
}

// 5. Metrics on the worked confusion matrices.
Verdict metrics() {
    const std::vector<int> labels{0, 0, 1, 1}, preds{0, 1, 1, 1};
    const ConfusionMatrix cm = confusion(preds, labels, 2);
    const auto pc = per_class_metrics(cm);
    const OverallMetrics o = overall(cm);
    const double tol = 1e-9;
    bool ok = cm == ConfusionMatrix::from_rows({{1, 1}, {0, 2}});
    ok = ok && std::abs(pc[0].precision - 1.0) < tol && std::abs(pc[0].recall - 0.5) < tol;
    ok = ok && std::abs(pc[1].precision - 2.0 / 3.0) < tol && std::abs(pc[1].recall - 1.0) < tol;
    ok = ok && std::abs(pc[0].f1 - 2.0 / 3.0) < tol && std::abs(pc[1].f1 - 0.8) < tol;
    ok = ok && o.accuracy == 0.75 && std::abs(o.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0) < tol;
    const OverallMetrics diag = overall(ConfusionMatrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 5}}));
    ok = ok && diag.accuracy == 1.0 && diag.macro_f1 == 1.0;
    const auto zero_support = per_class_metrics(ConfusionMatrix::from_rows({{2, 0}, {0, 0}}));
    ok = ok && zero_support[1].recall == 0.0 && zero_support[1].degenerate_recall;
    return {ok, fmt("accuracy %.4f, macro F1 %.10f, F1 per class %.10f / %.10f", o.accuracy, o.macro_f1, pc[0].f1,
                    pc[1].f1)};
}

// 6. Minimizing the Mixup objective over the positive similarities recovers lambda.
Verdict mixing_ratio() {
    const auto t0 = Clock::now();
    Rng rng(606);
    std::vector<double> negatives(14);
    for (double& n : negatives) n = rng.uniform(-1.0, -0.2);
    bool ok = true;
    std::string detail;
    for (double lambda : {0.2, 0.5, 0.8}) {
        const auto r = checks::minimize_mixing_objective(lambda, negatives, 0.1);
        ok = ok && r.relative_error() < 1e-3;
        detail += fmt("lambda %.1f: ratio %.6f vs %.6f; ", lambda, r.ratio, r.expected);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 60.0, detail + fmt("%.1f s", secs)};
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(SHMSSL_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> read_loss_trace(const fs::path& p) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    std::vector<double> loss;
    while (std::getline(f, line)) loss.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    return loss;
}

// 7. Desk-scale trend: AE beats SUP by two F1 points; every pre-training loss decreases.
Verdict trend(const fs::path& run_dir, double& secs_out) {
    const auto t0 = Clock::now();
    const int rc = run_cli("run --desk --out '" + run_dir.string() + "'", run_dir.string() + ".log");
    secs_out = seconds_since(t0);
    if (rc != 0) return {false, fmt("run exited with %d, see %s.log", rc, run_dir.string().c_str())};

    const ResultTable t = load_results(run_dir);
    const std::string ls = t.low_shots.empty() ? "" : t.low_shots.front();
    const ResultRow* sup = t.find(Method::Sup, ls);
    const ResultRow* ae = t.find(Method::Ae, ls);
    if (!sup || !ae) return {false, "results lack the sup or ae row"};
    const double gain = 100.0 * (ae->mean_f1() - sup->mean_f1());

    bool losses_ok = true;
    std::string loss_detail;
    for (Method m : {Method::Ae, Method::SimClr, Method::Mixup, Method::Gan}) {
        const auto loss = read_loss_trace(run_dir / "pretrain" / (std::string(to_string(m)) + "_loss.csv"));
        const bool dec = loss.size() >= 2 && std::isfinite(loss.back()) && loss.back() < loss.front();
        losses_ok = losses_ok && dec;
        loss_detail += fmt(" %s %.4g->%.4g", to_string(m), loss.empty() ? NAN : loss.front(),
                           loss.empty() ? NAN : loss.back());
    }
    std::string rows;
    for (const auto& r : t.rows) rows += fmt(" %s %.2f+-%.2f", to_string(r.method), 100 * r.mean_f1(), 100 * r.std_f1());
    return {gain >= 2.0 && losses_ok && secs_out < 900.0,
            fmt("AE - SUP = %+.2f F1 points (need >= +2.00);", gain) + rows + "; pre-training loss" + loss_detail +
                fmt("; %.0f s", secs_out)};
}

// 8. Two identical runs produce byte-identical reports.
Verdict determinism(const fs::path& first, const fs::path& second) {
    const auto t0 = Clock::now();
    if (!fs::exists(first / "report_f1.csv")) return {false, "first run produced no report"};
    const int rc = run_cli("run --desk --out '" + second.string() + "'", second.string() + ".log");
    const double secs = seconds_since(t0);
    if (rc != 0) return {false, fmt("second run exited with %d", rc)};
    bool same = true;
    std::string files;
    for (const char* name : {"report_f1.csv", "report_per_class.csv", "results.csv"}) {
        const bool eq = slurp(first / name) == slurp(second / name) && !slurp(first / name).empty();
        same = same && eq;
        files += fmt(" %s %s", name, eq ? "identical" : "DIFFERENT");
    }
    return {same && secs < 900.0, "two runs with the default seed:" + files + fmt("; %.0f s", secs)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::string work_dir = (fs::temp_directory_path() / "shmssl_acceptance").string();
    bool skip_runs = false;
    app.add_option("--work-dir", work_dir, "Directory for the full pipeline runs");
    app.add_flag("--skip-runs", skip_runs, "Skip criteria 7 and 8 (full pipeline runs)");
    CLI11_PARSE(app, argc, argv);

    int evaluated = 0, passed = 0;
    auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        ++evaluated;
        passed += v.pass;
        std::printf("criterion %d %s: %s | %s\n", id, name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "gradient-correctness", gradients);
    report(2, "loss-oracles", loss_oracles);
    report(3, "architecture", architecture);
    report(4, "ierfh-invariants", ierfh_invariants);
    report(5, "metrics", metrics);
    report(6, "mixing-ratio", mixing_ratio);

    if (skip_runs) {
        std::printf("criterion 7 trend-reproduction: SKIP | --skip-runs\n");
        std::printf("criterion 8 determinism: SKIP | --skip-runs\n");
    } else {
        const fs::path root(work_dir);
        fs::remove_all(root);
        fs::create_directories(root);
        double first_secs = 0.0;
        report(7, "trend-reproduction", [&] { return trend(root / "run_a", first_secs); });
        report(8, "determinism", [&] { return determinism(root / "run_a", root / "run_b"); });
    }
    std::printf("summary: %d/%d criteria passed\n", passed, evaluated);
    return 0;
}
