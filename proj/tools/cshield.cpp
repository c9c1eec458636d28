// cshield: shield synthesis, conformal perception and shielded-model checking.

#include "cshield/abstraction.hpp"
#include "cshield/checker.hpp"
#include "cshield/conformal.hpp"
#include "cshield/errors.hpp"
#include "cshield/io.hpp"
#include "cshield/manifest.hpp"
#include "cshield/model_format.hpp"
#include "cshield/shield.hpp"
#include "cshield/sim.hpp"
#include "cshield/theorem_lab.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace fs = std::filesystem;
using namespace cshield;

namespace {

struct Options
{
    std::string model;
    std::string unsafe_label = "fail";
    std::size_t lookahead = default_lookahead;
    double alpha_prime = 0.95;
    double lambda_prime = 0.9;
    std::string variant = "worst";
    std::string horizons = "1..30";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out;

    std::string sigma;
    std::string samples;
    std::string test_samples;
    std::string conformal;
    std::string confusion;
    std::string report;
    std::string logs;
    std::string empty_policy = "error";
    std::string system = "model";
    std::string alpha_primes = "0.95,0.99,0.995";
    std::string lambda_primes = "0.7,0.8,0.9";
    std::string lambdas = "0.1,0.2,0.3";
    std::string lookaheads = "1..4";
    bool baseline = false;
    bool point = false;
    bool no_prune = false;
    bool timing = false;
    bool direct = false;
    std::size_t episodes = 1000;
    std::size_t horizon = 30;
    std::size_t per_state = 1000;
    std::size_t models = 200;
    std::size_t classes = 0;
    double accuracy = 0.85;
    double sharpness = 1.5;
    double epsilon = 0.01;
};

// Thresholds are given as coverage/safety levels; internal values are the
// complements, rounded so 1 - 0.95 prints as 0.05.
double complement(double level)
{
    if (!(level > 0.0 && level < 1.0)) throw InputError(fmt::format("level {} outside (0, 1)", level));
    return std::round((1.0 - level) * 1e12) / 1e12;
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError(fmt::format("bad number '{}' in list '{}'", item, s));
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

struct LoadedModel
{
    ExplicitMdp mdp;
    std::string text;
};

LoadedModel load(const std::string& path)
{
    ModelSource src = load_model_source(path);
    ParseResult r = parse_model(src);
    for (const auto& d : r.diagnostics) {
        if (d.severity == Diagnostic::Severity::warning) std::cerr << src.origin << ":" << d.str() << "\n";
    }
    if (r.scale_limit_exceeded) throw ScaleLimitError(r.report());
    if (!r.ok()) throw InputError(r.report());
    return {std::move(*r.model), std::move(src.text)};
}

std::string require(const std::string& value, const char* flag)
{
    if (value.empty()) throw CLI::RequiredError(flag);
    return value;
}

// Number of perception classes: states below the first trailing unsafe state.
std::size_t perception_classes(const ExplicitMdp& m, const StateSet& unsafe, std::size_t requested)
{
    if (requested > 0) return requested;
    std::size_t k = m.state_count();
    while (k > 0 && unsafe.contains(static_cast<StateId>(k - 1))) --k;
    return k;
}

PerceptionProfile profile_of(const Options& o)
{
    PerceptionProfile p;
    p.accuracy = o.accuracy;
    p.sharpness = o.sharpness;
    return p;
}

EmptyRowPolicy empty_policy_of(const Options& o)
{
    if (o.empty_policy == "error") return EmptyRowPolicy::error;
    if (o.empty_policy == "point") return EmptyRowPolicy::point;
    throw InputError(fmt::format("unknown empty policy '{}' (expected error or point)", o.empty_policy));
}

StateSet not_unsafe(const ExplicitMdp& m, const StateSet& unsafe)
{
    StateSet out;
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (!unsafe.contains(s)) out.insert(s);
    }
    return out;
}

int run_synth(const Options& o)
{
    const auto model = load(require(o.model, "--model"));
    RunManifest man("synth");
    man.add_input("--model", model.text);
    man.add_param("unsafe_label", o.unsafe_label);
    man.add_param("lookahead", o.lookahead);
    const SigmaTable st = synth_sigma(model.mdp, model.mdp.label(o.unsafe_label), o.lookahead, o.unsafe_label);
    write_file(require(o.out, "--out"), format_sigma_csv(st, man.line()));
    return 0;
}

int run_generate(const Options& o)
{
    const auto model = load(require(o.model, "--model"));
    const StateSet& unsafe = model.mdp.label(o.unsafe_label);
    const std::size_t classes = perception_classes(model.mdp, unsafe, o.classes);
    const PerceptionProfile profile = profile_of(o);
    RunManifest man("generate");
    man.add_input("--model", model.text);
    man.add_param("unsafe_label", o.unsafe_label);
    man.add_param("accuracy", o.accuracy);
    man.add_param("sharpness", o.sharpness);
    man.add_param("classes", classes);
    man.add_param("seed", std::to_string(o.seed));
    std::vector<ScoredSample> samples;
    if (o.direct) {
        man.add_param("per_state", o.per_state);
        StateSet states;
        for (StateId s = 0; s < classes; ++s) {
            if (!unsafe.contains(s)) states.insert(s);
        }
        samples = gen_samples(profile, classes, states, o.per_state, o.seed);
    } else {
        man.add_param("episodes", o.episodes);
        man.add_param("horizon", o.horizon);
        samples = gen_calibration(model.mdp, profile, classes, unsafe, o.episodes, o.horizon, o.seed);
    }
    write_file(require(o.out, "--out"), format_samples_csv(samples, classes, man.line()));
    return 0;
}

int run_calibrate(const Options& o)
{
    const std::string text = read_file(require(o.samples, "--samples"));
    const auto samples = parse_samples_csv(text, o.samples);
    const double alpha = complement(o.alpha_prime);
    RunManifest man("calibrate");
    man.add_input("--samples", text);
    man.add_param("alpha_prime", o.alpha_prime);
    man.add_param("alpha", alpha);
    const ConformalModel cm = calibrate(samples, alpha);
    write_file(require(o.out, "--out"), format_conformal_model(cm, man.line()));
    return 0;
}

int run_evaluate(const Options& o)
{
    const std::string text = read_file(require(o.samples, "--samples"));
    const auto samples = parse_samples_csv(text, o.samples);
    RunManifest man("evaluate");
    man.add_input("--samples", text);
    ConfusionFile file;
    if (o.point) {
        man.add_param("perception", "point");
        file.kind = "point";
        file.confusion = build_point_confusion(samples);
    } else {
        const std::string cm_text = read_file(require(o.conformal, "--conformal"));
        const ConformalModel cm = parse_conformal_model(cm_text, o.conformal);
        man.add_input("--conformal", cm_text);
        man.add_param("alpha_prime", 1.0 - cm.alpha);
        man.add_param("alpha", cm.alpha);
        file.alpha = cm.alpha;
        file.confusion = build_set_confusion(cm, samples);
        if (!o.report.empty()) write_file(o.report, format_coverage(coverage(cm, samples), cm, man.line()));
    }
    write_file(require(o.out, "--out"), format_confusion_csv(file, man.line()));
    return 0;
}

struct CompileInputs
{
    LoadedModel model;
    std::string sigma_text;
    SigmaTable st;
};

CompileInputs load_compile_inputs(const Options& o)
{
    CompileInputs in{load(require(o.model, "--model")), read_file(require(o.sigma, "--sigma")), {}};
    in.st = parse_sigma_csv(in.sigma_text, o.sigma);
    if (in.st.state_count() != in.model.mdp.state_count()) {
        throw InputError(fmt::format("{} covers {} states but the model has {}", o.sigma, in.st.state_count(),
                                     in.model.mdp.state_count()));
    }
    return in;
}

AbstractModel compile_from(const CompileInputs& in, const ConfusionFile& cf, double lambda, Variant variant,
                           bool baseline, EmptyRowPolicy policy, bool prune)
{
    const Nu nu = normalize_confusion(cf.confusion, not_unsafe(in.model.mdp, in.st.unsafe()),
                                      in.model.mdp.state_count(), policy);
    CompileOptions opts;
    opts.prune = prune;
    opts.alpha = baseline ? std::nullopt : cf.alpha;
    return baseline ? compile_baseline(in.model.mdp, in.st, lambda, nu, variant, opts)
                    : compile(in.model.mdp, in.st, lambda, nu, variant, opts);
}

int run_compile(const Options& o)
{
    const CompileInputs in = load_compile_inputs(o);
    const std::string cf_text = read_file(require(o.confusion, "--confusion"));
    const ConfusionFile cf = parse_confusion_csv(cf_text, o.confusion);
    if (o.baseline != (cf.kind == "point")) {
        throw InputError(o.baseline ? "--baseline needs a point confusion (evaluate --point)"
                                    : "point confusion given; pass --baseline");
    }
    const double lambda = complement(o.lambda_prime);
    const Variant variant = parse_variant(o.variant);
    RunManifest man("compile");
    man.add_input("--model", in.model.text);
    man.add_input("--sigma", in.sigma_text);
    man.add_input("--confusion", cf_text);
    man.add_param("lambda_prime", o.lambda_prime);
    man.add_param("lambda", lambda);
    if (cf.alpha) {
        man.add_param("alpha_prime", 1.0 - *cf.alpha);
        man.add_param("alpha", *cf.alpha);
    }
    man.add_param("variant", o.variant);
    man.add_param("baseline", std::string(o.baseline ? "1" : "0"));
    man.add_param("prune", std::string(o.no_prune ? "0" : "1"));
    const AbstractModel am =
        compile_from(in, cf, lambda, variant, o.baseline, empty_policy_of(o), !o.no_prune);
    write_file(require(o.out, "--out"), format_abstract_model(am, "manifest " + man.json()));
    return 0;
}

std::vector<ResultRow> check_rows(const ExplicitMdp& m, const std::vector<std::size_t>& horizons,
                                  const std::string& variant, std::optional<double> alpha,
                                  std::optional<double> lambda, bool timing)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = check_properties(m, horizons);
    const double ms =
        timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    std::vector<ResultRow> rows;
    for (const auto& r : results) rows.push_back({variant, alpha, lambda, r, ms});
    return rows;
}

int run_check(const Options& o)
{
    const auto model = load(require(o.model, "--model"));
    const AbstractMeta meta = parse_abstract_meta(model.text);
    const auto horizons = parse_horizons(o.horizons);
    RunManifest man("check");
    man.add_input("--model", model.text);
    man.add_param("horizons", o.horizons);
    man.add_param("timing", std::string(o.timing ? "1" : "0"));
    const std::string variant = meta.baseline ? "baseline-" + meta.variant : meta.variant;
    const auto rows = check_rows(model.mdp, horizons, variant, meta.alpha, meta.lambda, o.timing);
    write_file(require(o.out, "--out"), format_results_csv(rows, man.line()));
    return 0;
}

int run_simulate(const Options& o)
{
    const CompileInputs in = load_compile_inputs(o);
    RunManifest man("simulate");
    man.add_input("--model", in.model.text);
    man.add_input("--sigma", in.sigma_text);
    ConformalModel cm;
    if (!o.point) {
        const std::string cm_text = read_file(require(o.conformal, "--conformal"));
        cm = parse_conformal_model(cm_text, o.conformal);
        man.add_input("--conformal", cm_text);
        man.add_param("alpha_prime", 1.0 - cm.alpha);
        man.add_param("alpha", cm.alpha);
    }
    const double lambda = complement(o.lambda_prime);
    const SimPolicy policy = parse_sim_policy(o.variant);
    const std::size_t classes = perception_classes(in.model.mdp, in.st.unsafe(), o.classes);
    man.add_param("lambda_prime", o.lambda_prime);
    man.add_param("lambda", lambda);
    man.add_param("policy", o.variant);
    man.add_param("perception", std::string(o.point ? "point" : "conformal"));
    man.add_param("accuracy", o.accuracy);
    man.add_param("sharpness", o.sharpness);
    man.add_param("classes", classes);
    man.add_param("episodes", o.episodes);
    man.add_param("horizon", o.horizon);
    man.add_param("seed", std::to_string(o.seed));

    RolloutOptions ro;
    ro.episodes = o.episodes;
    ro.horizon = o.horizon;
    ro.seed = o.seed;
    ro.threads = o.threads;
    ro.keep_logs = !o.logs.empty();
    ro.point_perception = o.point;
    const RolloutResult r = rollout(in.model.mdp, in.st, lambda, cm, profile_of(o), classes, policy, ro);
    write_file(require(o.out, "--out"), format_sim_summary(r.summary, man.line()));
    if (!o.logs.empty()) write_file(o.logs, format_episode_logs(r.logs, man.line()));
    return 0;
}

void lemma_lines(const ExplicitMdp& m, const StateSet& unsafe, std::uint64_t seed, std::vector<ReportLine>& out)
{
    if (m.state_count() > oracle_max_states) return;
    const LemmaResiduals lr = check_lemmas(m, unsafe, 20, seed, 8);
    out.push_back({"lemma_occupancy_residual", lr.occupancy, 1e-12, lr.occupancy <= 1e-12});
    out.push_back({"lemma_absorbing_residual", lr.absorbing, 1e-12, lr.absorbing <= 1e-12});
    out.push_back({"lemma_end_state_residual", lr.end_state, 1e-12, lr.end_state <= 1e-12});
}

int run_theorem1(const Options& o)
{
    const auto horizons = parse_horizons(o.horizons);
    RunManifest man("theorem1");
    man.add_param("system", o.system);
    man.add_param("horizons", o.horizons);
    man.add_param("seed", std::to_string(o.seed));

    if (o.system == "random") {
        std::vector<std::size_t> lookaheads;
        for (std::size_t n : parse_horizons(o.lookaheads)) lookaheads.push_back(n);
        man.add_param("lambdas", o.lambdas);
        man.add_param("lookaheads", o.lookaheads);
        man.add_param("models", o.models);
        const auto sweep =
            theorem1_sweep(o.models, o.seed, parse_list(o.lambdas), lookaheads, horizons.back());
        write_file(require(o.out, "--out"), format_sweep_csv(sweep, man.line()));
        if (sweep.short_configs > 0) {
            std::cerr << fmt::format("warning: {} configurations found fewer than {} qualifying models\n",
                                     sweep.short_configs, o.models);
        }
        return 0;
    }

    const double lambda = complement(o.lambda_prime);
    man.add_param("lambda_prime", o.lambda_prime);
    man.add_param("lambda", lambda);
    man.add_param("lookahead", o.lookahead);
    std::vector<ReportLine> lines;
    if (o.system == "entrapment") {
        man.add_param("epsilon", o.epsilon);
        const double stuck = entrapment_stuck_probability(lambda, o.epsilon, o.lookahead);
        const double expected = lambda / (lambda + o.epsilon);
        lines.push_back({"one_step_stuck", stuck, expected, std::abs(stuck - expected) <= 1e-12});
    } else {
        ExplicitMdp m;
        std::string label = "unsafe";
        if (o.system == "worst") {
            m = build_worst_case(lambda);
        } else if (o.system == "model") {
            const auto model = load(require(o.model, "--model"));
            man.add_input("--model", model.text);
            man.add_param("unsafe_label", o.unsafe_label);
            m = model.mdp;
            label = o.unsafe_label;
        } else {
            throw InputError(fmt::format("unknown system '{}' (expected model, worst, entrapment or random)",
                                         o.system));
        }
        const StateSet& unsafe = m.label(label);
        for (std::size_t h : horizons) {
            const Theorem1Report r = verify_theorem1(m, unsafe, lambda, o.lookahead, h);
            if (h == horizons.front()) {
                lines.push_back({"initially_safe", r.initially_safe ? 1.0 : 0.0, 1.0, r.initially_safe});
                lines.push_back({"no_stuck", r.no_stuck ? 1.0 : 0.0, 1.0, r.no_stuck});
            }
            lines.push_back({fmt::format("max_unsafe_h{}", h), r.max_unsafe, r.bound, r.satisfied});
        }
        lemma_lines(m, unsafe, o.seed, lines);
    }
    write_file(require(o.out, "--out"), format_report(lines, man.line()));
    return 0;
}

int run_sweep(const Options& o)
{
    const CompileInputs in = load_compile_inputs(o);
    const std::string cal_text = read_file(require(o.samples, "--samples"));
    const std::string test_text = read_file(require(o.test_samples, "--test-samples"));
    const auto cal = parse_samples_csv(cal_text, o.samples);
    const auto test = parse_samples_csv(test_text, o.test_samples);
    const auto horizons = parse_horizons(o.horizons);
    const fs::path dir = require(o.out, "--out");
    fs::create_directories(dir);
    const EmptyRowPolicy empty = empty_policy_of(o);

    auto manifest = [&](const std::string& what) {
        RunManifest man("sweep");
        man.add_input("--model", in.model.text);
        man.add_input("--sigma", in.sigma_text);
        man.add_input("--samples", cal_text);
        man.add_input("--test-samples", test_text);
        man.add_param("horizons", o.horizons);
        man.add_param("alpha_primes", o.alpha_primes);
        man.add_param("lambda_primes", o.lambda_primes);
        man.add_param("empty_policy", o.empty_policy);
        man.add_param("timing", std::string(o.timing ? "1" : "0"));
        man.add_param("file", what);
        return man.line();
    };

    std::vector<ResultRow> merged;
    const std::vector<Variant> variants{Variant::worst, Variant::random, Variant::safest};
    for (double ap : parse_list(o.alpha_primes)) {
        const double alpha = complement(ap);
        ConfusionFile cf;
        const ConformalModel cm = calibrate(cal, alpha);
        cf.alpha = alpha;
        cf.confusion = build_set_confusion(cm, test);
        for (double lp : parse_list(o.lambda_primes)) {
            const double lambda = complement(lp);
            for (Variant v : variants) {
                const AbstractModel am = compile_from(in, cf, lambda, v, false, empty, true);
                const auto rows = check_rows(am.mdp, horizons, to_string(v), alpha, lambda, o.timing);
                const std::string name = fmt::format("results_a{}_l{}_{}.csv", ap, lp, to_string(v));
                write_file(dir / name, format_results_csv(rows, manifest(name)));
                merged.insert(merged.end(), rows.begin(), rows.end());
            }
        }
    }
    ConfusionFile point;
    point.kind = "point";
    point.confusion = build_point_confusion(test);
    for (double lp : parse_list(o.lambda_primes)) {
        const double lambda = complement(lp);
        for (Variant v : variants) {
            const AbstractModel am = compile_from(in, point, lambda, v, true, empty, true);
            const auto rows =
                check_rows(am.mdp, horizons, "baseline-" + to_string(v), std::nullopt, lambda, o.timing);
            const std::string name = fmt::format("baseline_l{}_{}.csv", lp, to_string(v));
            write_file(dir / name, format_results_csv(rows, manifest(name)));
            merged.insert(merged.end(), rows.begin(), rows.end());
        }
    }
    write_file(dir / "sweep.csv", format_results_csv(merged, manifest("sweep.csv")));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conformal shielding: synthesize shields, calibrate perception, compile and check."};
    app.require_subcommand(1);
    Options o;

    auto model = [&](CLI::App* c) { c->add_option("--model", o.model, "model file"); };
    auto unsafe = [&](CLI::App* c) { c->add_option("--unsafe-label", o.unsafe_label, "label of unsafe states"); };
    auto out = [&](CLI::App* c) { c->add_option("--out", o.out, "output path"); };
    auto seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "random seed"); };
    auto profile = [&](CLI::App* c) {
        c->add_option("--accuracy", o.accuracy, "synthetic perception accuracy");
        c->add_option("--sharpness", o.sharpness, "synthetic score concentration");
        c->add_option("--classes", o.classes, "perception classes (default: states below trailing unsafe ones)");
    };

    auto* synth = app.add_subcommand("synth", "model + unsafe label + lookahead -> sigma CSV");
    model(synth);
    unsafe(synth);
    synth->add_option("--lookahead", o.lookahead, "shield lookahead n");
    out(synth);

    auto* generate = app.add_subcommand("generate", "synthetic scored samples");
    model(generate);
    unsafe(generate);
    profile(generate);
    seed(generate);
    generate->add_flag("--direct", o.direct, "draw --per-state samples per state instead of rollouts");
    generate->add_option("--per-state", o.per_state, "samples per state with --direct");
    generate->add_option("--episodes", o.episodes, "rollout episodes");
    generate->add_option("--horizon", o.horizon, "rollout length");
    out(generate);

    auto* cal = app.add_subcommand("calibrate", "samples + alpha' -> conformal model");
    cal->add_option("--samples", o.samples, "calibration samples CSV");
    cal->add_option("--alpha-prime", o.alpha_prime, "coverage level 1 - alpha");
    out(cal);

    auto* eval = app.add_subcommand("evaluate", "samples + conformal model -> set confusion CSV");
    eval->add_option("--samples", o.samples, "test samples CSV");
    eval->add_option("--conformal", o.conformal, "conformal model file");
    eval->add_option("--report", o.report, "coverage report output");
    eval->add_flag("--point", o.point, "argmax point-estimate confusion (baseline)");
    out(eval);

    auto* comp = app.add_subcommand("compile", "model + sigma + confusion -> abstract model");
    model(comp);
    comp->add_option("--sigma", o.sigma, "sigma CSV");
    comp->add_option("--confusion", o.confusion, "confusion CSV");
    comp->add_option("--lambda-prime", o.lambda_prime, "safety level 1 - lambda");
    comp->add_option("--variant", o.variant, "worst, random or safest");
    comp->add_flag("--baseline", o.baseline, "point-estimate perception");
    comp->add_option("--empty-policy", o.empty_policy, "states without samples: error or point");
    comp->add_flag("--no-prune", o.no_prune, "keep unreachable (state, set) pairs");
    out(comp);

    auto* check = app.add_subcommand("check", "abstract model + horizons -> results CSV");
    model(check);
    check->add_option("--horizons", o.horizons, "lo..hi");
    check->add_flag("--timing", o.timing, "record wall-clock time (breaks byte-identical reruns)");
    out(check);

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo rollouts -> summary CSV");
    model(sim);
    sim->add_option("--sigma", o.sigma, "sigma CSV");
    sim->add_option("--conformal", o.conformal, "conformal model file");
    sim->add_flag("--point", o.point, "argmax point-estimate perception");
    sim->add_option("--lambda-prime", o.lambda_prime, "safety level 1 - lambda");
    sim->add_option("--variant", o.variant, "random or safest");
    sim->add_option("--episodes", o.episodes, "episodes");
    sim->add_option("--horizon", o.horizon, "steps per episode");
    sim->add_option("--threads", o.threads, "worker threads");
    sim->add_option("--logs", o.logs, "per-step log CSV");
    profile(sim);
    seed(sim);
    out(sim);

    auto* thm = app.add_subcommand("theorem1", "global safety bound report");
    thm->add_option("--system", o.system, "model, worst, entrapment or random");
    model(thm);
    unsafe(thm);
    thm->add_option("--lambda-prime", o.lambda_prime, "safety level 1 - lambda");
    thm->add_option("--lookahead", o.lookahead, "shield lookahead n");
    thm->add_option("--horizons", o.horizons, "lo..hi");
    thm->add_option("--epsilon", o.epsilon, "entrapment margin");
    thm->add_option("--models", o.models, "random models per configuration");
    thm->add_option("--lambdas", o.lambdas, "comma-separated lambdas for --system random");
    thm->add_option("--lookaheads", o.lookaheads, "lo..hi lookaheads for --system random");
    seed(thm);
    out(thm);

    auto* sweep = app.add_subcommand("sweep", "alpha' x lambda' x variant grid -> result files");
    model(sweep);
    sweep->add_option("--sigma", o.sigma, "sigma CSV");
    sweep->add_option("--samples", o.samples, "calibration samples CSV");
    sweep->add_option("--test-samples", o.test_samples, "test samples CSV");
    sweep->add_option("--alpha-primes", o.alpha_primes, "comma-separated coverage levels");
    sweep->add_option("--lambda-primes", o.lambda_primes, "comma-separated safety levels");
    sweep->add_option("--horizons", o.horizons, "lo..hi");
    sweep->add_option("--empty-policy", o.empty_policy, "states without samples: error or point");
    sweep->add_flag("--timing", o.timing, "record wall-clock time");
    sweep->add_option("--out", o.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "synth") return run_synth(o);
        if (name == "generate") return run_generate(o);
        if (name == "calibrate") return run_calibrate(o);
        if (name == "evaluate") return run_evaluate(o);
        if (name == "compile") return run_compile(o);
        if (name == "check") return run_check(o);
        if (name == "simulate") return run_simulate(o);
        if (name == "theorem1") return run_theorem1(o);
        if (name == "sweep") return run_sweep(o);
    } catch (const CLI::RequiredError& e) {
        std::cerr << "error: missing required option " << e.what() << "\n";
        return 1;
    } catch (const ScaleLimitError& e) {
        std::cerr << "scale limit: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
