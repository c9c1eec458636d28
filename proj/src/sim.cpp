#include "cshield/sim.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

namespace cshield {

void PerceptionProfile::validate(std::size_t classes) const
{
    if (!(accuracy > 0.0 && accuracy <= 1.0)) throw InputError(fmt::format("accuracy {} outside (0, 1]", accuracy));
    if (!(sharpness > 0.0)) throw InputError(fmt::format("sharpness {} must be positive", sharpness));
    if (classes == 0) throw InputError("perception needs at least one class");
    for (const auto& [s, targets] : confusion_bias) {
        if (s >= classes) throw InputError(fmt::format("confusion bias for unknown class {}", s));
        for (StateId t : targets) {
            if (t >= classes || t == s) throw InputError(fmt::format("bad confusion target {} for class {}", t, s));
        }
    }
}

namespace {

StateId sample_label(const PerceptionProfile& profile, StateId true_state, std::size_t classes, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (classes == 1 || unit(rng) < profile.accuracy) return true_state;
    if (auto it = profile.confusion_bias.find(true_state); it != profile.confusion_bias.end() && !it->second.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
        return it->second[pick(rng)];
    }
    std::uniform_int_distribution<StateId> pick(0, static_cast<StateId>(classes - 2));
    const StateId other = pick(rng);
    return other >= true_state ? other + 1 : other;
}

// Logit separation between the leading classes and the background ones.
constexpr double score_margin = 2.0;

template <typename T>
T draw_index(std::mt19937_64& rng, std::size_t size)
{
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    return static_cast<T>(pick(rng));
}

StateId sample_successor(const Choice& c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (const auto& t : c.successors) {
        acc += t.probability;
        if (u < acc) return t.target;
    }
    return c.successors.back().target;
}

} // namespace

std::vector<double> gen_scores(const PerceptionProfile& profile, StateId true_state, std::size_t classes,
                               std::mt19937_64& rng)
{
    const StateId label = sample_label(profile, true_state, classes, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> gap(1.0);
    std::vector<double> z(classes);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < classes; ++i) {
        if (i == label) continue;
        z[i] = normal(rng);
        top = std::max(top, z[i]);
    }
    if (classes == 1) top = 0.0;
    if (label != true_state) {
        // A mistaken argmax keeps the true class as runner-up.
        std::uniform_real_distribution<double> lead(0.0, 1.0);
        z[true_state] = top = top + score_margin + gap(rng);
        z[label] = top + lead(rng);
    } else {
        z[label] = top + score_margin + gap(rng);
    }

    const double peak = z[label];
    double total = 0.0;
    for (auto& v : z) {
        v = std::exp(profile.sharpness * (v - peak));
        total += v;
    }
    for (auto& v : z) v /= total;
    return z;
}

std::vector<ScoredSample> gen_calibration(const ExplicitMdp& perf, const PerceptionProfile& profile,
                                          std::size_t classes, const StateSet& stop, std::size_t episodes,
                                          std::size_t horizon, std::uint64_t seed)
{
    profile.validate(classes);
    if (episodes == 0) throw InputError("calibration needs at least one episode");
    std::vector<ScoredSample> out;
    auto observable = [&](StateId s) { return s < classes && !stop.contains(s); };
    for (std::size_t e = 0; e < episodes; ++e) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(e)};
        std::mt19937_64 rng(seq);
        StateId s = perf.initial();
        if (!observable(s)) continue;
        out.push_back({s, gen_scores(profile, s, classes, rng)});
        for (std::size_t step = 0; step < horizon; ++step) {
            const auto choices = perf.choices(s);
            const Choice& c = choices[draw_index<std::size_t>(rng, choices.size())];
            s = sample_successor(c, rng);
            if (!observable(s)) break;
            out.push_back({s, gen_scores(profile, s, classes, rng)});
        }
    }
    return out;
}

std::vector<ScoredSample> gen_samples(const PerceptionProfile& profile, std::size_t classes, const StateSet& states,
                                      std::size_t per_state, std::uint64_t seed)
{
    profile.validate(classes);
    std::vector<ScoredSample> out;
    out.reserve(states.count() * per_state);
    for (StateId s : states.members()) {
        if (s >= classes) throw InputError(fmt::format("state {} has no perception class", s));
        std::seed_seq seq{seed, static_cast<std::uint64_t>(s)};
        std::mt19937_64 rng(seq);
        for (std::size_t i = 0; i < per_state; ++i) out.push_back({s, gen_scores(profile, s, classes, rng)});
    }
    return out;
}

std::string to_string(Outcome o)
{
    switch (o) {
    case Outcome::fail: return "fail";
    case Outcome::stuck: return "stuck";
    case Outcome::success: return "success";
    }
    return "success";
}

std::string to_string(SimPolicy p)
{
    return p == SimPolicy::random ? "random" : "safest";
}

SimPolicy parse_sim_policy(const std::string& s)
{
    if (s == "random") return SimPolicy::random;
    if (s == "safest") return SimPolicy::safest;
    throw InputError(fmt::format("unknown simulation policy '{}' (expected random or safest)", s));
}

namespace {

struct EpisodeTally
{
    Outcome outcome = Outcome::success;
    std::size_t steps = 0;
    std::size_t safe_steps = 0;
};

class Runner
{
public:
    Runner(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const ConformalModel& cm,
           const PerceptionProfile& profile, std::size_t classes, SimPolicy policy, const RolloutOptions& options)
        : perf_(perf), st_(st), view_(st, lambda), cm_(cm), profile_(profile), classes_(classes), policy_(policy),
          options_(options)
    {
    }

    EpisodeTally run(std::size_t episode, EpisodeLog* log) const
    {
        std::seed_seq seq{options_.seed, static_cast<std::uint64_t>(episode)};
        std::mt19937_64 rng(seq);
        EpisodeTally tally;
        StateId s = perf_.initial();
        StateSet sbar = StateSet::singleton(s);
        std::vector<ActionId> allowed = view_.lifted_shield(sbar);
        if (allowed.empty()) {
            tally.outcome = Outcome::stuck;
            finish(tally, log);
            return tally;
        }
        for (std::size_t step = 0; step < options_.horizon; ++step) {
            const ActionId a =
                policy_ == SimPolicy::random ? allowed[draw_index<std::size_t>(rng, allowed.size())]
                                             : *view_.safest_action(sbar);
            const Choice* c = perf_.find_choice(s, a);
            if (c == nullptr) {
                throw InputError(fmt::format("shield allows action {} in state {}, which the model lacks", a, s));
            }
            const double sigma = st_.sigma(s, a);
            if (within_threshold(sigma, view_.lambda())) ++tally.safe_steps;
            if (log) log->records.push_back({s, sbar, allowed, a, sigma});
            ++tally.steps;

            s = sample_successor(*c, rng);
            if (st_.unsafe().contains(s)) {
                tally.outcome = Outcome::fail;
                break;
            }
            if (s >= classes_) throw InputError(fmt::format("state {} has no perception class", s));
            const auto scores = gen_scores(profile_, s, classes_, rng);
            sbar = options_.point_perception ? point_estimate(scores) : predict_set(cm_, scores);
            allowed = view_.lifted_shield(sbar);
            if (allowed.empty()) {
                tally.outcome = Outcome::stuck;
                break;
            }
        }
        finish(tally, log);
        return tally;
    }

private:
    static void finish(const EpisodeTally& tally, EpisodeLog* log)
    {
        if (!log) return;
        log->outcome = tally.outcome;
        log->steps = tally.steps;
    }

    const ExplicitMdp& perf_;
    const SigmaTable& st_;
    ShieldView view_;
    const ConformalModel& cm_;
    const PerceptionProfile& profile_;
    std::size_t classes_;
    SimPolicy policy_;
    const RolloutOptions& options_;
};

} // namespace

RolloutResult rollout(const ExplicitMdp& perf, const SigmaTable& st, double lambda, const ConformalModel& cm,
                      const PerceptionProfile& profile, std::size_t classes, SimPolicy policy,
                      const RolloutOptions& options)
{
    profile.validate(classes);
    if (st.state_count() != perf.state_count()) {
        throw InputError(fmt::format("sigma table covers {} states, model has {}", st.state_count(),
                                     perf.state_count()));
    }
    if (st.unsafe().contains(perf.initial())) throw InputError("initial state is unsafe");

    const Runner runner(perf, st, lambda, cm, profile, classes, policy, options);
    const std::size_t n = options.episodes;
    std::vector<EpisodeTally> tallies(n);
    RolloutResult result;
    if (options.keep_logs) result.logs.resize(n);

    const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t e = w; e < n; e += workers) {
                tallies[e] = runner.run(e, options.keep_logs ? &result.logs[e] : nullptr);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::size_t fails = 0, stucks = 0, steps = 0, safe = 0;
    for (const auto& t : tallies) {
        fails += t.outcome == Outcome::fail;
        stucks += t.outcome == Outcome::stuck;
        steps += t.steps;
        safe += t.safe_steps;
    }
    SimSummary& s = result.summary;
    s.policy = policy;
    s.alpha = cm.alpha;
    s.lambda = lambda;
    s.horizon = options.horizon;
    s.episodes = n;
    if (n > 0) {
        const double dn = static_cast<double>(n);
        s.p_fail = static_cast<double>(fails) / dn;
        s.p_stuck = static_cast<double>(stucks) / dn;
        s.p_success = static_cast<double>(n - fails - stucks) / dn;
        auto se = [dn](double p) { return std::sqrt(p * (1.0 - p) / dn); };
        s.se_fail = se(s.p_fail);
        s.se_stuck = se(s.p_stuck);
        s.se_success = se(s.p_success);
    }
    s.local_safety_fraction = steps == 0 ? 1.0 : static_cast<double>(safe) / static_cast<double>(steps);
    return result;
}

double local_safety_audit(const std::vector<EpisodeLog>& logs, double lambda)
{
    std::size_t steps = 0, safe = 0;
    for (const auto& log : logs) {
        for (const auto& r : log.records) {
            ++steps;
            safe += within_threshold(r.sigma, lambda);
        }
    }
    return steps == 0 ? 1.0 : static_cast<double>(safe) / static_cast<double>(steps);
}

} // namespace cshield
