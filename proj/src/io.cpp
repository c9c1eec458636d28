#include "cshield/io.hpp"

#include "cshield/errors.hpp"
#include "cshield/model_format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace cshield {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw InputError(fmt::format("write failed for {}", path.string()));
}

std::string fmt_double(double v)
{
    return fmt::format("{}", v);
}

namespace {

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Data lines (non-empty, non-comment) with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> data_lines(const std::string& text)
{
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.emplace_back(no, std::string(t));
    }
    return out;
}

[[noreturn]] void fail_at(const std::string& origin, std::size_t line, const std::string& msg)
{
    throw InputError(fmt::format("{}:{}: {}", origin, line, msg));
}

double to_double(std::string_view s, const std::string& origin, std::size_t line)
{
    s = trim(s);
    try {
        std::size_t used = 0;
        const double v = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail_at(origin, line, fmt::format("expected a number, got '{}'", s));
    }
}

std::uint64_t to_uint(std::string_view s, const std::string& origin, std::size_t line)
{
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        fail_at(origin, line, fmt::format("expected a non-negative integer, got '{}'", s));
    }
    return v;
}

void expect_header(const std::vector<std::pair<std::size_t, std::string>>& lines, const std::string& header,
                   const std::string& origin)
{
    if (lines.empty()) throw InputError(fmt::format("{}: missing header '{}'", origin, header));
    if (lines.front().second != header) {
        fail_at(origin, lines.front().first, fmt::format("expected header '{}'", header));
    }
}

std::string with_manifest(const std::string& manifest, const std::string& body)
{
    return manifest.empty() ? body : manifest + "\n" + body;
}

const std::string& meta_value(const MetaMap& meta, const std::string& key, const std::string& origin)
{
    auto it = meta.find(key);
    if (it == meta.end()) throw InputError(fmt::format("{}: missing metadata '{}'", origin, key));
    return it->second;
}

} // namespace

MetaMap read_meta(const std::string& text, std::string_view comment)
{
    MetaMap out;
    const std::string prefix = fmt::format("{} meta ", comment);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) != 0) continue;
        std::istringstream fields(line.substr(prefix.size()));
        std::string kv;
        while (fields >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            out[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }
    return out;
}

std::string format_sigma_csv(const SigmaTable& st, const std::string& manifest)
{
    std::string body = fmt::format("# meta lookahead={} unsafe_label={} states={} unsafe={}\nstate,action,sigma\n",
                                   st.lookahead(), st.unsafe_label().empty() ? "-" : st.unsafe_label(),
                                   st.state_count(), st.unsafe().to_hex());
    for (StateId s = 0; s < st.state_count(); ++s) {
        for (const auto& e : st.row(s)) body += fmt::format("{},{},{:.17g}\n", s, e.action, e.sigma);
    }
    return with_manifest(manifest, body);
}

SigmaTable parse_sigma_csv(const std::string& text, const std::string& origin)
{
    const MetaMap meta = read_meta(text);
    const auto lookahead = to_uint(meta_value(meta, "lookahead", origin), origin, 0);
    const auto states = to_uint(meta_value(meta, "states", origin), origin, 0);
    StateSet unsafe;
    try {
        unsafe = StateSet::from_hex(meta_value(meta, "unsafe", origin));
    } catch (const std::invalid_argument& e) {
        throw InputError(fmt::format("{}: bad unsafe set: {}", origin, e.what()));
    }
    std::string label = meta_value(meta, "unsafe_label", origin);
    if (label == "-") label.clear();
    SigmaTable st(lookahead, unsafe, label, states);

    const auto lines = data_lines(text);
    expect_header(lines, "state,action,sigma", origin);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [no, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != 3) fail_at(origin, no, "expected 3 fields");
        const auto s = to_uint(f[0], origin, no);
        if (s >= states) fail_at(origin, no, fmt::format("state {} beyond {} states", s, states));
        const double sigma = to_double(f[2], origin, no);
        if (!(sigma >= 0.0 && sigma <= 1.0)) fail_at(origin, no, "sigma outside [0, 1]");
        st.set(static_cast<StateId>(s), static_cast<ActionId>(to_uint(f[1], origin, no)), sigma);
    }
    return st;
}

std::string format_conformal_model(const ConformalModel& cm, const std::string& manifest)
{
    return with_manifest(manifest,
                         fmt::format("alpha={}\nq_hat={}\nn_cal={}\n", fmt_double(cm.alpha),
                                     cm.q_hat ? fmt::format("{:.17g}", *cm.q_hat) : std::string("saturated"),
                                     cm.calibration_size));
}

ConformalModel parse_conformal_model(const std::string& text, const std::string& origin)
{
    std::map<std::string, std::pair<std::size_t, std::string>> kv;
    for (const auto& [no, line] : data_lines(text)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_at(origin, no, "expected key=value");
        kv[std::string(trim(std::string_view(line).substr(0, eq)))] = {no, std::string(trim(std::string_view(line).substr(eq + 1)))};
    }
    auto get = [&](const std::string& key) -> const std::pair<std::size_t, std::string>& {
        auto it = kv.find(key);
        if (it == kv.end()) throw InputError(fmt::format("{}: missing '{}'", origin, key));
        return it->second;
    };
    ConformalModel cm;
    cm.alpha = to_double(get("alpha").second, origin, get("alpha").first);
    if (!(cm.alpha > 0.0 && cm.alpha < 1.0)) fail_at(origin, get("alpha").first, "alpha outside (0, 1)");
    const auto& q = get("q_hat");
    if (q.second != "saturated") cm.q_hat = to_double(q.second, origin, q.first);
    cm.calibration_size = to_uint(get("n_cal").second, origin, get("n_cal").first);
    return cm;
}

std::string format_samples_csv(const std::vector<ScoredSample>& samples, std::size_t classes,
                               const std::string& manifest)
{
    std::string body = "true_state";
    for (std::size_t i = 0; i < classes; ++i) body += fmt::format(",p{}", i);
    body += '\n';
    for (const auto& s : samples) {
        body += fmt::format("{}", s.true_state);
        for (double p : s.scores) body += fmt::format(",{:.17g}", p);
        body += '\n';
    }
    return with_manifest(manifest, body);
}

std::vector<ScoredSample> parse_samples_csv(const std::string& text, const std::string& origin)
{
    const auto lines = data_lines(text);
    if (lines.empty()) throw InputError(fmt::format("{}: missing header", origin));
    const auto header = split(lines.front().second, ',');
    if (header.size() < 2 || header.front() != "true_state") {
        fail_at(origin, lines.front().first, "expected header 'true_state,p0,...'");
    }
    const std::size_t classes = header.size() - 1;
    std::vector<ScoredSample> out;
    out.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [no, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != classes + 1) fail_at(origin, no, fmt::format("expected {} fields", classes + 1));
        ScoredSample s;
        s.true_state = static_cast<StateId>(to_uint(f[0], origin, no));
        s.scores.reserve(classes);
        for (std::size_t c = 1; c < f.size(); ++c) s.scores.push_back(to_double(f[c], origin, no));
        try {
            check_sample(s, classes);
        } catch (const InputError& e) {
            fail_at(origin, no, e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_confusion_csv(const ConfusionFile& c, const std::string& manifest)
{
    std::string body = fmt::format("# meta kind={} alpha={}\nactual_state,set_hex,count\n", c.kind,
                                   c.alpha ? fmt_double(*c.alpha) : std::string("-"));
    for (const auto& [key, count] : c.confusion.counts) {
        body += fmt::format("{},{},{}\n", key.first, key.second.to_hex(), count);
    }
    return with_manifest(manifest, body);
}

ConfusionFile parse_confusion_csv(const std::string& text, const std::string& origin)
{
    ConfusionFile out;
    const MetaMap meta = read_meta(text);
    if (auto it = meta.find("kind"); it != meta.end()) out.kind = it->second;
    if (out.kind != "conformal" && out.kind != "point") {
        throw InputError(fmt::format("{}: unknown confusion kind '{}'", origin, out.kind));
    }
    if (auto it = meta.find("alpha"); it != meta.end() && it->second != "-") {
        out.alpha = to_double(it->second, origin, 0);
    }
    const auto lines = data_lines(text);
    expect_header(lines, "actual_state,set_hex,count", origin);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [no, line] = lines[i];
        const auto f = split(line, ',');
        if (f.size() != 3) fail_at(origin, no, "expected 3 fields");
        StateSet set;
        try {
            set = StateSet::from_hex(std::string(trim(f[1])));
        } catch (const std::invalid_argument& e) {
            fail_at(origin, no, e.what());
        }
        if (set.empty()) fail_at(origin, no, "empty prediction set");
        out.confusion.add(static_cast<StateId>(to_uint(f[0], origin, no)), set, to_uint(f[2], origin, no));
    }
    return out;
}

std::string format_coverage(const CoverageReport& r, const ConformalModel& cm, const std::string& manifest)
{
    std::string body = fmt::format("alpha={}\nsamples={}\ncoverage={:.17g}\nmean_set_size={:.17g}\n",
                                   fmt_double(cm.alpha), r.samples, r.coverage, r.mean_set_size);
    for (const auto& [size, count] : r.size_histogram) body += fmt::format("size_{}={}\n", size, count);
    return with_manifest(manifest, body);
}

std::string format_abstract_model(const AbstractModel& am, const std::string& manifest)
{
    std::vector<std::string> header;
    if (!manifest.empty()) header.push_back(manifest);
    header.push_back(fmt::format("meta variant={} alpha={} lambda={} lookahead={} baseline={}", to_string(am.variant),
                                 am.alpha ? fmt_double(*am.alpha) : std::string("-"), fmt_double(am.lambda),
                                 am.lookahead, am.baseline ? 1 : 0));
    return emit_model(am.mdp, header);
}

AbstractMeta parse_abstract_meta(const std::string& text)
{
    const MetaMap meta = read_meta(text, "//");
    AbstractMeta out;
    if (auto it = meta.find("variant"); it != meta.end()) out.variant = it->second;
    auto num = [&](const char* key) -> std::optional<double> {
        auto it = meta.find(key);
        if (it == meta.end() || it->second == "-") return std::nullopt;
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw InputError(fmt::format("bad metadata {}={}", key, it->second));
        }
    };
    out.alpha = num("alpha");
    out.lambda = num("lambda");
    if (auto it = meta.find("baseline"); it != meta.end()) out.baseline = it->second == "1";
    return out;
}

std::string results_header()
{
    return "variant,alpha,lambda,horizon,p_fail,p_stuck,p_success,wall_ms";
}

std::string format_result_row(const ResultRow& r)
{
    auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    return fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{}", r.variant, opt(r.alpha), opt(r.lambda),
                       r.result.horizon, r.result.p_fail, r.result.p_stuck, r.result.p_success,
                       fmt::format("{:.3f}", r.wall_ms));
}

std::string format_results_csv(const std::vector<ResultRow>& rows, const std::string& manifest)
{
    std::string body = results_header() + "\n";
    for (const auto& r : rows) body += format_result_row(r) + "\n";
    return with_manifest(manifest, body);
}

std::string format_sim_summary(const SimSummary& s, const std::string& manifest)
{
    return with_manifest(
        manifest,
        fmt::format("policy,alpha,lambda,horizon,episodes,p_fail,p_stuck,p_success,se_fail,se_stuck,se_success,"
                    "local_safety_fraction\n{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                    to_string(s.policy), fmt_double(s.alpha), fmt_double(s.lambda), s.horizon, s.episodes, s.p_fail,
                    s.p_stuck, s.p_success, s.se_fail, s.se_stuck, s.se_success, s.local_safety_fraction));
}

std::string format_episode_logs(const std::vector<EpisodeLog>& logs, const std::string& manifest)
{
    std::string body = "episode,step,actual_state,set_hex,allowed,chosen,sigma,outcome\n";
    for (std::size_t e = 0; e < logs.size(); ++e) {
        const auto& log = logs[e];
        for (std::size_t i = 0; i < log.records.size(); ++i) {
            const auto& r = log.records[i];
            std::string allowed;
            for (ActionId a : r.allowed) allowed += (allowed.empty() ? "" : " ") + std::to_string(a);
            body += fmt::format("{},{},{},{},{},{},{:.17g},{}\n", e, i, r.actual, r.predicted.to_hex(), allowed,
                                r.chosen, r.sigma, i + 1 == log.records.size() ? to_string(log.outcome) : "");
        }
        if (log.records.empty()) body += fmt::format("{},,,,,,,{}\n", e, to_string(log.outcome));
    }
    return with_manifest(manifest, body);
}

std::string format_report(const std::vector<ReportLine>& lines, const std::string& manifest)
{
    std::string body;
    for (const auto& l : lines) {
        body += fmt::format("name={} value={:.17g} bound={:.17g} {}\n", l.name, l.value, l.bound,
                            l.pass ? "pass" : "fail");
    }
    return with_manifest(manifest, body);
}

std::string format_sweep_csv(const Theorem1Sweep& sweep, const std::string& manifest)
{
    std::string body = "lambda,n,n_prime,max_unsafe,bound,pass\n";
    for (const auto& r : sweep.rows) {
        body += fmt::format("{},{},{},{:.17g},{:.17g},{}\n", fmt_double(r.lambda), r.lookahead, r.horizon,
                            r.max_unsafe, r.bound, r.pass ? 1 : 0);
    }
    return with_manifest(manifest, body);
}

std::vector<std::size_t> parse_horizons(const std::string& spec)
{
    auto num = [&](std::string_view s) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
            throw InputError(fmt::format("bad horizon range '{}' (expected lo..hi)", spec));
        }
        return v;
    };
    const auto dots = spec.find("..");
    const std::size_t lo = num(std::string_view(spec).substr(0, dots));
    const std::size_t hi = dots == std::string::npos ? lo : num(std::string_view(spec).substr(dots + 2));
    if (lo > hi) throw InputError(fmt::format("empty horizon range '{}'", spec));
    if (hi > 100000) throw ScaleLimitError(fmt::format("horizon {} exceeds the limit of 100000", hi));
    std::vector<std::size_t> out;
    for (std::size_t h = lo; h <= hi; ++h) out.push_back(h);
    return out;
}

} // namespace cshield
