#pragma once

// Experiment configuration: a line-based sectioned format.
//
//   # comment
//   [experiment]
//   kind = game
//   horizon = 2000
//   [environment]            or [environment.<label>] for several
//   kind = bernoulli
//   loss_means = 0.25, 0.5
//   [policy.<label>]
//   kind = hedge
//
// Unknown sections and keys, duplicate keys and malformed values are errors
// carrying the line number and a field path such as "policy.fast.eta".

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sulab/environments.hpp"
#include "sulab/errors.hpp"
#include "sulab/online_policies.hpp"

namespace sulab::lab {

class ConfigError : public ParseError {
public:
    using ParseError::ParseError;
};

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
};

struct ConfigSection {
    std::string name;   // "experiment", "environment", "policy", "parameters"
    std::string label;  // text after the first '.', may be empty
    std::size_t line = 0;
    std::map<std::string, ConfigEntry> entries;
    std::vector<std::string> order;

    std::string path() const { return label.empty() ? name : name + "." + label; }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline bool valid_ident(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    return true;
}

}  // namespace detail

inline std::vector<ConfigSection> parse_sections(std::istream& in) {
    std::vector<ConfigSection> out;
    std::set<std::string> seen;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view sv(raw);
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        const std::string line = detail::trim(sv);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
            const std::string head = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (!detail::valid_ident(head)) throw ConfigError("invalid section name '" + head + "'", lineno);
            ConfigSection s;
            const auto dot = head.find('.');
            s.name = head.substr(0, dot);
            if (dot != std::string::npos) s.label = head.substr(dot + 1);
            s.line = lineno;
            if (!seen.insert(head).second) throw ConfigError("duplicate section [" + head + "]", lineno);
            out.push_back(std::move(s));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
        if (out.empty()) throw ConfigError("key outside of any section", lineno);
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (!detail::valid_ident(key)) throw ConfigError("invalid key '" + key + "'", lineno);
        auto& sec = out.back();
        if (sec.entries.count(key))
            throw ConfigError("duplicate key '" + sec.path() + "." + key + "' (first set on line " +
                                  std::to_string(sec.entries[key].line) + ")",
                              lineno);
        sec.entries[key] = {value, lineno};
        sec.order.push_back(key);
    }
    return out;
}

// Typed, strict access to one section.
class SectionReader {
public:
    SectionReader(const ConfigSection& s, std::set<std::string> allowed) : s_(s), allowed_(std::move(allowed)) {
        for (const auto& k : s_.order)
            if (!allowed_.count(k)) throw ConfigError("unknown key '" + s_.path() + "." + k + "'", s_.entries.at(k).line);
    }

    bool has(const std::string& k) const { return s_.entries.count(k) != 0; }

    std::string str(const std::string& k, std::optional<std::string> def = std::nullopt) const {
        auto it = s_.entries.find(k);
        if (it == s_.entries.end()) {
            if (def) return *def;
            throw ConfigError("missing key '" + s_.path() + "." + k + "'", s_.line);
        }
        if (it->second.value.empty()) throw ConfigError("empty value for '" + path(k) + "'", it->second.line);
        return it->second.value;
    }

    double real(const std::string& k, std::optional<double> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ConfigError("missing key '" + path(k) + "'", s_.line);
        }
        return parse_real(s_.entries.at(k).value, k, s_.entries.at(k).line);
    }

    std::uint64_t integer(const std::string& k, std::optional<std::uint64_t> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ConfigError("missing key '" + path(k) + "'", s_.line);
        }
        return parse_uint(s_.entries.at(k).value, k, s_.entries.at(k).line);
    }

    std::vector<double> reals(const std::string& k, std::optional<std::vector<double>> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ConfigError("missing key '" + path(k) + "'", s_.line);
        }
        std::vector<double> out;
        for (const auto& tok : split(k)) out.push_back(parse_real(tok, k, s_.entries.at(k).line));
        return out;
    }

    std::vector<std::uint64_t> integers(const std::string& k,
                                        std::optional<std::vector<std::uint64_t>> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ConfigError("missing key '" + path(k) + "'", s_.line);
        }
        std::vector<std::uint64_t> out;
        for (const auto& tok : split(k)) out.push_back(parse_uint(tok, k, s_.entries.at(k).line));
        return out;
    }

    std::vector<std::string> words(const std::string& k) const {
        if (!has(k)) throw ConfigError("missing key '" + path(k) + "'", s_.line);
        return split(k);
    }

    std::size_t line(const std::string& k) const { return has(k) ? s_.entries.at(k).line : s_.line; }
    std::string path(const std::string& k) const { return s_.path() + "." + k; }
    const ConfigSection& section() const noexcept { return s_; }

    [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
        throw ConfigError("'" + path(k) + "': " + msg, line(k));
    }

private:
    std::vector<std::string> split(const std::string& k) const {
        std::vector<std::string> out;
        std::stringstream ss(s_.entries.at(k).value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            auto t = detail::trim(tok);
            if (t.empty()) throw ConfigError("empty list element in '" + path(k) + "'", line(k));
            out.push_back(std::move(t));
        }
        if (out.empty()) throw ConfigError("empty list for '" + path(k) + "'", line(k));
        return out;
    }

    double parse_real(const std::string& v, const std::string& k, std::size_t ln) const {
        double x = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || p != v.data() + v.size() || !(x == x))
            throw ConfigError("'" + path(k) + "' expects a real number, got '" + v + "'", ln);
        return x;
    }

    std::uint64_t parse_uint(const std::string& v, const std::string& k, std::size_t ln) const {
        std::uint64_t x = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ConfigError("'" + path(k) + "' expects a nonnegative integer, got '" + v + "'", ln);
        return x;
    }

    const ConfigSection& s_;
    std::set<std::string> allowed_;
};

struct EnvConfig {
    std::string label;
    std::string kind;                 // bernoulli | binary_sequence | ftl_breaker | ucb_breaker | expert_advice
    std::vector<double> loss_means;   // bernoulli, expert_advice
    double bias = 0.5;                // binary_sequence
    std::size_t arms = 2;             // ucb_breaker
    UcbVariant breaker_variant = UcbVariant::improved;
    std::vector<ExpertSpec> experts;  // expert_advice
};

struct PolicyConfig {
    std::string label;
    std::string kind;  // hedge | ftl | exp3 | exp3_rewards | exp4 | ucb1 | epsilon_first | uniform | fixed
    RateSchedule rate{RateKind::anytime, 1.0};
    std::optional<double> eta;  // fixed-rate value; defaults per policy
    UcbVariant ucb = UcbVariant::improved;
    double gap = 0.25;           // epsilon_first
    std::size_t arm = 0;         // fixed
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string kind = "game";  // game | bounds_compare | split_kl_compare | unexpected_bernstein_compare
                                // | pacbayes_aggregate | recursive_pb | offline_replay
    std::size_t horizon = 1000;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    double delta = 0.05;
    std::string output = "out";
    std::string metric = "pseudo_regret";  // game: pseudo_regret | regret | expert_regret
    std::string x_label = "t";
    std::string y_label;
    std::vector<EnvConfig> environments;
    std::vector<PolicyConfig> policies;
    // [parameters] for the non-game kinds, validated by the runner
    ConfigSection parameters{"parameters", "", 0, {}, {}};
};

namespace detail {

inline UcbVariant parse_ucb_variant(const SectionReader& r, const std::string& k) {
    const auto v = r.str(k, "improved");
    if (v == "original") return UcbVariant::original;
    if (v == "improved") return UcbVariant::improved;
    r.fail(k, "expected 'original' or 'improved'");
}

inline EnvConfig parse_env(const ConfigSection& s) {
    SectionReader r(s, {"kind", "loss_means", "reward_means", "bias", "arms", "variant", "experts"});
    EnvConfig e;
    e.label = s.label;
    e.kind = r.str("kind");
    if (e.kind == "bernoulli" || e.kind == "expert_advice") {
        if (r.has("loss_means") == r.has("reward_means"))
            throw ConfigError("'" + s.path() + "' needs exactly one of loss_means or reward_means", s.line);
        if (r.has("loss_means")) {
            e.loss_means = r.reals("loss_means");
        } else {
            for (double m : r.reals("reward_means")) e.loss_means.push_back(1.0 - m);
        }
        for (double m : e.loss_means)
            if (!(m >= 0.0 && m <= 1.0))
                r.fail(r.has("loss_means") ? "loss_means" : "reward_means", "means must lie in [0,1]");
        if (e.kind == "expert_advice") {
            for (const auto& w : r.words("experts")) {
                ExpertSpec x;
                if (w == "uniform") x.kind = ExpertSpec::Kind::uniform;
                else if (w == "random") x.kind = ExpertSpec::Kind::random;
                else if (w.rfind("constant:", 0) == 0) {
                    x.kind = ExpertSpec::Kind::constant;
                    const auto num = w.substr(9);
                    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), x.arm);
                    if (ec != std::errc() || p != num.data() + num.size()) r.fail("experts", "bad expert '" + w + "'");
                    if (x.arm >= e.loss_means.size()) r.fail("experts", "expert arm out of range");
                } else {
                    r.fail("experts", "unknown expert '" + w + "'");
                }
                e.experts.push_back(x);
            }
        } else if (r.has("experts")) {
            r.fail("experts", "only valid for kind = expert_advice");
        }
    } else if (e.kind == "binary_sequence") {
        e.bias = r.real("bias");
        if (!(e.bias >= 0.0 && e.bias <= 1.0)) r.fail("bias", "must lie in [0,1]");
    } else if (e.kind == "ftl_breaker") {
    } else if (e.kind == "ucb_breaker") {
        e.arms = r.integer("arms", 2);
        if (e.arms < 2) r.fail("arms", "must be >= 2");
        e.breaker_variant = parse_ucb_variant(r, "variant");
    } else {
        r.fail("kind", "unknown environment kind '" + e.kind + "'");
    }
    return e;
}

inline PolicyConfig parse_policy(const ConfigSection& s) {
    SectionReader r(s, {"kind", "rate", "eta", "coefficient", "variant", "gap", "arm"});
    PolicyConfig p;
    p.label = s.label.empty() ? r.str("kind") : s.label;
    p.kind = r.str("kind");
    static const std::set<std::string> kinds = {"hedge", "ftl", "exp3", "exp3_rewards", "exp4",
                                                "ucb1", "epsilon_first", "uniform", "fixed"};
    if (!kinds.count(p.kind)) r.fail("kind", "unknown policy kind '" + p.kind + "'");
    const auto rate = r.str("rate", "anytime");
    if (rate == "fixed") p.rate.kind = RateKind::fixed;
    else if (rate == "anytime") p.rate.kind = RateKind::anytime;
    else if (rate == "doubling") p.rate.kind = RateKind::doubling;
    else r.fail("rate", "expected fixed, anytime or doubling");
    p.rate.value = r.real("coefficient", 1.0);
    if (!(p.rate.value > 0.0)) r.fail("coefficient", "must be positive");
    if (r.has("eta")) {
        p.eta = r.real("eta");
        if (!(*p.eta > 0.0)) r.fail("eta", "must be positive");
    }
    p.ucb = parse_ucb_variant(r, "variant");
    p.gap = r.real("gap", 0.25);
    p.arm = r.integer("arm", 0);
    return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
    const auto sections = parse_sections(in);
    ExperimentConfig c;
    bool have_experiment = false;
    for (const auto& s : sections) {
        if (s.name == "experiment") {
            if (!s.label.empty()) throw ConfigError("[experiment] takes no label", s.line);
            have_experiment = true;
            SectionReader r(s, {"name", "kind", "horizon", "repetitions", "seed", "delta", "output", "metric",
                                "x_label", "y_label"});
            c.name = r.str("name", c.name);
            c.kind = r.str("kind", c.kind);
            static const std::set<std::string> kinds = {"game", "bounds_compare", "split_kl_compare",
                                                        "unexpected_bernstein_compare", "pacbayes_aggregate",
                                                        "recursive_pb", "offline_replay"};
            if (!kinds.count(c.kind)) r.fail("kind", "unknown experiment kind '" + c.kind + "'");
            c.horizon = r.integer("horizon", c.horizon);
            if (c.horizon < 1) r.fail("horizon", "must be >= 1");
            c.repetitions = r.integer("repetitions", c.repetitions);
            if (c.repetitions < 1) r.fail("repetitions", "must be >= 1");
            c.seed = r.integer("seed", c.seed);
            c.delta = r.real("delta", c.delta);
            if (!(c.delta > 0.0 && c.delta < 1.0)) r.fail("delta", "must lie in (0,1)");
            c.output = r.str("output", c.output);
            c.metric = r.str("metric", c.metric);
            if (c.metric != "pseudo_regret" && c.metric != "regret" && c.metric != "expert_regret")
                r.fail("metric", "expected pseudo_regret, regret or expert_regret");
            c.x_label = r.str("x_label", c.x_label);
            c.y_label = r.str("y_label", c.metric);
        } else if (s.name == "environment") {
            c.environments.push_back(detail::parse_env(s));
        } else if (s.name == "policy") {
            c.policies.push_back(detail::parse_policy(s));
        } else if (s.name == "parameters") {
            if (!s.label.empty()) throw ConfigError("[parameters] takes no label", s.line);
            c.parameters = s;
        } else {
            throw ConfigError("unknown section [" + s.path() + "]", s.line);
        }
    }
    if (!have_experiment) throw ConfigError("missing [experiment] section");
    if (c.y_label.empty()) c.y_label = c.metric;
    if (c.kind == "game") {
        if (c.environments.empty()) throw ConfigError("game experiments need an [environment] section");
        if (c.policies.empty()) throw ConfigError("game experiments need at least one [policy.<label>] section");
    }
    std::set<std::string> labels;
    for (const auto& p : c.policies)
        if (!labels.insert(p.label).second) throw ConfigError("duplicate policy label '" + p.label + "'");
    return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace sulab::lab
