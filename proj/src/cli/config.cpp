#include <cstdio>
#include <fstream>
#include <set>

#include "hawkes/cli.hpp"
#include "hawkes/errors.hpp"

namespace hawkes::cli {

namespace {

// Walks one JSON object, tracking which keys were consumed.
class Section {
public:
    Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ValidationError("config: " + where_ + " must be an object");
    }

    ~Section() = default;
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    const Json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    [[nodiscard]] std::string name(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_number()) throw ValidationError("config: " + name(key) + " must be a number");
        return v.get<double>();
    }

    // Documents built in code store 41 as a signed integer.
    static bool natural(const Json& v) {
        return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!natural(v)) throw ValidationError("config: " + name(key) + " must be a non-negative integer");
        return v.get<std::size_t>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!natural(v)) throw ValidationError("config: " + name(key) + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) throw ValidationError("config: " + name(key) + " must be true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_string()) throw ValidationError("config: " + name(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        if (!has(key)) return {};
        const auto& v = at(key);
        if (!v.is_array()) throw ValidationError("config: " + name(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ValidationError("config: " + name(key) + " must be an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    // Rejects keys nobody asked for.
    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ValidationError("config: unknown key " + name(key));
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

KernelSpec kernel_from_json(const Json& j, const std::string& where) {
    Section s(j, where);
    const auto family_name = s.text("family", "exponential");
    Family family;
    try {
        family = family_from_string(family_name);
    } catch (const ArgumentError&) {
        throw ValidationError("config: " + s.name("family") + " has unknown family '" + family_name + "'");
    }
    const std::size_t bases = s.count("bases", 1);
    if (bases == 0) throw ValidationError("config: " + s.name("bases") + " must be at least 1");
    auto spec = KernelSpec::make(family, bases, s.flag("weights_only", false));
    if (s.has("frozen")) {
        const auto& f = s.at("frozen");
        if (!f.is_array() || f.size() != spec.size())
            throw ValidationError("config: " + s.name("frozen") + " needs " + std::to_string(spec.size()) + " flags");
        for (std::size_t p = 0; p < spec.size(); ++p) {
            if (!f[p].is_boolean()) throw ValidationError("config: " + s.name("frozen") + " holds non-boolean values");
            spec.frozen[p] = f[p].get<bool>();
        }
    }
    s.finish();
    return spec;
}

SolverConfig solver_from_json(const Json& j) {
    SolverConfig c;
    Section s(j, "solver");
    c.iterations = s.count("iterations", c.iterations);
    c.adam.learning_rate = s.number("learning_rate", c.adam.learning_rate);
    c.adam.halving_period = s.count("halving_period", c.adam.halving_period);
    c.adam.first_decay = s.number("first_decay", c.adam.first_decay);
    c.adam.second_decay = s.number("second_decay", c.adam.second_decay);
    c.adam.epsilon = s.number("epsilon", c.adam.epsilon);
    c.projection_floor = s.number("projection_floor", c.projection_floor);
    c.early_stop = s.flag("early_stop", c.early_stop);
    c.stop_weight = s.number("stop_weight", c.stop_weight);
    c.stop_tolerance = s.number("stop_tolerance", c.stop_tolerance);
    c.stop_patience = s.count("stop_patience", c.stop_patience);
    c.divergence_bound = s.number("divergence_bound", c.divergence_bound);
    c.seed = s.seed("seed", c.seed);
    c.threads = s.count("threads", c.threads);
    s.finish();
    if (!(c.adam.learning_rate > 0.0)) throw ValidationError("config: solver.learning_rate must be positive");
    for (double r : {c.adam.first_decay, c.adam.second_decay, c.stop_weight})
        if (!(r >= 0.0 && r < 1.0)) throw ValidationError("config: solver decay weights must lie in [0, 1)");
    if (!(c.projection_floor > 0.0)) throw ValidationError("config: solver.projection_floor must be positive");
    if (c.threads == 0) throw ValidationError("config: solver.threads must be at least 1");
    return c;
}

StrataConfig strata_from_json(const Json& j) {
    StrataConfig c;
    Section s(j, "strata");
    c.single_budget = s.count("single_budget", c.single_budget);
    c.single_tail_cap = s.count("single_tail_cap", c.single_tail_cap);
    c.single_final_gap = s.count("single_final_gap", c.single_final_gap);
    c.double_budget = s.count("double_budget", c.double_budget);
    c.lag_cutoff = s.count("lag_cutoff", c.lag_cutoff);
    c.lag_groups = s.count("lag_groups", c.lag_groups);
    c.rounds = s.count("rounds", c.rounds);
    c.ema_weight = s.number("ema_weight", c.ema_weight);
    c.remainder_strata = s.count("remainder_strata", c.remainder_strata);
    c.remainder_draws = s.count("remainder_draws", c.remainder_draws);
    c.exhaustive = s.flag("exhaustive", c.exhaustive);
    s.finish();
    if (c.rounds == 0 || c.lag_groups == 0) throw ValidationError("config: strata rounds and lag_groups must be positive");
    if (!(c.ema_weight >= 0.0 && c.ema_weight <= 1.0)) throw ValidationError("config: strata.ema_weight outside [0, 1]");
    if (c.double_budget < c.lag_groups * c.rounds)
        throw ValidationError("config: strata.double_budget must cover one draw per lag group and round");
    return c;
}

}  // namespace

ModelBlock model_from_json(const Json& j, const std::string& where) {
    Section s(j, where);
    const std::size_t d = s.count("dimension", 1);
    if (d == 0) throw ValidationError("config: " + s.name("dimension") + " must be at least 1");
    std::vector<KernelSpec> kernels;
    if (s.has("kernels")) {
        const auto& list = s.at("kernels");
        if (!list.is_array() || list.size() != d * d)
            throw ValidationError("config: " + s.name("kernels") + " needs dimension^2 = " + std::to_string(d * d) +
                                  " entries");
        for (std::size_t t = 0; t < list.size(); ++t)
            kernels.push_back(kernel_from_json(list[t], s.name("kernels") + "[" + std::to_string(t) + "]"));
    } else {
        const auto spec = s.has("kernel") ? kernel_from_json(s.at("kernel"), s.name("kernel"))
                                          : KernelSpec::make(Family::exponential);
        kernels.assign(d * d, spec);
    }
    ModelBlock b{ModelSpec(d, std::move(kernels)), s.numbers("parameters")};
    s.finish();
    if (!b.theta.empty()) {
        if (b.theta.size() != b.spec.size())
            throw ValidationError("config: " + s.name("parameters") + " needs " + std::to_string(b.spec.size()) +
                                  " values, got " + std::to_string(b.theta.size()));
        try {
            b.spec.validate(b.theta);
        } catch (const ArgumentError& e) {
            throw ValidationError("config: " + s.name("parameters") + ": " + e.what());
        }
    }
    return b;
}

Json model_to_json(const ModelBlock& block) {
    const std::size_t d = block.spec.dimension();
    Json j;
    j["dimension"] = d;
    j["kernels"] = Json::array();
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) {
            const auto& spec = block.spec.kernel(k, i);
            Json e;
            e["family"] = std::string(to_string(spec.family));
            e["bases"] = spec.bases;
            e["frozen"] = Json::array();
            for (std::size_t p = 0; p < spec.size(); ++p) e["frozen"].push_back(spec.is_frozen(p));
            j["kernels"].push_back(e);
        }
    j["parameters"] = block.theta;
    return j;
}

RunConfig parse_config(const Json& doc) {
    RunConfig c;
    Section s(doc, "");
    if (s.has("model")) c.model = model_from_json(s.at("model"), "model");
    else c.model = model_from_json(Json::object(), "model");
    if (s.has("solver")) c.solver = solver_from_json(s.at("solver"));
    if (s.has("strata")) c.solver.strata = strata_from_json(s.at("strata"));
    if (s.has("simulate")) {
        Section m(s.at("simulate"), "simulate");
        if (m.has("truth")) {
            c.simulate.truth = model_from_json(m.at("truth"), "simulate.truth");
            if (c.simulate.truth->theta.empty())
                throw ValidationError("config: simulate.truth.parameters are required");
        }
        c.simulate.horizon = m.number("horizon", c.simulate.horizon);
        c.simulate.paths = m.count("paths", c.simulate.paths);
        c.simulate.method = m.text("method", c.simulate.method);
        m.finish();
        if (!(c.simulate.horizon > 0.0)) throw ValidationError("config: simulate.horizon must be positive");
        if (c.simulate.method != "cluster" && c.simulate.method != "thinning")
            throw ValidationError("config: simulate.method must be 'cluster' or 'thinning'");
    }
    if (s.has("ingest")) {
        Section m(s.at("ingest"), "ingest");
        c.ingest.events = m.text("events", "");
        c.ingest.time_scale = m.number("time_scale", 1.0);
        if (m.has("horizon")) c.ingest.horizon = m.number("horizon", 0.0);
        m.finish();
        if (!(c.ingest.time_scale > 0.0)) throw ValidationError("config: ingest.time_scale must be positive");
        if (c.ingest.horizon && !(*c.ingest.horizon > 0.0))
            throw ValidationError("config: ingest.horizon must be positive");
    }
    if (s.has("sweep")) {
        Section m(s.at("sweep"), "sweep");
        c.sweep.horizons = m.numbers("horizons");
        c.sweep.paths = m.count("paths", c.sweep.paths);
        m.finish();
        for (std::size_t q = 0; q < c.sweep.horizons.size(); ++q)
            if (!(c.sweep.horizons[q] > 0.0) || (q > 0 && !(c.sweep.horizons[q] > c.sweep.horizons[q - 1])))
                throw ValidationError("config: sweep.horizons must be positive and increasing");
    }
    s.finish();
    if (c.simulate.truth && c.simulate.truth->spec.dimension() != c.model.spec.dimension())
        throw ValidationError("config: simulate.truth and model differ in dimension");
    return c;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config file " + file.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + file.string() + ": " + e.what());
    }
    return parse_config(doc);
}

Json to_json(const RunConfig& c) {
    Json j;
    j["model"] = model_to_json(c.model);
    const auto& s = c.solver;
    j["solver"] = {{"iterations", s.iterations},
                   {"learning_rate", s.adam.learning_rate},
                   {"halving_period", s.adam.halving_period},
                   {"first_decay", s.adam.first_decay},
                   {"second_decay", s.adam.second_decay},
                   {"epsilon", s.adam.epsilon},
                   {"projection_floor", s.projection_floor},
                   {"early_stop", s.early_stop},
                   {"stop_weight", s.stop_weight},
                   {"stop_tolerance", s.stop_tolerance},
                   {"stop_patience", s.stop_patience},
                   {"divergence_bound", s.divergence_bound},
                   {"seed", s.seed},
                   {"threads", s.threads}};
    const auto& q = s.strata;
    j["strata"] = {{"single_budget", q.single_budget},       {"single_tail_cap", q.single_tail_cap},
                   {"single_final_gap", q.single_final_gap}, {"double_budget", q.double_budget},
                   {"lag_cutoff", q.lag_cutoff},             {"lag_groups", q.lag_groups},
                   {"rounds", q.rounds},                     {"ema_weight", q.ema_weight},
                   {"remainder_strata", q.remainder_strata}, {"remainder_draws", q.remainder_draws},
                   {"exhaustive", q.exhaustive}};
    Json sim;
    if (c.simulate.truth) sim["truth"] = model_to_json(*c.simulate.truth);
    sim["horizon"] = c.simulate.horizon;
    sim["paths"] = c.simulate.paths;
    sim["method"] = c.simulate.method;
    j["simulate"] = sim;
    Json ing;
    ing["events"] = c.ingest.events;
    ing["time_scale"] = c.ingest.time_scale;
    if (c.ingest.horizon) ing["horizon"] = *c.ingest.horizon;
    j["ingest"] = ing;
    j["sweep"] = {{"horizons", c.sweep.horizons}, {"paths", c.sweep.paths}};
    return j;
}

std::string config_hash(const Json& effective) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : effective.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hawkes::cli
