#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "hawkes/cli.hpp"
#include "hawkes/diagnostics.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/simulate.hpp"

namespace hawkes::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t simulation_stream = 0x73696dULL;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir{"."};
    std::string events;
    std::optional<std::size_t> threads;
    std::string params;
};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Everything a subcommand needs: resolved config, provenance header, log streams.
struct Context {
    RunConfig config;
    Json effective;
    std::string hash;
    fs::path out;
    std::ostream& log;
    std::ostream& warn;

    [[nodiscard]] std::uint64_t seed() const { return config.solver.seed; }

    [[nodiscard]] std::vector<std::string> header() const {
        return {"config_hash=" + hash, "seed=" + std::to_string(seed())};
    }

    [[nodiscard]] std::ofstream csv(const std::string& name) const {
        std::ofstream f(out / name);
        if (!f) throw ValidationError("cannot write " + (out / name).string());
        for (const auto& h : header()) f << "# " << h << '\n';
        return f;
    }

    void json(const std::string& name, Json body) const {
        Json doc;
        doc["config_hash"] = hash;
        doc["seed"] = seed();
        for (auto& [k, v] : body.items()) doc[k] = v;
        doc["config"] = effective;
        std::ofstream f(out / name);
        if (!f) throw ValidationError("cannot write " + (out / name).string());
        f << doc.dump(2) << '\n';
    }
};

Context make_context(const Options& o, std::ostream& log, std::ostream& warn) {
    RunConfig c = o.config.empty() ? parse_config(Json::object()) : load_config(o.config);
    if (o.seed) c.solver.seed = *o.seed;
    if (o.threads) {
        if (*o.threads == 0) throw ValidationError("--threads must be at least 1");
        c.solver.threads = *o.threads;
    }
    if (!o.events.empty()) c.ingest.events = o.events;
    auto effective = to_json(c);
    auto hash = config_hash(effective);
    fs::create_directories(o.out_dir);
    return {std::move(c), std::move(effective), std::move(hash), fs::path(o.out_dir), log, warn};
}

std::vector<std::string> parameter_names(const ModelSpec& model, std::size_t k) {
    std::vector<std::string> names{"mu_" + std::to_string(k + 1)};
    for (std::size_t i = 0; i < model.dimension(); ++i) {
        const auto& spec = model.kernel(k, i);
        const std::size_t per = basis_size(spec.family);
        for (std::size_t p = 0; p < spec.size(); ++p)
            names.push_back("phi_" + std::to_string(k + 1) + "_" + std::to_string(i + 1) + "_" +
                            std::string(to_string(spec.role(p))) + "_" + std::to_string(p / per));
    }
    return names;
}

EventPath simulate_one(const Context& ctx, double horizon, std::uint64_t index) {
    const auto& truth = ctx.config.simulate.truth;
    if (!truth) throw ValidationError("config: simulate.truth is required to simulate events");
    auto rng = CounterRng::stream(ctx.seed(), {simulation_stream, index});
    return ctx.config.simulate.method == "thinning" ? simulate_thinning(truth->spec, truth->theta, horizon, rng)
                                                    : simulate_cluster(truth->spec, truth->theta, horizon, rng);
}

EventPath load_or_simulate(const Context& ctx, bool fitting) {
    const auto& c = ctx.config;
    if (!c.ingest.events.empty()) {
        IngestOptions o;
        o.dimension = c.model.spec.dimension();
        o.time_scale = c.ingest.time_scale;
        o.horizon = c.ingest.horizon;
        o.require_nontrivial = fitting;
        auto r = read_events(fs::path(c.ingest.events), o);
        for (const auto& w : r.warnings) ctx.warn << "warning: " << w << '\n';
        return std::move(r.path);
    }
    if (c.simulate.truth) return simulate_one(ctx, c.simulate.horizon, 0);
    throw ValidationError("no events: set ingest.events, pass --events or configure simulate.truth");
}

// Parameters from --params (a fit output) or the config's model.parameters.
std::vector<double> load_parameters(const Context& ctx, const std::string& params) {
    std::vector<double> theta;
    if (!params.empty()) {
        std::ifstream in(params);
        if (!in) throw ValidationError("cannot open parameter file " + params);
        Json doc;
        try {
            doc = Json::parse(in);
            theta = doc.at("theta").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("parameter file " + params + ": " + e.what());
        }
    } else {
        theta = ctx.config.model.theta;
    }
    if (theta.empty()) throw ValidationError("no parameters: pass --params or set model.parameters");
    if (theta.size() != ctx.config.model.spec.size())
        throw ValidationError("parameters do not match the model layout: expected " +
                              std::to_string(ctx.config.model.spec.size()) + " values, got " +
                              std::to_string(theta.size()));
    try {
        ctx.config.model.spec.validate(theta);
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("parameters: ") + e.what());
    }
    return theta;
}

Json metrics_json(const MetricReport& r) {
    return {{"l2_rel_err", r.l2_rel_err},
            {"wass_err", r.wass_err},
            {"background_sq", r.background_sq},
            {"background_abs", r.background_abs},
            {"kernel_l2_sq", r.kernel_l2_sq},
            {"kernel_transport", r.kernel_transport},
            {"kernel_mass_gap", r.kernel_mass_gap}};
}

MetricReport compare_to_truth(const Context& ctx, std::span<const double> theta) {
    const auto& truth = *ctx.config.simulate.truth;
    return compare_models(truth.spec, truth.theta, ctx.config.model.spec, theta, true);
}

void write_diagnostics(const Context& ctx, const EventPath& path, std::span<const double> theta) {
    const auto& model = ctx.config.model.spec;
    const auto r = residuals(path, model, theta);
    auto ks = ctx.csv("ks.csv");
    ks << "type,events,statistic,p_value,critical_99,passes\n";
    for (std::size_t k = 0; k < model.dimension(); ++k) {
        const auto& z = r.uniform[k];
        if (z.size() >= 10) {
            const auto t = ks_uniform(z);
            ks << k + 1 << ',' << z.size() << ',' << num(t.statistic) << ',' << num(t.p_value) << ','
               << num(t.critical_99) << ',' << (t.passes_99() ? 1 : 0) << '\n';
            ctx.log << "type " << k + 1 << ": KS statistic " << num(t.statistic) << ", p = " << num(t.p_value)
                    << (t.passes_99() ? " (passes at 1%)" : " (rejected at 1%)") << '\n';
        } else {
            ks << k + 1 << ',' << z.size() << ",nan,nan,nan,0\n";
        }
        const auto b = bridge_series(z);
        auto bf = ctx.csv("bridge_" + std::to_string(k + 1) + ".csv");
        bf << "index,position,bridge_value,band_lo,band_hi\n";
        for (std::size_t m = 0; m < b.value.size(); ++m)
            bf << m + 1 << ',' << num(b.position[m]) << ',' << num(b.value[m]) << ',' << num(-b.band) << ','
               << num(b.band) << '\n';
        const auto q = qq_series(r.increments[k]);
        auto qf = ctx.csv("qq_" + std::to_string(k + 1) + ".csv");
        qf << "theoretical_quantile,empirical_quantile\n";
        for (std::size_t m = 0; m < q.empirical.size(); ++m)
            qf << num(q.theoretical[m]) << ',' << num(q.empirical[m]) << '\n';
    }
}

Json fitted_json(const ModelSpec& model, const FitRecord& record) {
    Json rows = Json::array();
    for (std::size_t k = 0; k < model.dimension(); ++k) {
        const auto row = model.row(record.theta, k);
        const auto names = parameter_names(model, k);
        Json kernels = Json::array();
        for (std::size_t i = 0; i < model.dimension(); ++i) {
            Json params;
            const std::size_t off = model.kernel_offset(k, i);
            for (std::size_t p = 0; p < model.kernel(k, i).size(); ++p) params[names[off + p]] = row[off + p];
            kernels.push_back({{"source", i + 1},
                               {"family", std::string(to_string(model.kernel(k, i).family))},
                               {"l1_norm", l1_norm(model.view(row, k, i))},
                               {"parameters", params}});
        }
        rows.push_back({{"type", k + 1},
                        {"background", row[0]},
                        {"iterations", record.rows[k].iterations()},
                        {"stopped_early", record.rows[k].stopped_early},
                        {"kernels", kernels}});
    }
    return {{"dimension", model.dimension()}, {"theta", record.theta}, {"rows", rows}};
}

std::vector<double> starting_point(const Context& ctx, const EventPath& path) {
    const auto& m = ctx.config.model;
    return initial_theta(path, m.spec, ctx.seed(), m.theta);
}

int cmd_simulate(const Context& ctx) {
    const auto& c = ctx.config;
    if (!c.simulate.truth) throw ValidationError("config: simulate.truth is required");
    for (std::size_t p = 0; p < c.simulate.paths; ++p) {
        const auto path = simulate_one(ctx, c.simulate.horizon, p);
        const auto name = c.simulate.paths == 1 ? std::string("events.csv") : "events_" + std::to_string(p + 1) + ".csv";
        std::ofstream f(ctx.out / name);
        if (!f) throw ValidationError("cannot write " + (ctx.out / name).string());
        write_events(f, path, ctx.header());
        ctx.log << name << ": " << path.total_count() << " events on (0, " << num(path.horizon()) << "]\n";
    }
    return exit_ok;
}

int cmd_fit(const Context& ctx) {
    const auto& model = ctx.config.model.spec;
    const auto path = load_or_simulate(ctx, true);
    const auto start = starting_point(ctx, path);
    const auto record = fit(path, model, ctx.config.solver, start);

    for (std::size_t k = 0; k < model.dimension(); ++k) {
        const auto& r = record.rows[k];
        const auto names = parameter_names(model, k);
        auto f = ctx.csv("trajectory_" + std::to_string(k + 1) + ".csv");
        f << "iteration";
        for (const auto& n : names) f << ',' << n;
        for (const auto& n : names) f << ",grad_" << n;
        f << '\n';
        for (std::size_t t = 0; t < r.theta.size(); ++t) {
            f << t;
            for (double x : r.theta[t]) f << ',' << num(x);
            for (double g : r.gradient[t]) f << ',' << num(g);
            f << '\n';
        }
        // Wall times vary between runs, so they live apart from the reproducible outputs.
        auto w = ctx.csv("timing_" + std::to_string(k + 1) + ".csv");
        w << "iteration,seconds\n";
        for (std::size_t t = 0; t < r.seconds.size(); ++t) w << t << ',' << num(r.seconds[t]) << '\n';
    }

    auto body = fitted_json(model, record);
    body["events"] = path.total_count();
    body["horizon"] = path.horizon();
    if (ctx.config.simulate.truth) {
        const auto m = compare_to_truth(ctx, record.theta);
        body["metrics"] = metrics_json(m);
        ctx.log << "L2RelErr " << num(m.l2_rel_err) << ", WassErr " << num(m.wass_err) << '\n';
    }
    ctx.json("params.json", body);
    write_diagnostics(ctx, path, record.theta);
    ctx.log << "fitted " << model.size() << " parameters on " << path.total_count() << " events\n";
    return exit_ok;
}

int cmd_diagnose(const Context& ctx, const std::string& params) {
    const auto theta = load_parameters(ctx, params);
    const auto path = load_or_simulate(ctx, false);
    write_diagnostics(ctx, path, theta);
    return exit_ok;
}

int cmd_metrics(const Context& ctx, const std::string& params) {
    if (!ctx.config.simulate.truth) throw ValidationError("config: simulate.truth is required for metrics");
    const auto theta = load_parameters(ctx, params);
    const auto m = compare_to_truth(ctx, theta);
    ctx.json("metrics.json", {{"metrics", metrics_json(m)}});
    ctx.log << "L2RelErr " << num(m.l2_rel_err) << ", WassErr " << num(m.wass_err) << '\n';
    return exit_ok;
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

int cmd_sweep(const Context& ctx) {
    const auto& c = ctx.config;
    if (!c.simulate.truth) throw ValidationError("config: simulate.truth is required for a sweep");
    if (c.sweep.horizons.empty()) throw ValidationError("config: sweep.horizons is empty");
    if (c.sweep.paths == 0) throw ValidationError("config: sweep.paths must be at least 1");
    const auto& H = c.sweep.horizons;
    const std::size_t P = c.sweep.paths, Q = H.size();

    std::vector<EventPath> paths;
    for (std::size_t p = 0; p < P; ++p) paths.push_back(simulate_one(ctx, H.back(), p));

    struct Cell {
        std::size_t events{0};
        double l2{0.0}, wass{0.0};
    };
    std::vector<Cell> cells(P * Q);
    std::vector<std::exception_ptr> failures(P * Q);
    std::atomic<std::size_t> next{0};
    SolverConfig solver = c.solver;
    solver.threads = 1;
    auto worker = [&] {
        for (std::size_t n = next++; n < cells.size(); n = next++) {
            try {
                const auto path = paths[n / Q].truncated(H[n % Q]);
                const auto start = starting_point(ctx, path);
                const auto record = fit(path, c.model.spec, solver, start);
                const auto m = compare_to_truth(ctx, record.theta);
                cells[n] = {path.total_count(), m.l2_rel_err, m.wass_err};
            } catch (...) {
                failures[n] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(c.solver.threads, 1, cells.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    auto raw = ctx.csv("sweep_cells.csv");
    raw << "path,horizon,events,l2_rel_err,wass_err\n";
    for (std::size_t n = 0; n < cells.size(); ++n)
        raw << n / Q + 1 << ',' << num(H[n % Q]) << ',' << cells[n].events << ',' << num(cells[n].l2) << ','
            << num(cells[n].wass) << '\n';

    auto agg = ctx.csv("sweep.csv");
    agg << "horizon,events,metric,mean,q25,q75\n";
    for (std::size_t q = 0; q < Q; ++q) {
        std::vector<double> l2, wass;
        double events = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            const auto& cell = cells[p * Q + q];
            l2.push_back(cell.l2);
            wass.push_back(cell.wass);
            events += static_cast<double>(cell.events);
        }
        events /= static_cast<double>(P);
        for (const auto& [name, v] : {std::pair{"l2_rel_err", &l2}, std::pair{"wass_err", &wass}}) {
            double mean = 0.0;
            for (double x : *v) mean += x;
            mean /= static_cast<double>(v->size());
            agg << num(H[q]) << ',' << num(events) << ',' << name << ',' << num(mean) << ',' << num(quantile(*v, 0.25))
                << ',' << num(quantile(*v, 0.75)) << '\n';
        }
        ctx.log << "horizon " << num(H[q]) << ": " << num(events) << " events on average\n";
    }
    return exit_ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Least-squares estimation of multivariate Hawkes processes"};
    app.require_subcommand(1);
    Options o;
    auto common = [&o](CLI::App* sub, bool with_params) {
        sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "override solver.seed");
        sub->add_option("--out-dir", o.out_dir, "directory for outputs (created if missing)");
        sub->add_option("--events", o.events, "event CSV, overrides ingest.events");
        sub->add_option("--threads", o.threads, "worker threads");
        if (with_params) sub->add_option("--params", o.params, "fitted parameters (params.json)");
    };
    auto* simulate = app.add_subcommand("simulate", "simulate event paths from simulate.truth");
    auto* fit_cmd = app.add_subcommand("fit", "fit the model to events");
    auto* diagnose = app.add_subcommand("diagnose", "residual diagnostics for given parameters");
    auto* metrics = app.add_subcommand("metrics", "error metrics against simulate.truth");
    auto* sweep = app.add_subcommand("sweep", "error curves over truncation horizons");
    common(simulate, false);
    common(fit_cmd, false);
    common(diagnose, true);
    common(metrics, true);
    common(sweep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_invalid;
    }

    try {
        const auto ctx = make_context(o, out, err);
        if (*simulate) return cmd_simulate(ctx);
        if (*fit_cmd) return cmd_fit(ctx);
        if (*diagnose) return cmd_diagnose(ctx, o.params);
        if (*metrics) return cmd_metrics(ctx, o.params);
        if (*sweep) return cmd_sweep(ctx);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << '\n';
        return exit_invalid;
    } catch (const ArgumentError& e) {
        err << "invalid argument: " << e.what() << '\n';
        return exit_invalid;
    } catch (const PlanError& e) {
        err << "invalid sampling plan: " << e.what() << '\n';
        return exit_invalid;
    } catch (const PreconditionError& e) {
        err << "precondition failed: " << e.what() << '\n';
        return exit_invalid;
    } catch (const CapabilityError& e) {
        err << "unsupported: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}

}  // namespace hawkes::cli
