#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hawkes/model.hpp"
#include "hawkes/paths.hpp"
#include "hawkes/solver.hpp"

namespace hawkes::cli {

using Json = nlohmann::ordered_json;

// A model layout with (possibly empty) parameter values.
struct ModelBlock {
    ModelSpec spec;
    std::vector<double> theta;
};

struct IngestConfig {
    std::string events;  // empty: simulate from the ground truth instead
    double time_scale{1.0};
    std::optional<double> horizon;  // default: header of the file, else the last event
};

struct SimulateConfig {
    std::optional<ModelBlock> truth;
    double horizon{1000.0};
    std::size_t paths{1};
    std::string method{"cluster"};  // or "thinning"
};

struct SweepConfig {
    std::vector<double> horizons;  // increasing truncation times
    std::size_t paths{10};
};

struct RunConfig {
    ModelBlock model;
    SolverConfig solver;
    SimulateConfig simulate;
    IngestConfig ingest;
    SweepConfig sweep;
};

// Missing keys take the library defaults; unknown keys and bad values throw ValidationError.
[[nodiscard]] RunConfig parse_config(const Json& doc);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& file);
// Effective configuration with every default spelled out.
[[nodiscard]] Json to_json(const RunConfig& config);
// FNV-1a of the compact dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const Json& effective);

[[nodiscard]] Json model_to_json(const ModelBlock& block);
[[nodiscard]] ModelBlock model_from_json(const Json& j, const std::string& where);

struct IngestOptions {
    std::size_t dimension{0};  // 0: largest type index seen
    double time_scale{1.0};
    std::optional<double> horizon;
    bool require_nontrivial{false};
};

struct IngestResult {
    EventPath path;
    std::size_t dropped_ties{0};
    std::vector<std::string> warnings;
};

/*
 * Headerless CSV of "type,timestamp" records, types 1-based. Blank lines and
 * lines starting with '#' are skipped, except "# horizon=<T>" which sets the
 * horizon when none is configured. A timestamp already taken by another type
 * keeps its first record; repeats within one type are an error.
 */
[[nodiscard]] IngestResult read_events(std::istream& in, const IngestOptions& options);
[[nodiscard]] IngestResult read_events(const std::filesystem::path& file, const IngestOptions& options);

// Time-ordered records with full precision; header lines are written as comments.
void write_events(std::ostream& out, const EventPath& path, const std::vector<std::string>& header = {});

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_invalid = 2;
inline constexpr int exit_numerical = 3;

// Parses argv, runs one subcommand and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hawkes::cli
