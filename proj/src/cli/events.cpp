#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string_view>
#include <unordered_map>

#include "hawkes/cli.hpp"
#include "hawkes/errors.hpp"

namespace hawkes::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
bool parse_whole(std::string_view s, T& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

struct Record {
    std::size_t type;  // 0-based
    double time;
    std::size_t line;
};

}  // namespace

IngestResult read_events(std::istream& in, const IngestOptions& options) {
    if (!(options.time_scale > 0.0)) throw ArgumentError("time scale must be positive");
    std::vector<Record> records;
    std::optional<double> header_horizon;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            constexpr std::string_view key = "# horizon=";
            double h = 0.0;
            if (body.starts_with(key) && parse_whole(body.substr(key.size()), h)) header_horizon = h;
            continue;
        }
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) throw ParseError(number, "expected 'type,timestamp'");
        long long type = 0;
        double t = 0.0;
        if (!parse_whole(body.substr(0, comma), type)) throw ParseError(number, "type index is not an integer");
        if (!parse_whole(body.substr(comma + 1), t) || !std::isfinite(t))
            throw ParseError(number, "timestamp is not a finite number");
        if (type < 1) throw ParseError(number, "type indices start at 1");
        if (options.dimension != 0 && static_cast<std::size_t>(type) > options.dimension)
            throw ParseError(number, "type " + std::to_string(type) + " exceeds the dimension " +
                                         std::to_string(options.dimension));
        t *= options.time_scale;
        if (!(t > 0.0)) throw ParseError(number, "timestamps must be positive");
        records.push_back({static_cast<std::size_t>(type - 1), t, number});
    }
    if (records.empty()) throw ValidationError("event file holds no events");

    std::size_t d = options.dimension;
    for (const auto& r : records) d = std::max(d, r.type + 1);

    IngestResult result{EventPath(), 0, {}};
    // The first record of each timestamp wins across types.
    std::unordered_map<double, const Record*> owner;
    std::vector<std::vector<double>> times(d);
    for (const auto& r : records) {
        const auto [it, fresh] = owner.try_emplace(r.time, &r);
        if (fresh) {
            times[r.type].push_back(r.time);
            continue;
        }
        if (it->second->type == r.type)
            throw ValidationError("line " + std::to_string(r.line) + ": type " + std::to_string(r.type + 1) +
                                  " repeats the timestamp of line " + std::to_string(it->second->line));
        ++result.dropped_ties;
        result.warnings.push_back("line " + std::to_string(r.line) + ": timestamp already used by type " +
                                  std::to_string(it->second->type + 1) + " on line " +
                                  std::to_string(it->second->line) + "; record dropped");
    }

    double horizon = 0.0;
    for (const auto& r : records) horizon = std::max(horizon, r.time);
    if (header_horizon) horizon = *header_horizon * options.time_scale;
    if (options.horizon) horizon = *options.horizon;
    for (auto& t : times) {
        std::sort(t.begin(), t.end());
        std::erase_if(t, [horizon](double x) { return x > horizon; });
    }
    result.path = EventPath(std::move(times), horizon);
    if (result.path.total_count() == 0) throw ValidationError("no events before the horizon");
    if (options.require_nontrivial) {
        try {
            result.path.require_nontrivial();
        } catch (const PreconditionError& e) {
            throw ValidationError(std::string("events cannot be fitted: ") + e.what());
        }
    }
    return result;
}

IngestResult read_events(const std::filesystem::path& file, const IngestOptions& options) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open event file " + file.string());
    return read_events(in, options);
}

void write_events(std::ostream& out, const EventPath& path, const std::vector<std::string>& header) {
    for (const auto& h : header) out << "# " << h << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", path.horizon());
    out << "# horizon=" << buf << '\n';
    std::multimap<double, std::size_t> order;
    for (std::size_t i = 0; i < path.dimension(); ++i)
        for (double t : path.times(i)) order.emplace(t, i);
    for (const auto& [t, i] : order) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << i + 1 << ',' << buf << '\n';
    }
}

}  // namespace hawkes::cli
