#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ikrige/predict.hpp"
#include "ikrige/snowload.hpp"
#include "ikrige/variogram.hpp"

namespace ikrige {

namespace io {

inline std::string trim(std::string_view s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    const auto b = std::find_if(s.begin(), s.end(), not_space);
    const auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return b < e ? std::string(b, e) : std::string();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline std::runtime_error parse_error(const std::string& path, std::size_t line,
                                      const std::string& message) {
    return std::runtime_error(path + ":" + std::to_string(line) + ": " + message);
}

inline double parse_double(const std::string& path, std::size_t line, const std::string& field,
                           const std::string& name) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw parse_error(path, line, "bad numeric value for " + name + ": '" + field + "'");
    return v;
}

inline long parse_long(const std::string& path, std::size_t line, const std::string& field,
                       const std::string& name) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw parse_error(path, line, "bad integer value for " + name + ": '" + field + "'");
    return v;
}

/// Case-insensitive header lookup allowing a list of synonyms. Returns the
/// column index or nullopt.
inline std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                              std::initializer_list<const char*> names) {
    const auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string h = lower(header[i]);
        for (const char* n : names)
            if (h == n) return i;
    }
    return std::nullopt;
}

inline std::size_t require_column(const std::string& path, const std::vector<std::string>& header,
                                  std::initializer_list<const char*> names) {
    if (auto c = find_column(header, names)) return *c;
    throw std::runtime_error(path + ":1: missing required column '" + std::string(*names.begin()) + "'");
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Interval samples: columns x|lon, y|lat, lower[_kpa], upper[_kpa];
/// optional id and elev_m|elev|elevation.
struct SampleTable {
    std::vector<std::string> ids;
    std::vector<IntervalSample> samples;
};

inline SampleTable read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv_line(line);
    const auto col_x = require_column(path, header, {"x", "lon"});
    const auto col_y = require_column(path, header, {"y", "lat"});
    const auto col_lo = require_column(path, header, {"lower", "lower_kpa"});
    const auto col_hi = require_column(path, header, {"upper", "upper_kpa"});
    const auto col_elev = find_column(header, {"elev_m", "elev", "elevation"});
    const auto col_id = find_column(header, {"id", "station", "name"});

    SampleTable out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        const auto need = std::max({col_x, col_y, col_lo, col_hi});
        if (f.size() <= need) throw parse_error(path, lineno, "too few fields");
        IntervalSample s;
        s.loc.x = parse_double(path, lineno, f[col_x], "x");
        s.loc.y = parse_double(path, lineno, f[col_y], "y");
        s.loc.elevation = col_elev && *col_elev < f.size() && !f[*col_elev].empty()
                              ? parse_double(path, lineno, f[*col_elev], "elev_m")
                              : 0.0;
        try {
            s.value = Interval(parse_double(path, lineno, f[col_lo], "lower"),
                               parse_double(path, lineno, f[col_hi], "upper"));
            validate_location(s.loc);
        } catch (const std::invalid_argument& e) {
            throw parse_error(path, lineno, e.what());
        }
        out.samples.push_back(s);
        out.ids.push_back(col_id && *col_id < f.size() ? f[*col_id] : std::string());
    }
    return out;
}

inline void write_samples(const std::string& path, const std::vector<std::string>& ids,
                          std::span<const IntervalSample> samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "id,x,y,elev_m,lower,upper\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        out << (i < ids.size() ? ids[i] : "") << ',' << format_number(s.loc.x) << ','
            << format_number(s.loc.y) << ',' << format_number(s.loc.elevation) << ','
            << format_number(s.value.lower()) << ',' << format_number(s.value.upper()) << '\n';
    }
}

/// Prediction targets: x|lon, y|lat, optional elev_m.
inline std::vector<Location> read_targets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv_line(line);
    const auto col_x = require_column(path, header, {"x", "lon"});
    const auto col_y = require_column(path, header, {"y", "lat"});
    const auto col_elev = find_column(header, {"elev_m", "elev", "elevation"});
    std::vector<Location> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() <= std::max(col_x, col_y)) throw parse_error(path, lineno, "too few fields");
        Location loc;
        loc.x = parse_double(path, lineno, f[col_x], "x");
        loc.y = parse_double(path, lineno, f[col_y], "y");
        loc.elevation = col_elev && *col_elev < f.size() && !f[*col_elev].empty()
                            ? parse_double(path, lineno, f[*col_elev], "elev_m")
                            : 0.0;
        out.push_back(loc);
    }
    return out;
}

inline void write_predictions(const std::string& path, std::span<const GridPrediction> preds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "x,y,center,radius,lower,upper,kriging_variance,converged\n";
    for (const auto& p : preds) {
        out << format_number(p.target.x) << ',' << format_number(p.target.y) << ',';
        if (p.ok) {
            const auto& s = p.solution;
            out << format_number(s.prediction.center()) << ',' << format_number(s.prediction.radius())
                << ',' << format_number(s.prediction.lower()) << ','
                << format_number(s.prediction.upper()) << ',' << format_number(s.kriging_variance)
                << ',' << (s.converged ? 1 : 0) << '\n';
        } else {
            out << "nan,nan,nan,nan,nan,0\n";
        }
    }
}

/// Empirical variogram channels flattened into channel,bin_center,gamma,count.
inline void write_empirical(const std::string& path, const EmpiricalVariogram& emp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "channel,bin_center,gamma,count\n";
    const auto dump = [&](const char* name, std::span<const double> g) {
        for (std::size_t k = 0; k < emp.size(); ++k)
            out << name << ',' << format_number(emp.bin_centers[k]) << ',' << format_number(g[k])
                << ',' << emp.pair_counts[k] << '\n';
    };
    dump("C", emp.gamma_c);
    dump("R", emp.gamma_r);
    dump("CR", emp.gamma_cr);
}

inline void write_model(const std::string& path, const VariogramModel& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << describe_model(m) << '\n';
}

inline VariogramModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty() && line[0] != '#') return parse_model(line);
    }
    throw std::runtime_error(path + ": no model descriptor found");
}

/// Station history: id,lon,lat,elev_m,year,day_of_season,depth_cm,load_kpa
/// (one row per station-year; empty load_kpa means depth-only).
inline std::vector<StationRecord> read_stations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv_line(line);
    const auto col_id = require_column(path, header, {"id", "station"});
    const auto col_x = require_column(path, header, {"lon", "x"});
    const auto col_y = require_column(path, header, {"lat", "y"});
    const auto col_elev = require_column(path, header, {"elev_m", "elev", "elevation"});
    const auto col_year = require_column(path, header, {"year"});
    const auto col_day = require_column(path, header, {"day_of_season", "day"});
    const auto col_depth = require_column(path, header, {"depth_cm", "depth"});
    const auto col_load = find_column(header, {"load_kpa", "load"});

    std::vector<StationRecord> stations;
    std::map<std::string, std::size_t> index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() <= std::max({col_id, col_x, col_y, col_elev, col_year, col_day, col_depth}))
            throw parse_error(path, lineno, "too few fields");
        const std::string id = f[col_id];
        if (id.empty()) throw parse_error(path, lineno, "empty station id");

        Location loc;
        loc.x = parse_double(path, lineno, f[col_x], "lon");
        loc.y = parse_double(path, lineno, f[col_y], "lat");
        loc.elevation = parse_double(path, lineno, f[col_elev], "elev_m");

        YearlyMaximum ym;
        ym.year = static_cast<int>(parse_long(path, lineno, f[col_year], "year"));
        ym.day_of_season = static_cast<int>(parse_long(path, lineno, f[col_day], "day_of_season"));
        ym.depth_cm = parse_double(path, lineno, f[col_depth], "depth_cm");
        if (col_load && *col_load < f.size() && !f[*col_load].empty())
            ym.load_kpa = parse_double(path, lineno, f[*col_load], "load_kpa");
        try {
            validate_season_day(ym.day_of_season);
        } catch (const std::invalid_argument& e) {
            throw parse_error(path, lineno, e.what());
        }
        if (ym.depth_cm < 0.0 || (ym.load_kpa && *ym.load_kpa < 0.0))
            throw parse_error(path, lineno, "negative depth or load");

        auto [it, inserted] = index.try_emplace(id, stations.size());
        if (inserted) stations.push_back({id, loc, {}});
        stations[it->second].maxima.push_back(ym);
    }
    return stations;
}

inline void write_design_intervals(const std::string& path, const std::vector<std::string>& ids,
                                   std::span<const IntervalSample> samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "id,lon,lat,elev_m,lower_kpa,upper_kpa\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        out << ids[i] << ',' << format_number(s.loc.x) << ',' << format_number(s.loc.y) << ','
            << format_number(s.loc.elevation) << ',' << format_number(s.value.lower()) << ','
            << format_number(s.value.upper()) << '\n';
    }
}

/// Flat key = value configuration text; '#' starts a comment.
inline std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw parse_error(path, lineno, "expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw parse_error(path, lineno, "empty key");
        out[key] = value;
    }
    return out;
}

}  // namespace io
}  // namespace ikrige
