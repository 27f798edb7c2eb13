#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "yamabe/cli.hpp"
#include "yamabe/hash.hpp"

namespace yamabe::cli {

namespace {

// One row per configuration key: how to print it and how to parse it.
struct Field {
    const char* key;
    std::function<std::string(const StudyConfig&)> get;
    std::function<void(StudyConfig&, const std::string&)> set;
    bool hashed = true;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* first = v.data();
    const char* last = v.data() + v.size();
    std::from_chars_result r;
    if constexpr (std::is_floating_point_v<T>) {
        // GCC 11's from_chars handles doubles; strtod keeps locale independence simple either way.
        r = std::from_chars(first, last, out, std::chars_format::general);
    } else {
        r = std::from_chars(first, last, out);
    }
    if (r.ec != std::errc() || r.ptr != last) throw ConfigError("invalid value for " + key + ": '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

#define YAMABE_NUM_FIELD(name, type)                                                         \
    Field {                                                                                  \
        #name, [](const StudyConfig& c) { return format_value(c.name); },                    \
            [](StudyConfig& c, const std::string& v) { c.name = parse_number<type>(#name, v); } \
    }

std::string format_value(double v) { return format_number(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        YAMABE_NUM_FIELD(n, int),
        YAMABE_NUM_FIELD(seed, std::uint64_t),
        YAMABE_NUM_FIELD(scale, double),
        Field{"curvature_file", [](const StudyConfig& c) { return c.curvature_file; },
              [](StudyConfig& c, const std::string& v) { c.curvature_file = v; }},
        Field{"derivatives", [](const StudyConfig& c) { return std::string(c.derivatives ? "true" : "false"); },
              [](StudyConfig& c, const std::string& v) { c.derivatives = parse_bool("derivatives", v); }},
        YAMABE_NUM_FIELD(grid_cells, int),
        YAMABE_NUM_FIELD(grid_extent, double),
        YAMABE_NUM_FIELD(grid_ratio, double),
        YAMABE_NUM_FIELD(tol, double),
        YAMABE_NUM_FIELD(oracle_tol, double),
        YAMABE_NUM_FIELD(eps_min, double),
        YAMABE_NUM_FIELD(eps_max, double),
        YAMABE_NUM_FIELD(eps_points, int),
        YAMABE_NUM_FIELD(lambda_a, double),
        YAMABE_NUM_FIELD(lambda_b, double),
        YAMABE_NUM_FIELD(lambda, double),
        YAMABE_NUM_FIELD(landscape_eps, double),
        YAMABE_NUM_FIELD(landscape_points, int),
        YAMABE_NUM_FIELD(h_coefficient, double),
        YAMABE_NUM_FIELD(h_exponent, double),
        YAMABE_NUM_FIELD(cutoff_radius, double),
        YAMABE_NUM_FIELD(transverse_c, double),
        YAMABE_NUM_FIELD(significance, double),
        YAMABE_NUM_FIELD(profile_delta, double),
        YAMABE_NUM_FIELD(profile_radial, int),
        YAMABE_NUM_FIELD(profile_angular, int),
        Field{"out", [](const StudyConfig& c) { return c.out; },
              [](StudyConfig& c, const std::string& v) { c.out = v; }, false},
    };
    return f;
}

#undef YAMABE_NUM_FIELD

std::string render(const StudyConfig& cfg, bool hashed_only) {
    std::string s;
    for (const auto& f : fields()) {
        if (hashed_only && !f.hashed) continue;
        s += f.key;
        s += " = ";
        s += f.get(cfg);
        s += '\n';
    }
    return s;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_text(const StudyConfig& cfg) { return render(cfg, false); }

StudyConfig parse_config(std::string_view text, StudyConfig base) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        bool found = false;
        for (const auto& f : fields()) {
            if (key == f.key) {
                f.set(base, value);
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return base;
}

StudyConfig load_config(const std::filesystem::path& path, StudyConfig base) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void validate(const StudyConfig& c) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("invalid configuration: " + what);
    };
    need(c.n >= 8 && c.n <= kMaxDim, "n must lie in [8, " + std::to_string(kMaxDim) + "]");
    need(c.scale > 0.0 && std::isfinite(c.scale), "scale must be positive");
    need(c.grid_cells >= 8, "grid_cells must be at least 8");
    need(c.grid_extent >= 20.0, "grid_extent must be at least 20");
    need(c.grid_ratio >= 1.0 && std::pow(c.grid_ratio, 1.0 / c.grid_cells) <= 1.1,
         "grid_ratio must be >= 1 and give a stretching factor <= 1.1");
    need(c.tol > 0.0 && c.oracle_tol > 0.0, "tolerances must be positive");
    need(c.eps_min > 0.0 && c.eps_max > c.eps_min && c.eps_max < 1.0, "need 0 < eps_min < eps_max < 1");
    need(c.eps_points >= 4, "eps_points must be at least 4");
    need(c.lambda_a > 0.0 && c.lambda_b > c.lambda_a, "need 0 < lambda_a < lambda_b");
    need(c.lambda > 0.0, "lambda must be positive");
    need(c.landscape_eps > 0.0 && c.landscape_eps < 1.0, "landscape_eps must lie in (0, 1)");
    need(c.landscape_points >= 2, "landscape_points must be at least 2");
    need(c.h_exponent >= 0.0, "h_exponent must be nonnegative");
    need(c.cutoff_radius > 0.0, "cutoff_radius must be positive");
    need(c.significance > 0.0 && c.significance < 1.0, "significance must lie in (0, 1)");
    need(c.profile_delta > 0.0, "profile_delta must be positive");
    need(c.profile_radial >= 2 && c.profile_angular >= 2, "profile sampling needs at least 2 nodes per axis");
    need(!c.out.empty(), "out must not be empty");
}

std::string config_hash(const StudyConfig& cfg) { return sha256_hex(render(cfg, true)); }

std::string provenance_line(const StudyConfig& cfg) {
    return std::string("# ") + kToolName + " " + kToolVersion + " config_sha256=" + config_hash(cfg);
}

}  // namespace yamabe::cli
