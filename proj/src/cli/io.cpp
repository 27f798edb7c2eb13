#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "yamabe/cli.hpp"

namespace yamabe::cli {

using nlohmann::json;

namespace {

struct TensorSlot {
    const char* key;
    TangentTensor CurvatureData::*member;
    int rank;
};

// Rank of each slot follows the index count in the field comment of CurvatureData.
constexpr TensorSlot kSlots[] = {
    {"rbar", &CurvatureData::rbar, 4},       {"rnn", &CurvatureData::rnn, 2},
    {"rbar_d1", &CurvatureData::rbar_d1, 5}, {"rbar_d2", &CurvatureData::rbar_d2, 6},
    {"rnn_dk", &CurvatureData::rnn_dk, 3},   {"rnn_dn", &CurvatureData::rnn_dn, 2},
    {"rnn_dkl", &CurvatureData::rnn_dkl, 4}, {"rnn_dnk", &CurvatureData::rnn_dnk, 3},
    {"rnn_dnn", &CurvatureData::rnn_dnn, 2},
};

std::size_t ipow(int base, int e) {
    std::size_t r = 1;
    for (int k = 0; k < e; ++k) r *= static_cast<std::size_t>(base);
    return r;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v, bool log_axis) {
    char buf[40];
    if (log_axis) {
        std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(std::log10(v))));
    } else {
        std::snprintf(buf, sizeof buf, "%.3g", v);
    }
    return buf;
}

// Axis range with ticks. Log axes tick at integer powers of ten.
struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    std::vector<double> ticks;

    double map(double v) const {
        const double a = log ? std::log10(lo) : lo;
        const double b = log ? std::log10(hi) : hi;
        const double x = log ? std::log10(v) : v;
        return b > a ? (x - a) / (b - a) : 0.5;
    }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis ax;
    ax.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && v <= 0.0)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
        lo = log ? 1.0 : 0.0;
        hi = log ? 10.0 : 1.0;
    }
    if (log) {
        lo = std::pow(10.0, std::floor(std::log10(lo)));
        hi = std::pow(10.0, std::ceil(std::log10(hi)));
        if (hi <= lo) hi = lo * 10.0;
        const int first = static_cast<int>(std::lround(std::log10(lo)));
        const int last = static_cast<int>(std::lround(std::log10(hi)));
        const int stride = std::max(1, (last - first) / 8);
        for (int e = first; e <= last; e += stride) ax.ticks.push_back(std::pow(10.0, e));
    } else {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        for (int k = 0; k <= 5; ++k) ax.ticks.push_back(lo + (hi - lo) * k / 5.0);
    }
    ax.lo = lo;
    ax.hi = hi;
    return ax;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

json curvature_to_json(const CurvatureData& curv) {
    json j;
    j["format"] = "yamabe-curvature";
    j["version"] = 1;
    j["n"] = curv.n;
    for (const auto& slot : kSlots) {
        const TangentTensor& t = curv.*slot.member;
        if (t.empty()) continue;
        j[slot.key] = t.data();
    }
    j["seed"] = curv.seed;
    j["scale"] = curv.scale;
    j["source"] = curv.source;
    return j;
}

CurvatureData curvature_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "yamabe-curvature") {
            throw ConfigError("curvature document lacks format \"yamabe-curvature\"");
        }
        if (j.value("version", 0) != 1) throw ConfigError("unsupported curvature document version");
        const int n = j.at("n").get<int>();
        if (n < 3 || n > kMaxDim) throw ConfigError("curvature dimension out of range");
        CurvatureData c = CurvatureData::zero(Dimension(n));
        const int m = n - 1;
        for (const auto& slot : kSlots) {
            if (!j.contains(slot.key)) continue;
            auto values = j.at(slot.key).get<std::vector<double>>();
            if (values.size() != ipow(m, slot.rank)) {
                throw ConfigError(std::string("curvature field ") + slot.key + " has " +
                                  std::to_string(values.size()) + " entries, expected " +
                                  std::to_string(ipow(m, slot.rank)));
            }
            TangentTensor t(m, slot.rank);
            t.data() = std::move(values);
            c.*slot.member = std::move(t);
        }
        c.seed = j.value("seed", std::uint64_t{0});
        c.scale = j.value("scale", 0.0);
        c.source = j.value("source", std::string("file"));
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed curvature document: ") + e.what());
    }
}

CurvatureData make_curvature(const StudyConfig& cfg) {
    if (!cfg.curvature_file.empty()) {
        std::ifstream is(cfg.curvature_file);
        if (!is) throw ConfigError("cannot read curvature file " + cfg.curvature_file);
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("curvature file is not valid JSON: ") + e.what());
        }
        CurvatureData c = curvature_from_json(j);
        if (c.n != cfg.n) throw ConfigError("curvature file dimension differs from n");
        const auto report = validate(c);
        if (!report.pass()) {
            std::string what = "curvature file violates:";
            for (const auto& v : report.violations()) what += " " + v.check;
            throw ConfigError(what);
        }
        return c;
    }
    CurvatureData c = random_admissible(cfg.seed, cfg.scale, Dimension(cfg.n));
    if (cfg.derivatives) c = with_random_derivatives(c, cfg.seed, cfg.scale);
    return c;
}

std::string render_csv(const StudyConfig& cfg, const Table& t) {
    std::string s = provenance_line(cfg) + "\n";
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
        if (k) s += ',';
        s += t.columns[k];
    }
    s += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) s += ',';
            s += format_number(row[k]);
        }
        s += '\n';
    }
    return s;
}

std::string render_svg(const StudyConfig& cfg, const PlotSpec& spec) {
    constexpr double width = 720, height = 480;
    constexpr double left = 80, right = 170, top = 40, bottom = 60;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    std::vector<double> xs, ys;
    for (const auto& s : spec.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    if (spec.marker_x) xs.push_back(*spec.marker_x);
    const Axis ax = make_axis(xs, spec.log_x);
    const Axis ay = make_axis(ys, spec.log_y);
    auto px = [&](double v) { return left + pw * ax.map(v); };
    auto py = [&](double v) { return top + ph * (1.0 - ay.map(v)); };

    std::ostringstream o;
    // XML comments cannot start with '#', so the provenance line is embedded as-is after "<!-- ".
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<!-- " << provenance_line(cfg).substr(2) << " -->\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(spec.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ax.ticks) {
        const double x = px(t);
        o << "<line x1=\"" << fixed(x) << "\" y1=\"" << top << "\" x2=\"" << fixed(x) << "\" y2=\"" << top + ph
          << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << fixed(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << tick_label(t, ax.log) << "</text>\n";
    }
    for (double t : ay.ticks) {
        const double y = py(t);
        o << "<line x1=\"" << left << "\" y1=\"" << fixed(y) << "\" x2=\"" << left + pw << "\" y2=\"" << fixed(y)
          << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">"
          << tick_label(t, ay.log) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\">"
      << escape_xml(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if ((spec.log_x && s.x[i] <= 0) || (spec.log_y && s.y[i] <= 0)) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!first) o << ' ';
            o << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i]));
            first = false;
        }
        o << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 34 << "\" y2=\"" << ly
          << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
    }

    if (spec.marker_x) {
        const double x = px(*spec.marker_x);
        o << "<line x1=\"" << fixed(x) << "\" y1=\"" << top << "\" x2=\"" << fixed(x) << "\" y2=\"" << top + ph
          << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
        o << "<text x=\"" << fixed(x + 4) << "\" y=\"" << top + 14 << "\">" << escape_xml(spec.marker_label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace yamabe::cli
