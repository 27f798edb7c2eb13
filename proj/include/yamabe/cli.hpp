#pragma once

// Command-line front end: study configuration, curvature input, file
// emission (CSV, text reports, SVG), the corrector store and the
// subcommands.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "yamabe/corrector.hpp"
#include "yamabe/curvature.hpp"

namespace yamabe::cli {

inline constexpr const char* kToolName = "yamabe";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2 };

/// Raised for malformed or out-of-range configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StudyConfig {
    int n = 8;
    std::uint64_t seed = 1;
    double scale = 1.0;
    std::string curvature_file;  ///< JSON curvature data; replaces seed/scale when set
    bool derivatives = true;     ///< attach random cubic and quartic expansion data

    int grid_cells = 200;
    double grid_extent = 640.0;
    double grid_ratio = 1000.0;
    double tol = 1e-8;         ///< relative residual bound of the corrector solve
    double oracle_tol = 1e-8;  ///< closed form vs quadrature

    double eps_min = 1e-6;
    double eps_max = 1e-2;
    int eps_points = 13;

    double lambda_a = 0.5;
    double lambda_b = 8.0;
    double lambda = 1.0;  ///< concentration parameter of the scaling study
    double landscape_eps = 1e-3;
    int landscape_points = 201;

    double h_coefficient = 1.0;
    double h_exponent = 2.0;
    double cutoff_radius = 1.0;
    double transverse_c = 0.0;
    double significance = 0.01;

    double profile_delta = 0.1;
    int profile_radial = 41;
    int profile_angular = 9;

    std::string out = "yamabe-out";  ///< output directory (not part of the hash)

    friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

/// Flat "key = value" text, one key per line, doubles at full precision.
std::string to_text(const StudyConfig& cfg);
/// Parses text produced by to_text (or written by hand) on top of `base`.
/// Unknown keys and unparsable values raise ConfigError.
StudyConfig parse_config(std::string_view text, StudyConfig base = {});
StudyConfig load_config(const std::filesystem::path& path, StudyConfig base = {});
/// Throws ConfigError when a value is outside the range the modules accept.
void validate(const StudyConfig& cfg);
/// SHA-256 of the canonical text with the output directory removed.
std::string config_hash(const StudyConfig& cfg);

// ---- curvature input ----
nlohmann::json curvature_to_json(const CurvatureData& curv);
CurvatureData curvature_from_json(const nlohmann::json& j);
/// Curvature described by the configuration (file or seeded random data).
CurvatureData make_curvature(const StudyConfig& cfg);

// ---- emission ----
/// First line of every emitted file: tool, version and config hash.
std::string provenance_line(const StudyConfig& cfg);
std::string format_number(double v);  ///< %.17g

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
std::string render_csv(const StudyConfig& cfg, const Table& t);

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
};
struct PlotSpec {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<PlotSeries> series;
    std::optional<double> marker_x;  ///< vertical marker line
    std::string marker_label;
};
std::string render_svg(const StudyConfig& cfg, const PlotSpec& spec);

/// Writes through a temporary file and a rename.
void write_file(const std::filesystem::path& path, const std::string& contents);

// ---- corrector store ----
/// Content-addressed cache of corrector solutions in a directory. The
/// directory is locked exclusively (flock) for the lifetime of the store.
class CorrectorStore {
public:
    explicit CorrectorStore(std::filesystem::path dir);
    ~CorrectorStore();
    CorrectorStore(const CorrectorStore&) = delete;
    CorrectorStore& operator=(const CorrectorStore&) = delete;

    struct Entry {
        CorrectorSolution solution;
        bool from_cache = false;
        std::string key;
    };
    Entry get(const CurvatureData& curv, const RadialGrid& grid, double tol);

private:
    std::filesystem::path dir_;
    int lock_fd_ = -1;
};

RadialGrid make_grid(const StudyConfig& cfg);

// ---- verification suites ----
struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string detail;  ///< deterministic numeric summary
};

/// Every invariant check, in a fixed order. `store` serves corrector solves.
std::vector<SuiteResult> run_verification(const StudyConfig& cfg, CorrectorStore& store);

// ---- subcommands; each returns an exit code and writes into cfg.out ----
int cmd_constants(const StudyConfig& cfg);
int cmd_corrector(const StudyConfig& cfg);
int cmd_landscape(const StudyConfig& cfg);
int cmd_scaling(const StudyConfig& cfg);
int cmd_verify(const StudyConfig& cfg);
int cmd_profile(const StudyConfig& cfg);

/// Full command-line entry point (parsing, config layering, dispatch).
int run(int argc, char** argv);

}  // namespace yamabe::cli
