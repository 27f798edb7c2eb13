#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "yamabe/cli.hpp"

using namespace yamabe;
using namespace yamabe::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("yamabe-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Value of "key = value" in a report, or "" when absent.
std::string report_value(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    const std::string prefix = key + " = ";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    }
    return {};
}

StudyConfig config_in(const fs::path& dir) {
    StudyConfig c;
    c.out = dir.string();
    return c;
}

int run_args(std::vector<std::string> args) {
    args.insert(args.begin(), "yamabe");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Config, TextRoundTripIsLossless) {
    StudyConfig c;
    c.n = 11;
    c.seed = 987654321987654321ULL;
    c.scale = 0.1 + 0.2;  // not representable in short decimal form
    c.tol = 1.0 / 3.0 * 1e-8;
    c.eps_min = std::nextafter(1e-6, 1.0);
    c.curvature_file = "some dir/data.json";
    c.derivatives = false;
    c.out = "elsewhere";
    EXPECT_EQ(parse_config(to_text(c)), c);
    EXPECT_EQ(parse_config(to_text(StudyConfig{})), StudyConfig{});
}

TEST(Config, CommentsBlanksAndLayering) {
    StudyConfig base;
    base.seed = 5;
    const auto c = parse_config("# a comment\n\n  n = 9  \nscale=2.5\n", base);
    EXPECT_EQ(c.n, 9);
    EXPECT_EQ(c.scale, 2.5);
    EXPECT_EQ(c.seed, 5u);  // untouched keys keep the base value
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config("colour = blue\n"), ConfigError);
    EXPECT_THROW(parse_config("n = eight\n"), ConfigError);
    EXPECT_THROW(parse_config("scale = 1.0x\n"), ConfigError);
    EXPECT_THROW(parse_config("just words\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/yamabe.cfg"), ConfigError);
}

TEST(Config, ValidateRanges) {
    EXPECT_NO_THROW(validate(StudyConfig{}));
    auto bad = [](auto mutate) {
        StudyConfig c;
        mutate(c);
        return c;
    };
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.n = 7; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.n = 17; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.eps_min = c.eps_max; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.lambda_a = 0.0; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.lambda_b = c.lambda_a; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.tol = 0.0; })), ConfigError);
    EXPECT_THROW(validate(bad([](StudyConfig& c) { c.scale = -1.0; })), ConfigError);
}

TEST(Config, HashIgnoresOnlyTheOutputDirectory) {
    StudyConfig a, b;
    b.out = "another/place";
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 64u);
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(provenance_line(a), "# yamabe 1.0.0 config_sha256=" + config_hash(a));
}

TEST(Curvature, JsonRoundTripIsExact) {
    for (int n : {8, 12}) {
        const auto c = with_random_derivatives(random_admissible(3, 1.7, Dimension(n)), 4, 1.0);
        const nlohmann::json j = curvature_to_json(c);
        EXPECT_EQ(j.at("format"), "yamabe-curvature");
        const auto back = curvature_from_json(nlohmann::json::parse(j.dump()));
        EXPECT_EQ(curvature_hash(back), curvature_hash(c));
    }
}

TEST(Curvature, MalformedJsonRejected) {
    auto j = curvature_to_json(random_admissible(3, 1.0, Dimension(8)));
    auto wrong_format = j;
    wrong_format["format"] = "something-else";
    EXPECT_ANY_THROW(curvature_from_json(wrong_format));
    auto short_tensor = j;
    short_tensor["rbar"].erase(0);
    EXPECT_ANY_THROW(curvature_from_json(short_tensor));
}

TEST(Curvature, FileSourceReplacesTheSeed) {
    TempDir dir;
    const auto c = random_admissible(42, 0.5, Dimension(9));
    const auto file = dir.path() / "curv.json";
    write_file(file, curvature_to_json(c).dump(2));
    StudyConfig cfg;
    cfg.n = 9;
    cfg.curvature_file = file.string();
    EXPECT_EQ(curvature_hash(make_curvature(cfg)), curvature_hash(c));
    cfg.n = 10;  // the file disagrees with the configured dimension
    EXPECT_ANY_THROW(make_curvature(cfg));
}

TEST(Emission, CsvCarriesProvenanceAndFullPrecision) {
    StudyConfig cfg;
    Table t{{"x", "y"}, {{0.1, 1.0 / 3.0}, {-2.5e-300, 7.0}}};
    const std::string csv = render_csv(cfg, t);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, provenance_line(cfg));
    std::getline(in, line);
    EXPECT_EQ(line, "x,y");
    std::getline(in, line);
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), 0.1);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), 1.0 / 3.0);
    std::getline(in, line);
    EXPECT_EQ(std::stod(line.substr(0, line.find(','))), -2.5e-300);
}

TEST(Emission, SvgIsSelfContainedWithMarker) {
    StudyConfig cfg;
    PlotSpec spec;
    spec.title = "t";
    spec.log_x = spec.log_y = true;
    spec.series.push_back({"a & b", {1e-3, 1e-2, 1e-1}, {2.0, 3.0, 5.0}});
    spec.marker_x = 1e-2;
    spec.marker_label = "mark";
    const std::string svg = render_svg(cfg, spec);
    EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find(config_hash(cfg)), std::string::npos);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
    EXPECT_NE(svg.find("a &amp; b"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);  // nothing external
}

TEST(Emission, WriteFileLeavesNoTemporaries) {
    TempDir dir;
    const auto p = dir.path() / "sub" / "f.txt";
    write_file(p, "first");
    write_file(p, "second");
    EXPECT_EQ(slurp(p), "second");
    int files = 0;
    for (const auto& e : fs::directory_iterator(p.parent_path())) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, 1);
}

TEST(Store, ServesTheSecondRequestFromCache) {
    TempDir dir;
    const auto c = random_admissible(1, 1.0, Dimension(8));
    const RadialGrid grid = RadialGrid::standard(80);
    std::vector<double> first;
    {
        CorrectorStore store(dir.path());
        const auto e = store.get(c, grid, 1e-8);
        EXPECT_FALSE(e.from_cache);
        first = e.solution.sectors.at(0).profile->w;
    }
    CorrectorStore store(dir.path());
    const auto e = store.get(c, grid, 1e-8);
    EXPECT_TRUE(e.from_cache);
    EXPECT_EQ(e.solution.sectors.at(0).profile->w, first);
}

TEST(Store, HoldsAnExclusiveLock) {
    TempDir dir;
    auto try_lock = [&] {
        const int fd = ::open((dir.path() / "store.lock").c_str(), O_RDWR | O_CREAT, 0644);
        const bool got = ::flock(fd, LOCK_EX | LOCK_NB) == 0;
        ::close(fd);
        return got;
    };
    {
        CorrectorStore store(dir.path());
        EXPECT_FALSE(try_lock());
    }
    EXPECT_TRUE(try_lock());
}

TEST(Store, CorruptEntryIsReported) {
    TempDir dir;
    const auto c = random_admissible(2, 1.0, Dimension(8));
    const RadialGrid grid = RadialGrid::standard(80);
    { CorrectorStore(dir.path()).get(c, grid, 1e-8); }
    for (const auto& e : fs::directory_iterator(dir.path())) {
        if (e.path().filename() == "store.lock") continue;
        std::fstream f(e.path(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-12, std::ios::end);
        f.put('\x7f');
    }
    CorrectorStore store(dir.path());
    EXPECT_THROW(store.get(c, grid, 1e-8), std::runtime_error);
}

TEST(Commands, ConstantsReportAndBTable) {
    TempDir dir;
    const auto cfg = config_in(dir.path());
    ASSERT_EQ(cmd_constants(cfg), kPass);
    const std::string rep = slurp(dir.path() / "constants.txt");
    EXPECT_EQ(rep.substr(0, rep.find('\n')), provenance_line(cfg));
    EXPECT_EQ(report_value(rep, "C.positive"), "PASS");
    EXPECT_EQ(report_value(rep, "I1.status"), "PASS");
    EXPECT_LT(std::stod(report_value(rep, "I1.rel_gap")), 1e-8);
    const std::string csv = slurp(dir.path() / "constants_B.csv");
    EXPECT_NE(csv.find("\neps,B\n0,0\n"), std::string::npos);
}

TEST(Commands, CorrectorRerunIsByteIdentical) {
    TempDir dir;
    auto cfg = config_in(dir.path());
    cfg.grid_cells = 100;
    ASSERT_EQ(cmd_corrector(cfg), kPass);
    const std::string first = slurp(dir.path() / "corrector.txt");
    ASSERT_EQ(cmd_corrector(cfg), kPass);
    EXPECT_EQ(slurp(dir.path() / "corrector.txt"), first);
    EXPECT_EQ(report_value(first, "uvq.status"), "PASS");
}

TEST(Commands, LandscapeMarkerInsideTheInterval) {
    TempDir dir;
    const auto cfg = config_in(dir.path());
    ASSERT_EQ(cmd_landscape(cfg), kPass);
    const std::string rep = slurp(dir.path() / "landscape.txt");
    const double star = std::stod(report_value(rep, "lambda_star"));
    const double closed = std::stod(report_value(rep, "closed_form"));
    EXPECT_EQ(star, closed);
    EXPECT_GT(star, cfg.lambda_a);
    EXPECT_LT(star, cfg.lambda_b);
    EXPECT_EQ(report_value(rep, "interior"), "true");
    const std::string svg = slurp(dir.path() / "landscape.svg");
    EXPECT_NE(svg.find("lambda* (interior)"), std::string::npos);
    const std::string csv = slurp(dir.path() / "landscape.csv");
    EXPECT_NE(csv.find("\nlambda,I_eps,dI_dlambda\n"), std::string::npos);
}

TEST(Commands, VerifyPassesOnDefaults) {
    TempDir dir;
    const auto cfg = config_in(dir.path());
    ASSERT_EQ(cmd_verify(cfg), kPass);
    const std::string rep = slurp(dir.path() / "verify.txt");
    EXPECT_NE(rep.find("OVERALL PASS"), std::string::npos);
    EXPECT_EQ(rep.find("FAIL"), std::string::npos);
}

TEST(EntryPoint, ExitCodes) {
    EXPECT_EQ(run_args({"--version"}), kPass);
    EXPECT_EQ(run_args({}), kUsage);
    EXPECT_EQ(run_args({"frobnicate"}), kUsage);
    EXPECT_EQ(run_args({"constants", "--n", "3"}), kUsage);
    EXPECT_EQ(run_args({"constants", "--n", "ten"}), kUsage);
    EXPECT_EQ(run_args({"--config", "/nonexistent.cfg", "constants"}), kUsage);
}

TEST(EntryPoint, CommandLineOverridesTheConfigFile) {
    TempDir dir;
    const auto file = dir.path() / "study.cfg";
    write_file(file, "n = 9\nseed = 4\nout = " + (dir.path() / "from-file").string() + "\n");
    const auto out = (dir.path() / "from-flag").string();
    ASSERT_EQ(run_args({"--config", file.string(), "constants", "--n", "10", "--out", out}), kPass);
    const std::string rep = slurp(fs::path(out) / "constants.txt");
    EXPECT_EQ(report_value(rep, "n"), "10");
    StudyConfig expect;
    expect.n = 10;
    expect.seed = 4;
    EXPECT_EQ(rep.substr(0, rep.find('\n')), provenance_line(expect));
    EXPECT_FALSE(fs::exists(dir.path() / "from-file"));
}
