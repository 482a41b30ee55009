#include "oracles.hpp"

#include "pnpr/config.hpp"
#include "pnpr/experiment.hpp"
#include "pnpr/image_io.hpp"
#include "pnpr/init.hpp"

#include <doctest.h>
#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace pnpr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("pnpr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    return out;
}

// Drops one column from every line of a CSV.
std::string without_column(const std::string& csv, std::size_t col)
{
    std::string out;
    for (const auto& l : lines(csv)) {
        auto cells = split(l);
        cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(col));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out += (i ? "," : "") + cells[i];
        out += '\n';
    }
    return out;
}

// Two 16x16 crops of the bundled images, written as PGM into `dir`.
void small_dataset(const fs::path& dir)
{
    fs::create_directories(dir);
    write_pgm(center_crop(read_pgm(PNPR_DATA_DIR "/desk64/camera.pgm"), 16), dir / "a.pgm");
    write_pgm(center_crop(read_pgm(PNPR_DATA_DIR "/desk64/moon.pgm"), 16), dir / "b.pgm");
}

json small_config(const fs::path& dataset, const fs::path& out)
{
    return json{
        {"dataset", dataset.string()},
        {"image_size", 16},
        {"alphas", {2, 3}},
        {"mc_runs", 2},
        {"master_seed", 99},
        {"output_dir", out.string()},
        {"init", {{"n_starts", 3}, {"warm_iters", 5}, {"refine_iters", 10}}},
        {"methods",
         {"hio",
          {{"method", "er"}, {"iterations", 0}, {"label", "er0"}},
          {{"method", "pnp-pr"}, {"schedule", {{"T", 6}}}},
          {{"method", "pnp-hio"}, {"L", 2}, {"schedule", {{"T", 4}}}, {"denoiser", {{"kind", "gaussian"}}}}}},
    };
}

int run_cli(const std::string& args)
{
    const int status = std::system((std::string(PNPR_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("PRF round trip is bit-identical")
{
    TempDir tmp;
    RealGrid g(std::size_t{3}, std::size_t{5}, std::size_t{7});
    pnpr::Rng rng(1);
    for (auto& v : g)
        v = static_cast<float>(rng.normal() * 1e3);
    write_prf(g, tmp.path / "x.prf");
    const RealGrid back = read_prf(tmp.path / "x.prf");
    CHECK(back.planes() == 3);
    CHECK(back == g);
    CHECK(read_image(tmp.path / "x.prf") == g);

    const std::string bytes = slurp(tmp.path / "x.prf");
    CHECK(bytes.size() == 16 + 4 * g.size());
    spit(tmp.path / "short.prf", bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(read_prf(tmp.path / "short.prf"), ImageIoError);
}

TEST_CASE("hand-built PGM decodes to its byte values")
{
    TempDir tmp;
    std::string bytes = "P5\n# fixture\n4 4\n255\n";
    for (int i = 0; i < 16; ++i)
        bytes.push_back(static_cast<char>(i * 17));
    spit(tmp.path / "x.pgm", bytes);
    const RealGrid g = read_pgm(tmp.path / "x.pgm");
    REQUIRE(g.rows() == 4);
    REQUIRE(g.cols() == 4);
    for (int i = 0; i < 16; ++i)
        CHECK(g[i] == i * 17.0);

    write_pgm(g, tmp.path / "y.pgm");
    CHECK(read_pgm(tmp.path / "y.pgm") == g);
}

TEST_CASE("malformed PGM files are rejected")
{
    TempDir tmp;
    spit(tmp.path / "max.pgm", "P5\n2 2\n65535\n" + std::string(8, '\0'));
    CHECK_THROWS_AS(read_pgm(tmp.path / "max.pgm"), ImageIoError);
    spit(tmp.path / "short.pgm", "P5\n2 2\n255\n" + std::string(3, '\0'));
    CHECK_THROWS_AS(read_pgm(tmp.path / "short.pgm"), ImageIoError);
    spit(tmp.path / "ascii.pgm", "P2\n2 2\n255\n1 2 3 4\n");
    CHECK_THROWS_AS(read_pgm(tmp.path / "ascii.pgm"), ImageIoError);
    CHECK_THROWS_AS(read_pgm(tmp.path / "missing.pgm"), ImageIoError);
}

TEST_CASE("number formatting")
{
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(0.1234567) == "0.123457");
    CHECK(format_number(1234567.0) == "1.23457e+06");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-1.0 / 0.0) == "-inf");
}

TEST_CASE("CSV writers")
{
    const std::string header = "image,method,alpha,mc,psnr_db,ssim,residual,runtime_s,seed\n";
    CHECK(rows_csv({}) == header);
    CHECK(trace_csv({}) == "iter,norm_diff,residual,psnr_db\n");

    ResultRow r;
    r.image = "camera";
    r.method = "pnp-hio";
    r.alpha = 3.0;
    r.mc = 4;
    r.psnr_db = 25.2567891;
    r.ssim = 0.5;
    r.residual = 1.0 / 3.0;
    r.runtime_s = 12.0;
    r.seed = 18446744073709551615ull;
    CHECK(rows_csv({r}) == header + "camera,pnp-hio,3,4,25.2568,0.5,0.333333,12,18446744073709551615\n");

    std::vector<TraceEntry> trace(7);
    trace[6] = {1e-4, 2.5, std::nan("")};
    const auto t = lines(trace_csv(trace));
    CHECK(t.size() == 8);
    CHECK(t[7] == "6,0.0001,2.5,nan");
}

TEST_CASE("summary agrees with an independent aggregation")
{
    std::vector<ResultRow> rows;
    pnpr::Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        ResultRow r;
        r.method = i % 3 == 0 ? "hio" : "pnp-pr";
        r.alpha = i % 2 ? 2.0 : 4.0;
        r.psnr_db = rng.uniform(15.0, 30.0);
        r.ssim = rng.uniform(0.0, 1.0);
        r.runtime_s = rng.uniform(0.0, 5.0);
        if (i == 7)
            r.error = "boom";
        rows.push_back(r);
    }

    // Two-pass mean and (n - 1) variance per group, keyed by "method@alpha".
    std::map<std::string, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows)
        if (!r.error)
            groups[r.method + "@" + format_number(r.alpha)].push_back(&r);

    const auto summary = summarize(rows);
    CHECK(summary.size() == 4);
    std::size_t failures = 0;
    for (const auto& s : summary) {
        failures += s.failures;
        const auto& g = groups.at(s.method + "@" + format_number(s.alpha));
        REQUIRE(s.count == g.size());
        double mp = 0, ms = 0, mt = 0;
        for (const auto* r : g) {
            mp += r->psnr_db;
            ms += r->ssim;
            mt += r->runtime_s;
        }
        const double n = static_cast<double>(g.size());
        mp /= n;
        ms /= n;
        mt /= n;
        double vp = 0, vs = 0;
        for (const auto* r : g) {
            vp += (r->psnr_db - mp) * (r->psnr_db - mp);
            vs += (r->ssim - ms) * (r->ssim - ms);
        }
        CHECK(std::abs(s.psnr_mean - mp) <= 1e-9);
        CHECK(std::abs(s.ssim_mean - ms) <= 1e-9);
        CHECK(std::abs(s.runtime_mean - mt) <= 1e-9);
        CHECK(std::abs(s.psnr_std - std::sqrt(vp / (n - 1))) <= 1e-9);
        CHECK(std::abs(s.ssim_std - std::sqrt(vs / (n - 1))) <= 1e-9);
    }
    CHECK(failures == 1);

    ResultRow one;
    one.method = "er";
    one.psnr_db = 20.0;
    const auto single = summarize({one});
    CHECK(single[0].psnr_std == 0.0);
    CHECK(lines(summary_csv(single))[0] ==
          "method,alpha,n,failures,psnr_mean,psnr_std,ssim_mean,ssim_std,runtime_mean_s");
}

TEST_CASE("config parsing")
{
    TempDir tmp;
    small_dataset(tmp.path / "data");
    const auto cfg = parse_experiment(small_config("data", "out"), tmp.path);
    REQUIRE(cfg.images.size() == 2);
    CHECK(cfg.images[0].filename() == "a.pgm");
    CHECK(cfg.output_dir == tmp.path / "out");
    REQUIRE(cfg.methods.size() == 4);
    CHECK(cfg.methods[0].label == "hio");
    CHECK(cfg.methods[1].label == "er0");
    CHECK(cfg.methods[1].er_iterations == 0);
    CHECK(cfg.methods[2].pnp.schedule.size() == 6);
    CHECK(cfg.methods[3].pnp.inner_iterations == 2);
    CHECK(cfg.methods[3].pnp.denoiser.kind == DenoiserSpec::Kind::gaussian);
    CHECK(cfg.init.n_starts == 3);

    const auto rejects = [&](const std::function<void(json&)>& edit) {
        json j = small_config("data", "out");
        edit(j);
        CHECK_THROWS_AS(parse_experiment(j, tmp.path), ConfigError);
    };
    rejects([](json& j) { j["colour"] = true; });
    rejects([](json& j) { j.erase("dataset"); });
    rejects([](json& j) { j["mc_runs"] = -1; });
    rejects([](json& j) { j["alphas"] = "three"; });
    rejects([](json& j) { j["init"]["starts"] = 5; });
    rejects([](json& j) { j["methods"][2]["schedule"]["sigma_max"] = 1; });
    rejects([](json& j) { j["methods"].push_back("bm3d"); });
    rejects([](json& j) { j["methods"].push_back({{"method", "er"}, {"label", "er0"}}); });
    rejects([](json& j) { j["methods"][3]["denoiser"]["kind"] = "cnn"; });
    rejects([](json& j) { j["methods"][3]["denoiser"]["strength"] = 2; });

    // A missing file is not a config error; the run skips it with a warning.
    json missing = small_config("nowhere.pgm", "out");
    missing["methods"] = {"hio"};
    const auto mcfg = parse_experiment(missing, tmp.path);
    CHECK(mcfg.images == std::vector<fs::path>{tmp.path / "nowhere.pgm"});
    const auto res = run_experiment(mcfg, false);
    CHECK(res.rows.empty());
    CHECK(res.warnings.size() == 1);
}

TEST_CASE("experiment runs")
{
    TempDir tmp;
    small_dataset(tmp.path / "data");

    SUBCASE("one row per alpha for a single hio method")
    {
        json j = small_config("data", "out");
        j["mc_runs"] = 1;
        j["methods"] = {"hio"};
        j["dataset"] = (tmp.path / "data" / "a.pgm").string();
        const auto res = run_experiment(parse_experiment(j, tmp.path), false);
        CHECK(res.rows.size() == 2);
        CHECK(res.traces.empty());
        CHECK_FALSE(res.partial_failure());
    }

    SUBCASE("rows follow the documented seeding and share one initialization")
    {
        const auto cfg = parse_experiment(small_config("data", "out"), tmp.path);
        const auto res = run_experiment(cfg, false);
        REQUIRE(res.rows.size() == 2 * 2 * 2 * 4);
        REQUIRE(res.traces.size() == 2 * 2 * 2 * 2);
        CHECK(res.traces[0].run_id == "a__pnp-pr__a2__mc0");
        CHECK(res.traces[0].trace.size() == 6);
        CHECK(res.traces[1].trace.size() == 4);

        const auto op = MeasurementOperator::fourier(16);
        std::size_t row = 0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t r = 0; r < 2; ++r, row += 4) {
                    const std::uint64_t seed = derive_seed(99, (i * 2 + a) * 2 + r);
                    const RealGrid truth = read_pgm(cfg.images[i]);
                    const auto m = simulate_measurement(op, to_image(truth), cfg.alphas[a], derive_seed(seed, 0));
                    InitConfig ic = cfg.init;
                    ic.seed = derive_seed(seed, 1);
                    const Image z0 = multistart_init(op, m.values, ic, SpaceConstraints::real_non_negative()).image;
                    const auto rep = evaluate(op, z0, truth, m.values, true);

                    const ResultRow& hio = res.rows[row];
                    const ResultRow& er0 = res.rows[row + 1];
                    CHECK(hio.image == (i ? "b" : "a"));
                    CHECK(hio.method == "hio");
                    CHECK(er0.method == "er0");
                    CHECK(hio.alpha == cfg.alphas[a]);
                    CHECK(hio.mc == r);
                    CHECK(hio.seed == seed);
                    CHECK(hio.psnr_db == rep.psnr_db);
                    CHECK(hio.residual == rep.residual);
                    CHECK(er0.psnr_db == hio.psnr_db);
                    CHECK(er0.ssim == hio.ssim);
                }
    }

    SUBCASE("written outputs are deterministic apart from runtimes")
    {
        const auto cfg = parse_experiment(small_config("data", "out"), tmp.path);
        auto cfg2 = cfg;
        cfg2.output_dir = tmp.path / "out2";
        cfg2.threads = 3;
        run_experiment(cfg);
        run_experiment(cfg2);
        for (const char* f : {"rows.csv", "summary.csv"}) {
            const std::string a = slurp(cfg.output_dir / f), b = slurp(cfg2.output_dir / f);
            const std::size_t runtime_col = std::string(f) == "rows.csv" ? 7 : 8;
            CHECK(without_column(a, runtime_col) == without_column(b, runtime_col));
            CHECK(a.find('\r') == std::string::npos);
        }
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(cfg.output_dir / "traces")) {
            CHECK(slurp(e.path()) == slurp(cfg2.output_dir / "traces" / e.path().filename()));
            ++n;
        }
        CHECK(n == 16);
        CHECK(lines(slurp(cfg.output_dir / "rows.csv")).size() == 33);
    }

    SUBCASE("an unreadable image is skipped with a warning")
    {
        spit(tmp.path / "data" / "c.pgm", "not an image");
        json j = small_config("data", "out");
        j["methods"] = {"hio"};
        j["mc_runs"] = 1;
        const auto cfg = parse_experiment(j, tmp.path);
        const auto res = run_experiment(cfg, false);
        CHECK(res.rows.size() == 4);
        REQUIRE(res.warnings.size() == 1);
        CHECK(res.warnings[0].find("skipping image") != std::string::npos);
        CHECK(res.partial_failure());

        // Seeds of the readable images do not move.
        fs::remove(tmp.path / "data" / "c.pgm");
        const auto clean = run_experiment(parse_experiment(j, tmp.path), false);
        CHECK(rows_csv(clean.rows) != "");
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(clean.rows[k].seed == res.rows[k].seed);
    }

    SUBCASE("a failing method yields an error row and the run continues")
    {
        json j = small_config("data", "out");
        j["mc_runs"] = 1;
        j["alphas"] = {3};
        j["methods"] = {"hio", {{"method", "pnp-pr"}, {"schedule", {{"T", 3}}},
                                {"denoiser", {{"kind", "external"}, {"endpoint", "127.0.0.1:1"}, {"timeout_s", 1}}}}};
        const auto res = run_experiment(parse_experiment(j, tmp.path), false);
        REQUIRE(res.rows.size() == 4);
        CHECK_FALSE(res.rows[0].error);
        CHECK(res.rows[1].error);
        CHECK(std::isnan(res.rows[1].psnr_db));
        CHECK(res.partial_failure());
        CHECK(res.summary[1].failures == 2);
        CHECK(res.summary[1].count == 0);
    }
}

TEST_CASE("command-line exit codes")
{
    TempDir tmp;
    small_dataset(tmp.path / "data");
    json j = small_config("data", "out");
    j["mc_runs"] = 1;
    j["alphas"] = {3};
    j["methods"] = {"hio"};
    spit(tmp.path / "ok.json", j.dump());
    spit(tmp.path / "bad.json", "{\"dataset\": 3}");
    spit(tmp.path / "broken.json", "{");

    const std::string cfg = (tmp.path / "ok.json").string();
    CHECK(run_cli("run " + cfg + " -q") == 0);
    CHECK(fs::exists(tmp.path / "out" / "rows.csv"));
    CHECK(run_cli("run " + (tmp.path / "bad.json").string()) == 2);
    CHECK(run_cli("run " + (tmp.path / "broken.json").string()) == 2);
    CHECK(run_cli("run " + cfg + " --method nope") == 2);
    CHECK(run_cli("frobnicate") == 2);

    spit(tmp.path / "data" / "c.pgm", "junk");
    CHECK(run_cli("run " + cfg + " -q") == 3);

    const std::string y = (tmp.path / "y.prf").string(), x = (tmp.path / "x.pgm").string();
    CHECK(run_cli("simulate --image " + (tmp.path / "data" / "a.pgm").string() + " --size 16 --output " + y) == 0);
    CHECK(read_prf(y).rows() == 32);
    CHECK(run_cli("reconstruct --input " + y + " --method er --output " + x + " --starts 2 --refine-iters 5") == 0);
    CHECK(read_pgm(x).rows() == 16);
}
