#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigma2/cli.hpp"
#include "sigma2/container.hpp"
#include "sigma2/errors.hpp"
#include "sigma2/trace_io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace sigma2;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sigma2-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "sigma2-cli");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

ContinuationTrace sample_trace() {
    ContinuationTrace t;
    t.parameter_name = "s";
    MonitorReport r;
    r.sup_hess = 0.1;
    r.vol_conf = 1.0 / 3.0;
    t.records.push_back({0.0, 2, 1e-12, r, true, false, ""});
    t.records.push_back({0.5, 30, 1.0, r, false, true, "halved"});
    t.records.push_back({0.25, 3, 2e-13, r, true, false, ""});
    return t;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, std::numbers::pi, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("raw container round-trip") {
    const fs::path dir = scratch("container");
    Container c;
    c.set("model", "cap_spaceform");
    c.set("note", "two words");
    c.add("a", {2, 3}, {1, 2, 3, 4, 5, 6});
    c.add("b", {1}, {-0.0});
    c.add("c", {3}, {1e-300, std::numbers::e, -7.0});
    write_container(dir / "x.s2c", c);
    const Container r = read_container(dir / "x.s2c");
    REQUIRE(r.value("note"));
    CHECK(*r.value("note") == "two words");
    CHECK(r.value("missing") == nullptr);
    REQUIRE(r.field("a"));
    CHECK(r.field("a")->shape == std::vector<std::size_t>{2, 3});
    CHECK(r.field("a")->data == c.field("a")->data);
    CHECK(std::signbit(r.field("b")->data[0]));
    CHECK(r.field("c")->data == c.field("c")->data);

    CHECK_THROWS_AS(c.add("bad", {2, 2}, {1, 2, 3}), Error);
    std::ofstream(dir / "junk.s2c") << "not a container\n";
    CHECK_THROWS_AS((void)read_container(dir / "junk.s2c"), Error);
    CHECK_THROWS_AS((void)read_container(dir / "absent.s2c"), Error);

    // truncated payload
    std::string bytes = slurp(dir / "x.s2c");
    bytes.resize(bytes.size() - 4);
    std::ofstream(dir / "cut.s2c", std::ios::binary) << bytes;
    CHECK_THROWS_AS((void)read_container(dir / "cut.s2c"), Error);
}

TEST_CASE("model export and import") {
    const fs::path dir = scratch("model");
    ModelSpec s;
    s.id = CatalogId::Perturbed;
    s.base = CatalogId::BandS3;
    s.amplitude = 0.002;
    s.seed = 3;
    const Model m = make_model(s, {17, 8, 8});
    write_container(dir / "m.s2c", export_model(m));
    const Model back = import_model(read_container(dir / "m.s2c"));
    CHECK(back.spec.id == CatalogId::Perturbed);
    CHECK(back.spec.seed == 3);
    REQUIRE(back.size() == m.size());
    CHECK(back.grid.axes()[1].periodic);
    CHECK(back.grid.boundary_faces().size() == 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK((back.metric.g[i] - m.metric.g[i]).norm() == 0.0);
        CHECK(back.metric.volume_weights[i] == m.metric.volume_weights[i]);
        CHECK((back.curvature.ricci[i] - m.curvature.ricci[i]).cwiseAbs().maxCoeff() < 1e-12);
    }
    REQUIRE(back.boundary.nodes.size() == m.boundary.nodes.size());
    for (std::size_t k = 0; k < m.boundary.nodes.size(); ++k)
        CHECK(back.boundary.nodes[k].h == doctest::Approx(m.boundary.nodes[k].h).epsilon(1e-12));

    ModelSpec cap;
    cap.cap_radius = 1.0;
    const Model mc = make_model(cap, {33});
    const ConformalState st = deform(modified_schouten(mc.curvature, mc.metric, 1.0), Field(mc.size(), 0.1), 1.0, mc);
    const Container cc = export_model(mc, &st);
    REQUIRE(cc.field("u"));
    CHECK(cc.field("u")->data == st.u);
    REQUIRE(cc.field("W"));
    CHECK(cc.field("W")->shape == std::vector<std::size_t>{33, 3, 3});
    const Model mb = import_model(cc);
    CHECK(mb.grid.radial());
    CHECK(mb.boundary.nodes[0].h == doctest::Approx(1.0 / std::tan(1.0)));
}

TEST_CASE("trace table keeps accepted rows only") {
    const std::string text = trace_table(sample_trace());
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> rows;
    std::string header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header.empty())
            header = line;
        else
            rows.push_back(line);
    }
    CHECK(header == "parameter,iterations,residual,sup_grad,sup_hess,max_unn,min_sigma2,cone_margin,vol_conf,supervol,cc_flag");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("0.25,3,", 0) == 0);
    CHECK(rows[0].find(format_double(1.0 / 3.0)) != std::string::npos);
}

TEST_CASE("plot data and summaries") {
    const fs::path dir = scratch("plots");
    const auto files = emit_plot_data(sample_trace(), dir / "plots");
    REQUIRE(files.size() == 4);
    for (const auto& f : files) CHECK(fs::exists(f));
    CHECK(slurp(dir / "plots" / "residual.csv") == "# s vs residual\ns,residual\n0,9.9999999999999998e-13\n0.25,2.0000000000000001e-13\n");
    CHECK_THROWS_AS((void)emit_plot_data(ContinuationTrace{}, dir / "empty"), Error);

    const Summary s{{"a", "1"}, {"b.c", "x=y"}, {"d", ""}};
    write_summary(s, dir / "summary.txt");
    CHECK(read_summary(dir / "summary.txt") == s);
}

TEST_CASE("config JSON round-trip and validation") {
    RunConfig c;
    c.command = "eigen";
    c.model = "band";
    c.resolution = {17, 16, 16};
    c.t = 0.5;
    c.warp_a = {1.0, 0.2};
    c.cauchy_tol = 1e-4;
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.resolution == c.resolution);
    CHECK(back.warp_a == c.warp_a);

    CHECK_THROWS_AS((void)RunConfig::from_json("{\"modle\": \"cap\"}"), Error);
    CHECK_THROWS_AS((void)RunConfig::from_json("{\"t\": \"half\"}"), Error);
    CHECK_THROWS_AS((void)RunConfig::from_json("[1, 2]"), Error);
    CHECK_THROWS_AS((void)RunConfig::from_json("{"), Error);

    RunConfig bad = c;
    bad.resolution = {129, 129, 129};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.command = "plot";
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.linear = "cg";
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.model = "cap";
    bad.resolution = {5000};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("command line: exit codes and outputs") {
    const fs::path dir = scratch("cli");
    CHECK(run_cli({"--bogus"}) == 2);
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"solve", "--resolution", "2", "--out", (dir / "r").string()}) == 2);
    CHECK(run_cli({"solve", "--f", "banana", "--out", (dir / "f").string()}) == 2);
    CHECK(run_cli({"solve", "--config", (dir / "none.json").string()}) == 2);

    CHECK(run_cli({"check-algebra", "--samples", "200", "--out", (dir / "alg").string()}) == 0);
    CHECK(fs::exists(dir / "alg" / "report.txt"));
    CHECK(fs::exists(dir / "alg" / "config.json"));
    const Summary alg = read_summary(dir / "alg" / "summary.txt");
    CHECK(alg[2] == Summary::value_type{"failed", "0"});

    // config file values, overridden by flags
    RunConfig c;
    c.command = "solve";
    c.resolution = {33};
    c.f = "0.8";
    c.out = (dir / "from-file").string();
    std::ofstream(dir / "cfg.json") << c.to_json();
    CHECK(run_cli({"solve", "--config", (dir / "cfg.json").string(), "--f", "0.8660254037844386", "--u0_amplitude",
                   "0.02"}) == 0);
    const Summary s = read_summary(dir / "from-file" / "summary.txt");
    bool converged = false;
    for (const auto& [k, v] : s) converged = converged || (k == "status" && v == "converged");
    CHECK(converged);
    CHECK(fs::exists(dir / "from-file" / "state.s2c"));
    CHECK(fs::exists(dir / "from-file" / "trace.csv"));
    const RunConfig used = RunConfig::from_json(slurp(dir / "from-file" / "config.json"));
    CHECK(used.f == "0.8660254037844386");
    CHECK(used.resolution == std::vector<int>{33});

    // non-convergence is a numerical failure
    CHECK(run_cli({"solve", "--resolution", "33", "--f", "0.9", "--u0_amplitude", "0.05", "--max_iter", "1", "--out",
                   (dir / "nc").string()}) == 1);
}

TEST_CASE("the installed executable honours SIGMA2_OUT_DIR") {
    const char* exe = std::getenv("SIGMA2_CLI");
    if (!exe) return;
    const fs::path dir = scratch("exe");
    const std::string cmd = "SIGMA2_OUT_DIR=" + (dir / "env").string() + " " + exe +
                            " check-algebra --samples 50 > " + (dir / "log.txt").string() + " 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "env" / "report.txt"));
    const std::string bad = std::string(exe) + " frobnicate > " + (dir / "bad.txt").string() + " 2>&1";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}
