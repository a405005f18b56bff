#include "catch_amalgamated.hpp"

#include "dwshell/io.hpp"

#include <filesystem>

using namespace dwshell;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path bundled(const char* name) { return std::filesystem::path(DWSHELL_SOURCE_DIR) / "systems" / name; }

const char* minimal = R"(network:
  converter_buses: 1
  ground_ties: [[0, 2.0]]
converters:
  - name: lag
    model: state_space
    A: [[-1.0]]
    B: [[1, 0]]
    C: [[1], [0]]
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("bundled single-converter system", "[io]") {
    const auto sys = load_system(bundled("single_converter.sys"));
    CHECK(sys.name == "single_converter");
    const auto rn = reduce_network(sys.network);
    CHECK(rn.gscr == 3.5);
    const auto seg = network_shell_segment(rn);
    CHECK(seg.u_max == -3.5);
    CHECK(seg.u_max * seg.u_max == 12.25);
    REQUIRE(sys.converters.size() == 1);
    CHECK(sys.converters[0].kind == ConverterKind::gfl);
    CHECK(sys.converters[0].gfl.pll_bandwidth_hz == 10.0);
    CHECK(sys.converters[0].gfl.pll_damping == 0.3);
    CHECK(sys.fleet().blocks[0].order() == 6);
}

TEST_CASE("bundled three-converter systems", "[io]") {
    const auto stable = load_system(bundled("three_converter_stable.sys"));
    const auto weak = load_system(bundled("three_converter_unstable.sys"));
    CHECK(stable.fleet().size() == 3);
    CHECK(reduce_network(weak.network).gscr < reduce_network(stable.network).gscr);
    // Same fleet, every susceptance scaled by 0.9 / 1.2.
    CHECK(reduce_network(weak.network).gscr ==
          Catch::Approx(reduce_network(stable.network).gscr * 0.75).epsilon(1e-12));
}

TEST_CASE("state-space converters and conventions", "[io]") {
    const auto sys = parse_system(minimal);
    const auto blk = sys.fleet().blocks[0];
    CHECK(blk.name == "lag");
    CHECK(freq_response(blk, 1.0)(0, 0) == Complex(0.5, -0.5));
    CHECK(sys.sweep.n_points == SweepSpec{}.n_points);
    CHECK(sys.network.capacities == std::vector<double>{1.0});

    const auto inj = parse_system(replace(minimal, "model: state_space", "model: state_space\n    convention: injecting"));
    CHECK(freq_response(inj.fleet().blocks[0], 1.0)(0, 0) == Complex(-0.5, 0.5));
    const auto file_level = parse_system(std::string("convention: injecting\n") + minimal);
    CHECK(freq_response(file_level.fleet().blocks[0], 1.0)(0, 0) == Complex(-0.5, 0.5));

    const auto stat = parse_system(replace(replace(replace(minimal, "A: [[-1.0]]", "A: []"), "B: [[1, 0]]", "B: []"),
                                           "C: [[1], [0]]", "D: [[0.5, 0], [0, 0.5]]"));
    CHECK(stat.fleet().blocks[0].order() == 0);
    CHECK(freq_response(stat.fleet().blocks[0], 3.0)(1, 1) == Complex(0.5, 0.0));
}

TEST_CASE("diagnostics carry positions", "[io]") {
    CHECK_THROWS_WITH(parse_system(replace(minimal, "[[-1.0]]", "[[0.1]]"), "u.sys"),
                      ContainsSubstring("open-loop unstable block") && ContainsSubstring("u.sys:5:"));
    CHECK_THROWS_WITH(parse_system(replace(minimal, "[[0, 2.0]]", "[]"), "g.sys"), ContainsSubstring("g.sys:2:"));
    CHECK_THROWS_WITH(parse_system(replace(minimal, "[[1, 0]]", "[[1]]"), "b.sys"),
                      ContainsSubstring("b.sys:8:") && ContainsSubstring("columns"));
    CHECK_THROWS_WITH(parse_system(replace(minimal, "model: state_space", "model: gfm")), ContainsSubstring("model"));
    CHECK_THROWS_WITH(parse_system(replace(minimal, "name: lag", "name: lag\n    colour: red")),
                      ContainsSubstring("unknown key 'colour'"));
    CHECK_THROWS_WITH(parse_system(replace(minimal, "2.0", "two")), ContainsSubstring("must be a number"));
    CHECK_THROWS_WITH(parse_system(std::string(minimal) + "sweep: {f_min_hz: 10, f_max_hz: 1}\n"),
                      ContainsSubstring("sweep"));
    CHECK_THROWS_WITH(parse_system("network: [unclosed", "p.sys"), ContainsSubstring("p.sys:1:"));
    CHECK_THROWS_AS(load_system("/nonexistent/x.sys"), Error);
    try {
        load_system("/nonexistent/x.sys");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }

    // Three converters declared on a two-bus network.
    std::string three = replace(minimal, "converter_buses: 1\n  ground_ties: [[0, 2.0]]",
                                "converter_buses: 2\n  lines: [[0, 1, 1.0]]\n  ground_ties: [[0, 2.0]]");
    const std::string conv = three.substr(three.find("  - name: lag"));
    three += conv + conv;
    CHECK_THROWS_WITH(parse_system(three), ContainsSubstring("3 converters given but the network has 2 converter buses"));
}

TEST_CASE("serialization round-trips exactly", "[io][property]") {
    for (const char* f : {"single_converter.sys", "three_converter_stable.sys", "three_converter_unstable.sys"}) {
        const auto a = load_system(bundled(f));
        const auto text = serialize_system(a);
        const auto b = parse_system(text);
        CHECK(serialize_system(b) == text);
        const auto fa = a.fleet(), fb = b.fleet();
        REQUIRE(fa.size() == fb.size());
        for (std::size_t k = 0; k < fa.blocks.size(); ++k) {
            CHECK(fa.blocks[k].a == fb.blocks[k].a);
            CHECK(fa.blocks[k].c == fb.blocks[k].c);
        }
        CHECK(reduce_network(a.network).m == reduce_network(b.network).m);
    }
    SystemDescription odd = parse_system(minimal);
    odd.converters[0].block.a(0, 0) = -0.1 - 1e-17 * 3;
    odd.converters[0].block.b(0, 1) = 1.0 / 3.0;
    odd.network.ground_ties[0].b = std::nextafter(2.0, 3.0);
    odd.tolerances.samples = 500;
    const auto back = parse_system(serialize_system(odd));
    CHECK(back.converters[0].block.a(0, 0) == odd.converters[0].block.a(0, 0));
    CHECK(back.converters[0].block.b(0, 1) == 1.0 / 3.0);
    CHECK(back.network.ground_ties[0].b == std::nextafter(2.0, 3.0));
    CHECK(back.tolerances.samples == 500);
}

TEST_CASE("CSV writers", "[io]") {
    const auto sys = load_system(bundled("single_converter.sys"));
    const auto rn = reduce_network(sys.network);
    SweepSpec sw = sys.sweep;
    sw.n_points = 30;
    const auto rep = decentralized_certify(sys.fleet(), rn, sw);
    const auto csv = margins_csv(rep);
    CHECK(csv.rfind("omega_rad_s,frequency_hz,converter,margin,lower_bound,shell_x,shell_z,curve_x,curve_z,verdict\n", 0) ==
          0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == rep.omegas.size() + 1);
    CHECK(margins_csv(decentralized_certify(sys.fleet(), rn, sw)) == csv);
    CHECK_THAT(report_yaml(rep), ContainsSubstring("overall_verdict: certified_stable"));
    CHECK_THAT(report_summary(rep, {"gfl1"}), ContainsSubstring("converter 1 (gfl1)"));
    const auto parsed = YAML::Load(report_yaml(rep));
    CHECK(parsed["min_margin"]["margin"].as<double>() == rep.min_margin());

    const auto seg = segment_csv(network_shell_segment(rn), 3);
    CHECK(seg == "x,z\n-3.5,12.25\n-19.25,370.5625\n-35,1225\n");

    const auto cloud = dw_shell_samples(ComplexMatrix::Identity(2, 2), SamplerSpec::with_samples(8));
    const auto shell = shell_cloud_csv(cloud);
    CHECK(shell.rfind("x,y,z\n1,0,1\n", 0) == 0);
    const auto rec = YAML::Load(shell_record_yaml(cloud, 2.0, 0));
    CHECK(rec["sample_count"].as<std::size_t>() == cloud.sample_count);
    CHECK(rec["xz_hull"].size() == cloud.xz_hull.size());

    const auto net = YAML::Load(network_record_yaml(rn));
    CHECK(net["gscr"].as<double>() == 3.5);
    CHECK(net["M"][0][0].as<double>() == 3.5);

    GncResult g;
    g.s = {{0.0, 0.0}, {0.0, 2.0}};
    g.locus = {{0.5, 0.0}, {0.25, -1.0}};
    CHECK(locus_csv(g) == "re,im\n0.5,0\n0.25,-1\n");
    CHECK(contour_csv(g) == "s_re,s_im\n0,0\n0,2\n");

    Trajectory tr;
    tr.t = {0.0, 0.5};
    tr.x = {RealVector::Zero(1), RealVector::Ones(1)};
    tr.v = {RealVector::Zero(2), RealVector::Constant(2, 0.25)};
    CHECK(trajectory_csv(tr) == "t,x0,v1_d,v1_q\n0,0,0,0\n0.5,1,0.25,0.25\n");
}

TEST_CASE("file writing", "[io]") {
    const auto dir = std::filesystem::temp_directory_path() / "dwshell_io_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_file(dir / "a.csv", "x\n1\n");
    CHECK(read_file(dir / "a.csv") == "x\n1\n");
    std::filesystem::remove_all(dir.parent_path());
}
