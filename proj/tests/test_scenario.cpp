#include "catch_amalgamated.hpp"

#include "dwshell/io.hpp"

#include <filesystem>

using namespace dwshell;
using Catch::Approx;

namespace {

SystemDescription bundled(const char* name) {
    return load_system(std::filesystem::path(DWSHELL_SOURCE_DIR) / "systems" / name);
}

StabilityReport certify(const SystemDescription& s) {
    return decentralized_certify(s.fleet(), reduce_network(s.network), s.sweep);
}

}  // namespace

TEST_CASE("single converter on an SCR 3.5 line", "[scenario]") {
    const auto s = bundled("single_converter.sys");
    const auto rep = certify(s);
    CHECK(rep.overall == OverallVerdict::certified_stable);
    CHECK(closed_loop_eigs(s.fleet(), reduce_network(s.network)).spectral_abscissa < 0.0);
    // The closest approach sits near the PLL bandwidth.
    CHECK(rad_to_hz(rep.min_result().omega) == Approx(10.0).epsilon(0.15));
}

TEST_CASE("single-converter step response rings near the margin minimum", "[scenario]") {
    const auto s = bundled("single_converter.sys");
    const auto rn = reduce_network(s.network);
    const auto cl = closed_loop_model(s.fleet(), rn);
    const auto spec = spectrum_of(cl.a_cl);
    RealVector w = RealVector::Zero(cl.b_w.cols());
    w.setConstant(0.01);
    const auto tr = simulate_step(cl, w, 1.0, 1e-4, 1);
    CHECK(rms_growth(tr.v) < 1.0);
    CHECK(response_frequency(tr, spec.spectral_abscissa) ==
          Approx(rad_to_hz(certify(s).min_result().omega)).epsilon(0.2));
}

TEST_CASE("faster PLLs bring the shell closer to the network curve", "[scenario][property]") {
    auto s = bundled("single_converter.sys");
    double prev = std::numeric_limits<double>::infinity();
    for (double pll : {2.0, 5.0, 8.0, 10.0, 15.0, 20.0, 30.0}) {
        s.converters[0].gfl.pll_bandwidth_hz = pll;
        const auto rep = certify(s);
        INFO("PLL " << pll << " Hz");
        CHECK(rep.min_margin() < prev);
        CHECK(rad_to_hz(rep.min_result().omega) == Approx(pll).epsilon(0.15));
        prev = rep.min_margin();
    }

    auto fleet = bundled("three_converter_stable.sys");
    prev = std::numeric_limits<double>::infinity();
    for (double pll : {6.0, 10.0, 14.0, 18.0, 22.0, 26.0}) {
        fleet.converters[2].gfl.pll_bandwidth_hz = pll;
        const auto rep = certify(fleet);
        INFO("fleet PLL " << pll << " Hz");
        CHECK(rep.min_result().converter == 2);
        CHECK(rep.min_margin() < prev);
        prev = rep.min_margin();
    }
}

TEST_CASE("weakening the network flips the verdict", "[scenario]") {
    const auto strong = bundled("three_converter_stable.sys");
    const auto weak = bundled("three_converter_unstable.sys");
    const auto rs = certify(strong), rw = certify(weak);
    CHECK(rs.overall == OverallVerdict::certified_stable);
    CHECK(rw.overall == OverallVerdict::not_certified);
    const auto es = closed_loop_eigs(strong.fleet(), reduce_network(strong.network));
    const auto ew = closed_loop_eigs(weak.fleet(), reduce_network(weak.network));
    CHECK(es.spectral_abscissa < 0.0);
    CHECK(ew.spectral_abscissa > 0.0);
    // The unstable pair oscillates inside the intersection band.
    REQUIRE(!rw.intersections.empty());
    CHECK(rad_to_hz(std::abs(ew.eigenvalues.front().imag())) ==
          Approx(rad_to_hz(rw.min_result().omega)).epsilon(0.2));
    CHECK(gnc_locus(weak.fleet(), reduce_network(weak.network)).encirclements == ew.unstable_count);
}
