// dwshell: command-line front end for system files.
//
// Exit codes: 0 certified / stable, 1 not certified / unstable, 2 inconclusive,
// 3 input error, 4 numerical failure, 5 file I/O failure.

#include "dwshell/dwshell.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace dwshell;

namespace {

enum Exit : int { ok = 0, negative = 1, inconclusive = 2, input_error = 3, numerical_error = 4, io_error = 5 };

struct Common {
    std::string system;
    std::string out;
    std::string freqs;
    std::optional<bool> adaptive;
    std::optional<int> samples;
    std::optional<double> tol;
    std::string format = "report";
};

struct Loaded {
    SystemDescription sys;
    ConverterFleet fleet;
    ReducedNetwork rn;
    MarginOptions margin;
};

SweepSpec parse_freqs(const std::string& text, SweepSpec base) {
    double lo = 0, hi = 0;
    int n = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &lo, &hi, &n, &tail) != 3)
        fail_input(fmt::format("--freqs expects F_MIN:F_MAX:N (got '{}')", text));
    base.f_min_hz = lo;
    base.f_max_hz = hi;
    base.n_points = n;
    validate(base);
    return base;
}

Loaded load(const Common& c) {
    Loaded l;
    l.sys = load_system(c.system);
    if (!c.freqs.empty()) l.sys.sweep = parse_freqs(c.freqs, l.sys.sweep);
    if (c.adaptive) l.sys.sweep.adaptive = *c.adaptive;
    if (c.tol) {
        if (!(*c.tol >= 0.0)) fail_input("--tol must be >= 0");
        l.sys.tolerances.tol_sep = *c.tol;
    }
    if (c.samples) l.sys.tolerances.samples = *c.samples;
    l.fleet = l.sys.fleet();
    l.rn = reduce_network(l.sys.network);
    l.margin.tol_sep = l.sys.tolerances.tol_sep;
    return l;
}

void emit(const Common& c, const std::string& file, const std::string& content) {
    if (!c.out.empty()) write_file(fs::path(c.out) / file, content);
}

std::vector<std::string> names(const Loaded& l) {
    std::vector<std::string> n;
    for (const auto& b : l.fleet.blocks) n.push_back(b.name);
    return n;
}

int exit_for(OverallVerdict v) {
    switch (v) {
        case OverallVerdict::certified_stable: return ok;
        case OverallVerdict::not_certified: return negative;
        case OverallVerdict::inconclusive: return inconclusive;
    }
    return inconclusive;
}

int exit_for(Verdict v) {
    switch (v) {
        case Verdict::separated: return ok;
        case Verdict::intersecting: return negative;
        case Verdict::inconclusive: return inconclusive;
    }
    return inconclusive;
}

int cmd_certify(const Common& c, const std::string& method) {
    const Loaded l = load(c);
    const StabilityReport rep = method == "centralized" ? centralized_certify(l.fleet, l.rn, l.sys.sweep, l.margin)
                                                        : decentralized_certify(l.fleet, l.rn, l.sys.sweep, l.margin);
    const auto csv = margins_csv(rep);
    emit(c, "report.yaml", report_yaml(rep));
    emit(c, "margins.csv", csv);
    emit(c, "segment.csv", segment_csv(network_shell_segment(l.rn)));
    emit(c, "network.yaml", network_record_yaml(l.rn));
    fmt::print("{}", c.format == "csv" ? csv : report_summary(rep, names(l)));
    return exit_for(rep.overall);
}

int cmd_shell(const Common& c, double freq_hz, int converter) {
    const Loaded l = load(c);
    if (!(std::isfinite(freq_hz) && freq_hz >= 0.0)) fail_input("--freq must be a non-negative frequency in Hz");
    if (converter < 0 || converter > l.fleet.size())
        fail_input(fmt::format("--converter must be in 1..{} (0 for the aggregate)", l.fleet.size()));
    const double omega = hz_to_rad(freq_hz);
    const ComplexMatrix y = converter == 0 ? aggregate_fleet(l.fleet, omega)
                                           : freq_response(l.fleet.blocks[static_cast<std::size_t>(converter - 1)], omega);
    const SamplerSpec sampler = l.sys.tolerances.samples ? SamplerSpec::with_samples(*l.sys.tolerances.samples) : SamplerSpec{};
    const ShellCloud cloud = dw_shell_samples(y, sampler);
    const auto seg = network_shell_segment(l.rn);
    const SeparationResult r = xz_margin(y, seg, l.margin);
    const int label = converter == 0 ? aggregate_index : converter - 1;
    const auto csv = shell_cloud_csv(cloud);
    emit(c, "shell.csv", csv);
    emit(c, "shell.yaml", shell_record_yaml(cloud, omega, label));
    emit(c, "segment.csv", segment_csv(seg));
    if (c.format == "csv") {
        fmt::print("{}", csv);
    } else {
        fmt::print("converter     {}\nfrequency     {} Hz\nsamples       {} ({})\ngSCR          {:.6g}\n",
                   converter == 0 ? std::string("aggregate") : l.fleet.blocks[static_cast<std::size_t>(converter - 1)].name,
                   freq_hz, cloud.sample_count, cloud.sampler_id, l.rn.gscr);
        fmt::print("margin        {:.6g}\nverdict       {}\n", r.margin, to_string(r.verdict));
    }
    return exit_for(r.verdict);
}

int cmd_gscr(const Common& c) {
    const Loaded l = load(c);
    emit(c, "network.yaml", network_record_yaml(l.rn));
    emit(c, "segment.csv", segment_csv(network_shell_segment(l.rn)));
    if (c.format == "csv")
        fmt::print("gscr\n{}\n", l.rn.gscr);
    else
        fmt::print("{}\n", l.rn.gscr);
    return ok;
}

int cmd_verify(const Common& c) {
    const Loaded l = load(c);
    const auto spec = closed_loop_eigs(l.fleet, l.rn);
    const auto gnc = gnc_locus(l.fleet, l.rn);
    const bool agree = gnc.encirclements == spec.unstable_count;
    const std::string yaml =
        fmt::format("spectral_abscissa: {}\nunstable_eigenvalues: {}\nencirclements: {}\nwinding: {}\nindented: {}\n"
                    "contour_radius: {}\nagree: {}\n",
                    spec.spectral_abscissa, spec.unstable_count, gnc.encirclements, gnc.winding,
                    gnc.indented ? "true" : "false", gnc.radius, agree ? "true" : "false");
    emit(c, "verify.yaml", yaml);
    emit(c, "locus.csv", locus_csv(gnc));
    emit(c, "contour.csv", contour_csv(gnc));
    emit(c, "eigenvalues.csv", eigenvalues_csv(spec));
    if (c.format == "csv") {
        fmt::print("{}", eigenvalues_csv(spec));
    } else {
        const Complex lead = spec.eigenvalues.empty() ? Complex{} : spec.eigenvalues.front();
        fmt::print("spectral abscissa   {:.6g} (leading pair at {:.4f} Hz)\n", spec.spectral_abscissa,
                   rad_to_hz(std::abs(lead.imag())));
        fmt::print("unstable eigenvalues {}\nencirclements       {}\nverdict             {}\n", spec.unstable_count,
                   gnc.encirclements, spec.unstable_count == 0 ? "stable" : "unstable");
    }
    if (!agree)
        fail_numerical(fmt::format("eigenvalue count {} and GNC encirclements {} disagree", spec.unstable_count,
                                   gnc.encirclements));
    return spec.unstable_count == 0 ? ok : negative;
}

int cmd_simulate(const Common& c, double t_end, double dt, double step) {
    const Loaded l = load(c);
    const auto cl = closed_loop_model(l.fleet, l.rn);
    const auto spec = spectrum_of(cl.a_cl);
    if (!(t_end > 0.0) || !(dt > 0.0)) fail_input("--t-end and --dt must be positive");
    const int record_every = std::max(1, static_cast<int>(std::ceil(t_end / dt / 20000.0)));
    RealVector w = RealVector::Zero(cl.b_w.cols());
    w.setConstant(step);  // d- and q-axis current step at every converter bus; d alone misses the PLL mode
    const auto tr = simulate_step(cl, w, t_end, dt, record_every);
    if (tr.halvings > 0)
        std::cerr << fmt::format("dwshell: warning: dt halved {} times to {} s for RK4 stability\n", tr.halvings, tr.dt);
    const double f = response_frequency(tr, spec.spectral_abscissa);
    const double growth = tr.v.size() >= 8 ? rms_growth(tr.v) : 1.0;
    const auto csv = trajectory_csv(tr);
    emit(c, "trajectory.csv", csv);
    emit(c, "simulate.yaml",
         fmt::format("t_end: {}\ndt: {}\nhalvings: {}\nstep: {}\ndominant_frequency_hz: {}\ngrowth_ratio: {}\n"
                     "spectral_abscissa: {}\n",
                     tr.t.back(), tr.dt, tr.halvings, step, f, growth, spec.spectral_abscissa));
    if (c.format == "csv") {
        fmt::print("{}", csv);
    } else {
        fmt::print("samples             {} (dt {:.3g} s, {} halvings)\n", tr.t.size(), tr.dt, tr.halvings);
        fmt::print("dominant frequency  {:.4f} Hz\ngrowth (rms ratio)  {:.6g}\nspectral abscissa   {:.6g}\n", f, growth,
                   spec.spectral_abscissa);
        fmt::print("verdict             {}\n", spec.spectral_abscissa < 0.0 ? "stable" : "unstable");
    }
    return spec.spectral_abscissa < 0.0 ? ok : negative;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("system", c.system, "System description file")->required();
    sub->add_option("--out", c.out, "Directory for machine-readable outputs");
    sub->add_option("--freqs", c.freqs, "Sweep override F_MIN:F_MAX:N (Hz)");
    sub->add_flag("--adaptive,!--no-adaptive", c.adaptive, "Adaptive refinement near margin minima");
    sub->add_option("--samples", c.samples, "Shell sampler density")->check(CLI::Range(8, 100000000));
    sub->add_option("--tol", c.tol, "Separation tolerance tol_sep");
    sub->add_option("--format", c.format, "Standard-output format")->check(CLI::IsMember({"csv", "report"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Davis-Wielandt shell small-signal stability analysis"};
    app.require_subcommand(1);
    Common c;

    std::string method = "decentralized";
    auto* certify = app.add_subcommand("certify", "Sweep the separation test over frequency");
    add_common(certify, c);
    certify->add_option("--method", method, "decentralized or centralized")
        ->check(CLI::IsMember({"decentralized", "centralized"}));

    double freq_hz = 0.0;
    int converter = 1;
    auto* shell = app.add_subcommand("shell", "Shell cloud of one converter at one frequency");
    add_common(shell, c);
    shell->add_option("--freq", freq_hz, "Frequency in Hz")->required();
    shell->add_option("--converter", converter, "Converter index (1-based, 0 for the aggregate)");

    auto* gscr = app.add_subcommand("gscr", "Generalized short-circuit ratio of the network");
    add_common(gscr, c);

    auto* verify = app.add_subcommand("verify", "Closed-loop eigenvalues and generalized Nyquist count");
    add_common(verify, c);

    double t_end = 2.0, dt = 1e-4, step = 0.01;
    auto* simulate = app.add_subcommand("simulate", "Linear time-domain response to a current-injection step");
    add_common(simulate, c);
    simulate->add_option("--t-end", t_end, "Simulated time in s");
    simulate->add_option("--dt", dt, "Initial RK4 step in s (halved while too large)");
    simulate->add_option("--step", step, "d-axis current step at each converter bus (pu)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input_error;
    }

    try {
        if (certify->parsed()) return cmd_certify(c, method);
        if (shell->parsed()) return cmd_shell(c, freq_hz, converter);
        if (gscr->parsed()) return cmd_gscr(c);
        if (verify->parsed()) return cmd_verify(c);
        if (simulate->parsed()) return cmd_simulate(c, t_end, dt, step);
    } catch (const Error& e) {
        std::cerr << "dwshell: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::invalid_input: return input_error;
            case ErrorKind::numerical: return numerical_error;
            case ErrorKind::io: return io_error;
        }
    } catch (const std::exception& e) {
        std::cerr << "dwshell: " << e.what() << "\n";
        return numerical_error;
    }
    return input_error;
}
