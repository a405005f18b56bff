#pragma once

// System-description files (YAML, documented in docs/formats.md) and all
// serialization: reports, shell clouds, parabola samples, loci, trajectories.
// Doubles are written in shortest round-trip form, so output is bit-stable and
// re-loading a saved file reproduces every number exactly.

#include "dwshell/converter.hpp"
#include "dwshell/network.hpp"
#include "dwshell/oracle.hpp"
#include "dwshell/shell.hpp"
#include "dwshell/stability.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <yaml-cpp/yaml.h>

namespace dwshell {

[[noreturn]] inline void fail_io(const std::string& what) { throw Error(ErrorKind::io, what); }

enum class ConverterKind { state_space, gfl };

/// Bundled GFL parameters as written in files: bandwidths in Hz.
struct GflRecord {
    double pll_bandwidth_hz = 20.0;
    double pll_damping = 0.707;
    double current_loop_bandwidth_hz = 200.0;
    double voltage_filter_bandwidth_hz = 50.0;
    double p = 1.0;
    double q = 0.0;
    double v = 1.0;
    bool constant_power = true;

    [[nodiscard]] GflParameters parameters() const {
        return {hz_to_rad(pll_bandwidth_hz), pll_damping, hz_to_rad(current_loop_bandwidth_hz),
                hz_to_rad(voltage_filter_bandwidth_hz), p, q, v, constant_power};
    }
};

struct ConverterSpec {
    std::string name;
    ConverterKind kind = ConverterKind::state_space;
    Convention convention = Convention::absorbing;  // of the matrices as written
    LtiBlock block;                                 // state_space: as written in the file
    GflRecord gfl;

    /// The block in the absorbing convention used by the analysis.
    [[nodiscard]] LtiBlock to_block() const {
        LtiBlock b = kind == ConverterKind::gfl ? bundled_gfl_model(gfl.parameters(), name) : block;
        b.name = name;
        if (kind == ConverterKind::state_space && convention == Convention::injecting) b = negated(std::move(b));
        return b;
    }
};

struct Tolerances {
    double tol_sep = 1e-6;
    std::optional<int> samples;  // shell sampler density for sampled outputs
};

struct SystemDescription {
    std::string name;
    NetworkDescription network;
    std::vector<ConverterSpec> converters;
    SweepSpec sweep;
    Tolerances tolerances;

    [[nodiscard]] ConverterFleet fleet() const {
        ConverterFleet f;
        for (const auto& c : converters) f.blocks.push_back(c.to_block());
        return f;
    }
};

namespace detail {

class YamlReader {
public:
    explicit YamlReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        const auto m = at.Mark();
        if (m.line >= 0) fail_input(fmt::format("{}:{}:{}: {}", source_, m.line + 1, m.column + 1, what));
        fail_input(fmt::format("{}: {}", source_, what));
    }

    YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& where) const {
        if (!parent.IsMap()) fail(parent, where + " must be a mapping");
        const YAML::Node n = parent[key];
        if (!n) fail(parent, fmt::format("{}: missing key '{}'", where, key));
        return n;
    }

    void only_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
        for (const auto& kv : map) {
            const auto k = kv.first.as<std::string>();
            if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
                fail(kv.first, fmt::format("{}: unknown key '{}'", where, k));
        }
    }

    double number(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a number");
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(n, what + " must be finite");
            return v;
        } catch (const YAML::Exception&) {
            fail(n, fmt::format("{} must be a number (got '{}')", what, n.Scalar()));
        }
    }

    int integer(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be an integer");
        try {
            return n.as<int>();
        } catch (const YAML::Exception&) {
            fail(n, fmt::format("{} must be an integer (got '{}')", what, n.Scalar()));
        }
    }

    bool boolean(const YAML::Node& n, const std::string& what) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be true or false");
        }
    }

    std::string text(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.Scalar();
    }

    /// Row-major nested array. rows/cols < 0 accept any size; an empty list is a
    /// matrix with zero rows and `cols` columns.
    RealMatrix matrix(const YAML::Node& n, const std::string& what, Eigen::Index rows, Eigen::Index cols) const {
        if (!n.IsSequence()) fail(n, what + " must be a list of rows");
        const auto r = static_cast<Eigen::Index>(n.size());
        if (rows >= 0 && r != rows) fail(n, fmt::format("{} must have {} rows (got {})", what, rows, r));
        if (r == 0) return RealMatrix(0, std::max<Eigen::Index>(cols, 0));
        Eigen::Index c = -1;
        RealMatrix m;
        for (Eigen::Index i = 0; i < r; ++i) {
            const YAML::Node row = n[static_cast<std::size_t>(i)];
            if (!row.IsSequence()) fail(row, fmt::format("{} row {} must be a list", what, i));
            if (c < 0) {
                c = static_cast<Eigen::Index>(row.size());
                if (cols >= 0 && c != cols) fail(row, fmt::format("{} must have {} columns (got {})", what, cols, c));
                m.resize(r, c);
            } else if (static_cast<Eigen::Index>(row.size()) != c) {
                fail(row, fmt::format("{} row {} has {} entries, expected {}", what, i, row.size(), c));
            }
            for (Eigen::Index j = 0; j < c; ++j)
                m(i, j) = number(row[static_cast<std::size_t>(j)], fmt::format("{}[{}][{}]", what, i, j));
        }
        return m;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

inline Convention parse_convention(const YamlReader& rd, const YAML::Node& n) {
    const std::string s = rd.text(n, "convention");
    if (s == "absorbing") return Convention::absorbing;
    if (s == "injecting") return Convention::injecting;
    rd.fail(n, fmt::format("convention must be 'absorbing' or 'injecting' (got '{}')", s));
}

inline const char* convention_name(Convention c) { return c == Convention::absorbing ? "absorbing" : "injecting"; }

}  // namespace detail

/// Parses and fully validates a system description. `source` names the input
/// in diagnostics ("file:line:column: message").
inline SystemDescription parse_system(const std::string& text, const std::string& source = "<input>") {
    detail::YamlReader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        fail_input(fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
    }
    if (!root.IsMap()) fail_input(source + ": top level must be a mapping");
    rd.only_keys(root, {"name", "convention", "network", "converters", "sweep", "tolerances"}, "system");

    SystemDescription sys;
    if (root["name"]) sys.name = rd.text(root["name"], "name");
    Convention file_conv = Convention::absorbing;
    if (root["convention"]) file_conv = detail::parse_convention(rd, root["convention"]);

    // Network.
    const YAML::Node net = rd.require(root, "network", "system");
    rd.only_keys(net, {"converter_buses", "interior_buses", "lines", "ground_ties", "capacities"}, "network");
    auto& nd = sys.network;
    nd.n_converter_buses = rd.integer(rd.require(net, "converter_buses", "network"), "network.converter_buses");
    if (net["interior_buses"]) nd.n_interior_buses = rd.integer(net["interior_buses"], "network.interior_buses");
    if (const YAML::Node lines = net["lines"]) {
        if (!lines.IsSequence()) rd.fail(lines, "network.lines must be a list of [from, to, b]");
        for (std::size_t k = 0; k < lines.size(); ++k) {
            const YAML::Node l = lines[k];
            if (!l.IsSequence() || l.size() != 3) rd.fail(l, fmt::format("network.lines[{}] must be [from, to, b]", k));
            nd.lines.push_back({rd.integer(l[0], "line bus"), rd.integer(l[1], "line bus"), rd.number(l[2], "line susceptance")});
        }
    }
    if (const YAML::Node ties = net["ground_ties"]) {
        if (!ties.IsSequence()) rd.fail(ties, "network.ground_ties must be a list of [bus, b]");
        for (std::size_t k = 0; k < ties.size(); ++k) {
            const YAML::Node t = ties[k];
            if (!t.IsSequence() || t.size() != 2) rd.fail(t, fmt::format("network.ground_ties[{}] must be [bus, b]", k));
            nd.ground_ties.push_back({rd.integer(t[0], "tie bus"), rd.number(t[1], "tie susceptance")});
        }
    }
    if (const YAML::Node caps = net["capacities"]) {
        if (!caps.IsSequence()) rd.fail(caps, "network.capacities must be a list");
        for (std::size_t k = 0; k < caps.size(); ++k) nd.capacities.push_back(rd.number(caps[k], "capacity"));
    } else {
        nd.capacities.assign(static_cast<std::size_t>(std::max(0, nd.n_converter_buses)), 1.0);
    }
    try {
        build_laplacian(nd);
    } catch (const Error& e) {
        rd.fail(net, e.what());
    }

    // Converters.
    const YAML::Node convs = rd.require(root, "converters", "system");
    if (!convs.IsSequence() || convs.size() == 0) rd.fail(convs, "converters must be a non-empty list");
    for (std::size_t k = 0; k < convs.size(); ++k) {
        const YAML::Node c = convs[k];
        const std::string where = fmt::format("converters[{}]", k);
        if (!c.IsMap()) rd.fail(c, where + " must be a mapping");
        ConverterSpec spec;
        spec.name = c["name"] ? rd.text(c["name"], where + ".name") : fmt::format("converter{}", k + 1);
        const std::string model = rd.text(rd.require(c, "model", where), where + ".model");
        if (model == "gfl") {
            rd.only_keys(c, {"name", "model", "pll_bandwidth_hz", "pll_damping", "current_loop_bandwidth_hz",
                             "voltage_filter_bandwidth_hz", "p", "q", "v", "constant_power"},
                         where);
            spec.kind = ConverterKind::gfl;
            auto& g = spec.gfl;
            const auto opt_num = [&](const char* key, double& dst) {
                if (c[key]) dst = rd.number(c[key], where + "." + key);
            };
            opt_num("pll_bandwidth_hz", g.pll_bandwidth_hz);
            opt_num("pll_damping", g.pll_damping);
            opt_num("current_loop_bandwidth_hz", g.current_loop_bandwidth_hz);
            opt_num("voltage_filter_bandwidth_hz", g.voltage_filter_bandwidth_hz);
            opt_num("p", g.p);
            opt_num("q", g.q);
            opt_num("v", g.v);
            if (c["constant_power"]) g.constant_power = rd.boolean(c["constant_power"], where + ".constant_power");
        } else if (model == "state_space") {
            rd.only_keys(c, {"name", "model", "convention", "A", "B", "C", "D"}, where);
            spec.kind = ConverterKind::state_space;
            spec.convention = c["convention"] ? detail::parse_convention(rd, c["convention"]) : file_conv;
            auto& b = spec.block;
            b.a = rd.matrix(rd.require(c, "A", where), where + ".A", -1, -1);
            const Eigen::Index n = b.a.rows();
            if (b.a.cols() != n && n > 0) rd.fail(c["A"], where + ".A must be square");
            b.b = rd.matrix(rd.require(c, "B", where), where + ".B", n, 2);
            if (n == 0 && (!c["C"] || (c["C"].IsSequence() && c["C"].size() == 0)))
                b.c = RealMatrix(2, 0);
            else
                b.c = rd.matrix(rd.require(c, "C", where), where + ".C", 2, n);
            b.d = c["D"] ? rd.matrix(c["D"], where + ".D", 2, 2) : RealMatrix::Zero(2, 2);
        } else {
            rd.fail(c["model"], fmt::format("{}.model must be 'gfl' or 'state_space' (got '{}')", where, model));
        }
        try {
            validate(spec.to_block());
        } catch (const Error& e) {
            rd.fail(c, fmt::format("{}: {}", where, e.what()));
        }
        sys.converters.push_back(std::move(spec));
    }
    if (static_cast<int>(sys.converters.size()) != nd.n_converter_buses)
        rd.fail(convs, fmt::format("{} converters given but the network has {} converter buses", sys.converters.size(),
                                   nd.n_converter_buses));

    if (const YAML::Node sw = root["sweep"]) {
        rd.only_keys(sw, {"f_min_hz", "f_max_hz", "n_points", "adaptive", "include_dc"}, "sweep");
        if (sw["f_min_hz"]) sys.sweep.f_min_hz = rd.number(sw["f_min_hz"], "sweep.f_min_hz");
        if (sw["f_max_hz"]) sys.sweep.f_max_hz = rd.number(sw["f_max_hz"], "sweep.f_max_hz");
        if (sw["n_points"]) sys.sweep.n_points = rd.integer(sw["n_points"], "sweep.n_points");
        if (sw["adaptive"]) sys.sweep.adaptive = rd.boolean(sw["adaptive"], "sweep.adaptive");
        if (sw["include_dc"]) sys.sweep.include_dc = rd.boolean(sw["include_dc"], "sweep.include_dc");
        try {
            validate(sys.sweep);
        } catch (const Error& e) {
            rd.fail(sw, e.what());
        }
    }
    if (const YAML::Node tol = root["tolerances"]) {
        rd.only_keys(tol, {"tol_sep", "samples"}, "tolerances");
        if (tol["tol_sep"]) {
            sys.tolerances.tol_sep = rd.number(tol["tol_sep"], "tolerances.tol_sep");
            if (!(sys.tolerances.tol_sep >= 0.0)) rd.fail(tol["tol_sep"], "tolerances.tol_sep must be >= 0");
        }
        if (tol["samples"]) {
            sys.tolerances.samples = rd.integer(tol["samples"], "tolerances.samples");
            if (*sys.tolerances.samples < 8) rd.fail(tol["samples"], "tolerances.samples must be >= 8");
        }
    }
    return sys;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) fail_io(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out) fail_io(fmt::format("write to '{}' failed", path.string()));
}

inline SystemDescription load_system(const std::filesystem::path& path) {
    return parse_system(read_file(path), path.string());
}

namespace detail {

inline std::string num(double v) { return fmt::format("{}", v); }

inline std::string matrix_yaml(const RealMatrix& m, const std::string& indent) {
    if (m.rows() == 0) return "[]";
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += "\n" + indent + "- [";
        for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? ", " : "") + num(m(i, j));
        out += "]";
    }
    return out;
}

}  // namespace detail

/// Canonical text of a system description; parse_system(serialize_system(s))
/// reproduces s exactly.
inline std::string serialize_system(const SystemDescription& s) {
    using detail::num;
    std::string o;
    if (!s.name.empty()) o += fmt::format("name: \"{}\"\n", s.name);
    const auto& n = s.network;
    o += "network:\n";
    o += fmt::format("  converter_buses: {}\n  interior_buses: {}\n", n.n_converter_buses, n.n_interior_buses);
    o += "  lines:";
    if (n.lines.empty()) o += " []";
    for (const auto& l : n.lines) o += fmt::format("\n    - [{}, {}, {}]", l.from, l.to, num(l.b));
    o += "\n  ground_ties:";
    if (n.ground_ties.empty()) o += " []";
    for (const auto& g : n.ground_ties) o += fmt::format("\n    - [{}, {}]", g.bus, num(g.b));
    o += "\n  capacities: [";
    for (std::size_t k = 0; k < n.capacities.size(); ++k) o += (k ? ", " : "") + num(n.capacities[k]);
    o += "]\nconverters:\n";
    for (const auto& c : s.converters) {
        o += fmt::format("  - name: \"{}\"\n", c.name);
        if (c.kind == ConverterKind::gfl) {
            const auto& g = c.gfl;
            o += "    model: gfl\n";
            o += fmt::format("    pll_bandwidth_hz: {}\n", num(g.pll_bandwidth_hz));
            o += fmt::format("    pll_damping: {}\n", num(g.pll_damping));
            o += fmt::format("    current_loop_bandwidth_hz: {}\n", num(g.current_loop_bandwidth_hz));
            o += fmt::format("    voltage_filter_bandwidth_hz: {}\n", num(g.voltage_filter_bandwidth_hz));
            o += fmt::format("    p: {}\n    q: {}\n    v: {}\n", num(g.p), num(g.q), num(g.v));
            o += fmt::format("    constant_power: {}\n", g.constant_power ? "true" : "false");
        } else {
            o += "    model: state_space\n";
            o += fmt::format("    convention: {}\n", detail::convention_name(c.convention));
            o += "    A: " + detail::matrix_yaml(c.block.a, "      ") + "\n";
            o += "    B: " + detail::matrix_yaml(c.block.b, "      ") + "\n";
            o += "    C: " + detail::matrix_yaml(c.block.c, "      ") + "\n";
            o += "    D: " + detail::matrix_yaml(c.block.d, "      ") + "\n";
        }
    }
    const auto& w = s.sweep;
    o += fmt::format("sweep:\n  f_min_hz: {}\n  f_max_hz: {}\n  n_points: {}\n  adaptive: {}\n  include_dc: {}\n",
                     num(w.f_min_hz), num(w.f_max_hz), w.n_points, w.adaptive ? "true" : "false",
                     w.include_dc ? "true" : "false");
    o += fmt::format("tolerances:\n  tol_sep: {}\n", num(s.tolerances.tol_sep));
    if (s.tolerances.samples) o += fmt::format("  samples: {}\n", *s.tolerances.samples);
    return o;
}

// ---- CSV and record writers ----

inline std::string shell_cloud_csv(const ShellCloud& c) {
    std::string o = "x,y,z\n";
    for (const auto& p : c.points) o += fmt::format("{},{},{}\n", p.x, p.y, p.z);
    return o;
}

inline std::string shell_record_yaml(const ShellCloud& c, double omega, int converter) {
    std::string o = fmt::format("matrix_dim: {}\nsampler: \"{}\"\nsample_count: {}\nomega_rad_s: {}\nfrequency_hz: {}\n",
                                c.matrix_dim, c.sampler_id, c.sample_count, omega, rad_to_hz(omega));
    o += fmt::format("converter: {}\nxz_hull:\n", converter);
    for (const auto& v : c.xz_hull) o += fmt::format("  - [{}, {}]\n", v.x, v.y);
    return o;
}

inline std::string segment_csv(const ParabolaSegment& seg, int n = 200) {
    std::string o = "x,z\n";
    for (double u : segment_samples(seg, n)) o += fmt::format("{},{}\n", u, u * u);
    return o;
}

inline std::string network_record_yaml(const ReducedNetwork& rn) {
    std::string o = fmt::format("gscr: {}\nsize: {}\nB_r:{}\nS: [", rn.gscr, rn.size(), detail::matrix_yaml(rn.b_r, "  "));
    for (Eigen::Index k = 0; k < rn.s.size(); ++k) o += (k ? ", " : "") + detail::num(rn.s(k));
    o += "]\nM:" + detail::matrix_yaml(rn.m, "  ") + "\n";
    return o;
}

inline std::string margins_csv(const StabilityReport& r) {
    std::string o = "omega_rad_s,frequency_hz,converter,margin,lower_bound,shell_x,shell_z,curve_x,curve_z,verdict\n";
    for (const auto& row : r.results)
        for (const auto& s : row)
            o += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.omega, rad_to_hz(s.omega), s.converter, s.margin,
                             s.lower_bound, s.nearest_shell_point.x, s.nearest_shell_point.y, s.nearest_curve_point.x,
                             s.nearest_curve_point.y, to_string(s.verdict));
    return o;
}

inline std::string report_yaml(const StabilityReport& r) {
    const auto& m = r.min_result();
    std::string o = fmt::format("method: {}\noverall_verdict: {}\ngscr: {}\ntol_sep: {}\nfrequencies: {}\n", r.method,
                                to_string(r.overall), r.gscr, r.tol_sep, r.omegas.size());
    o += fmt::format("min_margin:\n  margin: {}\n  omega_rad_s: {}\n  frequency_hz: {}\n  converter: {}\n", m.margin,
                     m.omega, rad_to_hz(m.omega), m.converter);
    o += "critical_frequencies:";
    if (r.critical.empty()) o += " []";
    for (const auto& c : r.critical)
        o += fmt::format("\n  - {{omega_rad_s: {}, frequency_hz: {}, converter: {}, margin: {}}}", c.omega,
                         rad_to_hz(c.omega), c.converter, c.margin);
    o += "\nintersections:";
    if (r.intersections.empty()) o += " []";
    for (const auto& c : r.intersections)
        o += fmt::format("\n  - {{omega_rad_s: {}, frequency_hz: {}, converter: {}, margin: {}}}", c.omega,
                         rad_to_hz(c.omega), c.converter, c.margin);
    return o + "\n";
}

/// Aligned-column summary for terminals.
inline std::string report_summary(const StabilityReport& r, const std::vector<std::string>& names = {}) {
    const auto label = [&](int i) {
        if (i == aggregate_index) return std::string("aggregate");
        if (i >= 0 && static_cast<std::size_t>(i) < names.size() && !names[static_cast<std::size_t>(i)].empty())
            return fmt::format("{} ({})", i + 1, names[static_cast<std::size_t>(i)]);
        return fmt::format("{}", i + 1);
    };
    const auto& m = r.min_result();
    std::string o = fmt::format("method        {}\nverdict       {}\ngSCR          {:.6g}\nfrequencies   {}\n", r.method,
                                to_string(r.overall), r.gscr, r.omegas.size());
    o += fmt::format("min margin    {:.6g} at {:.4f} Hz, converter {}\n", m.margin, rad_to_hz(m.omega), label(m.converter));
    o += fmt::format("\n{:>12}  {:<20}  {:>14}\n", "freq [Hz]", "converter", "margin");
    const std::size_t show = std::min<std::size_t>(r.critical.size(), 8);
    for (std::size_t k = 0; k < show; ++k)
        o += fmt::format("{:>12.4f}  {:<20}  {:>14.6g}\n", rad_to_hz(r.critical[k].omega), label(r.critical[k].converter),
                         r.critical[k].margin);
    if (!r.intersections.empty()) {
        o += fmt::format("\nintersections ({}):\n", r.intersections.size());
        for (const auto& c : r.intersections)
            o += fmt::format("{:>12.4f}  {:<20}  {:>14.6g}\n", rad_to_hz(c.omega), label(c.converter), c.margin);
    }
    return o;
}

inline std::string locus_csv(const GncResult& g) {
    std::string o = "re,im\n";
    for (const auto& f : g.locus) o += fmt::format("{},{}\n", f.real(), f.imag());
    return o;
}

inline std::string contour_csv(const GncResult& g) {
    std::string o = "s_re,s_im\n";
    for (const auto& s : g.s) o += fmt::format("{},{}\n", s.real(), s.imag());
    return o;
}

inline std::string eigenvalues_csv(const ClosedLoopSpectrum& s) {
    std::string o = "re,im\n";
    for (const auto& l : s.eigenvalues) o += fmt::format("{},{}\n", l.real(), l.imag());
    return o;
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::string o = "t";
    const auto nx = tr.x.empty() ? 0 : tr.x.front().size();
    const auto nv = tr.v.empty() ? 0 : tr.v.front().size();
    for (Eigen::Index i = 0; i < nx; ++i) o += fmt::format(",x{}", i);
    for (Eigen::Index i = 0; i < nv; ++i) o += fmt::format(",v{}_{}", i / 2 + 1, i % 2 == 0 ? "d" : "q");
    o += "\n";
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        o += fmt::format("{}", tr.t[k]);
        for (Eigen::Index i = 0; i < nx; ++i) o += fmt::format(",{}", tr.x[k](i));
        for (Eigen::Index i = 0; i < nv; ++i) o += fmt::format(",{}", tr.v[k](i));
        o += "\n";
    }
    return o;
}

}  // namespace dwshell
