#include "runs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "qvdp/entanglement.hpp"

#ifndef QVDP_VERSION
#define QVDP_VERSION "0.0.0"
#endif

namespace qvdp::scan {

namespace fs = std::filesystem;

int thread_count_from_env()
{
    const char* v = std::getenv(threads_env);
    if (!v || !*v)
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096)
        throw ConfigError(std::string(threads_env) + " = \"" + v + "\" invalid; accepted: integer in [1, 4096]");
    return static_cast<int>(n);
}

std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes)
{
    std::vector<std::vector<double>> pts{{}};
    for (const auto& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : pts)
            for (int i = 0; i < a.count; ++i) {
                auto q = p;
                q.push_back(a.value(i));
                next.push_back(std::move(q));
            }
        pts = std::move(next);
    }
    return pts;
}

namespace {

std::vector<std::string> axis_names(const RunConfig& cfg)
{
    std::vector<std::string> n;
    for (const auto& a : cfg.axes)
        n.push_back(a.parameter);
    return n;
}

RunConfig at_point(const RunConfig& cfg, const std::vector<double>& params)
{
    RunConfig c = cfg;
    for (std::size_t k = 0; k < params.size(); ++k)
        apply_parameter(c, cfg.axes[k].parameter, params[k]);
    return c;
}

template <class Row>
std::size_t count_failed(const std::vector<Row>& rows)
{
    std::size_t n = 0;
    for (const auto& r : rows)
        n += r.status.ok ? 0 : 1;
    return n;
}

struct Solved {
    SteadyStateResult steady;
    DensityMatrix first;
};

Solved solve(const RunConfig& c)
{
    c.spec.validate();
    const Liouvillian l = build_liouvillian(c.spec);
    SteadyStateResult ss = steady_state(l, c.solver.options());
    DensityMatrix first = c.spec.topology == Topology::single ? ss.rho : partial_trace(ss.rho, 0);
    return {std::move(ss), std::move(first)};
}

QuantumRow quantum_point(const RunConfig& cfg, const std::vector<double>& params, bool keep_field)
{
    QuantumRow row;
    row.params = params;
    try {
        const RunConfig c = at_point(cfg, params);
        const Solved s = solve(c);
        row.method = s.steady.method;
        row.residual = s.steady.residual;
        row.mean_n1 = expectation(s.first, number_op(c.spec.cutoff)).real();
        PhaseField w = wigner(s.first, c.grid);
        const LobeReport rep = classify(w, c.classify);
        row.classification = rep.classification;
        row.delta_y = rep.delta_y;
        row.n_maxima = static_cast<int>(rep.maxima.size());
        if (keep_field)
            row.wigner = std::move(w);
    } catch (const std::exception& e) {
        row.status = {false, e.what()};
    }
    return row;
}

SweepTable run_quantum_grid(const RunConfig& cfg, int threads)
{
    const auto pts = sweep_points(cfg.axes);
    SweepTable t;
    t.axes = axis_names(cfg);
    t.rows.resize(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) { t.rows[i] = quantum_point(cfg, pts[i], cfg.dump_fields); });
    return t;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += (ch == '\n' || ch == '\r') ? ' ' : ch;
    }
    return out + "\"";
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "nan"; }

void write_header(std::ostream& os, const std::vector<std::string>& axes, const char* rest)
{
    for (const auto& a : axes)
        os << a << ',';
    os << rest << '\n';
}

void write_params(std::ostream& os, const std::vector<double>& p)
{
    for (double v : p)
        os << format_number(v) << ',';
}

void write_status(std::ostream& os, const PointStatus& s)
{
    os << (s.ok ? "ok" : "failed") << ',' << csv_field(s.message) << '\n';
}

std::string point_tag(std::size_t i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return buf;
}

class OutputDir {
public:
    explicit OutputDir(const std::string& root) : root_(root) { fs::create_directories(root_); }

    std::ofstream open(const std::string& rel, bool binary = false)
    {
        const fs::path p = root_ / rel;
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
        if (!f)
            throw std::runtime_error("cannot write " + p.string());
        files_.push_back(rel);
        return f;
    }

    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

void write_field(OutputDir& out, const std::string& stem, const PhaseField& f)
{
    auto bin = out.open(stem + ".bin", true);
    write_binary(f, bin);
}

}  // namespace

std::size_t SweepTable::failed() const { return count_failed(rows); }
std::size_t NegativityTable::failed() const { return count_failed(rows); }
std::size_t SdeTable::failed() const { return count_failed(rows); }
std::size_t ChimeraTable::failed() const { return count_failed(rows); }

SweepTable run_sweep(const RunConfig& cfg, int threads)
{
    if (cfg.axes.size() != 1)
        throw ConfigError("run_sweep: needs exactly one sweep axis");
    return run_quantum_grid(cfg, threads);
}

SweepTable run_phase2d(const RunConfig& cfg, int threads)
{
    if (cfg.axes.size() != 2)
        throw ConfigError("run_phase2d: needs exactly two sweep axes");
    return run_quantum_grid(cfg, threads);
}

BoundaryCheck qod_boundary(const SweepTable& table)
{
    int ie = -1, ik = -1;
    for (std::size_t k = 0; k < table.axes.size(); ++k) {
        if (table.axes[k] == "epsilon_over_k1")
            ie = static_cast<int>(k);
        if (table.axes[k] == "K")
            ik = static_cast<int>(k);
    }
    if (table.axes.size() != 2 || ie < 0 || ik < 0)
        throw ConfigError("qod_boundary: needs an (epsilon_over_k1, K) phase diagram");

    BoundaryCheck chk;
    for (const auto& r : table.rows) {
        const double kv = r.params[ik];
        auto it = std::find_if(chk.points.begin(), chk.points.end(), [&](const BoundaryPoint& b) { return b.kerr == kv; });
        if (it == chk.points.end()) {
            chk.points.push_back({kv, std::nullopt});
            it = chk.points.end() - 1;
        }
        if (r.status.ok && r.classification == Regime::qod) {
            const double ev = r.params[ie];
            if (!it->epsilon_star || ev < *it->epsilon_star)
                it->epsilon_star = ev;
        }
    }
    std::sort(chk.points.begin(), chk.points.end(), [](const auto& a, const auto& b) { return a.kerr < b.kerr; });
    std::optional<double> last;
    for (const auto& b : chk.points) {
        if (!b.epsilon_star)
            continue;
        if (last && *b.epsilon_star < *last)
            chk.monotone = false;
        last = b.epsilon_star;
    }
    return chk;
}

NegativityTable run_negativity(const RunConfig& cfg, int threads)
{
    const auto pts = sweep_points(cfg.axes);
    NegativityTable t;
    t.axes = axis_names(cfg);
    t.rows.resize(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        NegativityRow& row = t.rows[i];
        row.params = pts[i];
        try {
            const RunConfig c = at_point(cfg, pts[i]);
            if (c.spec.topology != Topology::conjugate_pair)
                throw std::invalid_argument("negativity needs the conjugate_pair topology");
            const Solved s = solve(c);
            const NegativityResult n = negativity(s.steady.rho);
            row.negativity = n.value;
            row.min_pt_eigenvalue = n.spectrum.front();
            row.mean_n1 = expectation(s.first, number_op(c.spec.cutoff)).real();
            row.method = s.steady.method;
            row.residual = s.steady.residual;
        } catch (const std::exception& e) {
            row.status = {false, e.what()};
        }
    });
    return t;
}

SdeTable run_sde(const RunConfig& cfg, int threads)
{
    const auto pts = sweep_points(cfg.axes);
    SdeTable t;
    t.axes = axis_names(cfg);
    t.rows.resize(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        SdeRow& row = t.rows[i];
        row.params = pts[i];
        try {
            const RunConfig c = at_point(cfg, pts[i]);
            StationaryOptions so;
            so.dt = c.sde.dt;
            so.steps = c.sde.steps;
            so.burn_in_fraction = c.sde.burn_in_fraction;
            so.trajectories = c.sde.trajectories;
            const std::vector<double> y1 = stationary_y1(c.spec, c.seed, so);
            const BimodalityReport rep = bimodality(y1, c.sde.bins);
            row.modes = rep.modes;
            row.delta_y = rep.delta_y;
            row.samples = y1.size();
            row.hist = rep.hist;
            if (c.sde.trajectory_stride > 0) {
                EmOptions em;
                em.record_every = c.sde.trajectory_stride;
                row.trajectory =
                    em_integrate(random_initial_state(c.seed, 0), c.spec, c.sde.dt, c.sde.steps, c.seed, em).samples;
            }
        } catch (const std::exception& e) {
            row.status = {false, e.what()};
        }
    });
    return t;
}

ChimeraTable run_chimera(const RunConfig& cfg, int threads)
{
    const auto pts = sweep_points(cfg.axes);
    ChimeraTable t;
    t.axes = axis_names(cfg);
    t.rows.resize(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        ChimeraRow& row = t.rows[i];
        row.params = pts[i];
        try {
            const RunConfig c = at_point(cfg, pts[i]);
            c.ring.validate();
            const int cc = c.chimera.coherent_count;
            MeanFieldState s = init_chimera(c.ring, cc, c.chimera.resolved_amplitude(c.ring), c.seed);
            MeanFieldOptions mo;
            mo.predictor_corrector = c.chimera.predictor_corrector;
            s = evolve_mean_field(std::move(s), c.ring, c.chimera.t_final, c.chimera.dt, mo);
            row.profile = coherence_profile(s);
            row.cv_coherent = circular_variance(row.profile, 0, cc);
            row.cv_incoherent = circular_variance(row.profile, cc, c.ring.n);
            row.mean_anisotropy = mean_anisotropy(row.profile);
            if (c.chimera.dump_husimi)
                for (const auto& r : s.rhos)
                    row.husimi.push_back(husimi(r, c.grid));
        } catch (const std::exception& e) {
            row.status = {false, e.what()};
        }
    });
    return t;
}

SteadyReport run_steady(const RunConfig& cfg)
{
    SteadyReport rep;
    rep.row.status = {};
    try {
        const Solved s = solve(cfg);
        rep.row.method = s.steady.method;
        rep.row.residual = s.steady.residual;
        rep.row.mean_n1 = expectation(s.first, number_op(cfg.spec.cutoff)).real();
        PhaseField w = wigner(s.first, cfg.grid);
        rep.lobes = classify(w, cfg.classify);
        rep.row.classification = rep.lobes.classification;
        rep.row.delta_y = rep.lobes.delta_y;
        rep.row.n_maxima = static_cast<int>(rep.lobes.maxima.size());
        rep.row.wigner = std::move(w);
        rep.husimi = husimi(s.first, cfg.grid);
        if (cfg.spec.topology == Topology::conjugate_pair)
            rep.negativity = negativity(s.steady.rho).value;
    } catch (const std::exception& e) {
        rep.row.status = {false, e.what()};
    }
    return rep;
}

EvolveReport run_evolve(const RunConfig& cfg)
{
    EvolveReport rep;
    try {
        cfg.spec.validate();
        const Liouvillian l = build_liouvillian(cfg.spec);
        const int n_osc = cfg.spec.oscillator_count();
        ComplexVector vac = ComplexVector::Zero(l.hilbert_dim());
        vac(0) = 1.0;
        DensityMatrix rho = DensityMatrix::pure(vac, cfg.spec.subsystem_dims());
        const ComplexOperator n1 = n_osc == 1 ? number_op(cfg.spec.cutoff)
                                              : embed(number_op(cfg.spec.cutoff), 0, cfg.spec.subsystem_dims());
        const ComplexOperator n2 = n_osc == 1 ? n1 : embed(number_op(cfg.spec.cutoff), 1, cfg.spec.subsystem_dims());
        auto sample = [&](double t) {
            rep.samples.push_back({t, expectation(rho, n1).real(), expectation(rho, n2).real()});
        };
        sample(0.0);
        const auto chunks = static_cast<long>(std::ceil(cfg.evolve.t_final / cfg.evolve.sample_every - 1e-9));
        double t = 0.0;
        for (long k = 0; k < chunks; ++k) {
            const double h = std::min(cfg.evolve.sample_every, cfg.evolve.t_final - t);
            rho = evolve(rho, l, h, cfg.evolve.dt);
            t = k + 1 == chunks ? cfg.evolve.t_final : t + h;
            sample(t);
        }
        const DensityMatrix first = n_osc == 1 ? rho : partial_trace(rho, 0);
        PhaseField w = wigner(first, cfg.grid);
        rep.lobes = classify(w, cfg.classify);
        rep.wigner = std::move(w);
    } catch (const std::exception& e) {
        rep.status = {false, e.what()};
    }
    return rep;
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (v == 0.0)
        v = 0.0;  // fold -0 into 0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_csv(const SweepTable& t, std::ostream& os)
{
    write_header(os, t.axes, "classification,delta_y,n_maxima,mean_n1,solver,residual,status,message");
    for (const auto& r : t.rows) {
        write_params(os, r.params);
        if (r.status.ok)
            os << to_string(r.classification) << ',' << format_number(r.delta_y) << ',' << r.n_maxima << ','
               << format_number(r.mean_n1) << ',' << r.method << ',' << format_number(r.residual) << ',';
        else
            os << "unknown,nan,0,nan,,nan,";
        write_status(os, r.status);
    }
}

void write_csv(const NegativityTable& t, std::ostream& os)
{
    write_header(os, t.axes, "negativity,min_pt_eigenvalue,mean_n1,solver,residual,status,message");
    for (const auto& r : t.rows) {
        write_params(os, r.params);
        if (r.status.ok)
            os << format_number(r.negativity) << ',' << format_number(r.min_pt_eigenvalue) << ','
               << format_number(r.mean_n1) << ',' << r.method << ',' << format_number(r.residual) << ',';
        else
            os << "nan,nan,nan,,nan,";
        write_status(os, r.status);
    }
}

void write_csv(const SdeTable& t, std::ostream& os)
{
    write_header(os, t.axes, "modes,delta_y,samples,status,message");
    for (const auto& r : t.rows) {
        write_params(os, r.params);
        if (r.status.ok)
            os << r.modes << ',' << format_number(r.delta_y) << ',' << r.samples << ',';
        else
            os << "0,nan,0,";
        write_status(os, r.status);
    }
}

void write_csv(const ChimeraTable& t, std::ostream& os)
{
    write_header(os, t.axes, "cv_coherent,cv_incoherent,mean_anisotropy,status,message");
    for (const auto& r : t.rows) {
        write_params(os, r.params);
        if (r.status.ok)
            os << opt_number(r.cv_coherent) << ',' << opt_number(r.cv_incoherent) << ','
               << format_number(r.mean_anisotropy) << ',';
        else
            os << "nan,nan,nan,";
        write_status(os, r.status);
    }
}

void write_profile_csv(const std::vector<SiteCoherence>& profile, std::ostream& os)
{
    os << "index,angle,anisotropy\n";
    for (std::size_t j = 0; j < profile.size(); ++j)
        os << j + 1 << ',' << (profile[j].angle ? format_number(*profile[j].angle) : "isotropic") << ','
           << format_number(profile[j].anisotropy) << '\n';
}

void write_histogram_csv(const Histogram& h, std::ostream& os)
{
    os << "y1,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        os << format_number(h.center(i)) << ',' << format_number(h.counts[i]) << '\n';
}

ExecuteResult execute(const RunConfig& cfg, int threads)
{
    OutputDir out(cfg.output_dir);
    ExecuteResult res;
    nlohmann::json extra = nlohmann::json::object();

    switch (cfg.mode) {
    case Mode::steady: {
        const SteadyReport rep = run_steady(cfg);
        SweepTable t;
        t.rows.push_back(rep.row);
        auto f = out.open("steady.csv");
        write_csv(t, f);
        if (rep.row.wigner)
            write_field(out, "wigner", *rep.row.wigner);
        if (rep.husimi)
            write_field(out, "husimi", *rep.husimi);
        if (rep.row.status.ok) {
            auto m = out.open("maxima.csv");
            m << "x,y,value\n";
            for (const auto& mx : rep.lobes.maxima)
                m << format_number(mx.x) << ',' << format_number(mx.y) << ',' << format_number(mx.value) << '\n';
        }
        if (rep.negativity)
            extra["negativity"] = *rep.negativity;
        res.points = 1;
        res.failed = rep.row.status.ok ? 0 : 1;
        break;
    }
    case Mode::evolve: {
        const EvolveReport rep = run_evolve(cfg);
        auto f = out.open("evolve.csv");
        f << "t,mean_n1,mean_n2\n";
        for (const auto& s : rep.samples)
            f << format_number(s.t) << ',' << format_number(s.mean_n1) << ',' << format_number(s.mean_n2) << '\n';
        if (rep.wigner) {
            write_field(out, "wigner", *rep.wigner);
            extra["final_classification"] = to_string(rep.lobes.classification);
        }
        if (!rep.status.ok)
            extra["error"] = rep.status.message;
        res.points = 1;
        res.failed = rep.status.ok ? 0 : 1;
        break;
    }
    case Mode::sweep:
    case Mode::phase2d: {
        const SweepTable t = cfg.mode == Mode::sweep ? run_sweep(cfg, threads) : run_phase2d(cfg, threads);
        auto f = out.open(cfg.mode == Mode::sweep ? "sweep.csv" : "phase2d.csv");
        write_csv(t, f);
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            if (t.rows[i].wigner)
                write_field(out, "fields/wigner_" + point_tag(i), *t.rows[i].wigner);
        if (cfg.check_boundary) {
            const BoundaryCheck b = qod_boundary(t);
            auto bf = out.open("boundary.csv");
            bf << "K,epsilon_star\n";
            for (const auto& p : b.points)
                bf << format_number(p.kerr) << ',' << opt_number(p.epsilon_star) << '\n';
            extra["boundary_monotone"] = b.monotone;
        }
        res.points = t.rows.size();
        res.failed = t.failed();
        break;
    }
    case Mode::negativity: {
        const NegativityTable t = run_negativity(cfg, threads);
        auto f = out.open("negativity.csv");
        write_csv(t, f);
        res.points = t.rows.size();
        res.failed = t.failed();
        break;
    }
    case Mode::sde: {
        const SdeTable t = run_sde(cfg, threads);
        auto f = out.open("sde.csv");
        write_csv(t, f);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (!t.rows[i].status.ok)
                continue;
            auto h = out.open("histograms/histogram_" + point_tag(i) + ".csv");
            write_histogram_csv(t.rows[i].hist, h);
            if (!t.rows[i].trajectory.empty()) {
                auto tr = out.open("trajectories/trajectory_" + point_tag(i) + ".csv");
                tr << "t,x1,y1,x2,y2\n";
                const double step = cfg.sde.dt * static_cast<double>(cfg.sde.trajectory_stride);
                for (std::size_t k = 0; k < t.rows[i].trajectory.size(); ++k) {
                    const auto& s = t.rows[i].trajectory[k];
                    tr << format_number(step * static_cast<double>(k)) << ',' << format_number(s.x1) << ','
                       << format_number(s.y1) << ',' << format_number(s.x2) << ',' << format_number(s.y2) << '\n';
                }
            }
        }
        res.points = t.rows.size();
        res.failed = t.failed();
        break;
    }
    case Mode::chimera: {
        const ChimeraTable t = run_chimera(cfg, threads);
        auto f = out.open("chimera.csv");
        write_csv(t, f);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (!t.rows[i].status.ok)
                continue;
            auto p = out.open("profiles/profile_" + point_tag(i) + ".csv");
            write_profile_csv(t.rows[i].profile, p);
            for (std::size_t j = 0; j < t.rows[i].husimi.size(); ++j)
                write_field(out, "husimi/point_" + point_tag(i) + "_site_" + point_tag(j + 1), t.rows[i].husimi[j]);
        }
        res.points = t.rows.size();
        res.failed = t.failed();
        break;
    }
    }

    res.outputs = out.files();
    res.manifest = {
        {"program", "qvdp"},
        {"version", QVDP_VERSION},
        {"config", to_json(cfg)},
        {"outputs", res.outputs},
        {"points", res.points},
        {"failed", res.failed},
        {"results", extra},
    };
    std::ofstream m(fs::path(cfg.output_dir) / "manifest.json");
    if (!m)
        throw std::runtime_error("cannot write manifest in " + cfg.output_dir);
    m << res.manifest.dump(2) << '\n';
    return res;
}

}  // namespace qvdp::scan
