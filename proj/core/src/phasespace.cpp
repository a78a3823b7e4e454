#include "qvdp/phasespace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qvdp {

void PhaseGrid::validate() const
{
    if (!(x_min < x_max) || !(y_min < y_max))
        throw std::invalid_argument("PhaseGrid: need x_min < x_max and y_min < y_max");
    if (nx < 16 || ny < 16)
        throw std::invalid_argument("PhaseGrid: nx and ny must be >= 16");
}

std::string to_string(FieldKind k) { return k == FieldKind::wigner ? "wigner" : "husimi"; }

double PhaseField::integral() const { return values.sum() * grid.dx() * grid.dy(); }

PhaseField PhaseField::reflected_x() const
{
    if (std::abs(grid.x_min + grid.x_max) > 1e-12 * (grid.x_max - grid.x_min))
        throw std::invalid_argument("PhaseField::reflected_x: grid is not symmetric in x");
    PhaseField out = *this;
    out.values = values.colwise().reverse();
    return out;
}

namespace {

void require_single_mode(const DensityMatrix& rho, const char* who)
{
    if (rho.subsystem_dims().size() != 1)
        throw std::invalid_argument(std::string(who) +
                                    ": expects a single-oscillator state; use partial_trace first");
}

// Wigner value via the Laguerre recurrence of the displaced-parity kernel,
// with alpha = x + i y. wl holds the running |m><n| kernels.
double wigner_point(const DenseMatrix& rho, cplx alpha, std::vector<cplx>& wl)
{
    const int d = static_cast<int>(rho.rows());
    wl.assign(d, cplx(0.0));
    wl[0] = std::exp(-2.0 * std::norm(alpha)) / std::numbers::pi;
    double w = rho(0, 0).real() * wl[0].real();
    for (int n = 1; n < d; ++n) {
        wl[n] = 2.0 * alpha * wl[n - 1] / std::sqrt(double(n));
        w += 2.0 * (rho(0, n) * wl[n]).real();
    }
    for (int m = 1; m < d; ++m) {
        const double sm = std::sqrt(double(m));
        cplx temp = wl[m];
        wl[m] = (2.0 * std::conj(alpha) * temp - sm * wl[m - 1]) / sm;
        w += (rho(m, m) * wl[m]).real();
        for (int n = m + 1; n < d; ++n) {
            const cplx next = (2.0 * alpha * wl[n - 1] - sm * temp) / std::sqrt(double(n));
            temp = wl[n];
            wl[n] = next;
            w += 2.0 * (rho(m, n) * wl[n]).real();
        }
    }
    // wl carries half of the displaced-parity kernel (2/pi) D P D^+.
    return 2.0 * w;
}

double husimi_point(const DenseMatrix& rho, cplx alpha, ComplexVector& c)
{
    const int d = static_cast<int>(rho.rows());
    c.resize(d);
    cplx v = std::exp(-0.5 * std::norm(alpha));
    c(0) = v;
    for (int n = 1; n < d; ++n) {
        v *= alpha / std::sqrt(double(n));
        c(n) = v;
    }
    return (c.adjoint() * rho * c)(0, 0).real() / std::numbers::pi;
}

void check_normalization(const PhaseField& f, const FieldOptions& opts)
{
    if (!opts.check_normalization)
        return;
    const double integral = f.integral();
    if (!(std::abs(integral - 1.0) <= opts.normalization_tol))
        throw NormalizationError(to_string(f.kind) + " field integrates to " + std::to_string(integral) +
                                 " on the grid (tolerance " + std::to_string(opts.normalization_tol) +
                                 "); enlarge the grid or raise the Fock cutoff");
}

}  // namespace

PhaseField wigner(const DensityMatrix& rho, const PhaseGrid& grid, const FieldOptions& opts)
{
    require_single_mode(rho, "wigner");
    grid.validate();
    PhaseField f{grid, Eigen::MatrixXd(grid.nx, grid.ny), FieldKind::wigner};
    std::vector<cplx> wl;
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            f.values(i, j) = wigner_point(rho.matrix(), cplx(grid.x(i), grid.y(j)), wl);
    check_normalization(f, opts);
    return f;
}

PhaseField husimi(const DensityMatrix& rho, const PhaseGrid& grid, const FieldOptions& opts)
{
    require_single_mode(rho, "husimi");
    grid.validate();
    PhaseField f{grid, Eigen::MatrixXd(grid.nx, grid.ny), FieldKind::husimi};
    ComplexVector c;
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            f.values(i, j) = husimi_point(rho.matrix(), cplx(grid.x(i), grid.y(j)), c);
    check_normalization(f, opts);
    return f;
}

double wigner_at(const DensityMatrix& rho, cplx alpha)
{
    require_single_mode(rho, "wigner_at");
    std::vector<cplx> wl;
    return wigner_point(rho.matrix(), alpha, wl);
}

double husimi_at(const DensityMatrix& rho, cplx alpha)
{
    require_single_mode(rho, "husimi_at");
    ComplexVector c;
    return husimi_point(rho.matrix(), alpha, c);
}

// ---------------------------------------------------------------------------
// Maxima and classification

MaximaSearch find_local_maxima(const PhaseField& field, double rel_threshold)
{
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
        throw std::invalid_argument("find_local_maxima: rel_threshold must lie in (0, 1)");
    const auto& v = field.values;
    MaximaSearch out;
    if (v.rows() < 3 || v.cols() < 3) {
        out.diagnostic = "grid too small";
        return out;
    }
    const double vmax = v.maxCoeff();
    const double vmin = v.minCoeff();
    if (!(vmax > vmin) || !(vmax > 0.0)) {
        out.diagnostic = "flat or non-positive field: no maxima";
        return out;
    }
    const double floor = rel_threshold * vmax;
    for (int i = 1; i + 1 < v.rows(); ++i)
        for (int j = 1; j + 1 < v.cols(); ++j) {
            const double c = v(i, j);
            if (c < floor)
                continue;
            bool is_max = true;
            for (int di = -1; di <= 1 && is_max; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0)
                        continue;
                    const double nb = v(i + di, j + dj);
                    // Neighbours earlier in raster order must be strictly smaller.
                    const bool earlier = di < 0 || (di == 0 && dj < 0);
                    if (earlier ? !(c > nb) : !(c >= nb)) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max)
                out.maxima.push_back({field.grid.x(i), field.grid.y(j), c});
        }
    if (out.maxima.empty())
        out.diagnostic = "no interior maxima above threshold";
    return out;
}

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::osc:
        return "Osc";
    case Regime::qad:
        return "QAD";
    case Regime::qod:
        return "QOD";
    case Regime::unknown:
        return "unknown";
    }
    return "unknown";
}

std::optional<Regime> regime_from_string(const std::string& s)
{
    for (Regime r : {Regime::osc, Regime::qad, Regime::qod, Regime::unknown})
        if (to_string(r) == s)
            return r;
    return std::nullopt;
}

namespace {

// 2*pi minus the largest angular gap between consecutive points.
double angular_coverage(const std::vector<Maximum>& pts)
{
    std::vector<double> ang;
    ang.reserve(pts.size());
    for (const auto& p : pts)
        ang.push_back(std::atan2(p.y, p.x));
    std::sort(ang.begin(), ang.end());
    double gap = ang.front() + 2.0 * std::numbers::pi - ang.back();
    for (std::size_t k = 1; k < ang.size(); ++k)
        gap = std::max(gap, ang[k] - ang[k - 1]);
    return 2.0 * std::numbers::pi - gap;
}

}  // namespace

LobeReport classify(const PhaseField& field, const ClassifyOptions& opts)
{
    LobeReport rep;
    auto search = find_local_maxima(field, opts.rel_threshold);
    rep.maxima = std::move(search.maxima);
    if (rep.maxima.empty()) {
        rep.diagnostic = search.diagnostic;
        return rep;
    }

    double y_lo = rep.maxima.front().y, y_hi = y_lo, y_sum = 0.0;
    for (const auto& m : rep.maxima) {
        y_lo = std::min(y_lo, m.y);
        y_hi = std::max(y_hi, m.y);
        y_sum += m.y;
    }
    const double y_range = y_hi - y_lo;
    const double y_mean = y_sum / static_cast<double>(rep.maxima.size());

    // Annulus: ridge maxima away from the origin that surround it.
    std::vector<Maximum> ridge;
    for (const auto& m : rep.maxima)
        if (std::hypot(m.x, m.y) > opts.ring_min_radius)
            ridge.push_back(m);
    if (ridge.size() >= 3 && ridge.size() == rep.maxima.size() &&
        angular_coverage(ridge) > opts.min_ring_coverage) {
        rep.classification = Regime::osc;
        rep.delta_y = y_range;
        return rep;
    }

    if (y_range <= 2.0 * opts.y_tol && std::abs(y_mean) < opts.y_tol) {
        const auto top = *std::max_element(rep.maxima.begin(), rep.maxima.end(),
                                           [](const Maximum& a, const Maximum& b) { return a.value < b.value; });
        if (rep.maxima.size() > 1)
            rep.diagnostic = std::to_string(rep.maxima.size()) + " near-axis maxima merged";
        rep.maxima = {top};
        rep.classification = Regime::qad;
        rep.delta_y = 0.0;
        return rep;
    }

    if (rep.maxima.size() >= 2 && y_hi > opts.y_tol && y_lo < -opts.y_tol && y_range > 2.0 * opts.y_tol &&
        std::abs(y_hi + y_lo) <= 2.0 * opts.y_tol) {
        rep.classification = Regime::qod;
        rep.delta_y = y_range;
        return rep;
    }

    rep.delta_y = y_range;
    rep.diagnostic = "maxima geometry matches no regime";
    return rep;
}

// ---------------------------------------------------------------------------
// Squeezing

Eigen::Matrix2d quadrature_covariance(const DensityMatrix& rho)
{
    require_single_mode(rho, "quadrature_covariance");
    const FockCutoff cutoff(rho.dim() - 1);
    const DenseMatrix a = annihilation(cutoff).dense();
    const DenseMatrix x = 0.5 * (a + a.adjoint());
    const DenseMatrix p = (a - a.adjoint()) / cplx(0.0, 2.0);
    const DenseMatrix& r = rho.matrix();
    const double mx = (r * x).trace().real();
    const double mp = (r * p).trace().real();
    Eigen::Matrix2d c;
    c(0, 0) = (r * x * x).trace().real() - mx * mx;
    c(1, 1) = (r * p * p).trace().real() - mp * mp;
    c(0, 1) = c(1, 0) = 0.5 * (r * (x * p + p * x)).trace().real() - mx * mp;
    return c;
}

SqueezingInfo squeezing(const DensityMatrix& rho, double isotropy_gap)
{
    SqueezingInfo info;
    info.covariance = quadrature_covariance(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(info.covariance);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(1);
    info.anisotropy = (hi + lo) > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
    if (hi - lo >= isotropy_gap) {
        const Eigen::Vector2d minor = es.eigenvectors().col(0);
        double ang = std::atan2(minor(1), minor(0));
        ang = std::fmod(ang, std::numbers::pi);
        if (ang < 0.0)
            ang += std::numbers::pi;
        if (ang >= std::numbers::pi)
            ang = 0.0;
        info.angle = ang;
    }
    return info;
}

std::optional<double> squeezing_angle(const DensityMatrix& rho, double isotropy_gap)
{
    return squeezing(rho, isotropy_gap).angle;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u64(std::ostream& os, std::uint64_t v)
{
    char b[8];
    for (int k = 0; k < 8; ++k)
        b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
    os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is)
{
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw std::runtime_error("read_binary: truncated input");
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k)
        v = (v << 8) | b[k];
    return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_csv(const PhaseField& field, std::ostream& os)
{
    const auto old_prec = os.precision(12);
    os << "x,y,value\n";
    for (int i = 0; i < field.grid.nx; ++i)
        for (int j = 0; j < field.grid.ny; ++j)
            os << field.grid.x(i) << ',' << field.grid.y(j) << ',' << field.values(i, j) << '\n';
    os.precision(old_prec);
}

void write_binary(const PhaseField& field, std::ostream& os)
{
    const auto& g = field.grid;
    put_f64(os, g.x_min);
    put_f64(os, g.x_max);
    put_f64(os, g.y_min);
    put_f64(os, g.y_max);
    put_u64(os, static_cast<std::uint64_t>(g.nx));
    put_u64(os, static_cast<std::uint64_t>(g.ny));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            put_f64(os, field.values(i, j));
}

PhaseField read_binary(std::istream& is, FieldKind kind)
{
    PhaseField f;
    f.kind = kind;
    f.grid.x_min = get_f64(is);
    f.grid.x_max = get_f64(is);
    f.grid.y_min = get_f64(is);
    f.grid.y_max = get_f64(is);
    const auto nx = get_u64(is);
    const auto ny = get_u64(is);
    if (nx > (1u << 20) || ny > (1u << 20))
        throw std::runtime_error("read_binary: implausible grid size");
    f.grid.nx = static_cast<int>(nx);
    f.grid.ny = static_cast<int>(ny);
    f.grid.validate();
    f.values.resize(f.grid.nx, f.grid.ny);
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i)
            f.values(i, j) = get_f64(is);
    return f;
}

}  // namespace qvdp
