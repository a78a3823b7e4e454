#pragma once

// Phase-space quasi-probability fields and their lobe geometry.
//
// Coordinates: alpha = x + i y with x = <(a + a^+)/2>, y = <(a - a^+)/(2i)>,
// the same amplitude the semiclassical model integrates. Both the Wigner and
// the Husimi field integrate to one over dx dy; the vacuum Wigner peak is
// therefore 2/pi and the vacuum Husimi peak 1/pi.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvdp/fock.hpp"

namespace qvdp {

struct PhaseGrid {
    double x_min = -4.0;
    double x_max = 4.0;
    double y_min = -4.0;
    double y_max = 4.0;
    int nx = 161;
    int ny = 161;

    void validate() const;
    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dy() const { return (y_max - y_min) / (ny - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double y(int j) const { return y_min + j * dy(); }
};

enum class FieldKind { wigner, husimi };

std::string to_string(FieldKind k);

struct PhaseField {
    PhaseGrid grid;
    /// values(i, j) is the field at (grid.x(i), grid.y(j)).
    Eigen::MatrixXd values;
    FieldKind kind = FieldKind::wigner;

    /// Riemann-sum integral over the grid.
    double integral() const;
    /// Mirror image under x -> -x (requires a grid symmetric in x).
    PhaseField reflected_x() const;
};

/// Thrown when a field fails the normalization check, which usually means the
/// grid does not cover the state or the Fock cutoff is too small for it.
class NormalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FieldOptions {
    /// Allowed |integral - 1|.
    double normalization_tol = 0.02;
    bool check_normalization = true;
};

PhaseField wigner(const DensityMatrix& rho, const PhaseGrid& grid, const FieldOptions& opts = {});
PhaseField husimi(const DensityMatrix& rho, const PhaseGrid& grid, const FieldOptions& opts = {});

/// Wigner function at a single phase-space point.
double wigner_at(const DensityMatrix& rho, cplx alpha);
double husimi_at(const DensityMatrix& rho, cplx alpha);

struct Maximum {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
};

struct MaximaSearch {
    std::vector<Maximum> maxima;
    std::string diagnostic;
};

/// Interior grid points exceeding all 8 neighbours and at least
/// rel_threshold * (global max). Exact ties between neighbours are broken in
/// favour of the point that comes first in (i, j) raster order.
MaximaSearch find_local_maxima(const PhaseField& field, double rel_threshold = 0.5);

enum class Regime { osc, qad, qod, unknown };

std::string to_string(Regime r);
std::optional<Regime> regime_from_string(const std::string& s);

struct ClassifyOptions {
    double rel_threshold = 0.5;
    /// Half-width of the band around y = 0 that counts as "on the axis".
    double y_tol = 0.15;
    /// Ridge maxima must lie outside this radius to count toward an annulus.
    double ring_min_radius = 0.3;
    /// Angular coverage (radians) ridge maxima must exceed to count as an annulus.
    double min_ring_coverage = 3.14159265358979323846;
};

struct LobeReport {
    std::vector<Maximum> maxima;
    double delta_y = 0.0;
    Regime classification = Regime::unknown;
    std::string diagnostic;
};

/// Osc: >= 3 ridge maxima surrounding the origin (angular coverage above
///      min_ring_coverage); delta_y is the full y-range of the ridge maxima.
/// QAD: all maxima within a 2*y_tol band centred within y_tol of the axis;
///      reported as the single dominant maximum with delta_y = 0.
/// QOD: >= 2 maxima on opposite sides of the axis, symmetric within 2*y_tol,
///      with delta_y > 2*y_tol.
/// Anything else is unknown.
LobeReport classify(const PhaseField& field, const ClassifyOptions& opts = {});

/// Covariance of (x, y) quadratures, x = (a + a^+)/2, y = (a - a^+)/(2i).
Eigen::Matrix2d quadrature_covariance(const DensityMatrix& rho);

struct SqueezingInfo {
    /// Orientation of the minor (smaller-variance) principal axis in [0, pi);
    /// empty when the covariance is isotropic.
    std::optional<double> angle;
    /// (l_max - l_min) / (l_max + l_min) of the covariance eigenvalues.
    double anisotropy = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
};

SqueezingInfo squeezing(const DensityMatrix& rho, double isotropy_gap = 1e-6);
std::optional<double> squeezing_angle(const DensityMatrix& rho, double isotropy_gap = 1e-6);

// Serialization -------------------------------------------------------------

/// CSV with header "x,y,value", x-major order.
void write_csv(const PhaseField& field, std::ostream& os);

/// Little-endian binary grid:
///   float64 x_min, x_max, y_min, y_max; int64 nx, ny;
///   then nx*ny float64 values, row-major with rows indexed by y
///   (offset j*nx + i holds the value at (x(i), y(j))).
void write_binary(const PhaseField& field, std::ostream& os);
PhaseField read_binary(std::istream& is, FieldKind kind = FieldKind::wigner);

}  // namespace qvdp
