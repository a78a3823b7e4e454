#pragma once

// Mean-field ring of Kerr-vdP oscillators with nonlocal coupling.
//
// Each site j carries its own density matrix and evolves under
//   h_j = K n^2 + (V/2d) sum_{0<|m-j|<=d} (<a_m>* a + <a_m> a^+)
// with dissipators 2 k1 D[a^+] + 2 k2 D[a^2]; neighbour amplitudes are
// frozen over a step and refreshed afterwards.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qvdp/fock.hpp"

namespace qvdp {

struct RingSpec {
    int n = 50;
    int range = 10;
    double v = 1.2;
    double kerr = 0.0;
    double k1 = 1.0;
    double k2 = 0.2;
    FockCutoff cutoff{15};

    void validate() const;
};

struct MeanFieldState {
    std::vector<DensityMatrix> rhos;
    std::vector<cplx> means;
    double time = 0.0;
};

/// Sites [0, coherent_count) start in |amplitude>; the rest in
/// |amplitude e^{i phi_j}> with phi_j uniform on [0, 2 pi) drawn from `seed`.
/// Throws if the truncated coherent state misses more than 1e-4 of its norm.
MeanFieldState init_chimera(const RingSpec& ring, int coherent_count, double amplitude, std::uint64_t seed);

/// Mean-field state from explicit per-site kets (sites in ring order).
MeanFieldState mean_field_state(const RingSpec& ring, std::span<const ComplexVector> kets);

/// Sum over the periodic coupling window of site j, times V/(2d).
cplx coupling_field(const RingSpec& ring, std::span<const cplx> means, int site);

struct MeanFieldOptions {
    /// Re-run each step with neighbour amplitudes averaged over the step
    /// start and a first predictor pass.
    bool predictor_corrector = false;
};

/// One RK4 step of every site; throws std::runtime_error naming the site if
/// an amplitude becomes non-finite.
MeanFieldState mean_field_step(const MeanFieldState& state, const RingSpec& ring, double dt,
                               const MeanFieldOptions& opts = {});

/// Steps until `t_final` (last step shortened to land exactly).
MeanFieldState evolve_mean_field(MeanFieldState state, const RingSpec& ring, double t_final, double dt = 1e-3,
                                 const MeanFieldOptions& opts = {});

struct SiteCoherence {
    /// Minor-axis angle in [0, pi); empty if the covariance is isotropic.
    std::optional<double> angle;
    double anisotropy = 0.0;
};

std::vector<SiteCoherence> coherence_profile(const MeanFieldState& state);

/// 1 - |mean exp(2 i theta)| over the non-isotropic sites in [first, last).
/// Angles are axial (defined mod pi), hence the doubling. Empty if no site
/// in the window has a defined angle.
std::optional<double> circular_variance(std::span<const SiteCoherence> profile, int first, int last);

double mean_anisotropy(std::span<const SiteCoherence> profile);

}  // namespace qvdp
