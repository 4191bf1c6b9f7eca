#pragma once

// Born-Oppenheimer ground state of a neutral chain: dimerized geometry,
// harmonic normal modes around it, and zero-temperature Wigner sampling.

#include "vibret/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vibret {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the Hessian at a stationary point has a negative eigenvalue.
class NotAMinimumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BornOppenheimerPoint {
    double energy = 0.0;             // electronic + spring (eV)
    double electronic_energy = 0.0;  // 2 sum_occ eps_k (eV)
    Eigen::VectorXd gradient;        // dE/du, zero on clamped sites
    Eigen::VectorXd orbital_energies;
};

/// Closed-shell BO energy and its Hellmann-Feynman gradient at u.
[[nodiscard]] BornOppenheimerPoint born_oppenheimer(const SshParams& params, const Eigen::VectorXd& u,
                                                    int n_per_spin, ClampMask clamp = {});

struct OptimizedGeometry {
    Eigen::VectorXd u_star;
    double bo_energy = 0.0;
    double electronic_energy = 0.0;
    double residual_force_norm = 0.0;
    Eigen::VectorXd orbital_energies;
    int iterations = 0;
    ClampMask clamp;

    /// eps_LUMO - eps_HOMO
    [[nodiscard]] double gap() const;
};

struct OptimizerOptions {
    double tolerance = 1e-8;  // residual force norm (eV/A)
    int max_iterations = 5000;
};

/// Quasi-Newton (BFGS) minimization from both dimerization phases; the lower
/// minimum wins. Requires n_per_spin == n_sites / 2.
[[nodiscard]] OptimizedGeometry optimize_geometry(const SshParams& params, int n_per_spin,
                                                  OptimizerOptions options = {}, ClampMask clamp = {});

struct NormalModes {
    std::vector<int> free_sites;
    Eigen::VectorXd frequencies;   // rad/fs, ascending
    Eigen::MatrixXd mode_vectors;  // free-coordinate displacement patterns, orthonormal columns
    Eigen::MatrixXd hessian;       // symmetrized, eV/A^2
    double asymmetry = 0.0;        // max |H - H^T| / max |H| before symmetrization
    Eigen::VectorXd u_star;
    ClampMask clamp;

    /// Mode k expanded onto all sites (zeros on clamped sites).
    [[nodiscard]] Eigen::VectorXd site_vector(int k) const;
};

/// Central finite differences of the analytic BO gradient over free sites.
[[nodiscard]] NormalModes hessian_and_modes(const SshParams& params, const OptimizedGeometry& geom,
                                            int n_per_spin, double fd_step = 1e-4);

/// Zero-temperature Wigner distribution of the harmonic ground state. Each
/// stream index yields the same sample for the same master seed.
class WignerSampler {
public:
    WignerSampler(NormalModes modes, SshParams params, std::uint64_t master_seed);

    [[nodiscard]] NuclearPhase sample(std::uint64_t stream) const;

    /// Normal coordinates and momenta of one draw, before the transform to sites.
    struct ModeDraw {
        Eigen::VectorXd q;
        Eigen::VectorXd p;
    };
    [[nodiscard]] ModeDraw draw_modes(std::uint64_t stream) const;

    [[nodiscard]] double position_variance(int k) const;  // hbar / (2 M w_k)
    [[nodiscard]] double momentum_variance(int k) const;  // hbar M w_k / 2
    [[nodiscard]] const NormalModes& modes() const { return modes_; }

private:
    NormalModes modes_;
    SshParams params_;
    std::uint64_t seed_;
};

}  // namespace vibret
