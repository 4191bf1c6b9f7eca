#pragma once

// SSH tight-binding model of a trans-polyacetylene chain: parameters,
// single-particle Hamiltonian, its geometry derivatives and the classical
// lattice terms.
//
// Units throughout: eV, Angstrom, fs. Momenta are in eV fs / Angstrom.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <vector>

namespace vibret {

struct SshParams {
    double t0 = 2.5;             // hopping integral (eV)
    double alpha = 4.1;          // electron-ion coupling (eV/A)
    double k_spring = 21.0;      // effective spring constant (eV/A^2)
    double mass = 1349.14;       // CH-group mass (eV fs^2/A^2)
    double a_lattice = 1.22;     // lattice constant (A)
    double hbar = 0.6582119569;  // eV fs
    int n_sites = 4;

    /// Throws std::invalid_argument unless every constant is positive and
    /// n_sites is even and at least 2.
    void validate() const;
};

/// Which chain ends are frozen. Clamped sites carry u = p = 0 always.
struct ClampMask {
    bool first = true;
    bool last = true;

    [[nodiscard]] bool is_clamped(int site, int n_sites) const {
        return (first && site == 0) || (last && site == n_sites - 1);
    }
};

/// Indices of the sites that are allowed to move.
[[nodiscard]] std::vector<int> free_sites(int n_sites, ClampMask mask);

struct NuclearPhase {
    Eigen::VectorXd u;  // displacement per site (A)
    Eigen::VectorXd p;  // momentum per site (eV fs/A)
    ClampMask clamp;

    static NuclearPhase at_rest(int n_sites, ClampMask mask = {});
    static NuclearPhase at_rest(const Eigen::VectorXd& u, ClampMask mask = {});

    [[nodiscard]] int size() const { return static_cast<int>(u.size()); }

    /// Zero u and p on clamped sites.
    void enforce_clamp();
};

/// Real symmetric tridiagonal single-particle Hamiltonian in the site basis.
struct SingleParticleHamiltonian {
    Eigen::MatrixXd matrix;

    /// Hopping element between sites b and b+1.
    [[nodiscard]] double bond(int b) const { return matrix(b, b + 1); }
};

/// Hopping of bond b (between sites b and b+1): -t0 + alpha (u_{b+1} - u_b).
[[nodiscard]] inline double bond_hopping(const SshParams& params, const Eigen::VectorXd& u, int b) {
    return -params.t0 + params.alpha * (u[b + 1] - u[b]);
}

/// Fills the off-diagonal of the tridiagonal matrix, length n_sites - 1.
void bond_hoppings(const SshParams& params, const Eigen::VectorXd& u, Eigen::VectorXd& out);

[[nodiscard]] SingleParticleHamiltonian build_h_e(const SshParams& params, const Eigen::VectorXd& u);

/// dH_e/du_n for every site n. Each entry has +-alpha on the bonds touching n.
[[nodiscard]] std::vector<Eigen::SparseMatrix<double>> h_e_gradient(const SshParams& params);

struct LatticeTerms {
    double spring_energy = 0.0;
    double kinetic_energy = 0.0;
    Eigen::VectorXd spring_force;  // -d(spring)/du, zero on clamped sites
};

[[nodiscard]] LatticeTerms lattice_energy_and_force(const SshParams& params, const NuclearPhase& phase);

[[nodiscard]] double spring_energy(const SshParams& params, const Eigen::VectorXd& u);

/// Adds -d(spring)/du into force (no clamping applied).
void add_spring_force(const SshParams& params, const Eigen::VectorXd& u, Eigen::VectorXd& force);

/// Electronic force -dE_e/du given the spin-summed bond densities
/// Re rho(b, b+1). The electronic energy is sum_b 2 h_b Re rho(b, b+1).
void add_electronic_force(const SshParams& params, const Eigen::VectorXd& bond_density,
                          Eigen::VectorXd& force);

/// diag((-1)^n): conjugating H_e by this matrix negates it.
[[nodiscard]] Eigen::VectorXd chiral_signs(int n_sites);

}  // namespace vibret
