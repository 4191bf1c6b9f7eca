#pragma once

// Brute-force reference in the fixed-particle-number Fock space of site
// occupations. Used to validate the determinant engine on small chains.

#include "vibret/electronic.hpp"
#include "vibret/model.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

namespace vibret::oracle {

class CapExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultDimensionCap = 10000;

/// Occupation bit masks (bit p = site/orbital p) per spin.
struct FockState {
    std::uint64_t up = 0;
    std::uint64_t down = 0;

    friend bool operator==(const FockState&, const FockState&) = default;
};

class FockBasis {
public:
    FockBasis(int n_modes, int n_up, int n_down, std::size_t cap = kDefaultDimensionCap);

    [[nodiscard]] int n_modes() const { return n_modes_; }
    [[nodiscard]] std::size_t dimension() const { return states_.size(); }
    [[nodiscard]] const std::vector<FockState>& states() const { return states_; }
    [[nodiscard]] const FockState& operator[](std::size_t i) const { return states_[i]; }
    /// Index of a state, or -1.
    [[nodiscard]] long long find(const FockState& s) const;

private:
    int n_modes_;
    std::vector<FockState> states_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// All determinants with fixed (n_up, n_down), ordered lexicographically by
/// (up mask, down mask) combinations.
[[nodiscard]] FockBasis enumerate_states(int n_sites, int n_up, int n_down, std::size_t cap = kDefaultDimensionCap);

/// Spin-summed occupation vector of a basis state.
[[nodiscard]] std::vector<int> spin_summed_occupation(const FockState& s, int n_modes);

/// Groups basis states by spin-summed occupation; value = number of members.
[[nodiscard]] std::map<std::vector<int>, int> occupation_classes(const FockBasis& basis);

/// Second-quantized lift sum_s sum_pq h(p,q) c+_{p s} c_{q s}.
[[nodiscard]] Eigen::MatrixXd lift_one_body(const FockBasis& basis, const Eigen::MatrixXd& h);

/// c+_{p spin} c_{q spin} psi, spin 0 = up.
[[nodiscard]] Eigen::VectorXcd apply_hop(const FockBasis& basis, const Eigen::VectorXcd& psi, int p, int q, int spin);

/// CI vector of a determinant superposition over the site basis.
[[nodiscard]] Eigen::VectorXcd to_ci_vector(const FockBasis& basis, const SuperpositionState& state);

/// exp(-i H_many dt / hbar) psi.
[[nodiscard]] Eigen::VectorXcd propagate_frozen(const FockBasis& basis, const Eigen::VectorXcd& psi,
                                                const Eigen::MatrixXd& h_single, double dt, double hbar);

/// Propagates psi along a nuclear path u_0..u_K using the step-midpoint
/// geometries. Returns psi at every path point.
[[nodiscard]] std::vector<Eigen::VectorXcd> full_ci_propagate(const FockBasis& basis, const Eigen::VectorXcd& psi0,
                                                              const std::vector<Eigen::VectorXd>& path,
                                                              const SshParams& params, double dt);

struct BruteForceRdms {
    Rdm1 rdm1;
    Rdm2 rdm2;
};

[[nodiscard]] BruteForceRdms brute_force_rdms(const FockBasis& basis, const Eigen::VectorXcd& psi);
/// For a many-body density matrix over the basis.
[[nodiscard]] BruteForceRdms brute_force_rdms(const FockBasis& basis, const Eigen::MatrixXcd& density);

/// Self-consistent Ehrenfest propagation entirely in the Fock space: the
/// same velocity-Verlet / midpoint scheme, forces from the brute-force RDM.
struct CiEhrenfestState {
    NuclearPhase phase;
    Eigen::VectorXcd psi;
    double time = 0.0;
};
[[nodiscard]] CiEhrenfestState full_ci_ehrenfest(const FockBasis& basis, const SshParams& params,
                                                 CiEhrenfestState state, double dt, long long steps);

/// Random orthonormal complex orbitals with n_terms distinct half-filled
/// determinants and random complex amplitudes.
[[nodiscard]] SuperpositionState random_superposition(int n_sites, std::mt19937_64& rng, int n_terms);

struct EngineComparison {
    double min_overlap = 1.0;         // |<psi_ci|psi_det>| along the shared path
    double max_rdm1_error = 0.0;      // vs brute force on the propagated CI vector
    double max_position_error = 0.0;  // vs self-consistent Fock-space Ehrenfest
};

/// Runs the determinant engine and both Fock-space references side by side.
[[nodiscard]] EngineComparison compare_engines(const SshParams& params, const NuclearPhase& phase,
                                               const SuperpositionState& state, double dt, long long steps,
                                               long long check_stride);

}  // namespace vibret::oracle
