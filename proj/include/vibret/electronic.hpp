#pragma once

// Many-electron states as superpositions of Slater determinants built from
// one shared orthonormal orbital set, plus their reduced density matrices.
//
// Conventions
//   * Orbital sets are column matrices in the site basis: a+_k = sum_p C(p,k) c+_p.
//   * A determinant is the ordered product of creation operators over its
//     spin-up orbitals (ascending) followed by its spin-down orbitals
//     (ascending), acting on the vacuum. Fermionic signs follow this order.
//   * rho(p,q) = sum_s <c+_{p s} c_{q s}>
//   * Gamma(p,q,s,r) = 1/2 sum_{s s'} <c+_{p s} c+_{q s'} c_{r s'} c_{s s}>

#include "vibret/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace vibret {

using cplx = std::complex<double>;

enum class Spin { up = 0, down = 1 };

struct Determinant {
    std::vector<int> up;    // sorted occupied orbital indices
    std::vector<int> down;  // sorted occupied orbital indices

    /// Closed shell: orbitals 0..n_per_spin-1 doubly occupied.
    static Determinant ground(int n_per_spin);

    /// Parses a spin-summed occupation label such as "(2110)". A label
    /// shorter than n_orbitals addresses the window of orbitals centred on
    /// the Fermi level; orbitals outside it keep their ground occupation.
    /// Singly occupied orbitals are assigned to spin down from the bottom
    /// up until the down channel holds half the electrons.
    static Determinant from_label(const std::string& label, int n_orbitals);

    [[nodiscard]] int electron_count() const { return static_cast<int>(up.size() + down.size()); }
    [[nodiscard]] const std::vector<int>& occupied(Spin s) const { return s == Spin::up ? up : down; }
    [[nodiscard]] std::vector<int>& occupied(Spin s) { return s == Spin::up ? up : down; }

    /// Spin-summed occupation per orbital.
    [[nodiscard]] Eigen::VectorXd occupations(int n_orbitals) const;

    /// "(2110)" style, over all n_orbitals.
    [[nodiscard]] std::string label(int n_orbitals) const;

    /// Spin orbitals in canonical order: up orbital k -> k, down k -> n_orbitals + k.
    [[nodiscard]] std::vector<int> spin_orbitals(int n_orbitals) const;

    friend bool operator==(const Determinant&, const Determinant&) = default;
};

/// Number of spin orbitals occupied in `a` but not in `b`.
[[nodiscard]] int excitation_level(const Determinant& a, const Determinant& b);

struct OrbitalSet {
    Eigen::MatrixXcd orbitals;  // columns = orbitals in the site basis

    [[nodiscard]] int size() const { return static_cast<int>(orbitals.cols()); }
    [[nodiscard]] double orthonormality_defect() const;
};

struct Term {
    cplx amplitude;
    Determinant det;
};

class SuperpositionState {
public:
    SuperpositionState(OrbitalSet orbitals, std::vector<Term> terms);

    [[nodiscard]] const OrbitalSet& orbital_set() const { return orbitals_; }
    [[nodiscard]] const Eigen::MatrixXcd& orbitals() const { return orbitals_.orbitals; }
    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    [[nodiscard]] int n_orbitals() const { return orbitals_.size(); }
    [[nodiscard]] int electron_count() const { return terms_.front().det.electron_count(); }
    [[nodiscard]] double norm() const;

    /// Same amplitudes and determinants over a new orbital set.
    [[nodiscard]] SuperpositionState with_orbitals(OrbitalSet orbitals) const;

private:
    OrbitalSet orbitals_;
    std::vector<Term> terms_;
};

struct Excitation {
    int from = 0;
    int to = 0;
    Spin spin = Spin::up;
};

/// One term of an excited-state superposition: the listed excitations are
/// applied in order to the ground determinant. No excitations = the ground
/// determinant itself.
struct ExcitationTerm {
    cplx amplitude;
    std::vector<Excitation> moves;
};

/// Applies c+_to c_from per move, tracking the fermionic sign, and checks
/// the amplitudes are normalized (1e-10).
[[nodiscard]] SuperpositionState build_excited_state(const OrbitalSet& orbitals, const Determinant& ground,
                                                     const std::vector<ExcitationTerm>& terms);

/// <bra| a+_{k s} a_{l s} |ket> for every non-vanishing (s, k, l).
struct OneBodyElement {
    Spin spin;
    int k;
    int l;
    double value;
};
[[nodiscard]] std::vector<OneBodyElement> one_body_transition(const Determinant& bra, const Determinant& ket);

/// <bra| sum_s sum_kl A(k,l) a+_{k s} a_{l s} |ket> by the Slater-Condon rules.
[[nodiscard]] cplx slater_condon_one_body(const Determinant& bra, const Determinant& ket,
                                          const Eigen::MatrixXcd& op);
[[nodiscard]] double slater_condon_one_body(const Determinant& bra, const Determinant& ket,
                                            const Eigen::MatrixXd& op);

/// Spin-summed two-body transition density element in the orbital basis:
/// coefficient of 1/2 sum a+_{i s} a+_{j s'} a_{l s'} a_{k s}, stored as (i, j, k, l).
struct TwoBodyElement {
    int i;
    int j;
    int k;
    int l;
    cplx value;
};
[[nodiscard]] std::vector<TwoBodyElement> two_body_transition(const Determinant& bra, const Determinant& ket);

struct Rdm1 {
    Eigen::MatrixXcd matrix;

    [[nodiscard]] cplx trace() const { return matrix.trace(); }
};

class Rdm2 {
public:
    Rdm2() = default;
    explicit Rdm2(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, cplx{}) {}

    [[nodiscard]] int size() const { return n_; }
    [[nodiscard]] std::size_t index(int p, int q, int s, int r) const {
        return ((static_cast<std::size_t>(p) * n_ + q) * n_ + s) * n_ + r;
    }
    cplx& operator()(int p, int q, int s, int r) { return data_[index(p, q, s, r)]; }
    [[nodiscard]] cplx operator()(int p, int q, int s, int r) const { return data_[index(p, q, s, r)]; }

    [[nodiscard]] std::vector<cplx>& data() { return data_; }
    [[nodiscard]] const std::vector<cplx>& data() const { return data_; }

    /// sum_pq Gamma(p,q,p,q)
    [[nodiscard]] cplx trace() const;
    /// sum_q Gamma(p,q,s,q), an n x n matrix over (p, s).
    [[nodiscard]] Eigen::MatrixXcd partial_trace() const;

private:
    int n_ = 0;
    std::vector<cplx> data_;
};

/// Largest dimension for which Gamma is materialized as a dense tensor.
inline constexpr int kDenseRdm2Limit = 32;

/// Orbital-basis densities of a state. They depend only on amplitudes and
/// occupations, so they stay fixed while the orbitals evolve.
struct OrbitalDensities {
    Eigen::MatrixXcd gamma1;                  // (k,l) = sum_s <a+_k a_l>
    std::vector<TwoBodyElement> gamma2;       // sparse, merged
};

[[nodiscard]] OrbitalDensities orbital_densities(const SuperpositionState& state, bool with_two_body = true);

/// rho = conj(C) gamma1 C^T
[[nodiscard]] Rdm1 to_site_basis(const Eigen::MatrixXcd& gamma1, const Eigen::MatrixXcd& orbitals);
[[nodiscard]] Rdm2 to_site_basis(const std::vector<TwoBodyElement>& gamma2, const Eigen::MatrixXcd& orbitals);

[[nodiscard]] Rdm1 one_body_rdm(const SuperpositionState& state);
[[nodiscard]] Rdm2 two_body_rdm(const SuperpositionState& state);

/// Tr Gamma^2 of a pure state without materializing the site tensor
/// (the purity is invariant under the orbital rotation).
[[nodiscard]] double two_body_purity_pure(const SuperpositionState& state);

struct AdiabaticBasis {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd orbitals;  // columns, real
};

/// Eigenpairs of H_e sorted ascending. Without a reference, each orbital's
/// largest-magnitude component is made positive. With a reference basis,
/// degenerate blocks are rotated onto it and signs follow it.
[[nodiscard]] AdiabaticBasis adiabatic_basis(const SingleParticleHamiltonian& h,
                                             const Eigen::MatrixXd* reference = nullptr);

/// Energy of a determinant built from orbitals with the given energies.
[[nodiscard]] double determinant_energy(const Determinant& det, const Eigen::VectorXd& orbital_energies);

}  // namespace vibret
