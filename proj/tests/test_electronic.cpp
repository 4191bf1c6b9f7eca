#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vibret/electronic.hpp"
#include "vibret/ground_state.hpp"
#include "vibret/oracle.hpp"

#include <random>

using namespace vibret;
namespace orc = vibret::oracle;

namespace {

OrbitalSet identity_orbitals(int n) { return {Eigen::MatrixXcd::Identity(n, n)}; }

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n * n; ++i) a.data()[i] = g(rng);
    return a + a.transpose();
}

double max_abs_diff(const Rdm2& a, const Rdm2& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST_CASE("occupation labels") {
    const Determinant phi0 = Determinant::from_label("(2110)", 4);
    CHECK(phi0.up == std::vector<int>{0, 2});
    CHECK(phi0.down == std::vector<int>{0, 1});
    CHECK(phi0.label(4) == "(2110)");

    const Determinant phi2 = Determinant::from_label("(1210)", 4);
    CHECK(phi2.label(4) == "(1210)");
    CHECK(phi2.up.size() == 2);
    CHECK(phi2.down.size() == 2);
    // Phi1 and Phi2 differ by a two-particle transition, both one away from Phi0
    const Determinant phi1 = Determinant::from_label("(2101)", 4);
    CHECK(excitation_level(phi0, phi1) == 1);
    CHECK(excitation_level(phi0, phi2) == 1);
    CHECK(excitation_level(phi1, phi2) == 2);

    // short labels address the window around the Fermi level
    const Determinant w = Determinant::from_label("(2110)", 20);
    CHECK(w.label(20) == "(22222222211000000000)");
    CHECK(w.electron_count() == 20);

    CHECK_THROWS((void)Determinant::from_label("(2111)", 4));
    CHECK_THROWS((void)Determinant::from_label("(21x0)", 4));
    CHECK_THROWS((void)Determinant::from_label("(210)", 4));
}

TEST_CASE("superposition validation") {
    const OrbitalSet id = identity_orbitals(4);
    const Determinant g = Determinant::ground(2);
    CHECK_NOTHROW(SuperpositionState(id, {{1.0, g}}));
    CHECK_THROWS(SuperpositionState(id, {{0.5, g}}));
    CHECK_THROWS(SuperpositionState(id, {{std::sqrt(0.5), g}, {std::sqrt(0.5), g}}));
    OrbitalSet skew = id;
    skew.orbitals(0, 1) = 0.1;
    CHECK_THROWS(SuperpositionState(skew, {{1.0, g}}));
    Determinant odd;
    odd.up = {0, 1, 2};
    odd.down = {0};
    CHECK_THROWS(SuperpositionState(id, {{std::sqrt(0.5), g}, {std::sqrt(0.5), odd}}));
}

TEST_CASE("excited-state fermionic signs agree with Fock-space hops") {
    const int n = 4;
    const orc::FockBasis basis(n, 2, 2);
    const OrbitalSet id = identity_orbitals(n);
    const Determinant g = Determinant::ground(2);
    const Eigen::VectorXcd psi_g = orc::to_ci_vector(basis, SuperpositionState(id, {{1.0, g}}));
    const std::vector<std::vector<Excitation>> cases = {
        {{1, 2, Spin::up}},
        {{1, 3, Spin::down}},
        {{0, 3, Spin::up}},
        {{1, 2, Spin::up}, {0, 3, Spin::down}},
        {{1, 2, Spin::up}, {0, 3, Spin::up}},
    };
    for (const auto& moves : cases) {
        const SuperpositionState s = build_excited_state(id, g, {{1.0, moves}});
        Eigen::VectorXcd expect = psi_g;
        for (const Excitation& m : moves) expect = orc::apply_hop(basis, expect, m.to, m.from, static_cast<int>(m.spin));
        CHECK((orc::to_ci_vector(basis, s) - expect).norm() < 1e-14);
    }
}

TEST_CASE("Slater-Condon one-body elements match the lifted operator") {
    const int n = 4;
    std::mt19937_64 rng(9);
    const orc::FockBasis basis(n, 2, 2);
    const OrbitalSet id = identity_orbitals(n);
    const Eigen::MatrixXd a = random_symmetric(n, rng);
    const Eigen::MatrixXd big = orc::lift_one_body(basis, a);
    std::vector<Determinant> dets;
    for (const orc::FockState& f : basis.states()) {
        Determinant d;
        for (int k = 0; k < n; ++k) {
            if (f.up >> k & 1u) d.up.push_back(k);
            if (f.down >> k & 1u) d.down.push_back(k);
        }
        dets.push_back(d);
    }
    for (const Determinant& bra : dets)
        for (const Determinant& ket : dets) {
            const Eigen::VectorXcd vb = orc::to_ci_vector(basis, SuperpositionState(id, {{1.0, bra}}));
            const Eigen::VectorXcd vk = orc::to_ci_vector(basis, SuperpositionState(id, {{1.0, ket}}));
            const cplx ref = vb.dot(big.cast<cplx>() * vk);
            CHECK(std::abs(slater_condon_one_body(bra, ket, a) - ref.real()) < 1e-12);
        }
}

TEST_CASE("RDMs match brute force on random states") {
    std::mt19937_64 rng(21);
    for (int n : {2, 4, 6}) {
        const orc::FockBasis basis(n, n / 2, n / 2);
        for (int trial = 0; trial < 10; ++trial) {
            const SuperpositionState s = orc::random_superposition(n, rng, 1 + trial % 5);
            const orc::BruteForceRdms ref = orc::brute_force_rdms(basis, orc::to_ci_vector(basis, s));
            CHECK((one_body_rdm(s).matrix - ref.rdm1.matrix).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(max_abs_diff(two_body_rdm(s), ref.rdm2) < 1e-12);
        }
    }
}

TEST_CASE("RDM trace, contraction and hermiticity identities") {
    std::mt19937_64 rng(5);
    const int n = 6;
    const SuperpositionState s = orc::random_superposition(n, rng, 4);
    const Rdm1 rho = one_body_rdm(s);
    const Rdm2 gam = two_body_rdm(s);
    const double ne = 6.0;
    CHECK(std::abs(rho.trace() - ne) < 1e-12);
    CHECK((rho.matrix - rho.matrix.adjoint()).norm() < 1e-12);
    CHECK(std::abs(gam.trace() - ne * (ne - 1) / 2) < 1e-11);
    CHECK((gam.partial_trace() - (ne - 1) / 2 * rho.matrix).cwiseAbs().maxCoeff() < 1e-12);
    double herm = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int t = 0; t < n; ++t) herm = std::max(herm, std::abs(gam(p, q, r, t) - std::conj(gam(r, t, p, q))));
    CHECK(herm < 1e-12);
    // the spin-summed one-body density of a normalized state has eigenvalues in [0, 2]
    const Eigen::VectorXd occ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(rho.matrix).eigenvalues();
    CHECK(occ.minCoeff() > -1e-12);
    CHECK(occ.maxCoeff() < 2.0 + 1e-12);
}

TEST_CASE("pure two-body purity is basis invariant") {
    std::mt19937_64 rng(8);
    const SuperpositionState s = orc::random_superposition(4, rng, 3);
    const Rdm2 g = two_body_rdm(s);
    double dense = 0.0;
    for (const cplx& x : g.data()) dense += std::norm(x);
    CHECK(two_body_purity_pure(s) == doctest::Approx(dense).epsilon(1e-12));
}

TEST_CASE("tabulated determinant energies at the optimized geometry") {
    SshParams p;
    const OptimizedGeometry g = optimize_geometry(p, 2);
    const Eigen::VectorXd& eps = g.orbital_energies;
    CHECK(determinant_energy(Determinant::from_label("(2200)", 4), eps) == doctest::Approx(-11.95).epsilon(0.02 / 11.95));
    CHECK(determinant_energy(Determinant::from_label("(2110)", 4), eps) == doctest::Approx(-7.78).epsilon(0.02 / 7.78));
    // Phi1 and Phi2 are degenerate at every geometry by the chiral pairing
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-0.1, 0.1);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd u(4);
        u << 0.0, d(rng), d(rng), 0.0;
        const Eigen::VectorXd e = adiabatic_basis(build_h_e(p, u)).energies;
        CHECK(determinant_energy(Determinant::from_label("(2101)", 4), e) ==
              doctest::Approx(determinant_energy(Determinant::from_label("(1210)", 4), e)).epsilon(1e-12));
    }
}

TEST_CASE("adiabatic basis phase conventions") {
    SshParams p;
    p.n_sites = 6;
    Eigen::VectorXd u(6);
    u << 0.0, 0.05, -0.04, 0.06, -0.05, 0.0;
    const AdiabaticBasis a = adiabatic_basis(build_h_e(p, u));
    for (int k = 0; k < 6; ++k) {
        Eigen::Index at = 0;
        a.orbitals.col(k).cwiseAbs().maxCoeff(&at);
        CHECK(a.orbitals(at, k) > 0.0);
    }
    // a reference flips signs to follow it
    Eigen::MatrixXd ref = a.orbitals;
    ref.col(2) *= -1.0;
    const AdiabaticBasis b = adiabatic_basis(build_h_e(p, u), &ref);
    CHECK((b.orbitals - ref).norm() < 1e-12);
    CHECK((a.energies - b.energies).norm() == 0.0);
}
