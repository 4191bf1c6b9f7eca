#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vibret/dynamics.hpp"
#include "vibret/ground_state.hpp"
#include "vibret/oracle.hpp"
#include "vibret/run_config.hpp"

#include <algorithm>

using namespace vibret;
namespace orc = vibret::oracle;

namespace {

SshParams chain(int n) {
    SshParams p;
    p.n_sites = n;
    return p;
}

}  // namespace

TEST_CASE("Fock basis enumeration") {
    const orc::FockBasis b = orc::enumerate_states(4, 2, 2);
    CHECK(b.dimension() == 36);
    for (std::size_t i = 0; i < b.dimension(); ++i) {
        CHECK(b.find(b[i]) == static_cast<long long>(i));
        CHECK(std::popcount(b[i].up) == 2);
        CHECK(std::popcount(b[i].down) == 2);
    }
    CHECK(b.find({0b1u, 0b11u}) == -1);
    CHECK(orc::enumerate_states(6, 3, 2).dimension() == 20 * 15);
    CHECK_THROWS_AS((void)orc::enumerate_states(16, 8, 8), orc::CapExceededError);
    CHECK_THROWS((void)orc::enumerate_states(4, 5, 0));
}

TEST_CASE("nineteen occupation classes with the tabulated energies") {
    const OptimizedGeometry g = optimize_geometry(chain(4), 2);
    const auto classes = orc::occupation_classes(orc::enumerate_states(4, 2, 2));
    CHECK(classes.size() == 19);
    std::vector<double> energies;
    int members = 0;
    for (const auto& [occ, count] : classes) {
        double e = 0.0;
        for (int k = 0; k < 4; ++k) e += occ[k] * g.orbital_energies[k];
        energies.push_back(e);
        members += count;
    }
    CHECK(members == 36);
    std::sort(energies.begin(), energies.end());
    const std::vector<double> table{-11.95, -7.78, -5.97, -5.97, -4.17, -3.61, -1.81, -1.81, 0.00, 0.00,
                                    0.00,   1.81,  1.81,  3.61,  4.17,  5.97,  5.97,  7.78,  11.95};
    for (std::size_t i = 0; i < table.size(); ++i) CHECK(std::abs(energies[i] - table[i]) <= 0.02);
}

TEST_CASE("lifted one-body operator") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd h(4, 4);
    for (int i = 0; i < 16; ++i) h.data()[i] = gauss(rng);
    h = (h + h.transpose()).eval();
    const orc::FockBasis b(4, 2, 2);
    const Eigen::MatrixXd big = orc::lift_one_body(b, h);
    CHECK((big - big.transpose()).norm() < 1e-13);
    // many-body spectrum = sums of two up and two down single-particle energies
    const Eigen::VectorXd eps = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
    std::vector<double> sums;
    for (int a = 0; a < 4; ++a)
        for (int c = a + 1; c < 4; ++c)
            for (int d = 0; d < 4; ++d)
                for (int e = d + 1; e < 4; ++e) sums.push_back(eps[a] + eps[c] + eps[d] + eps[e]);
    std::sort(sums.begin(), sums.end());
    const Eigen::VectorXd many = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(big).eigenvalues();
    for (std::size_t i = 0; i < sums.size(); ++i) CHECK(many[static_cast<Eigen::Index>(i)] == doctest::Approx(sums[i]));
    // the lift is the sum of the hops
    Eigen::VectorXcd psi = Eigen::VectorXcd::Random(36);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(36);
    for (int s = 0; s < 2; ++s)
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q) acc += h(p, q) * orc::apply_hop(b, psi, p, q, s);
    CHECK((acc - big.cast<cplx>() * psi).norm() < 1e-12);
}

TEST_CASE("frozen-geometry propagation") {
    const SshParams p = chain(4);
    const OptimizedGeometry g = optimize_geometry(p, 2);
    const orc::FockBasis b(4, 2, 2);
    const Eigen::MatrixXd h = build_h_e(p, g.u_star).matrix;
    const Eigen::MatrixXd big = orc::lift_one_body(b, h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(big);
    const Eigen::VectorXcd eig = es.eigenvectors().col(5).cast<cplx>();
    const Eigen::VectorXcd out = orc::propagate_frozen(b, eig, h, 37.0, p.hbar);
    const cplx phase = eig.dot(out);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK(std::abs(phase - std::exp(cplx(0.0, -es.eigenvalues()[5] * 37.0 / p.hbar))) < 1e-10);

    std::mt19937_64 rng(2);
    const Eigen::VectorXcd psi = orc::to_ci_vector(b, orc::random_superposition(4, rng, 3));
    std::vector<Eigen::VectorXd> path;
    for (int k = 0; k <= 200; ++k) path.push_back(g.u_star + 0.02 * std::sin(0.03 * k) * Eigen::Vector4d(0, 1, -1, 0));
    const auto series = orc::full_ci_propagate(b, psi, path, p, 0.05);
    REQUIRE(series.size() == path.size());
    CHECK(std::abs(series.back().norm() - 1.0) < 1e-10);
}

TEST_CASE("determinant lift along a shared path") {
    const SshParams p = chain(4);
    const OptimizedGeometry g = optimize_geometry(p, 2);
    const WignerSampler sampler(hessian_and_modes(p, g, 2), p, 5);
    for (std::uint64_t stream : {0u, 1u}) {
        const NuclearPhase phase = sampler.sample(stream);
        const AdiabaticBasis ab = adiabatic_basis(build_h_e(p, phase.u));
        const SuperpositionState s = build_initial_state(parse_initial_state("HOMO->LUMO, HOMO->LUMO+1", 4),
                                                         OrbitalSet{ab.orbitals.cast<cplx>()});
        const orc::EngineComparison c = orc::compare_engines(p, phase, s, 0.05, 2000, 50);
        CHECK(c.min_overlap >= 1.0 - 1e-8);
        CHECK(c.max_rdm1_error < 1e-10);
        CHECK(c.max_position_error < 1e-8);
    }
}

TEST_CASE("random superpositions are valid states") {
    std::mt19937_64 rng(3);
    const orc::FockBasis b(6, 3, 3);
    for (int terms = 1; terms <= 5; ++terms) {
        const SuperpositionState s = orc::random_superposition(6, rng, terms);
        CHECK(s.terms().size() == static_cast<std::size_t>(terms));
        CHECK(s.orbital_set().orthonormality_defect() < 1e-12);
        CHECK(orc::to_ci_vector(b, s).norm() == doctest::Approx(1.0).epsilon(1e-12));
        const orc::BruteForceRdms r = orc::brute_force_rdms(b, orc::to_ci_vector(b, s));
        CHECK(std::abs(r.rdm2.trace() - 15.0) < 1e-11);
    }
}
