#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vibret/ground_state.hpp"
#include "vibret/observables.hpp"
#include "vibret/oracle.hpp"
#include "vibret/run_config.hpp"

#include <random>
#include <sstream>

using namespace vibret;
namespace orc = vibret::oracle;

namespace {

const std::array<std::string, 3> kTriad{"(2110)", "(2101)", "(1210)"};

SshParams chain(int n) {
    SshParams p;
    p.n_sites = n;
    return p;
}

Eigen::VectorXd u_star4() { return optimize_geometry(chain(4), 2).u_star; }

OrbitalSet adiabatic_orbitals(const SshParams& p, const Eigen::VectorXd& u) {
    return {adiabatic_basis(build_h_e(p, u)).orbitals.cast<cplx>()};
}

// Many-body density matrix of a weighted set of pure states, over the oracle basis.
Eigen::MatrixXcd mixture(const orc::FockBasis& basis, const std::vector<std::pair<double, SuperpositionState>>& parts) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
    for (const auto& [w, s] : parts) {
        const Eigen::VectorXcd v = orc::to_ci_vector(basis, s);
        d += w * v * v.adjoint();
    }
    return d;
}

TrajectoryRecord record_of(const SuperpositionState& s, double time, const Eigen::VectorXd& u) {
    TrajectoryRecord r;
    r.time = time;
    r.u = u;
    r.rdm1 = one_body_rdm(s);
    r.rdm2 = two_body_rdm(s);
    r.orbital_populations = Eigen::VectorXd::Constant(u.size(), time);
    r.total_energy = time;
    return r;
}

}  // namespace

TEST_CASE("orbital populations of reference states") {
    const SshParams p = chain(4);
    const Eigen::VectorXd u = u_star4();
    const OrbitalSet orb = adiabatic_orbitals(p, u);
    const SuperpositionState fig = build_initial_state(parse_initial_state("HOMO->LUMO, HOMO->LUMO+1", 4), orb);
    const OrbitalPopulations n = orbital_populations(one_body_rdm(fig), p, u);
    CHECK((n.n - Eigen::Vector4d(2.0, 1.0, 0.5, 0.5)).cwiseAbs().maxCoeff() < 1e-12);
    const SuperpositionState gs(orb, {{1.0, Determinant::ground(2)}});
    CHECK((orbital_populations(one_body_rdm(gs), p, u).n - Eigen::Vector4d(2.0, 2.0, 0.0, 0.0)).cwiseAbs().maxCoeff() <
          1e-12);
    // the total is invariant under the basis rotation at any geometry
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-0.2, 0.2);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd v = Eigen::Vector4d(0.0, d(rng), d(rng), 0.0);
        const OrbitalPopulations m = orbital_populations(one_body_rdm(fig), p, v);
        CHECK(m.total() == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(m.n.minCoeff() > -1e-6);
        CHECK(m.n.maxCoeff() < 2.0 + 1e-6);
    }
}

TEST_CASE("three-state reconstruction") {
    const Triad t = Triad::from_labels(kTriad, 4);
    StatePopulations s = reconstruct_state_populations(Eigen::Vector4d(2.0, 1.0, 0.5, 0.5), t);
    CHECK((s.p - Eigen::Vector3d(0.5, 0.5, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.residual < 1e-12);
    s = reconstruct_state_populations(Eigen::Vector4d(1.0, 2.0, 1.0, 0.0), t);
    CHECK((s.p - Eigen::Vector3d(0.0, 0.0, 1.0)).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1e-3);
    const Eigen::Vector3d truth(0.2, 0.5, 0.3);
    Eigen::Vector4d n = truth[0] * Eigen::Vector4d(2, 1, 1, 0) + truth[1] * Eigen::Vector4d(2, 1, 0, 1) +
                        truth[2] * Eigen::Vector4d(1, 2, 1, 0);
    const Eigen::Vector4d noise(g(rng), g(rng), g(rng), g(rng));
    s = reconstruct_state_populations(n + noise, t);
    CHECK(s.p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((s.p - truth).cwiseAbs().maxCoeff() < 5.0 * noise.norm());
    CHECK(s.residual > 0.0);
    CHECK(s.residual <= noise.norm() + 1e-12);

    // (2110) is the midpoint of (2200) and (2020): no unique decomposition
    const Triad bad = Triad::from_labels({"(2200)", "(2110)", "(2020)"}, 4);
    CHECK_THROWS_AS((void)reconstruct_state_populations(Eigen::Vector4d(2, 1, 1, 0), bad), IllConditionedError);
}

TEST_CASE("purity of reference density matrices") {
    const SshParams p = chain(4);
    const OrbitalSet orb = adiabatic_orbitals(p, u_star4());
    const SuperpositionState gs(orb, {{1.0, Determinant::ground(2)}});
    CHECK(purity(one_body_rdm(gs)) == doctest::Approx(8.0).epsilon(1e-12));
    // Gamma = 2 P(p,s) P(q,r) - P(p,r) P(q,s) for a projector P of rank 2: 16 + 4 - 2 * 4
    CHECK(purity(two_body_rdm(gs)) == doctest::Approx(12.0).epsilon(1e-12));
    Rdm1 flat;
    flat.matrix = Eigen::MatrixXcd::Identity(6, 6) * (4.0 / 6.0);
    CHECK(purity(flat) == doctest::Approx(16.0 / 6.0));
}

TEST_CASE("robust superposition is nearly pure in two-body purity") {
    const SshParams p = chain(4);
    const OrbitalSet orb = adiabatic_orbitals(p, u_star4());
    const orc::FockBasis basis(4, 2, 2);
    const SuperpositionState s = build_initial_state(parse_initial_state("(2101) + (1210)", 4), orb);
    CHECK(purity(two_body_rdm(s)) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(purity(orc::brute_force_rdms(basis, orc::to_ci_vector(basis, s)).rdm2) == doctest::Approx(5.0).epsilon(1e-12));
    const SuperpositionState a(orb, {{1.0, Determinant::from_label("(2101)", 4)}});
    const SuperpositionState b(orb, {{1.0, Determinant::from_label("(1210)", 4)}});
    const orc::BruteForceRdms mixed = orc::brute_force_rdms(basis, mixture(basis, {{0.5, a}, {0.5, b}}));
    CHECK(purity(mixed.rdm2) == doctest::Approx(4.5).epsilon(1e-12));

    const ModelPurities m = model_purities({Eigen::Vector3d(0.0, 0.5, 0.5), 0.0}, Triad::from_labels(kTriad, 4), p,
                                           u_star4());
    CHECK(m.p2[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m.p2[1] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m.p2[2] == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("model purities match Fock-space density matrices") {
    const SshParams p = chain(4);
    const orc::FockBasis basis(4, 2, 2);
    const Triad t = Triad::from_labels(kTriad, 4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-0.15, 0.15);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd u = Eigen::Vector4d(0.0, d(rng), d(rng), 0.0);
        Eigen::Vector3d pk(w(rng), w(rng), w(rng));
        pk /= pk.sum();
        const OrbitalSet orb = adiabatic_orbitals(p, u);
        auto single = [&](int k) { return SuperpositionState(orb, {{1.0, t.states[k]}}); };
        const SuperpositionState m1(orb, {{std::sqrt(pk[0]), t.states[0]},
                                          {std::sqrt(pk[1]), t.states[1]},
                                          {std::sqrt(pk[2]), t.states[2]}});
        const double c = std::sqrt(pk[1] + pk[2]);
        const SuperpositionState pair(orb, {{std::sqrt(pk[1]) / c, t.states[1]}, {std::sqrt(pk[2]) / c, t.states[2]}});
        const auto r1 = orc::brute_force_rdms(basis, mixture(basis, {{1.0, m1}}));
        const auto r2 = orc::brute_force_rdms(basis, mixture(basis, {{pk[0], single(0)}, {pk[1] + pk[2], pair}}));
        const auto r3 =
            orc::brute_force_rdms(basis, mixture(basis, {{pk[0], single(0)}, {pk[1], single(1)}, {pk[2], single(2)}}));
        const ModelPurities m = model_purities({pk, 0.0}, t, p, u);
        CHECK(m.p1[0] == doctest::Approx(purity(r1.rdm1)).epsilon(1e-12));
        CHECK(m.p2[0] == doctest::Approx(purity(r1.rdm2)).epsilon(1e-12));
        CHECK(m.p1[1] == doctest::Approx(purity(r2.rdm1)).epsilon(1e-12));
        CHECK(m.p2[1] == doctest::Approx(purity(r2.rdm2)).epsilon(1e-12));
        CHECK(m.p1[2] == doctest::Approx(purity(r3.rdm1)).epsilon(1e-12));
        CHECK(m.p2[2] == doctest::Approx(purity(r3.rdm2)).epsilon(1e-12));
        // one-body purity cannot see the two-particle coherence
        CHECK(std::abs(m.p1[1] - m.p1[2]) < 1e-10);
        CHECK(m.p2[2] < m.p2[1]);
    }
    const ModelPurities pure0 = model_purities({Eigen::Vector3d(1, 0, 0), 0.0}, t, p, u_star4());
    for (int k = 1; k < 3; ++k) {
        CHECK(pure0.p1[k] == doctest::Approx(pure0.p1[0]).epsilon(1e-12));
        CHECK(pure0.p2[k] == doctest::Approx(pure0.p2[0]).epsilon(1e-12));
    }
    // negative reconstructed populations are clipped
    const ModelPurities clipped = model_purities({Eigen::Vector3d(-0.01, 0.51, 0.5), 0.0}, t, p, u_star4());
    CHECK(std::isfinite(clipped.p2[2]));
}

TEST_CASE("ensemble accumulator reduces, merges and round-trips") {
    std::mt19937_64 rng(4);
    const int n = 4;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    std::vector<std::vector<TrajectoryRecord>> trajs;
    for (int i = 0; i < 6; ++i) {
        std::vector<TrajectoryRecord> recs;
        for (int k = 0; k < 3; ++k) recs.push_back(record_of(orc::random_superposition(n, rng, 3), 10.0 * k, u));
        trajs.push_back(recs);
    }

    EnsembleAccumulator one;
    one.add_trajectory(trajs[0]);
    CHECK(one.mean_rdm1(1).matrix == trajs[0][1].rdm1.matrix);
    EnsembleAccumulator twice;
    twice.add_trajectory(trajs[0]);
    twice.add_trajectory(trajs[0]);
    CHECK((twice.mean_rdm1(2).matrix - one.mean_rdm1(2).matrix).cwiseAbs().maxCoeff() < 1e-15);

    EnsembleAccumulator all, left, right;
    for (int i = 0; i < 6; ++i) {
        all.add_trajectory(trajs[i]);
        (i < 3 ? left : right).add_trajectory(trajs[i]);
    }
    left.merge(right);
    CHECK(left.count() == 6);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK((left.mean_rdm1(t).matrix - all.mean_rdm1(t).matrix).cwiseAbs().maxCoeff() < 1e-14);
        const auto& a = left.mean_rdm2(t).data();
        const auto& b = all.mean_rdm2(t).data();
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-14);
        CHECK(all.mean_energy(t) == doctest::Approx(10.0 * static_cast<double>(t)));
    }

    // mixing never increases purity
    for (std::size_t t = 0; t < 3; ++t) {
        double mean_p1 = 0.0, mean_p2 = 0.0;
        for (const auto& tr : trajs) {
            mean_p1 += purity(tr[t].rdm1) / 6.0;
            mean_p2 += purity(*tr[t].rdm2) / 6.0;
        }
        CHECK(purity(all.mean_rdm1(t)) <= mean_p1 + 1e-12);
        CHECK(purity(all.mean_rdm2(t)) <= mean_p2 + 1e-12);
    }

    all.record_failure(17);
    std::stringstream ss;
    all.write(ss);
    const EnsembleAccumulator back = EnsembleAccumulator::read(ss);
    CHECK(back.count() == all.count());
    CHECK(back.failed() == std::vector<std::uint64_t>{17});
    CHECK(back.times() == all.times());
    CHECK(back.mean_rdm1(2).matrix == all.mean_rdm1(2).matrix);
    CHECK(back.mean_rdm2(1).data() == all.mean_rdm2(1).data());

    std::vector<TrajectoryRecord> shorter(trajs[1].begin(), trajs[1].begin() + 2);
    CHECK_THROWS((void)all.add_trajectory(shorter));
}

TEST_CASE("ensemble series from an identical ensemble keeps the pure values") {
    const SshParams p = chain(4);
    const Eigen::VectorXd u = u_star4();
    const SuperpositionState fig =
        build_initial_state(parse_initial_state("HOMO->LUMO, HOMO->LUMO+1", 4), adiabatic_orbitals(p, u));
    TrajectoryRecord r = record_of(fig, 0.0, u);
    r.orbital_populations = orbital_populations(r.rdm1, p, u).n;
    EnsembleAccumulator acc;
    acc.add_trajectory({r});
    acc.add_trajectory({r});
    const EnsembleSeries s = ensemble_reduce(acc, p, Triad::from_labels(kTriad, 4));
    REQUIRE(s.p1.size() == 1);
    CHECK(s.p1[0] == doctest::Approx(purity(r.rdm1)));
    CHECK(s.p2[0] == doctest::Approx(two_body_purity_pure(fig)));
    CHECK((s.states[0].p - Eigen::Vector3d(0.5, 0.5, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.models[0].p1[0] == doctest::Approx(s.p1[0]).epsilon(1e-10));
    CHECK(s.models[0].p2[0] == doctest::Approx(s.p2[0]).epsilon(1e-10));
}
