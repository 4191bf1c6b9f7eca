#include "vibret/dynamics.hpp"

#include "vibret/binary_io.hpp"

#include <cmath>
#include <string>

namespace vibret {

void IntegratorConfig::validate() const {
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    if (!(t_max >= 0)) throw std::invalid_argument("t_max must be non-negative");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
    if (!(energy_drift_tolerance > 0)) throw std::invalid_argument("energy_drift_tolerance must be positive");
}

long long IntegratorConfig::total_steps() const { return std::llround(t_max / dt); }

void bond_densities(const Eigen::MatrixXcd& orbitals, const Eigen::MatrixXcd& gamma1, Eigen::MatrixXcd& g_work,
                    Eigen::VectorXd& out) {
    const auto n = orbitals.rows();
    g_work.noalias() = gamma1 * orbitals.transpose();
    out.resize(n - 1);
    for (Eigen::Index b = 0; b + 1 < n; ++b) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < orbitals.cols(); ++k) {
            const cplx c = orbitals(b, k);
            const cplx g = g_work(k, b + 1);
            acc += c.real() * g.real() + c.imag() * g.imag();
        }
        out[b] = acc;
    }
}

namespace {

void compute_force(const SshParams& params, const NuclearPhase& phase, const Eigen::MatrixXcd& orbitals,
                   const Eigen::MatrixXcd& gamma1, Eigen::MatrixXcd& g_work, Eigen::VectorXd& bond_density,
                   Eigen::VectorXd& force) {
    bond_densities(orbitals, gamma1, g_work, bond_density);
    force.setZero(phase.size());
    add_electronic_force(params, bond_density, force);
    add_spring_force(params, phase.u, force);
    const int n = phase.size();
    if (phase.clamp.first) force[0] = 0.0;
    if (phase.clamp.last) force[n - 1] = 0.0;
}

}  // namespace

// ----------------------------------------------------------------- Trajectory

Trajectory::Trajectory(SshParams params, NuclearPhase phase, const SuperpositionState& state, double time)
    : params_(params),
      phase_(std::move(phase)),
      orbitals_(state.orbital_set()),
      terms_(state.terms()),
      densities_(orbital_densities(state, state.n_orbitals() <= kDenseRdm2Limit)),
      time_(time) {
    params_.validate();
    if (phase_.size() != params_.n_sites || phase_.p.size() != params_.n_sites || state.n_orbitals() != params_.n_sites)
        throw std::invalid_argument("trajectory dimensions do not match n_sites");
    phase_.enforce_clamp();
    refresh_force();
    update_monitors();
    monitors_.initial_energy = monitors_.total_energy;
}

Trajectory Trajectory::restore(SshParams params, NuclearPhase phase, OrbitalSet orbitals, std::vector<Term> terms,
                               double time, double initial_energy) {
    const SuperpositionState state(std::move(orbitals), std::move(terms));
    Trajectory traj(params, std::move(phase), state, time);
    traj.monitors_.initial_energy = initial_energy;
    return traj;
}

void Trajectory::refresh_force() {
    Eigen::MatrixXcd work;
    Eigen::VectorXd bonds;
    compute_force(params_, phase_, orbitals_.orbitals, densities_.gamma1, work, bonds, force_);
}

SuperpositionState Trajectory::state() const { return SuperpositionState(orbitals_, terms_); }

Rdm1 Trajectory::rdm1() const { return to_site_basis(densities_.gamma1, orbitals_.orbitals); }

Rdm2 Trajectory::rdm2() const { return to_site_basis(densities_.gamma2, orbitals_.orbitals); }

double Trajectory::electronic_energy() const {
    Eigen::MatrixXcd work;
    Eigen::VectorXd bonds;
    bond_densities(orbitals_.orbitals, densities_.gamma1, work, bonds);
    double e = 0.0;
    for (Eigen::Index b = 0; b < bonds.size(); ++b)
        e += 2.0 * bond_hopping(params_, phase_.u, static_cast<int>(b)) * bonds[b];
    return e;
}

double Trajectory::total_energy() const {
    return electronic_energy() + phase_.p.squaredNorm() / (2.0 * params_.mass) + spring_energy(params_, phase_.u);
}

void Trajectory::update_monitors() {
    monitors_.total_energy = total_energy();
    monitors_.orthonormality_defect = orbitals_.orthonormality_defect();
    double norm = 0.0;
    for (const Term& t : terms_) norm += std::norm(t.amplitude);
    monitors_.norm = norm;
}

Eigen::VectorXd mean_field_force(const Trajectory& traj) { return traj.force(); }

// ----------------------------------------------------------------- Propagator

Propagator::Propagator(int n_sites)
    : p_half_(n_sites),
      u_mid_(n_sites),
      diag_(Eigen::VectorXd::Zero(n_sites)),
      offdiag_(n_sites - 1),
      solver_(n_sites),
      work_(n_sites, n_sites),
      g_(n_sites, n_sites),
      bond_density_(n_sites - 1) {}

void Propagator::step(Trajectory& traj, double dt) {
    NuclearPhase& phase = traj.phase_;
    const SshParams& params = traj.params_;
    const int n = phase.size();

    p_half_ = phase.p + (0.5 * dt) * traj.force_;
    if (phase.clamp.first) p_half_[0] = 0.0;
    if (phase.clamp.last) p_half_[n - 1] = 0.0;
    u_mid_ = phase.u;
    phase.u += (dt / params.mass) * p_half_;
    u_mid_ = 0.5 * (u_mid_ + phase.u);

    bond_hoppings(params, u_mid_, offdiag_);
    solver_.computeFromTridiagonal(diag_, offdiag_, Eigen::ComputeEigenvectors);
    const Eigen::MatrixXd& v = solver_.eigenvectors();
    const Eigen::VectorXd& eps = solver_.eigenvalues();

    Eigen::MatrixXcd& c = traj.orbitals_.orbitals;
    work_.noalias() = v.transpose() * c;
    for (int k = 0; k < n; ++k) {
        const double angle = -eps[k] * dt / params.hbar;
        work_.row(k) *= cplx(std::cos(angle), std::sin(angle));
    }
    c.noalias() = v * work_;

    compute_force(params, phase, c, traj.densities_.gamma1, g_, bond_density_, traj.force_);
    phase.p = p_half_ + (0.5 * dt) * traj.force_;
    if (phase.clamp.first) phase.p[0] = 0.0;
    if (phase.clamp.last) phase.p[n - 1] = 0.0;
    traj.time_ += dt;
}

Trajectory step(Trajectory traj, double dt) {
    Propagator prop(traj.params().n_sites);
    prop.step(traj, dt);
    traj.update_monitors();
    return traj;
}

// ---------------------------------------------------------------- recording

TrajectoryRecord make_record(const Trajectory& traj, RecordOptions options, Eigen::MatrixXd* population_reference) {
    TrajectoryRecord rec;
    rec.time = traj.time();
    rec.u = traj.phase().u;
    rec.rdm1 = traj.rdm1();
    if (options.rdm2) rec.rdm2 = traj.rdm2();
    if (options.populations) {
        const AdiabaticBasis basis =
            adiabatic_basis(build_h_e(traj.params(), traj.phase().u), population_reference);
        const Eigen::MatrixXd& v = basis.orbitals;
        const Eigen::MatrixXd rho_re = rec.rdm1.matrix.real();
        rec.orbital_populations = (v.transpose() * rho_re * v).diagonal();
        if (population_reference != nullptr) *population_reference = v;
    }
    rec.total_energy = traj.monitors().total_energy;
    return rec;
}

void check_monitors(const Trajectory& traj, const IntegratorConfig& cfg) {
    const Monitors& m = traj.monitors();
    const double drift = std::abs(m.total_energy - m.initial_energy);
    const double allowed = cfg.energy_drift_tolerance * std::max(1.0, traj.time() / 1000.0);
    if (!(drift <= allowed))
        throw MonitorFailure("energy drift " + std::to_string(drift) + " eV at t = " + std::to_string(traj.time()) +
                             " fs exceeds " + std::to_string(allowed) + " eV");
    if (!(m.orthonormality_defect <= cfg.orthonormality_tolerance))
        throw MonitorFailure("orbital orthonormality defect " + std::to_string(m.orthonormality_defect) +
                             " at t = " + std::to_string(traj.time()) + " fs");
    if (!(std::abs(m.norm - 1.0) <= 1e-8)) throw MonitorFailure("state norm drifted");
}

TrajectoryRunner::TrajectoryRunner(Trajectory traj, IntegratorConfig cfg, RecordOptions options)
    : traj_(std::move(traj)), cfg_(cfg), options_(options), prop_(traj_.params().n_sites) {
    cfg_.validate();
    first_step_ = std::llround(traj_.time() / cfg_.dt);
    step_ = first_step_;
}

void TrajectoryRunner::emit(const RecordObserver& observer) {
    traj_.update_monitors();
    check_monitors(traj_, cfg_);
    TrajectoryRecord rec = make_record(traj_, options_, have_reference_ ? &reference_ : nullptr);
    if (options_.populations && !have_reference_) {
        reference_ = adiabatic_basis(build_h_e(traj_.params(), traj_.phase().u)).orbitals;
        have_reference_ = true;
    }
    if (observer) observer(rec);
}

bool TrajectoryRunner::advance(const RecordObserver& observer, long long max_records) {
    long long emitted = 0;
    if (!started_) {
        started_ = true;
        if (step_ == 0 || step_ % cfg_.record_stride == 0) {
            emit(observer);
            ++emitted;
        }
    }
    const long long steps = cfg_.total_steps();
    while (step_ < steps) {
        if (max_records >= 0 && emitted >= max_records) return false;
        prop_.step(traj_, cfg_.dt);
        ++step_;
        if (step_ % cfg_.record_stride == 0) {
            emit(observer);
            ++emitted;
        }
    }
    return true;
}

namespace {
constexpr const char* kRunnerMagic = "VBRUN001";
}

void TrajectoryRunner::write(std::ostream& out, std::uint64_t stream) const {
    io::put_magic(out, kRunnerMagic);
    write_trajectory_checkpoint(out, traj_, stream);
    io::put<std::int64_t>(out, step_);
    io::put<std::int64_t>(out, first_step_);
    io::put<std::uint8_t>(out, started_);
    io::put<std::uint8_t>(out, have_reference_);
    if (have_reference_) io::put_matrix(out, reference_);
}

TrajectoryRunner TrajectoryRunner::read(std::istream& in, const IntegratorConfig& cfg, RecordOptions options,
                                        std::uint64_t* stream) {
    io::expect_magic(in, kRunnerMagic);
    TrajectoryRunner runner(read_trajectory_checkpoint(in, stream), cfg, options);
    runner.step_ = io::get<std::int64_t>(in);
    runner.first_step_ = io::get<std::int64_t>(in);
    runner.started_ = io::get<std::uint8_t>(in) != 0;
    runner.have_reference_ = io::get<std::uint8_t>(in) != 0;
    if (runner.have_reference_) runner.reference_ = io::get_matrix<Eigen::MatrixXd>(in);
    return runner;
}

void run_trajectory(Trajectory& traj, const IntegratorConfig& cfg, RecordOptions options,
                    const RecordObserver& observer) {
    TrajectoryRunner runner(std::move(traj), cfg, options);
    runner.advance(observer);
    traj = runner.trajectory();
}

std::vector<TrajectoryRecord> run_trajectory(Trajectory traj, const IntegratorConfig& cfg, RecordOptions options) {
    std::vector<TrajectoryRecord> records;
    run_trajectory(traj, cfg, options, [&](const TrajectoryRecord& r) { records.push_back(r); });
    return records;
}

// ------------------------------------------------------ nonadiabatic coupling

CouplingTerms coupling_terms(const SshParams& params, const NuclearPhase& phase, const Determinant& di,
                             const Determinant& dk) {
    const SingleParticleHamiltonian h = build_h_e(params, phase.u);
    const AdiabaticBasis basis = adiabatic_basis(h);
    // sum_n udot_n dH_e/du_n is tridiagonal with bond entries alpha (udot_{b+1} - udot_b)
    const Eigen::VectorXd udot = phase.p / params.mass;
    const int n = params.n_sites;
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, n);
    for (int b = 0; b + 1 < n; ++b) {
        dh(b, b + 1) = params.alpha * (udot[b + 1] - udot[b]);
        dh(b + 1, b) = dh(b, b + 1);
    }
    const Eigen::MatrixXd dh_orb = basis.orbitals.transpose() * dh * basis.orbitals;
    CouplingTerms terms;
    terms.numerator = slater_condon_one_body(di, dk, dh_orb);
    terms.energy_gap = determinant_energy(di, basis.energies) - determinant_energy(dk, basis.energies);
    return terms;
}

cplx nonadiabatic_coupling(const SshParams& params, const NuclearPhase& phase, const Determinant& di,
                           const Determinant& dk) {
    if (di == dk) return {};
    const CouplingTerms t = coupling_terms(params, phase, di, dk);
    const double scale = params.alpha * (phase.p.cwiseAbs().maxCoeff() / params.mass) + 1e-300;
    if (std::abs(t.numerator) <= 1e-12 * scale) return {};
    if (std::abs(t.energy_gap) < 1e-10)
        throw SingularCouplingError("degenerate states with non-zero coupling numerator " + std::to_string(t.numerator));
    return cplx(0.0, params.hbar * t.numerator / t.energy_gap);
}

cplx nonadiabatic_coupling(const Trajectory& traj, const Determinant& di, const Determinant& dk) {
    return nonadiabatic_coupling(traj.params(), traj.phase(), di, dk);
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr const char* kTrajectoryMagic = "VBTRJ001";
}

void write_record(std::ostream& out, const TrajectoryRecord& rec) {
    io::put(out, rec.time);
    io::put_matrix(out, rec.u);
    io::put_matrix(out, rec.rdm1.matrix);
    io::put<std::uint8_t>(out, rec.rdm2.has_value());
    if (rec.rdm2) {
        io::put<std::int32_t>(out, rec.rdm2->size());
        io::put_vector(out, rec.rdm2->data());
    }
    io::put_matrix(out, rec.orbital_populations);
    io::put(out, rec.total_energy);
}

TrajectoryRecord read_record(std::istream& in) {
    TrajectoryRecord rec;
    rec.time = io::get<double>(in);
    rec.u = io::get_matrix<Eigen::VectorXd>(in);
    rec.rdm1.matrix = io::get_matrix<Eigen::MatrixXcd>(in);
    if (io::get<std::uint8_t>(in) != 0) {
        Rdm2 g(io::get<std::int32_t>(in));
        auto data = io::get_vector<cplx>(in);
        if (data.size() != g.data().size()) throw std::runtime_error("bad two-body record");
        g.data() = std::move(data);
        rec.rdm2 = std::move(g);
    }
    rec.orbital_populations = io::get_matrix<Eigen::VectorXd>(in);
    rec.total_energy = io::get<double>(in);
    return rec;
}

void write_trajectory_checkpoint(std::ostream& out, const Trajectory& traj, std::uint64_t stream) {
    io::put_magic(out, kTrajectoryMagic);
    const SshParams& p = traj.params();
    for (double x : {p.t0, p.alpha, p.k_spring, p.mass, p.a_lattice, p.hbar}) io::put(out, x);
    io::put<std::int32_t>(out, p.n_sites);
    io::put<std::uint8_t>(out, traj.phase().clamp.first);
    io::put<std::uint8_t>(out, traj.phase().clamp.last);
    io::put_matrix(out, traj.phase().u);
    io::put_matrix(out, traj.phase().p);
    io::put_matrix(out, traj.orbitals());
    io::put<std::uint64_t>(out, traj.terms().size());
    for (const Term& t : traj.terms()) {
        io::put(out, t.amplitude);
        io::put_vector(out, t.det.up);
        io::put_vector(out, t.det.down);
    }
    io::put(out, traj.time());
    io::put(out, traj.monitors().initial_energy);
    io::put(out, stream);
}

Trajectory read_trajectory_checkpoint(std::istream& in, std::uint64_t* stream) {
    io::expect_magic(in, kTrajectoryMagic);
    SshParams p;
    p.t0 = io::get<double>(in);
    p.alpha = io::get<double>(in);
    p.k_spring = io::get<double>(in);
    p.mass = io::get<double>(in);
    p.a_lattice = io::get<double>(in);
    p.hbar = io::get<double>(in);
    p.n_sites = io::get<std::int32_t>(in);
    NuclearPhase phase;
    phase.clamp.first = io::get<std::uint8_t>(in) != 0;
    phase.clamp.last = io::get<std::uint8_t>(in) != 0;
    phase.u = io::get_matrix<Eigen::VectorXd>(in);
    phase.p = io::get_matrix<Eigen::VectorXd>(in);
    OrbitalSet orbitals{io::get_matrix<Eigen::MatrixXcd>(in)};
    const auto n_terms = io::get<std::uint64_t>(in);
    if (n_terms == 0 || n_terms > (1u << 20)) throw std::runtime_error("bad term count in trajectory checkpoint");
    std::vector<Term> terms;
    for (std::uint64_t i = 0; i < n_terms; ++i) {
        Term t;
        t.amplitude = io::get<cplx>(in);
        t.det.up = io::get_vector<int>(in);
        t.det.down = io::get_vector<int>(in);
        terms.push_back(std::move(t));
    }
    const double time = io::get<double>(in);
    const double e0 = io::get<double>(in);
    const auto s = io::get<std::uint64_t>(in);
    if (stream != nullptr) *stream = s;
    return Trajectory::restore(p, std::move(phase), std::move(orbitals), std::move(terms), time, e0);
}

}  // namespace vibret
