#pragma once

// Ehrenfest propagation of one coupled electron-lattice trajectory.
//
// The electronic state is a fixed-amplitude superposition of determinants
// over one orbital set; because H_e is one-body, evolving the orbitals
// unitarily evolves every determinant exactly. Nuclei follow velocity
// Verlet on the mean-field force; orbitals are advanced by
// exp(-i H_e(u_mid) dt / hbar) at the half-step geometry.

#include "vibret/electronic.hpp"
#include "vibret/model.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vibret {

/// A trajectory left its conservation envelope and was aborted.
class MonitorFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
    double dt = 0.01;        // fs
    double t_max = 1000.0;   // fs
    int record_stride = 100; // steps per record
    double energy_drift_tolerance = 1e-4;  // eV per ps
    double orthonormality_tolerance = 1e-8;

    void validate() const;
    [[nodiscard]] long long total_steps() const;
};

struct Monitors {
    double initial_energy = 0.0;
    double total_energy = 0.0;
    double norm = 1.0;
    double orthonormality_defect = 0.0;
};

class Trajectory {
public:
    Trajectory(SshParams params, NuclearPhase phase, const SuperpositionState& state, double time = 0.0);

    [[nodiscard]] const SshParams& params() const { return params_; }
    [[nodiscard]] const NuclearPhase& phase() const { return phase_; }
    [[nodiscard]] double time() const { return time_; }
    [[nodiscard]] const Eigen::MatrixXcd& orbitals() const { return orbitals_.orbitals; }
    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    [[nodiscard]] const OrbitalDensities& densities() const { return densities_; }
    [[nodiscard]] const Monitors& monitors() const { return monitors_; }
    [[nodiscard]] const Eigen::VectorXd& force() const { return force_; }

    /// Rebuilds the validated superposition over the current orbitals.
    [[nodiscard]] SuperpositionState state() const;

    [[nodiscard]] Rdm1 rdm1() const;
    [[nodiscard]] Rdm2 rdm2() const;

    /// <H_e> + kinetic + spring
    [[nodiscard]] double total_energy() const;
    [[nodiscard]] double electronic_energy() const;

    /// Refreshes norm and orthonormality monitors (O(N^3)).
    void update_monitors();

    /// Restores a checkpointed state bit-for-bit.
    static Trajectory restore(SshParams params, NuclearPhase phase, OrbitalSet orbitals, std::vector<Term> terms,
                              double time, double initial_energy);

private:
    friend class Propagator;
    void refresh_force();

    SshParams params_;
    NuclearPhase phase_;
    OrbitalSet orbitals_;
    std::vector<Term> terms_;
    OrbitalDensities densities_;
    double time_ = 0.0;
    Eigen::VectorXd force_;
    Monitors monitors_;
};

/// -Tr[rho dH_e/du_n] - d(spring)/du_n with the full one-body RDM of the
/// superposition; zero on clamped sites.
[[nodiscard]] Eigen::VectorXd mean_field_force(const Trajectory& traj);

/// Reusable stepping workspace. One per worker thread.
class Propagator {
public:
    explicit Propagator(int n_sites);

    void step(Trajectory& traj, double dt);

private:
    Eigen::VectorXd p_half_;
    Eigen::VectorXd u_mid_;
    Eigen::VectorXd diag_;
    Eigen::VectorXd offdiag_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
    Eigen::MatrixXcd work_;
    Eigen::MatrixXcd g_;
    Eigen::VectorXd bond_density_;
};

/// Value-semantics wrapper around Propagator::step.
[[nodiscard]] Trajectory step(Trajectory traj, double dt);

/// Site-basis one-body density bonds Re rho(b, b+1) for orbitals C and orbital-basis gamma1.
void bond_densities(const Eigen::MatrixXcd& orbitals, const Eigen::MatrixXcd& gamma1, Eigen::MatrixXcd& g_work,
                    Eigen::VectorXd& out);

struct RecordOptions {
    bool rdm2 = false;
    bool populations = true;
};

struct TrajectoryRecord {
    double time = 0.0;
    Eigen::VectorXd u;
    Rdm1 rdm1;
    std::optional<Rdm2> rdm2;
    Eigen::VectorXd orbital_populations;  // per ascending adiabatic orbital
    double total_energy = 0.0;
};

using RecordObserver = std::function<void(const TrajectoryRecord&)>;

/// Resumable driver: steps a trajectory, emitting a record at t = 0 and
/// every record_stride steps, and can be checkpointed between records.
class TrajectoryRunner {
public:
    TrajectoryRunner(Trajectory traj, IntegratorConfig cfg, RecordOptions options);

    /// Runs until t_max or until max_records records were emitted in this
    /// call (negative = no limit). Returns true once t_max is reached.
    bool advance(const RecordObserver& observer, long long max_records = -1);

    [[nodiscard]] bool finished() const { return step_ >= cfg_.total_steps(); }
    [[nodiscard]] const Trajectory& trajectory() const { return traj_; }
    [[nodiscard]] long long steps_done() const { return step_; }

    void write(std::ostream& out, std::uint64_t stream) const;
    static TrajectoryRunner read(std::istream& in, const IntegratorConfig& cfg, RecordOptions options,
                                 std::uint64_t* stream = nullptr);

private:
    void emit(const RecordObserver& observer);

    Trajectory traj_;
    IntegratorConfig cfg_;
    RecordOptions options_;
    Propagator prop_;
    long long first_step_ = 0;
    long long step_ = 0;
    bool started_ = false;
    Eigen::MatrixXd reference_;
    bool have_reference_ = false;
};

/// Records at t = 0 and every record_stride steps. Checks the monitors at
/// each record and throws MonitorFailure on violation.
void run_trajectory(Trajectory& traj, const IntegratorConfig& cfg, RecordOptions options,
                    const RecordObserver& observer);
[[nodiscard]] std::vector<TrajectoryRecord> run_trajectory(Trajectory traj, const IntegratorConfig& cfg,
                                                           RecordOptions options = {});

/// Builds the record at the trajectory's current time.
[[nodiscard]] TrajectoryRecord make_record(const Trajectory& traj, RecordOptions options,
                                           Eigen::MatrixXd* population_reference = nullptr);

/// Throws MonitorFailure if the energy drift or orthonormality defect is
/// outside the configured envelope.
void check_monitors(const Trajectory& traj, const IntegratorConfig& cfg);

/// Nonadiabatic coupling between many-body adiabatic states given as
/// determinants over the instantaneous adiabatic orbitals:
/// V = i hbar sum_n udot_n <D_i|dH_e/du_n|D_k> / (E_i - E_k).
class SingularCouplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CouplingTerms {
    double numerator = 0.0;  // sum_n udot_n <D_i|dH_e/du_n|D_k>, eV/fs
    double energy_gap = 0.0; // E_i - E_k, eV
};

[[nodiscard]] CouplingTerms coupling_terms(const SshParams& params, const NuclearPhase& phase, const Determinant& di,
                                           const Determinant& dk);
[[nodiscard]] cplx nonadiabatic_coupling(const SshParams& params, const NuclearPhase& phase, const Determinant& di,
                                         const Determinant& dk);
[[nodiscard]] cplx nonadiabatic_coupling(const Trajectory& traj, const Determinant& di, const Determinant& dk);

void write_record(std::ostream& out, const TrajectoryRecord& rec);
[[nodiscard]] TrajectoryRecord read_record(std::istream& in);

// Binary checkpoint of a single trajectory: phase, orbitals, amplitudes,
// determinants, time, reference energy and the sampling stream it came from.
void write_trajectory_checkpoint(std::ostream& out, const Trajectory& traj, std::uint64_t stream);
[[nodiscard]] Trajectory read_trajectory_checkpoint(std::istream& in, std::uint64_t* stream = nullptr);

}  // namespace vibret
