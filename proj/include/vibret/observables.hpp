#pragma once

// Analysis of trajectory records: adiabatic orbital populations, three-state
// population reconstruction, ensemble reduction, reduced purities and the
// coherent / partially coherent / incoherent model curves.

#include "vibret/dynamics.hpp"
#include "vibret/electronic.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace vibret {

struct OrbitalPopulations {
    double time = 0.0;
    Eigen::VectorXd n;  // spin-summed, per ascending adiabatic orbital

    [[nodiscard]] double total() const { return n.sum(); }
};

[[nodiscard]] OrbitalPopulations orbital_populations(const Rdm1& rdm1, const SshParams& params,
                                                     const Eigen::VectorXd& u, double time = 0.0,
                                                     const Eigen::MatrixXd* reference = nullptr);

/// Three many-body states named by occupation labels, e.g. (2110) (2101) (1210).
struct Triad {
    std::array<std::string, 3> labels;
    std::array<Determinant, 3> states;

    static Triad from_labels(const std::array<std::string, 3>& labels, int n_orbitals);
};

class IllConditionedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StatePopulations {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    double residual = 0.0;  // |sum_k p_k occ_k - n|
};

/// Least squares for sum_k p_k occ(k) = n subject to sum_k p_k = 1.
[[nodiscard]] StatePopulations reconstruct_state_populations(const Eigen::VectorXd& n, const Triad& triad);

[[nodiscard]] double purity(const Rdm1& rdm);
[[nodiscard]] double purity(const Rdm2& rdm);

struct ModelPurities {
    std::array<double, 3> p1{};  // M1, M2, M3
    std::array<double, 3> p2{};
};

/// Models built over the adiabatic orbitals at u with c_k = sqrt(max(p_k, 0))
/// (renormalized):
///   M1 pure sum_k c_k Phi_k
///   M2 p0 |Phi0><Phi0| + |c1 Phi1 + c2 Phi2><...|
///   M3 sum_k p_k |Phi_k><Phi_k|
[[nodiscard]] ModelPurities model_purities(const StatePopulations& pops, const Triad& triad, const SshParams& params,
                                           const Eigen::VectorXd& u);

/// Running sums of per-trajectory records on a shared time grid. Merging
/// in trajectory-index order gives bit-reproducible means.
class EnsembleAccumulator {
public:
    EnsembleAccumulator() = default;

    /// All records of one trajectory, in time order.
    void add_trajectory(const std::vector<TrajectoryRecord>& records);
    void merge(const EnsembleAccumulator& other);
    void record_failure(std::uint64_t index) { failed_.push_back(index); }

    [[nodiscard]] std::size_t count() const { return count_; }
    [[nodiscard]] const std::vector<std::uint64_t>& failed() const { return failed_; }
    [[nodiscard]] std::size_t n_times() const { return times_.size(); }
    [[nodiscard]] bool has_rdm2() const { return has_rdm2_; }
    [[nodiscard]] const std::vector<double>& times() const { return times_; }

    [[nodiscard]] Rdm1 mean_rdm1(std::size_t t) const;
    [[nodiscard]] Rdm2 mean_rdm2(std::size_t t) const;
    [[nodiscard]] Eigen::VectorXd mean_populations(std::size_t t) const;
    [[nodiscard]] Eigen::VectorXd mean_u(std::size_t t) const;
    [[nodiscard]] double mean_energy(std::size_t t) const;

    void write(std::ostream& out) const;
    static EnsembleAccumulator read(std::istream& in);

private:
    std::size_t count_ = 0;
    bool has_rdm2_ = false;
    std::vector<double> times_;
    std::vector<Eigen::MatrixXcd> rdm1_sum_;
    std::vector<std::vector<cplx>> rdm2_sum_;
    std::vector<Eigen::VectorXd> pop_sum_;
    std::vector<Eigen::VectorXd> u_sum_;
    std::vector<double> energy_sum_;
    std::vector<std::uint64_t> failed_;
    int n_sites_ = 0;
};

/// Ensemble-mean time series ready for output.
struct EnsembleSeries {
    std::vector<double> time;
    std::vector<Eigen::VectorXd> populations;
    std::vector<StatePopulations> states;       // empty without a triad
    std::vector<double> p1;
    std::vector<double> p2;                      // empty without two-body data
    std::vector<ModelPurities> models;           // empty without a triad
    std::size_t trajectories = 0;
};

[[nodiscard]] EnsembleSeries ensemble_reduce(const EnsembleAccumulator& acc, const SshParams& params,
                                             const std::optional<Triad>& triad);

}  // namespace vibret
