#include "vibret/observables.hpp"

#include "vibret/binary_io.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace vibret {

OrbitalPopulations orbital_populations(const Rdm1& rdm1, const SshParams& params, const Eigen::VectorXd& u,
                                       double time, const Eigen::MatrixXd* reference) {
    const AdiabaticBasis basis = adiabatic_basis(build_h_e(params, u), reference);
    const Eigen::MatrixXd& v = basis.orbitals;
    const Eigen::MatrixXd rho = rdm1.matrix.real();
    return {time, (v.transpose() * rho * v).diagonal()};
}

Triad Triad::from_labels(const std::array<std::string, 3>& labels, int n_orbitals) {
    Triad t;
    t.labels = labels;
    for (int k = 0; k < 3; ++k) t.states[k] = Determinant::from_label(labels[k], n_orbitals);
    return t;
}

StatePopulations reconstruct_state_populations(const Eigen::VectorXd& n, const Triad& triad) {
    const auto dim = n.size();
    Eigen::MatrixXd a(dim, 3);
    for (int k = 0; k < 3; ++k) a.col(k) = triad.states[k].occupations(static_cast<int>(dim));

    Eigen::MatrixXd stacked(dim + 1, 3);
    stacked.topRows(dim) = a;
    stacked.row(dim).setOnes();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv[2] < 1e-10 * sv[0])
        throw IllConditionedError("triad occupation vectors are not linearly independent");

    Eigen::Matrix4d kkt = Eigen::Matrix4d::Zero();
    kkt.topLeftCorner<3, 3>() = 2.0 * a.transpose() * a;
    kkt.block<3, 1>(0, 3).setOnes();
    kkt.block<1, 3>(3, 0).setOnes();
    Eigen::Vector4d rhs;
    rhs.head<3>() = 2.0 * a.transpose() * n;
    rhs[3] = 1.0;
    const Eigen::Vector4d sol = kkt.fullPivLu().solve(rhs);

    StatePopulations out;
    out.p = sol.head<3>();
    out.residual = (a * out.p - n).norm();
    return out;
}

double purity(const Rdm1& rdm) { return rdm.matrix.cwiseAbs2().sum(); }

double purity(const Rdm2& rdm) {
    double s = 0.0;
    for (const cplx& x : rdm.data()) s += std::norm(x);
    return s;
}

namespace {

// Mixed state as weighted pure components, all over one orbital set; the
// reduced purities are evaluated in that orbital basis.
struct MixedDensities {
    Eigen::MatrixXcd gamma1;
    std::map<std::tuple<int, int, int, int>, cplx> gamma2;

    void add(const SuperpositionState& pure, double weight) {
        if (weight <= 0.0) return;
        const OrbitalDensities d = orbital_densities(pure, true);
        if (gamma1.size() == 0) gamma1 = Eigen::MatrixXcd::Zero(d.gamma1.rows(), d.gamma1.cols());
        gamma1 += weight * d.gamma1;
        for (const TwoBodyElement& e : d.gamma2) gamma2[{e.i, e.j, e.k, e.l}] += weight * e.value;
    }

    [[nodiscard]] double p1() const { return gamma1.cwiseAbs2().sum(); }
    [[nodiscard]] double p2() const {
        double s = 0.0;
        for (const auto& kv : gamma2) s += std::norm(kv.second);
        return s;
    }
};

}  // namespace

ModelPurities model_purities(const StatePopulations& pops, const Triad& triad, const SshParams& params,
                             const Eigen::VectorXd& u) {
    const AdiabaticBasis basis = adiabatic_basis(build_h_e(params, u));
    const OrbitalSet orbitals{basis.orbitals.cast<cplx>()};

    Eigen::Vector3d w = pops.p.cwiseMax(0.0);
    if (w.sum() <= 0.0) throw std::invalid_argument("state populations are all non-positive");
    w /= w.sum();
    const Eigen::Vector3d c = w.cwiseSqrt();

    auto pure = [&](std::initializer_list<int> members) {
        std::vector<Term> terms;
        double norm = 0.0;
        for (int k : members) norm += w[k];
        for (int k : members)
            if (c[k] > 0.0) terms.push_back({cplx(c[k] / std::sqrt(norm), 0.0), triad.states[k]});
        return SuperpositionState(orbitals, std::move(terms));
    };

    ModelPurities out;
    {
        MixedDensities m1;
        m1.add(pure({0, 1, 2}), 1.0);
        out.p1[0] = m1.p1();
        out.p2[0] = m1.p2();
    }
    {
        MixedDensities m2;
        if (w[0] > 0.0) m2.add(pure({0}), w[0]);
        if (w[1] + w[2] > 0.0) m2.add(pure({1, 2}), w[1] + w[2]);
        out.p1[1] = m2.p1();
        out.p2[1] = m2.p2();
    }
    {
        MixedDensities m3;
        for (int k = 0; k < 3; ++k)
            if (w[k] > 0.0) m3.add(pure({k}), w[k]);
        out.p1[2] = m3.p1();
        out.p2[2] = m3.p2();
    }
    return out;
}

// --------------------------------------------------------- EnsembleAccumulator

void EnsembleAccumulator::add_trajectory(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) throw std::invalid_argument("trajectory produced no records");
    if (count_ == 0 && times_.empty()) {
        n_sites_ = static_cast<int>(records.front().rdm1.matrix.rows());
        has_rdm2_ = records.front().rdm2.has_value();
        for (const TrajectoryRecord& r : records) {
            times_.push_back(r.time);
            rdm1_sum_.push_back(Eigen::MatrixXcd::Zero(n_sites_, n_sites_));
            if (has_rdm2_) rdm2_sum_.emplace_back(r.rdm2->data().size(), cplx{});
            pop_sum_.push_back(Eigen::VectorXd::Zero(r.orbital_populations.size()));
            u_sum_.push_back(Eigen::VectorXd::Zero(n_sites_));
            energy_sum_.push_back(0.0);
        }
    }
    if (records.size() != times_.size()) throw std::invalid_argument("trajectory records do not share the time grid");
    for (std::size_t t = 0; t < records.size(); ++t) {
        const TrajectoryRecord& r = records[t];
        if (std::abs(r.time - times_[t]) > 1e-9) throw std::invalid_argument("trajectory records do not share the time grid");
        rdm1_sum_[t] += r.rdm1.matrix;
        if (has_rdm2_) {
            if (!r.rdm2) throw std::invalid_argument("record lacks two-body data");
            auto& dst = rdm2_sum_[t];
            const auto& src = r.rdm2->data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        if (r.orbital_populations.size() == pop_sum_[t].size()) pop_sum_[t] += r.orbital_populations;
        u_sum_[t] += r.u;
        energy_sum_[t] += r.total_energy;
    }
    ++count_;
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    if (other.count_ == 0) {
        failed_.insert(failed_.end(), other.failed_.begin(), other.failed_.end());
        return;
    }
    if (count_ == 0) {
        auto failed = failed_;
        *this = other;
        failed_.insert(failed_.begin(), failed.begin(), failed.end());
        return;
    }
    if (other.times_.size() != times_.size() || other.has_rdm2_ != has_rdm2_)
        throw std::invalid_argument("cannot merge ensembles with different layouts");
    for (std::size_t t = 0; t < times_.size(); ++t) {
        rdm1_sum_[t] += other.rdm1_sum_[t];
        if (has_rdm2_)
            for (std::size_t i = 0; i < rdm2_sum_[t].size(); ++i) rdm2_sum_[t][i] += other.rdm2_sum_[t][i];
        pop_sum_[t] += other.pop_sum_[t];
        u_sum_[t] += other.u_sum_[t];
        energy_sum_[t] += other.energy_sum_[t];
    }
    count_ += other.count_;
    failed_.insert(failed_.end(), other.failed_.begin(), other.failed_.end());
}

Rdm1 EnsembleAccumulator::mean_rdm1(std::size_t t) const { return {rdm1_sum_.at(t) / static_cast<double>(count_)}; }

Rdm2 EnsembleAccumulator::mean_rdm2(std::size_t t) const {
    if (!has_rdm2_) throw std::logic_error("ensemble has no two-body data");
    Rdm2 out(n_sites_);
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = rdm2_sum_.at(t)[i] * inv;
    return out;
}

Eigen::VectorXd EnsembleAccumulator::mean_populations(std::size_t t) const {
    return pop_sum_.at(t) / static_cast<double>(count_);
}

Eigen::VectorXd EnsembleAccumulator::mean_u(std::size_t t) const { return u_sum_.at(t) / static_cast<double>(count_); }

double EnsembleAccumulator::mean_energy(std::size_t t) const { return energy_sum_.at(t) / static_cast<double>(count_); }

namespace {
constexpr const char* kEnsembleMagic = "VBENS001";
}

void EnsembleAccumulator::write(std::ostream& out) const {
    io::put_magic(out, kEnsembleMagic);
    io::put<std::uint64_t>(out, count_);
    io::put<std::uint8_t>(out, has_rdm2_);
    io::put<std::int32_t>(out, n_sites_);
    io::put_vector(out, times_);
    for (std::size_t t = 0; t < times_.size(); ++t) {
        io::put_matrix(out, rdm1_sum_[t]);
        if (has_rdm2_) io::put_vector(out, rdm2_sum_[t]);
        io::put_matrix(out, pop_sum_[t]);
        io::put_matrix(out, u_sum_[t]);
        io::put(out, energy_sum_[t]);
    }
    io::put_vector(out, failed_);
}

EnsembleAccumulator EnsembleAccumulator::read(std::istream& in) {
    io::expect_magic(in, kEnsembleMagic);
    EnsembleAccumulator acc;
    acc.count_ = io::get<std::uint64_t>(in);
    acc.has_rdm2_ = io::get<std::uint8_t>(in) != 0;
    acc.n_sites_ = io::get<std::int32_t>(in);
    acc.times_ = io::get_vector<double>(in);
    for (std::size_t t = 0; t < acc.times_.size(); ++t) {
        acc.rdm1_sum_.push_back(io::get_matrix<Eigen::MatrixXcd>(in));
        if (acc.has_rdm2_) acc.rdm2_sum_.push_back(io::get_vector<cplx>(in));
        acc.pop_sum_.push_back(io::get_matrix<Eigen::VectorXd>(in));
        acc.u_sum_.push_back(io::get_matrix<Eigen::VectorXd>(in));
        acc.energy_sum_.push_back(io::get<double>(in));
    }
    acc.failed_ = io::get_vector<std::uint64_t>(in);
    return acc;
}

EnsembleSeries ensemble_reduce(const EnsembleAccumulator& acc, const SshParams& params,
                               const std::optional<Triad>& triad) {
    EnsembleSeries s;
    s.trajectories = acc.count();
    if (acc.count() == 0) return s;
    for (std::size_t t = 0; t < acc.n_times(); ++t) {
        s.time.push_back(acc.times()[t]);
        const Eigen::VectorXd pops = acc.mean_populations(t);
        s.populations.push_back(pops);
        s.p1.push_back(purity(acc.mean_rdm1(t)));
        if (acc.has_rdm2()) s.p2.push_back(purity(acc.mean_rdm2(t)));
        if (triad) {
            const StatePopulations sp = reconstruct_state_populations(pops, *triad);
            s.states.push_back(sp);
            s.models.push_back(model_purities(sp, *triad, params, acc.mean_u(t)));
        }
    }
    return s;
}

}  // namespace vibret
