#include "vibret/oracle.hpp"

#include "vibret/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <cmath>
#include <string>

namespace vibret::oracle {

namespace {

std::vector<std::uint64_t> combinations(int n, int k) {
    std::vector<std::uint64_t> out;
    if (k < 0 || k > n) return out;
    if (k == 0) return {0};
    std::uint64_t mask = (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit = std::uint64_t{1} << n;
    while (mask < limit) {
        out.push_back(mask);
        // Gosper's hack: next mask with the same popcount
        const std::uint64_t c = mask & (~mask + 1);
        const std::uint64_t r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    return out;
}

std::uint64_t key(const FockState& s, int n) { return s.up | (s.down << n); }

std::uint64_t below(int bit) { return (std::uint64_t{1} << bit) - 1; }

// Canonical order: every up mode precedes every down mode.
int sign_before(const FockState& s, int mode, int spin) {
    int count = 0;
    if (spin == 0) {
        count = std::popcount(s.up & below(mode));
    } else {
        count = std::popcount(s.up) + std::popcount(s.down & below(mode));
    }
    return (count % 2 == 0) ? 1 : -1;
}

std::uint64_t& channel(FockState& s, int spin) { return spin == 0 ? s.up : s.down; }

int annihilate(FockState& s, int mode, int spin) {
    std::uint64_t& m = channel(s, spin);
    if ((m >> mode & 1u) == 0) return 0;
    const int sign = sign_before(s, mode, spin);
    m &= ~(std::uint64_t{1} << mode);
    return sign;
}

int create(FockState& s, int mode, int spin) {
    std::uint64_t& m = channel(s, spin);
    if ((m >> mode & 1u) != 0) return 0;
    const int sign = sign_before(s, mode, spin);
    m |= std::uint64_t{1} << mode;
    return sign;
}

std::vector<int> bits_of(std::uint64_t m, int n) {
    std::vector<int> out;
    for (int p = 0; p < n; ++p)
        if (m >> p & 1u) out.push_back(p);
    return out;
}

cplx minor_determinant(const Eigen::MatrixXcd& c, const std::vector<int>& rows, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (k == 0) return {1.0, 0.0};
    Eigen::MatrixXcd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = c(rows[i], cols[j]);
    return m.determinant();
}

}  // namespace

FockBasis::FockBasis(int n_modes, int n_up, int n_down, std::size_t cap) : n_modes_(n_modes) {
    if (n_modes < 1 || n_modes > 31) throw std::invalid_argument("Fock basis supports 1..31 modes");
    const auto ups = combinations(n_modes, n_up);
    const auto downs = combinations(n_modes, n_down);
    if (ups.empty() || downs.empty()) throw std::invalid_argument("infeasible particle counts");
    const std::size_t dim = ups.size() * downs.size();
    if (dim > cap)
        throw CapExceededError("Fock dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap));
    states_.reserve(dim);
    for (std::uint64_t u : ups)
        for (std::uint64_t d : downs) {
            index_[key({u, d}, n_modes)] = states_.size();
            states_.push_back({u, d});
        }
}

long long FockBasis::find(const FockState& s) const {
    const auto it = index_.find(key(s, n_modes_));
    return it == index_.end() ? -1 : static_cast<long long>(it->second);
}

FockBasis enumerate_states(int n_sites, int n_up, int n_down, std::size_t cap) {
    return FockBasis(n_sites, n_up, n_down, cap);
}

std::vector<int> spin_summed_occupation(const FockState& s, int n_modes) {
    std::vector<int> occ(n_modes);
    for (int p = 0; p < n_modes; ++p) occ[p] = static_cast<int>((s.up >> p) & 1u) + static_cast<int>((s.down >> p) & 1u);
    return occ;
}

std::map<std::vector<int>, int> occupation_classes(const FockBasis& basis) {
    std::map<std::vector<int>, int> classes;
    for (const FockState& s : basis.states()) ++classes[spin_summed_occupation(s, basis.n_modes())];
    return classes;
}

Eigen::MatrixXd lift_one_body(const FockBasis& basis, const Eigen::MatrixXd& h) {
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    const int n = basis.n_modes();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        for (int spin = 0; spin < 2; ++spin)
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) {
                    if (h(p, q) == 0.0) continue;
                    FockState s = basis[static_cast<std::size_t>(col)];
                    int sign = annihilate(s, q, spin);
                    if (sign == 0) continue;
                    sign *= create(s, p, spin);
                    if (sign == 0) continue;
                    const long long row = basis.find(s);
                    big(row, col) += sign * h(p, q);
                }
    }
    return big;
}

Eigen::VectorXcd apply_hop(const FockBasis& basis, const Eigen::VectorXcd& psi, int p, int q, int spin) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
    for (std::size_t b = 0; b < basis.dimension(); ++b) {
        FockState s = basis[b];
        int sign = annihilate(s, q, spin);
        if (sign == 0) continue;
        sign *= create(s, p, spin);
        if (sign == 0) continue;
        out[basis.find(s)] += static_cast<double>(sign) * psi[static_cast<Eigen::Index>(b)];
    }
    return out;
}

Eigen::VectorXcd to_ci_vector(const FockBasis& basis, const SuperpositionState& state) {
    const int n = basis.n_modes();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dimension()));
    const Eigen::MatrixXcd& c = state.orbitals();
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        const auto up_sites = bits_of(basis[i].up, n);
        const auto down_sites = bits_of(basis[i].down, n);
        cplx v{};
        for (const Term& t : state.terms()) {
            if (t.det.up.size() != up_sites.size() || t.det.down.size() != down_sites.size()) continue;
            v += t.amplitude * minor_determinant(c, up_sites, t.det.up) * minor_determinant(c, down_sites, t.det.down);
        }
        psi[static_cast<Eigen::Index>(i)] = v;
    }
    return psi;
}

Eigen::VectorXcd propagate_frozen(const FockBasis& basis, const Eigen::VectorXcd& psi, const Eigen::MatrixXd& h_single,
                                  double dt, double hbar) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lift_one_body(basis, h_single));
    const Eigen::MatrixXd& v = solver.eigenvectors();
    Eigen::VectorXcd w = v.transpose().cast<cplx>() * psi;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double angle = -solver.eigenvalues()[k] * dt / hbar;
        w[k] *= cplx(std::cos(angle), std::sin(angle));
    }
    return v.cast<cplx>() * w;
}

std::vector<Eigen::VectorXcd> full_ci_propagate(const FockBasis& basis, const Eigen::VectorXcd& psi0,
                                                const std::vector<Eigen::VectorXd>& path, const SshParams& params,
                                                double dt) {
    std::vector<Eigen::VectorXcd> out{psi0};
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const Eigen::VectorXd mid = 0.5 * (path[k] + path[k + 1]);
        out.push_back(propagate_frozen(basis, out.back(), build_h_e(params, mid).matrix, dt, params.hbar));
    }
    return out;
}

BruteForceRdms brute_force_rdms(const FockBasis& basis, const Eigen::MatrixXcd& density) {
    const int n = basis.n_modes();
    const auto dim = basis.dimension();
    BruteForceRdms out{{Eigen::MatrixXcd::Zero(n, n)}, Rdm2(n)};
    // <O> = Tr(O rho) = sum_b sum_{b'} <b'|O|b> rho(b, b')
    for (std::size_t b = 0; b < dim; ++b) {
        for (int sigma = 0; sigma < 2; ++sigma)
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) {
                    FockState s = basis[b];
                    int sign = annihilate(s, q, sigma);
                    if (sign == 0) continue;
                    sign *= create(s, p, sigma);
                    if (sign == 0) continue;
                    const long long bp = basis.find(s);
                    out.rdm1.matrix(p, q) += static_cast<double>(sign) * density(static_cast<Eigen::Index>(b), bp);
                }
        for (int sigma = 0; sigma < 2; ++sigma)
            for (int tau = 0; tau < 2; ++tau)
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q)
                        for (int s_ = 0; s_ < n; ++s_)
                            for (int r = 0; r < n; ++r) {
                                // c+_{p sigma} c+_{q tau} c_{r tau} c_{s sigma}
                                FockState s = basis[b];
                                int sign = annihilate(s, s_, sigma);
                                if (sign == 0) continue;
                                sign *= annihilate(s, r, tau);
                                if (sign == 0) continue;
                                sign *= create(s, q, tau);
                                if (sign == 0) continue;
                                sign *= create(s, p, sigma);
                                if (sign == 0) continue;
                                const long long bp = basis.find(s);
                                out.rdm2(p, q, s_, r) +=
                                    0.5 * static_cast<double>(sign) * density(static_cast<Eigen::Index>(b), bp);
                            }
    }
    return out;
}

BruteForceRdms brute_force_rdms(const FockBasis& basis, const Eigen::VectorXcd& psi) {
    return brute_force_rdms(basis, Eigen::MatrixXcd(psi * psi.adjoint()));
}

namespace {

Eigen::VectorXd ci_force(const FockBasis& basis, const SshParams& params, const NuclearPhase& phase,
                         const Eigen::VectorXcd& psi) {
    // one-body density only; brute force over the basis
    const int n = basis.n_modes();
    Eigen::VectorXd bonds = Eigen::VectorXd::Zero(n - 1);
    for (std::size_t b = 0; b < basis.dimension(); ++b) {
        const cplx amp = psi[static_cast<Eigen::Index>(b)];
        if (amp == cplx{}) continue;
        for (int sigma = 0; sigma < 2; ++sigma)
            for (int site = 0; site + 1 < n; ++site) {
                FockState s = basis[b];
                int sign = annihilate(s, site + 1, sigma);
                if (sign == 0) continue;
                sign *= create(s, site, sigma);
                if (sign == 0) continue;
                bonds[site] += (std::conj(psi[basis.find(s)]) * amp).real() * sign;
            }
    }
    Eigen::VectorXd force = Eigen::VectorXd::Zero(n);
    add_electronic_force(params, bonds, force);
    add_spring_force(params, phase.u, force);
    if (phase.clamp.first) force[0] = 0.0;
    if (phase.clamp.last) force[n - 1] = 0.0;
    return force;
}

}  // namespace

CiEhrenfestState full_ci_ehrenfest(const FockBasis& basis, const SshParams& params, CiEhrenfestState state, double dt,
                                   long long steps) {
    Eigen::VectorXd force = ci_force(basis, params, state.phase, state.psi);
    const int n = state.phase.size();
    for (long long k = 0; k < steps; ++k) {
        Eigen::VectorXd p_half = state.phase.p + 0.5 * dt * force;
        if (state.phase.clamp.first) p_half[0] = 0.0;
        if (state.phase.clamp.last) p_half[n - 1] = 0.0;
        const Eigen::VectorXd u_old = state.phase.u;
        state.phase.u += (dt / params.mass) * p_half;
        const Eigen::VectorXd mid = 0.5 * (u_old + state.phase.u);
        state.psi = propagate_frozen(basis, state.psi, build_h_e(params, mid).matrix, dt, params.hbar);
        force = ci_force(basis, params, state.phase, state.psi);
        state.phase.p = p_half + 0.5 * dt * force;
        if (state.phase.clamp.first) state.phase.p[0] = 0.0;
        if (state.phase.clamp.last) state.phase.p[n - 1] = 0.0;
        state.time += dt;
    }
    return state;
}

SuperpositionState random_superposition(int n_sites, std::mt19937_64& rng, int n_terms) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXcd g(n_sites, n_sites);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = cplx(gauss(rng), gauss(rng));
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n_sites, n_sites);

    const int half = n_sites / 2;
    const auto subsets = combinations(n_sites, half);
    std::uniform_int_distribution<std::size_t> pick(0, subsets.size() - 1);
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    const std::size_t limit = subsets.size() * subsets.size();
    std::vector<Term> terms;
    double norm = 0.0;
    while (static_cast<int>(terms.size()) < n_terms && seen.size() < limit) {
        const std::uint64_t up = subsets[pick(rng)];
        const std::uint64_t down = subsets[pick(rng)];
        if (!seen.insert({up, down}).second) continue;
        Term t;
        t.amplitude = cplx(gauss(rng), gauss(rng));
        t.det.up = bits_of(up, n_sites);
        t.det.down = bits_of(down, n_sites);
        norm += std::norm(t.amplitude);
        terms.push_back(std::move(t));
    }
    for (Term& t : terms) t.amplitude /= std::sqrt(norm);
    return SuperpositionState(OrbitalSet{q}, std::move(terms));
}

EngineComparison compare_engines(const SshParams& params, const NuclearPhase& phase, const SuperpositionState& state,
                                 double dt, long long steps, long long check_stride) {
    const int n = params.n_sites;
    const FockBasis basis(n, n / 2, n / 2);
    EngineComparison out;

    Trajectory traj(params, phase, state);
    Propagator prop(n);
    Eigen::VectorXcd psi = to_ci_vector(basis, state);
    CiEhrenfestState ci{phase, psi, 0.0};
    ci.phase.enforce_clamp();

    for (long long k = 1; k <= steps; ++k) {
        const Eigen::VectorXd u_old = traj.phase().u;
        prop.step(traj, dt);
        const Eigen::VectorXd mid = 0.5 * (u_old + traj.phase().u);
        psi = propagate_frozen(basis, psi, build_h_e(params, mid).matrix, dt, params.hbar);
        ci = full_ci_ehrenfest(basis, params, std::move(ci), dt, 1);
        out.max_position_error = std::max(out.max_position_error, (ci.phase.u - traj.phase().u).cwiseAbs().maxCoeff());
        if (k % check_stride == 0 || k == steps) {
            const Eigen::VectorXcd det = to_ci_vector(basis, traj.state());
            out.min_overlap = std::min(out.min_overlap, std::abs(psi.dot(det)));
            const BruteForceRdms ref = brute_force_rdms(basis, psi);
            out.max_rdm1_error = std::max(out.max_rdm1_error, (ref.rdm1.matrix - traj.rdm1().matrix).cwiseAbs().maxCoeff());
        }
    }
    return out;
}

}  // namespace vibret::oracle
