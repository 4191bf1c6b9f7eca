#include "vibret/model.hpp"

#include <string>

namespace vibret {

void SshParams::validate() const {
    if (!(t0 > 0 && alpha >= 0 && k_spring > 0 && mass > 0 && a_lattice > 0 && hbar > 0))
        throw std::invalid_argument("SSH parameters must be positive (alpha may be zero)");
    if (n_sites < 2 || n_sites % 2 != 0)
        throw std::invalid_argument("n_sites must be even and >= 2, got " + std::to_string(n_sites));
}

std::vector<int> free_sites(int n_sites, ClampMask mask) {
    std::vector<int> sites;
    for (int n = 0; n < n_sites; ++n)
        if (!mask.is_clamped(n, n_sites)) sites.push_back(n);
    return sites;
}

NuclearPhase NuclearPhase::at_rest(int n_sites, ClampMask mask) {
    return at_rest(Eigen::VectorXd::Zero(n_sites), mask);
}

NuclearPhase NuclearPhase::at_rest(const Eigen::VectorXd& u, ClampMask mask) {
    NuclearPhase phase{u, Eigen::VectorXd::Zero(u.size()), mask};
    phase.enforce_clamp();
    return phase;
}

void NuclearPhase::enforce_clamp() {
    const int n = size();
    if (n == 0) return;
    if (clamp.first) { u[0] = 0.0; p[0] = 0.0; }
    if (clamp.last) { u[n - 1] = 0.0; p[n - 1] = 0.0; }
}

void bond_hoppings(const SshParams& params, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    const int n = static_cast<int>(u.size());
    out.resize(n - 1);
    for (int b = 0; b + 1 < n; ++b) out[b] = bond_hopping(params, u, b);
}

SingleParticleHamiltonian build_h_e(const SshParams& params, const Eigen::VectorXd& u) {
    if (u.size() != params.n_sites)
        throw std::invalid_argument("displacement length " + std::to_string(u.size()) +
                                    " does not match n_sites " + std::to_string(params.n_sites));
    const int n = params.n_sites;
    SingleParticleHamiltonian h{Eigen::MatrixXd::Zero(n, n)};
    for (int b = 0; b + 1 < n; ++b) {
        const double t = bond_hopping(params, u, b);
        h.matrix(b, b + 1) = t;
        h.matrix(b + 1, b) = t;
    }
    return h;
}

std::vector<Eigen::SparseMatrix<double>> h_e_gradient(const SshParams& params) {
    const int n = params.n_sites;
    std::vector<Eigen::SparseMatrix<double>> grads;
    grads.reserve(n);
    for (int site = 0; site < n; ++site) {
        std::vector<Eigen::Triplet<double>> entries;
        // bond (site-1, site): hopping grows with u_site
        if (site > 0) {
            entries.emplace_back(site - 1, site, params.alpha);
            entries.emplace_back(site, site - 1, params.alpha);
        }
        // bond (site, site+1): hopping shrinks with u_site
        if (site + 1 < n) {
            entries.emplace_back(site, site + 1, -params.alpha);
            entries.emplace_back(site + 1, site, -params.alpha);
        }
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(entries.begin(), entries.end());
        grads.push_back(std::move(m));
    }
    return grads;
}

double spring_energy(const SshParams& params, const Eigen::VectorXd& u) {
    double e = 0.0;
    for (Eigen::Index b = 0; b + 1 < u.size(); ++b) {
        const double d = u[b + 1] - u[b];
        e += d * d;
    }
    return 0.5 * params.k_spring * e;
}

void add_spring_force(const SshParams& params, const Eigen::VectorXd& u, Eigen::VectorXd& force) {
    for (Eigen::Index b = 0; b + 1 < u.size(); ++b) {
        const double f = params.k_spring * (u[b + 1] - u[b]);
        force[b] += f;
        force[b + 1] -= f;
    }
}

void add_electronic_force(const SshParams& params, const Eigen::VectorXd& bond_density,
                          Eigen::VectorXd& force) {
    // dE/dh_b = 2 Re rho(b,b+1); dh_b/du_{b+1} = alpha, dh_b/du_b = -alpha
    for (Eigen::Index b = 0; b < bond_density.size(); ++b) {
        const double g = 2.0 * params.alpha * bond_density[b];
        force[b] += g;
        force[b + 1] -= g;
    }
}

LatticeTerms lattice_energy_and_force(const SshParams& params, const NuclearPhase& phase) {
    LatticeTerms terms;
    terms.spring_energy = spring_energy(params, phase.u);
    terms.kinetic_energy = phase.p.squaredNorm() / (2.0 * params.mass);
    terms.spring_force = Eigen::VectorXd::Zero(phase.size());
    add_spring_force(params, phase.u, terms.spring_force);
    const int n = phase.size();
    for (int site = 0; site < n; ++site)
        if (phase.clamp.is_clamped(site, n)) terms.spring_force[site] = 0.0;
    return terms;
}

Eigen::VectorXd chiral_signs(int n_sites) {
    Eigen::VectorXd s(n_sites);
    for (int n = 0; n < n_sites; ++n) s[n] = (n % 2 == 0) ? 1.0 : -1.0;
    return s;
}

}  // namespace vibret
