#include "vibret/ground_state.hpp"

#include <cmath>
#include <random>
#include <string>

namespace vibret {

BornOppenheimerPoint born_oppenheimer(const SshParams& params, const Eigen::VectorXd& u, int n_per_spin,
                                      ClampMask clamp) {
    const SingleParticleHamiltonian h = build_h_e(params, u);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
    const Eigen::MatrixXd& v = solver.eigenvectors();
    const int n = params.n_sites;

    BornOppenheimerPoint point;
    point.orbital_energies = solver.eigenvalues();
    point.electronic_energy = 2.0 * point.orbital_energies.head(n_per_spin).sum();
    point.energy = point.electronic_energy + spring_energy(params, u);

    Eigen::VectorXd bond_density(n - 1);
    for (int b = 0; b + 1 < n; ++b)
        bond_density[b] = 2.0 * v.row(b).head(n_per_spin).dot(v.row(b + 1).head(n_per_spin));
    Eigen::VectorXd force = Eigen::VectorXd::Zero(n);
    add_electronic_force(params, bond_density, force);
    add_spring_force(params, u, force);
    point.gradient = -force;
    for (int s = 0; s < n; ++s)
        if (clamp.is_clamped(s, n)) point.gradient[s] = 0.0;
    return point;
}

double OptimizedGeometry::gap() const {
    const auto n = orbital_energies.size();
    return orbital_energies[n / 2] - orbital_energies[n / 2 - 1];
}

namespace {

struct Minimum {
    Eigen::VectorXd u;
    BornOppenheimerPoint point;
    int iterations = 0;
};

Minimum bfgs(const SshParams& params, Eigen::VectorXd u, int n_per_spin, const OptimizerOptions& options,
             ClampMask clamp) {
    const std::vector<int> free = free_sites(params.n_sites, clamp);
    const auto m = static_cast<Eigen::Index>(free.size());
    auto gather = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd x(m);
        for (Eigen::Index i = 0; i < m; ++i) x[i] = full[free[i]];
        return x;
    };
    auto scatter = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(params.n_sites);
        for (Eigen::Index i = 0; i < m; ++i) full[free[i]] = x[i];
        return full;
    };

    Eigen::VectorXd x = gather(u);
    BornOppenheimerPoint point = born_oppenheimer(params, scatter(x), n_per_spin, clamp);
    Eigen::VectorXd g = gather(point.gradient);
    // inverse Hessian guess from the bare spring stiffness
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(m, m) / (4.0 * params.k_spring);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (g.norm() <= options.tolerance) return {scatter(x), point, iter};
        Eigen::VectorXd dir = -inv_h * g;
        if (dir.dot(g) >= 0) {
            inv_h = Eigen::MatrixXd::Identity(m, m) / (4.0 * params.k_spring);
            dir = -inv_h * g;
        }
        double step = 1.0;
        BornOppenheimerPoint trial;
        Eigen::VectorXd x_new;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            trial = born_oppenheimer(params, scatter(x_new), n_per_spin, clamp);
            // the slack absorbs eigensolver round-off once |g| is tiny
            const double slack = 1e-14 * std::abs(point.energy);
            if (trial.energy <= point.energy + 1e-4 * step * dir.dot(g) + slack) break;
            step *= 0.5;
        }
        const Eigen::VectorXd g_new = gather(trial.gradient);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
            inv_h = (eye - rho * s * y.transpose()) * inv_h * (eye - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }
        if (s.norm() == 0.0 && g_new.norm() > options.tolerance)
            throw ConvergenceError("geometry optimization stalled at |g| = " + std::to_string(g_new.norm()));
        x = x_new;
        g = g_new;
        point = std::move(trial);
    }
    if (g.norm() <= options.tolerance) return {scatter(x), point, options.max_iterations};
    throw ConvergenceError("geometry optimization did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (|g| = " + std::to_string(g.norm()) + ")");
}

}  // namespace

OptimizedGeometry optimize_geometry(const SshParams& params, int n_per_spin, OptimizerOptions options,
                                    ClampMask clamp) {
    params.validate();
    if (2 * n_per_spin != params.n_sites)
        throw std::invalid_argument("geometry optimization expects a neutral chain (n_per_spin = n_sites / 2)");

    Minimum best;
    bool have = false;
    for (double phase : {1.0, -1.0}) {
        Eigen::VectorXd u0(params.n_sites);
        for (int s = 0; s < params.n_sites; ++s) u0[s] = phase * 0.05 * ((s % 2 == 0) ? 1.0 : -1.0);
        for (int s = 0; s < params.n_sites; ++s)
            if (clamp.is_clamped(s, params.n_sites)) u0[s] = 0.0;
        Minimum m = bfgs(params, u0, n_per_spin, options, clamp);
        if (!have || m.point.energy < best.point.energy) {
            best = std::move(m);
            have = true;
        }
    }
    OptimizedGeometry geom;
    geom.u_star = best.u;
    geom.bo_energy = best.point.energy;
    geom.electronic_energy = best.point.electronic_energy;
    geom.residual_force_norm = best.point.gradient.norm();
    geom.orbital_energies = best.point.orbital_energies;
    geom.iterations = best.iterations;
    geom.clamp = clamp;
    return geom;
}

Eigen::VectorXd NormalModes::site_vector(int k) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(u_star.size());
    for (std::size_t i = 0; i < free_sites.size(); ++i) v[free_sites[i]] = mode_vectors(static_cast<Eigen::Index>(i), k);
    return v;
}

NormalModes hessian_and_modes(const SshParams& params, const OptimizedGeometry& geom, int n_per_spin,
                              double fd_step) {
    NormalModes modes;
    modes.free_sites = free_sites(params.n_sites, geom.clamp);
    modes.u_star = geom.u_star;
    modes.clamp = geom.clamp;
    const auto m = static_cast<Eigen::Index>(modes.free_sites.size());

    Eigen::MatrixXd h(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::VectorXd plus = geom.u_star;
        Eigen::VectorXd minus = geom.u_star;
        plus[modes.free_sites[i]] += fd_step;
        minus[modes.free_sites[i]] -= fd_step;
        const Eigen::VectorXd gp = born_oppenheimer(params, plus, n_per_spin, geom.clamp).gradient;
        const Eigen::VectorXd gm = born_oppenheimer(params, minus, n_per_spin, geom.clamp).gradient;
        for (Eigen::Index j = 0; j < m; ++j)
            h(i, j) = (gp[modes.free_sites[j]] - gm[modes.free_sites[j]]) / (2.0 * fd_step);
    }
    const double scale = h.cwiseAbs().maxCoeff();
    modes.asymmetry = scale > 0 ? (h - h.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    modes.hessian = 0.5 * (h + h.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(modes.hessian);
    const Eigen::VectorXd lambda = solver.eigenvalues();
    if (lambda.size() > 0 && lambda[0] <= 0.0)
        throw NotAMinimumError("Hessian has a non-positive eigenvalue " + std::to_string(lambda[0]) + " eV/A^2");
    modes.frequencies = (lambda / params.mass).cwiseSqrt();
    modes.mode_vectors = solver.eigenvectors();
    return modes;
}

WignerSampler::WignerSampler(NormalModes modes, SshParams params, std::uint64_t master_seed)
    : modes_(std::move(modes)), params_(params), seed_(master_seed) {}

double WignerSampler::position_variance(int k) const {
    return params_.hbar / (2.0 * params_.mass * modes_.frequencies[k]);
}

double WignerSampler::momentum_variance(int k) const {
    return 0.5 * params_.hbar * params_.mass * modes_.frequencies[k];
}

WignerSampler::ModeDraw WignerSampler::draw_modes(std::uint64_t stream) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto m = modes_.frequencies.size();
    ModeDraw draw{Eigen::VectorXd(m), Eigen::VectorXd(m)};
    for (Eigen::Index k = 0; k < m; ++k) {
        draw.q[k] = std::sqrt(position_variance(static_cast<int>(k))) * normal(rng);
        draw.p[k] = std::sqrt(momentum_variance(static_cast<int>(k))) * normal(rng);
    }
    return draw;
}

NuclearPhase WignerSampler::sample(std::uint64_t stream) const {
    const ModeDraw draw = draw_modes(stream);
    const Eigen::VectorXd dq = modes_.mode_vectors * draw.q;
    const Eigen::VectorXd dp = modes_.mode_vectors * draw.p;
    NuclearPhase phase = NuclearPhase::at_rest(modes_.u_star, modes_.clamp);
    for (std::size_t i = 0; i < modes_.free_sites.size(); ++i) {
        phase.u[modes_.free_sites[i]] += dq[static_cast<Eigen::Index>(i)];
        phase.p[modes_.free_sites[i]] = dp[static_cast<Eigen::Index>(i)];
    }
    phase.enforce_clamp();
    return phase;
}

}  // namespace vibret
