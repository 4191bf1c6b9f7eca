#include "vibret/electronic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace vibret {

namespace {

// Removes spin orbital `so` from the sorted list. Returns the fermionic sign,
// or 0 if it was not occupied.
int annihilate(std::vector<int>& occ, int so) {
    auto it = std::lower_bound(occ.begin(), occ.end(), so);
    if (it == occ.end() || *it != so) return 0;
    const auto pos = it - occ.begin();
    occ.erase(it);
    return (pos % 2 == 0) ? 1 : -1;
}

int create(std::vector<int>& occ, int so) {
    auto it = std::lower_bound(occ.begin(), occ.end(), so);
    if (it != occ.end() && *it == so) return 0;
    const auto pos = it - occ.begin();
    occ.insert(it, so);
    return (pos % 2 == 0) ? 1 : -1;
}

std::vector<int> set_difference(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void check_sorted_unique(const std::vector<int>& v, int n_orbitals) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0 || v[i] >= n_orbitals) throw std::invalid_argument("orbital index out of range");
        if (i > 0 && v[i] <= v[i - 1]) throw std::invalid_argument("occupations must be sorted and distinct");
    }
}

// <bra| a+_a a+_b a_c a_d |ket> over canonical spin-orbital lists.
int two_body_sign(const std::vector<int>& bra, std::vector<int> ket, int a, int b, int c, int d) {
    int sign = annihilate(ket, d);
    if (sign == 0) return 0;
    sign *= annihilate(ket, c);
    if (sign == 0) return 0;
    sign *= create(ket, b);
    if (sign == 0) return 0;
    sign *= create(ket, a);
    if (sign == 0 || ket != bra) return 0;
    return sign;
}

}  // namespace

// ---------------------------------------------------------------- Determinant

Determinant Determinant::ground(int n_per_spin) {
    Determinant d;
    for (int k = 0; k < n_per_spin; ++k) {
        d.up.push_back(k);
        d.down.push_back(k);
    }
    return d;
}

Determinant Determinant::from_label(const std::string& label, int n_orbitals) {
    std::string digits;
    for (char ch : label) {
        if (ch == '(' || ch == ')' || std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch < '0' || ch > '2') throw std::invalid_argument("bad occupation label '" + label + "'");
        digits.push_back(ch);
    }
    const int width = static_cast<int>(digits.size());
    if (width == 0 || width > n_orbitals || (width < n_orbitals && (width % 2 != 0 || n_orbitals % 2 != 0)))
        throw std::invalid_argument("occupation label '" + label + "' does not fit " +
                                    std::to_string(n_orbitals) + " orbitals");
    const int offset = n_orbitals / 2 - width / 2;
    std::vector<int> occ(n_orbitals);
    for (int k = 0; k < n_orbitals; ++k) occ[k] = (k < n_orbitals / 2) ? 2 : 0;
    if (width == n_orbitals) {
        for (int k = 0; k < n_orbitals; ++k) occ[k] = digits[k] - '0';
    } else {
        for (int k = 0; k < width; ++k) occ[offset + k] = digits[k] - '0';
    }

    int total = 0;
    std::vector<int> singles;
    Determinant d;
    for (int k = 0; k < n_orbitals; ++k) {
        total += occ[k];
        if (occ[k] == 2) {
            d.up.push_back(k);
            d.down.push_back(k);
        } else if (occ[k] == 1) {
            singles.push_back(k);
        }
    }
    if (total % 2 != 0) throw std::invalid_argument("label '" + label + "' has an odd electron count");
    const int need_down = total / 2 - static_cast<int>(d.down.size());
    if (need_down < 0 || need_down > static_cast<int>(singles.size()))
        throw std::invalid_argument("label '" + label + "' cannot be split into equal spin channels");
    for (std::size_t s = 0; s < singles.size(); ++s) {
        if (static_cast<int>(s) < need_down)
            d.down.push_back(singles[s]);
        else
            d.up.push_back(singles[s]);
    }
    std::sort(d.up.begin(), d.up.end());
    std::sort(d.down.begin(), d.down.end());
    return d;
}

Eigen::VectorXd Determinant::occupations(int n_orbitals) const {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(n_orbitals);
    for (int k : up) n[k] += 1.0;
    for (int k : down) n[k] += 1.0;
    return n;
}

std::string Determinant::label(int n_orbitals) const {
    const Eigen::VectorXd n = occupations(n_orbitals);
    std::string s = "(";
    for (int k = 0; k < n_orbitals; ++k) s.push_back(static_cast<char>('0' + static_cast<int>(n[k])));
    s.push_back(')');
    return s;
}

std::vector<int> Determinant::spin_orbitals(int n_orbitals) const {
    std::vector<int> so(up);
    for (int k : down) so.push_back(n_orbitals + k);
    return so;
}

int excitation_level(const Determinant& a, const Determinant& b) {
    return static_cast<int>(set_difference(a.up, b.up).size() + set_difference(a.down, b.down).size());
}

// ----------------------------------------------------------------- OrbitalSet

double OrbitalSet::orthonormality_defect() const {
    const Eigen::MatrixXcd s = orbitals.adjoint() * orbitals;
    return (s - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
}

// --------------------------------------------------------- SuperpositionState

SuperpositionState::SuperpositionState(OrbitalSet orbitals, std::vector<Term> terms)
    : orbitals_(std::move(orbitals)), terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("superposition needs at least one term");
    if (orbitals_.orthonormality_defect() > 1e-10) throw std::invalid_argument("orbital set is not orthonormal");
    const int n = n_orbitals();
    const auto n_up = terms_.front().det.up.size();
    const auto n_down = terms_.front().det.down.size();
    for (std::size_t a = 0; a < terms_.size(); ++a) {
        const Determinant& d = terms_[a].det;
        check_sorted_unique(d.up, n);
        check_sorted_unique(d.down, n);
        if (d.up.size() != n_up || d.down.size() != n_down)
            throw std::invalid_argument("determinants must share per-spin electron counts");
        for (std::size_t b = 0; b < a; ++b)
            if (terms_[b].det == d) throw std::invalid_argument("duplicate determinant " + d.label(n));
    }
    if (std::abs(norm() - 1.0) > 1e-10) throw std::invalid_argument("superposition amplitudes are not normalized");
}

double SuperpositionState::norm() const {
    double s = 0.0;
    for (const Term& t : terms_) s += std::norm(t.amplitude);
    return s;
}

SuperpositionState SuperpositionState::with_orbitals(OrbitalSet orbitals) const {
    return SuperpositionState(std::move(orbitals), terms_);
}

SuperpositionState build_excited_state(const OrbitalSet& orbitals, const Determinant& ground,
                                       const std::vector<ExcitationTerm>& terms) {
    const int n = orbitals.size();
    std::vector<Term> out;
    out.reserve(terms.size());
    for (const ExcitationTerm& t : terms) {
        std::vector<int> so = ground.spin_orbitals(n);
        int sign = 1;
        for (const Excitation& e : t.moves) {
            if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
                throw std::invalid_argument("excitation orbital out of range");
            const int offset = (e.spin == Spin::up) ? 0 : n;
            const int s1 = annihilate(so, offset + e.from);
            if (s1 == 0) throw std::invalid_argument("excitation source orbital " + std::to_string(e.from) + " is empty");
            const int s2 = create(so, offset + e.to);
            if (s2 == 0) throw std::invalid_argument("excitation target orbital " + std::to_string(e.to) + " is occupied");
            sign *= s1 * s2;
        }
        Determinant d;
        for (int x : so) (x < n ? d.up : d.down).push_back(x < n ? x : x - n);
        out.push_back({t.amplitude * static_cast<double>(sign), std::move(d)});
    }
    double norm = 0.0;
    for (const Term& t : out) norm += std::norm(t.amplitude);
    if (std::abs(norm - 1.0) > 1e-10)
        throw std::invalid_argument("excited-state amplitudes are not normalized (sum |b|^2 = " + std::to_string(norm) + ")");
    return SuperpositionState(orbitals, std::move(out));
}

// -------------------------------------------------------------- Slater-Condon

std::vector<OneBodyElement> one_body_transition(const Determinant& bra, const Determinant& ket) {
    std::vector<OneBodyElement> out;
    if (bra.up.size() != ket.up.size() || bra.down.size() != ket.down.size()) return out;
    const auto up_bra = set_difference(bra.up, ket.up);
    const auto down_bra = set_difference(bra.down, ket.down);
    const std::size_t level = up_bra.size() + down_bra.size();
    if (level == 0) {
        for (int k : bra.up) out.push_back({Spin::up, k, k, 1.0});
        for (int k : bra.down) out.push_back({Spin::down, k, k, 1.0});
        return out;
    }
    if (level != 1) return out;
    const Spin spin = up_bra.empty() ? Spin::down : Spin::up;
    const int k = up_bra.empty() ? down_bra.front() : up_bra.front();
    const int l = set_difference(ket.occupied(spin), bra.occupied(spin)).front();
    // Within one spin channel the other channel contributes the same sign
    // twice, so the per-channel lists suffice.
    std::vector<int> occ = ket.occupied(spin);
    const int sign = annihilate(occ, l) * create(occ, k);
    out.push_back({spin, k, l, static_cast<double>(sign)});
    return out;
}

cplx slater_condon_one_body(const Determinant& bra, const Determinant& ket, const Eigen::MatrixXcd& op) {
    cplx value{};
    for (const OneBodyElement& e : one_body_transition(bra, ket)) value += e.value * op(e.k, e.l);
    return value;
}

double slater_condon_one_body(const Determinant& bra, const Determinant& ket, const Eigen::MatrixXd& op) {
    double value = 0.0;
    for (const OneBodyElement& e : one_body_transition(bra, ket)) value += e.value * op(e.k, e.l);
    return value;
}

std::vector<TwoBodyElement> two_body_transition(const Determinant& bra, const Determinant& ket) {
    std::vector<TwoBodyElement> out;
    if (bra.up.size() != ket.up.size() || bra.down.size() != ket.down.size()) return out;
    if (excitation_level(bra, ket) > 2) return out;

    // Spin-orbital labels need only be consistent; use a stride past every index.
    int n = 0;
    for (const auto* v : {&bra.up, &bra.down, &ket.up, &ket.down})
        if (!v->empty()) n = std::max(n, v->back() + 1);
    const std::vector<int> so_bra = bra.spin_orbitals(n);
    const std::vector<int> so_ket = ket.spin_orbitals(n);
    const std::vector<int> only_ket = set_difference(so_ket, so_bra);

    auto orbital = [n](int so) { return so % n; };
    auto spin_of = [n](int so) { return so / n; };

    // <bra| a+_a a+_b a_c a_d |ket>: {c,d} must contain everything only the
    // ket has; {a,b} is then fixed as what the bra has beyond the remainder.
    for (int c : so_ket) {
        for (int d : so_ket) {
            if (c == d) continue;
            if (!std::all_of(only_ket.begin(), only_ket.end(), [&](int y) { return y == c || y == d; })) continue;
            std::vector<int> rest;
            for (int x : so_ket)
                if (x != c && x != d) rest.push_back(x);
            const std::vector<int> created = set_difference(so_bra, rest);
            if (created.size() != 2) continue;
            for (int swap = 0; swap < 2; ++swap) {
                const int a = created[swap];
                const int b = created[1 - swap];
                // Spin-summed Gamma keeps only c+_{p s} c+_{q s'} c_{r s'} c_{s s}.
                if (spin_of(a) != spin_of(d) || spin_of(b) != spin_of(c)) continue;
                const int sign = two_body_sign(so_bra, so_ket, a, b, c, d);
                if (sign == 0) continue;
                out.push_back({orbital(a), orbital(b), orbital(d), orbital(c), cplx(0.5 * sign, 0.0)});
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------------- RDMs

cplx Rdm2::trace() const {
    cplx t{};
    for (int p = 0; p < n_; ++p)
        for (int q = 0; q < n_; ++q) t += (*this)(p, q, p, q);
    return t;
}

Eigen::MatrixXcd Rdm2::partial_trace() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n_, n_);
    for (int p = 0; p < n_; ++p)
        for (int s = 0; s < n_; ++s)
            for (int q = 0; q < n_; ++q) m(p, s) += (*this)(p, q, s, q);
    return m;
}

OrbitalDensities orbital_densities(const SuperpositionState& state, bool with_two_body) {
    const int n = state.n_orbitals();
    OrbitalDensities out;
    out.gamma1 = Eigen::MatrixXcd::Zero(n, n);
    std::map<std::tuple<int, int, int, int>, cplx> g2;
    for (const Term& bra : state.terms()) {
        for (const Term& ket : state.terms()) {
            const cplx w = std::conj(bra.amplitude) * ket.amplitude;
            for (const OneBodyElement& e : one_body_transition(bra.det, ket.det)) out.gamma1(e.k, e.l) += w * e.value;
            if (!with_two_body) continue;
            for (const TwoBodyElement& e : two_body_transition(bra.det, ket.det))
                g2[{e.i, e.j, e.k, e.l}] += w * e.value;
        }
    }
    out.gamma2.reserve(g2.size());
    for (const auto& [key, v] : g2) {
        if (std::abs(v) == 0.0) continue;
        const auto [i, j, k, l] = key;
        out.gamma2.push_back({i, j, k, l, v});
    }
    return out;
}

Rdm1 to_site_basis(const Eigen::MatrixXcd& gamma1, const Eigen::MatrixXcd& orbitals) {
    return {orbitals.conjugate() * gamma1 * orbitals.transpose()};
}

Rdm2 to_site_basis(const std::vector<TwoBodyElement>& gamma2, const Eigen::MatrixXcd& orbitals) {
    const int n = static_cast<int>(orbitals.rows());
    if (n > kDenseRdm2Limit)
        throw std::invalid_argument("dense two-body RDM limited to " + std::to_string(kDenseRdm2Limit) + " sites");
    const Eigen::MatrixXcd cc = orbitals.conjugate();
    // (i,j,k,l) -> (i,j,k,r)
    Rdm2 a(n);
    for (const TwoBodyElement& e : gamma2)
        for (int r = 0; r < n; ++r) a(e.i, e.j, e.k, r) += orbitals(r, e.l) * e.value;
    // -> (i,j,s,r)
    Rdm2 b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int s = 0; s < n; ++s) {
                    const cplx c = orbitals(s, k);
                    if (c == cplx{}) continue;
                    for (int r = 0; r < n; ++r) b(i, j, s, r) += c * a(i, j, k, r);
                }
    // -> (i,q,s,r)
    Rdm2 c3(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int q = 0; q < n; ++q) {
                const cplx c = cc(q, j);
                if (c == cplx{}) continue;
                for (int s = 0; s < n; ++s)
                    for (int r = 0; r < n; ++r) c3(i, q, s, r) += c * b(i, j, s, r);
            }
    // -> (p,q,s,r)
    Rdm2 out(n);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p) {
            const cplx c = cc(p, i);
            if (c == cplx{}) continue;
            const std::size_t src = c3.index(i, 0, 0, 0);
            const std::size_t dst = out.index(p, 0, 0, 0);
            const std::size_t block = static_cast<std::size_t>(n) * n * n;
            for (std::size_t x = 0; x < block; ++x) out.data()[dst + x] += c * c3.data()[src + x];
        }
    return out;
}

Rdm1 one_body_rdm(const SuperpositionState& state) {
    return to_site_basis(orbital_densities(state, false).gamma1, state.orbitals());
}

Rdm2 two_body_rdm(const SuperpositionState& state) {
    return to_site_basis(orbital_densities(state, true).gamma2, state.orbitals());
}

double two_body_purity_pure(const SuperpositionState& state) {
    double p = 0.0;
    for (const TwoBodyElement& e : orbital_densities(state, true).gamma2) p += std::norm(e.value);
    return p;
}

// ------------------------------------------------------------ adiabatic basis

AdiabaticBasis adiabatic_basis(const SingleParticleHamiltonian& h, const Eigen::MatrixXd* reference) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
    AdiabaticBasis basis{solver.eigenvalues(), solver.eigenvectors()};
    const int n = static_cast<int>(basis.energies.size());

    if (reference == nullptr) {
        for (int k = 0; k < n; ++k) {
            auto col = basis.orbitals.col(k);
            const double big = col.cwiseAbs().maxCoeff();
            for (int p = 0; p < n; ++p) {
                if (std::abs(col[p]) >= big * (1.0 - 1e-8)) {
                    if (col[p] < 0) col = -col;
                    break;
                }
            }
        }
        return basis;
    }

    if (reference->rows() != n || reference->cols() != n) throw std::invalid_argument("reference basis has wrong shape");
    int start = 0;
    while (start < n) {
        int stop = start + 1;
        const double scale = std::max(1.0, std::abs(basis.energies[start]));
        while (stop < n && std::abs(basis.energies[stop] - basis.energies[start]) < 1e-9 * scale) ++stop;
        const int m = stop - start;
        auto block = basis.orbitals.middleCols(start, m);
        const Eigen::MatrixXd overlap = block.transpose() * reference->middleCols(start, m);
        if (m == 1) {
            if (overlap(0, 0) < 0) block = -block;
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const Eigen::MatrixXd rotated = block * (svd.matrixU() * svd.matrixV().transpose());
            block = rotated;
        }
        start = stop;
    }
    return basis;
}

double determinant_energy(const Determinant& det, const Eigen::VectorXd& orbital_energies) {
    double e = 0.0;
    for (int k : det.up) e += orbital_energies[k];
    for (int k : det.down) e += orbital_energies[k];
    return e;
}

}  // namespace vibret
