#include "bpl/models.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bpl {

// ------------------------------ Lattice -------------------------------------

void LatticeSpec::validate() const {
    if (L < 2) throw std::invalid_argument("LatticeSpec: L >= 2 required");
    if (eps <= 0.0) throw std::invalid_argument("LatticeSpec: eps > 0 required");
    if (mass <= 0.0) throw std::invalid_argument("LatticeSpec: mass > 0 required");
    if (hbar <= 0.0) throw std::invalid_argument("LatticeSpec: hbar > 0 required");
    if (!potential.empty() && static_cast<int>(potential.size()) != L) {
        throw std::invalid_argument("LatticeSpec: potential size must match L");
    }
}

std::vector<double> lattice_coordinates(const LatticeSpec& spec) {
    std::vector<double> x(static_cast<std::size_t>(spec.L));
    const double mid = 0.5 * (spec.L - 1);
    for (int i = 0; i < spec.L; ++i) {
        x[static_cast<std::size_t>(i)] = (i - mid) * spec.eps;
    }
    return x;
}

Eigen::MatrixXd lattice_hamiltonian(const LatticeSpec& spec) {
    spec.validate();
    const double hop = -spec.hbar * spec.hbar / (2.0 * spec.mass * spec.eps * spec.eps);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec.L, spec.L);
    for (int i = 0; i < spec.L; ++i) {
        h(i, i) = -2.0 * hop;   // Dirichlet walls: full diagonal everywhere
        if (i + 1 < spec.L) {
            h(i, i + 1) = hop;
            h(i + 1, i) = hop;
        }
        if (!spec.potential.empty()) {
            h(i, i) += spec.potential[static_cast<std::size_t>(i)];
        }
    }
    return h;
}

JumpSystem build_two_level(double omega, double hbar, double node_eps) {
    if (omega <= 0.0) throw std::invalid_argument("build_two_level: omega > 0 required");
    Eigen::MatrixXcd H(2, 2);
    H << 0.0, omega, omega, 0.0;
    Eigen::VectorXcd psi0(2);
    psi0 << 1.0, 0.0;

    JumpSystem sys(ConfigSpace({"1", "2"}), HermitianOperator(H),
                   Povm::partition({{0}, {1}}, 2), StateVector(psi0, hbar), node_eps);
    sys.positions = {0.0, 1.0};
    return sys;
}

JumpSystem build_lattice_particle(const LatticeSpec& spec, const std::vector<cxd>& profile,
                                  double node_eps) {
    spec.validate();
    if (static_cast<int>(profile.size()) != spec.L) {
        throw std::invalid_argument("build_lattice_particle: profile size must match L");
    }
    Eigen::VectorXcd psi0(spec.L);
    for (int i = 0; i < spec.L; ++i) psi0(i) = profile[static_cast<std::size_t>(i)];

    std::vector<std::string> labels;
    std::vector<std::vector<int>> sets;
    labels.reserve(static_cast<std::size_t>(spec.L));
    for (int i = 0; i < spec.L; ++i) {
        labels.push_back("s" + std::to_string(i));
        sets.push_back({i});
    }

    JumpSystem sys(ConfigSpace(std::move(labels)),
                   HermitianOperator(lattice_hamiltonian(spec).cast<cxd>()),
                   Povm::partition(std::move(sets), spec.L), StateVector(psi0, spec.hbar),
                   node_eps);
    sys.positions = lattice_coordinates(spec);
    const double eps = spec.eps;
    sys.jump_distance = [eps](int a, int b) { return eps * std::abs(a - b); };
    return sys;
}

// -------------------------------- Fock --------------------------------------

void FockSpec::validate() const {
    lattice.validate();
    if (n_max < 1) throw std::invalid_argument("FockSpec: n_max >= 1 required");
    if (mass_ph <= 0.0) throw std::invalid_argument("FockSpec: mass_ph > 0 required");
    if (g < 0.0) throw std::invalid_argument("FockSpec: g >= 0 required");
    if (delta < 0) throw std::invalid_argument("FockSpec: delta >= 0 required");
    for (int s : sources) {
        if (s < 0 || s >= lattice.L) {
            throw std::invalid_argument("FockSpec: source site outside the lattice");
        }
    }
}

long long fock_dimension(int L, int n_max) {
    // sum over n of C(n + L - 1, L - 1)
    long long total = 0;
    for (int n = 0; n <= n_max; ++n) {
        long long c = 1;
        for (int j = 1; j <= L - 1; ++j) {
            c = c * (n + j) / j;
        }
        total += c;
    }
    return total;
}

int FockBasis::index_of(const std::vector<int>& q) const {
    auto it = lookup.find(q);
    if (it == lookup.end()) {
        throw std::invalid_argument("FockBasis: configuration not in the truncated basis");
    }
    return it->second;
}

FockBasis FockBasis::enumerate(int L, int n_max) {
    FockBasis basis;
    std::vector<int> q(static_cast<std::size_t>(L), 0);
    // by total particle number, then lexicographic in site occupation
    auto fill = [&](auto&& self, int site, int remaining) -> void {
        if (site == L - 1) {
            q[static_cast<std::size_t>(site)] = remaining;
            basis.lookup.emplace(q, static_cast<int>(basis.configs.size()));
            basis.configs.push_back(q);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            q[static_cast<std::size_t>(site)] = k;
            self(self, site + 1, remaining - k);
        }
        q[static_cast<std::size_t>(site)] = 0;
    };
    for (int n = 0; n <= n_max; ++n) {
        fill(fill, 0, n);
    }
    return basis;
}

double fock_form_factor(const FockSpec& spec, int x) {
    double phi = 0.0;
    for (int y : spec.sources) {
        if (std::abs(x - y) <= spec.delta) phi += spec.g;
    }
    return phi;
}

namespace {

std::string occupation_label(const std::vector<int>& q) {
    std::string s;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i) s += '-';
        s += std::to_string(q[i]);
    }
    return s;
}

}  // namespace

FockModel build_fock(const FockSpec& spec, int dim_cap, double node_eps) {
    spec.validate();
    if (fock_dimension(spec.lattice.L, spec.n_max) > dim_cap) {
        throw std::invalid_argument("build_fock: truncated basis exceeds the dimension cap");
    }

    FockBasis basis = FockBasis::enumerate(spec.lattice.L, spec.n_max);
    const int D = basis.dim();
    const int L = spec.lattice.L;

    LatticeSpec hop_spec = spec.lattice;
    hop_spec.mass = spec.mass_ph;
    const Eigen::MatrixXd h1 = lattice_hamiltonian(hop_spec);

    Eigen::MatrixXcd H0 = Eigen::MatrixXcd::Zero(D, D);
    Eigen::MatrixXcd HI = Eigen::MatrixXcd::Zero(D, D);

    for (int c = 0; c < D; ++c) {
        const std::vector<int>& q = basis.configs[static_cast<std::size_t>(c)];
        const int total = std::accumulate(q.begin(), q.end(), 0);

        // number-conserving part: diagonal plus single-boson hops
        double diag = 0.0;
        for (int x = 0; x < L; ++x) diag += h1(x, x) * q[static_cast<std::size_t>(x)];
        H0(c, c) = diag;
        for (int y = 0; y < L; ++y) {
            if (q[static_cast<std::size_t>(y)] == 0) continue;
            for (int x : {y - 1, y + 1}) {
                if (x < 0 || x >= L) continue;
                std::vector<int> qp = q;
                --qp[static_cast<std::size_t>(y)];
                ++qp[static_cast<std::size_t>(x)];
                const double amp =
                    h1(x, y) * std::sqrt(double(q[static_cast<std::size_t>(y)]) *
                                         double(q[static_cast<std::size_t>(x)] + 1));
                H0(basis.index_of(qp), c) += amp;
            }
        }

        // creation out of q, with the Hermitian partner; the n_max truncation
        // removes creation out-edges from the top sector
        if (total < spec.n_max) {
            for (int x = 0; x < L; ++x) {
                const double phi = fock_form_factor(spec, x);
                if (phi == 0.0) continue;
                std::vector<int> qp = q;
                ++qp[static_cast<std::size_t>(x)];
                const int cp = basis.index_of(qp);
                const double amp = std::sqrt(double(total + 1)) * phi;
                HI(cp, c) += amp;
                HI(c, cp) += amp;
            }
        }
    }

    std::vector<std::string> labels;
    std::vector<std::vector<int>> sets;
    labels.reserve(static_cast<std::size_t>(D));
    for (int c = 0; c < D; ++c) {
        labels.push_back(occupation_label(basis.configs[static_cast<std::size_t>(c)]));
        sets.push_back({c});
    }

    Eigen::VectorXcd vacuum = Eigen::VectorXcd::Zero(D);
    vacuum(basis.index_of(std::vector<int>(static_cast<std::size_t>(L), 0))) = 1.0;

    FockModel model{spec,
                    basis,
                    H0,
                    HI,
                    JumpSystem(ConfigSpace(std::move(labels)), HermitianOperator(H0 + HI),
                               Povm::partition(std::move(sets), D),
                               StateVector(vacuum, spec.lattice.hbar), node_eps)};

    auto configs = std::make_shared<std::vector<std::vector<int>>>(model.basis.configs);
    model.system.jump_distance = [configs, D](int a, int cc) {
        if (a < 0 || cc < 0 || a >= D || cc >= D) return 1.0;
        const auto& qa = (*configs)[static_cast<std::size_t>(a)];
        const auto& qb = (*configs)[static_cast<std::size_t>(cc)];
        int d = 0;
        for (std::size_t i = 0; i < qa.size(); ++i) d += std::abs(qa[i] - qb[i]);
        return static_cast<double>(d);
    };
    return model;
}

// -------------------------------- Dirac -------------------------------------

void DiracSpec::validate() const {
    if (L < 2 || L % 2 != 0) throw std::invalid_argument("DiracSpec: L must be even and >= 2");
    if (eps <= 0.0) throw std::invalid_argument("DiracSpec: eps > 0 required");
    if (mass < 0.0) throw std::invalid_argument("DiracSpec: mass >= 0 required");
    if (c <= 0.0) throw std::invalid_argument("DiracSpec: c > 0 required");
    if (hbar <= 0.0) throw std::invalid_argument("DiracSpec: hbar > 0 required");
}

DiracSystem::DiracSystem(DiracSpec spec, std::vector<Eigen::Vector2cd> profile)
    : spec_(spec) {
    spec_.validate();
    const int L = spec_.L;
    if (static_cast<int>(profile.size()) != L) {
        throw std::invalid_argument("DiracSystem: profile size must match the grid");
    }
    // normalize: integral of psi†psi over one period = 1
    double nrm2 = 0.0;
    for (const auto& v : profile) nrm2 += v.squaredNorm();
    nrm2 *= spec_.eps;
    if (nrm2 <= 0.0 || !std::isfinite(nrm2)) {
        throw std::invalid_argument("DiracSystem: profile is not normalizable");
    }
    const double scale = 1.0 / std::sqrt(nrm2);

    // discrete Fourier coefficients, modes n in [-L/2, L/2)
    const double dk = 2.0 * M_PI / (spec_.eps * L);
    k_.resize(static_cast<std::size_t>(L));
    chi0_.assign(static_cast<std::size_t>(L), Eigen::Vector2cd::Zero());
    for (int m = 0; m < L; ++m) {
        const int n = m - L / 2;
        k_[static_cast<std::size_t>(m)] = n * dk;
        Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
        for (int j = 0; j < L; ++j) {
            const double x = j * spec_.eps;
            const cxd w = std::polar(1.0, -k_[static_cast<std::size_t>(m)] * x);
            acc += w * profile[static_cast<std::size_t>(j)];
        }
        chi0_[static_cast<std::size_t>(m)] = (scale / double(L)) * acc;
    }
}

Eigen::Vector2cd DiracSystem::mode_at(std::size_t n, double t) const {
    const double k = k_[n];
    const double a = spec_.c * spec_.hbar * k;     // sigma_x coefficient
    const double b = spec_.mass * spec_.c * spec_.c;   // sigma_z coefficient
    const double E = std::hypot(a, b);
    const Eigen::Vector2cd& chi = chi0_[n];
    if (E == 0.0) return chi;
    const double phase = E * t / spec_.hbar;
    const double co = std::cos(phase);
    const cxd si(0.0, -std::sin(phase) / E);
    // exp(-i H(k) t / hbar) = cos(Et/hbar) I - i sin(Et/hbar) H(k)/E
    Eigen::Vector2cd out;
    out(0) = co * chi(0) + si * (b * chi(0) + a * chi(1));
    out(1) = co * chi(1) + si * (a * chi(0) - b * chi(1));
    return out;
}

Eigen::Vector2cd DiracSystem::psi(double x, double t) const {
    Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
    for (std::size_t n = 0; n < k_.size(); ++n) {
        acc += std::polar(1.0, k_[n] * x) * mode_at(n, t);
    }
    return acc;
}

Eigen::Vector2cd DiracSystem::dpsi_dx(double x, double t) const {
    Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
    for (std::size_t n = 0; n < k_.size(); ++n) {
        acc += cxd(0.0, k_[n]) * std::polar(1.0, k_[n] * x) * mode_at(n, t);
    }
    return acc;
}

Eigen::Vector2cd DiracSystem::dpsi_dt(double x, double t) const {
    // d/dt psi = (-i/hbar) sum_k e^{ikx} H(k) chi_k(t)
    Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
    for (std::size_t n = 0; n < k_.size(); ++n) {
        const Eigen::Vector2cd m = mode_at(n, t);
        const double a = spec_.c * spec_.hbar * k_[n];
        const double b = spec_.mass * spec_.c * spec_.c;
        Eigen::Vector2cd hk;
        hk(0) = b * m(0) + a * m(1);
        hk(1) = a * m(0) - b * m(1);
        acc += std::polar(1.0, k_[n] * x) * (cxd(0.0, -1.0 / spec_.hbar) * hk);
    }
    return acc;
}

double DiracSystem::density(double x, double t) const { return psi(x, t).squaredNorm(); }

std::vector<Eigen::Vector2cd> gaussian_spinor_profile(const DiracSpec& spec, double x_center,
                                                      double spread, double k0) {
    spec.validate();
    if (spread <= 0.0) throw std::invalid_argument("gaussian_spinor_profile: spread > 0");
    std::vector<Eigen::Vector2cd> prof(static_cast<std::size_t>(spec.L),
                                       Eigen::Vector2cd::Zero());
    for (int j = 0; j < spec.L; ++j) {
        const double x = j * spec.eps;
        const double env = std::exp(-(x - x_center) * (x - x_center) / (4.0 * spread * spread));
        prof[static_cast<std::size_t>(j)](0) = env * std::polar(1.0, k0 * x);
    }
    return prof;
}

std::vector<Eigen::Vector2cd> plane_wave_spinor_profile(const DiracSpec& spec, int mode_index,
                                                        int chirality) {
    spec.validate();
    if (chirality != 1 && chirality != -1) {
        throw std::invalid_argument("plane_wave_spinor_profile: chirality must be +-1");
    }
    const double k = 2.0 * M_PI * mode_index / (spec.eps * spec.L);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::Vector2cd> prof(static_cast<std::size_t>(spec.L));
    for (int j = 0; j < spec.L; ++j) {
        const double x = j * spec.eps;
        const cxd w = std::polar(inv_sqrt2, k * x);
        prof[static_cast<std::size_t>(j)](0) = w;
        prof[static_cast<std::size_t>(j)](1) = double(chirality) * w;
    }
    return prof;
}

DiracSystem build_dirac(const DiracSpec& spec, std::vector<Eigen::Vector2cd> profile) {
    return DiracSystem(spec, std::move(profile));
}

}  // namespace bpl
