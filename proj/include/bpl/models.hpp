// models.hpp — Builders for the concrete systems: two-level fixture, 1D
// lattice particle, lattice Fock field coupled to fixed sources, and the
// periodic 1+1D Dirac grid.

#pragma once

#include "bpl/quantum.hpp"

#include <map>
#include <vector>

namespace bpl {

// ------------------------------ Lattice -------------------------------------

struct LatticeSpec {
    int L{2};                        // site count
    double eps{1.0};                 // spacing
    double mass{1.0};
    std::vector<double> potential;   // per-site; empty means zero
    double hbar{1.0};

    void validate() const;
};

// Site coordinates centered on the origin: x_i = (i - (L-1)/2) * eps.
std::vector<double> lattice_coordinates(const LatticeSpec& spec);

// Single-particle H = -hbar^2/(2m) Delta_eps + V with Dirichlet walls.
Eigen::MatrixXd lattice_hamiltonian(const LatticeSpec& spec);

// Two-level fixture: H = omega * sigma_x, psi0 = (1, 0), configurations
// labeled "1" and "2". Every closed-form rate used in the tests lives here.
JumpSystem build_two_level(double omega, double hbar = 1.0,
                           double node_eps = kDefaultNodeEps);

// One particle on the lattice; profile is normalized into the state vector.
JumpSystem build_lattice_particle(const LatticeSpec& spec, const std::vector<cxd>& profile,
                                  double node_eps = kDefaultNodeEps);

// -------------------------------- Fock --------------------------------------

struct FockSpec {
    LatticeSpec lattice;
    int n_max{2};                    // cap on the total particle number
    std::vector<int> sources;        // source sites (fixed)
    double g{0.1};                   // coupling amplitude of the form factor
    int delta{1};                    // form-factor radius in sites
    double mass_ph{1.0};             // boson mass

    void validate() const;
};

// Occupation-number basis over all q with sum(q) <= n_max.
struct FockBasis {
    std::vector<std::vector<int>> configs;
    std::map<std::vector<int>, int> lookup;

    int dim() const { return static_cast<int>(configs.size()); }
    int index_of(const std::vector<int>& q) const;

    static FockBasis enumerate(int L, int n_max);
};

// Counting oracle: configurations of at most n_max bosons on L sites.
long long fock_dimension(int L, int n_max);

struct FockModel {
    FockSpec spec;
    FockBasis basis;
    Eigen::MatrixXcd H0;   // number-conserving hopping
    Eigen::MatrixXcd HI;   // creation/annihilation near the sources
    JumpSystem system;     // driven by H0 + HI
};

// Sum of the source-centered form factors at site x: Phi(x) = sum_y phi(x-y),
// phi a radius-delta plateau of height g.
double fock_form_factor(const FockSpec& spec, int x);

FockModel build_fock(const FockSpec& spec, int dim_cap = kDimensionCap,
                     double node_eps = kDefaultNodeEps);

// -------------------------------- Dirac -------------------------------------

struct DiracSpec {
    int L{64};          // grid points, even (periodic)
    double eps{0.25};   // spacing
    double mass{1.0};
    double c{1.0};      // speed of light
    double hbar{1.0};

    void validate() const;
};

// Free 1+1D Dirac evolution, exact per momentum mode through the 2x2
// diagonalization of H(k) = c*hbar*k*sigma_x + m*c^2*sigma_z. The state is
// band-limited, so psi and its derivatives are defined for every real x.
class DiracSystem {
public:
    DiracSystem(DiracSpec spec, std::vector<Eigen::Vector2cd> profile);

    const DiracSpec& spec() const { return spec_; }
    double domain_length() const { return spec_.eps * spec_.L; }

    Eigen::Vector2cd psi(double x, double t) const;
    Eigen::Vector2cd dpsi_dx(double x, double t) const;
    Eigen::Vector2cd dpsi_dt(double x, double t) const;

    // psi† psi, normalized so its integral over one period is 1.
    double density(double x, double t) const;

private:
    Eigen::Vector2cd mode_at(std::size_t n, double t) const;

    DiracSpec spec_;
    std::vector<double> k_;
    std::vector<Eigen::Vector2cd> chi0_;
};

// Gaussian packet profile (component-0 spinor) with carrier momentum k0.
std::vector<Eigen::Vector2cd> gaussian_spinor_profile(const DiracSpec& spec, double x_center,
                                                      double spread, double k0);

// Single plane-wave mode along the +1 or -1 eigenspinor of sigma_x.
std::vector<Eigen::Vector2cd> plane_wave_spinor_profile(const DiracSpec& spec, int mode_index,
                                                        int chirality);

DiracSystem build_dirac(const DiracSpec& spec, std::vector<Eigen::Vector2cd> profile);

}  // namespace bpl
