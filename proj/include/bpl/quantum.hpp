// quantum.hpp — Finite-dimensional quantum kinematics: states, Hamiltonians,
// configuration measures, probability currents, and minimal jump rates.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bpl {

using cxd = std::complex<double>;

// Raised when a rate or velocity is requested at a configuration whose
// quantum measure has fallen below the node threshold while occupied.
struct node_guard_error : std::runtime_error {
    explicit node_guard_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kDefaultNodeEps = 1e-12;
inline constexpr int kDimensionCap = 4096;

// ----------------------------- ConfigSpace ----------------------------------

// Enumerated configuration space: opaque labels with a label <-> index bijection.
struct ConfigSpace {
    std::vector<std::string> labels;
    std::unordered_map<std::string, int> index;

    ConfigSpace() = default;
    explicit ConfigSpace(std::vector<std::string> names) : labels(std::move(names)) {
        if (labels.empty()) {
            throw std::invalid_argument("ConfigSpace: needs at least one configuration");
        }
        for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
            auto [it, inserted] = index.emplace(labels[i], i);
            if (!inserted) {
                throw std::invalid_argument("ConfigSpace: duplicate label '" + labels[i] + "'");
            }
        }
    }

    int size() const { return static_cast<int>(labels.size()); }
    const std::string& label(int i) const { return labels.at(static_cast<std::size_t>(i)); }
    int index_of(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) {
            throw std::invalid_argument("ConfigSpace: unknown label '" + name + "'");
        }
        return it->second;
    }
};

// ----------------------------- StateVector ----------------------------------

// Normalized complex amplitude vector; carries the hbar convention used by
// every rate formula downstream.
class StateVector {
public:
    StateVector(Eigen::VectorXcd amps, double hbar = 1.0) : amps_(std::move(amps)), hbar_(hbar) {
        if (hbar_ <= 0.0) {
            throw std::invalid_argument("StateVector: hbar must be positive");
        }
        if (!amps_.allFinite()) {
            throw std::invalid_argument("StateVector: non-finite amplitude");
        }
        const double n = amps_.norm();
        if (n < 1e-14) {
            throw std::invalid_argument("StateVector: cannot normalize the zero vector");
        }
        amps_ /= n;
    }

    int dim() const { return static_cast<int>(amps_.size()); }
    double hbar() const { return hbar_; }
    const Eigen::VectorXcd& amps() const { return amps_; }
    cxd operator[](int i) const { return amps_(i); }
    double norm() const { return amps_.norm(); }

private:
    Eigen::VectorXcd amps_;
    double hbar_;
};

// -------------------------- HermitianOperator -------------------------------

// Dense self-adjoint operator with a cached spectral decomposition, used for
// exact unitary propagation. Input matrices are symmetrized as (M + M†)/2.
class HermitianOperator {
public:
    explicit HermitianOperator(const Eigen::MatrixXcd& m, int dim_cap = kDimensionCap) {
        if (m.rows() != m.cols()) {
            throw std::invalid_argument("HermitianOperator: matrix must be square");
        }
        if (m.rows() == 0 || m.rows() > dim_cap) {
            throw std::invalid_argument("HermitianOperator: dimension outside [1, cap]");
        }
        if (!m.allFinite()) {
            throw std::invalid_argument("HermitianOperator: non-finite entry");
        }
        mat_ = 0.5 * (m + m.adjoint());

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(mat_);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("HermitianOperator: eigendecomposition failed");
        }
        evals_ = solver.eigenvalues();
        evecs_ = solver.eigenvectors();

        const double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
        const Eigen::MatrixXcd rebuilt =
            evecs_ * evals_.asDiagonal().toDenseMatrix().cast<cxd>() * evecs_.adjoint();
        if ((rebuilt - mat_).cwiseAbs().maxCoeff() > 1e-9 * scale) {
            throw std::runtime_error("HermitianOperator: spectral reconstruction out of tolerance");
        }
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    const Eigen::MatrixXcd& eigenvectors() const { return evecs_; }

private:
    Eigen::MatrixXcd mat_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXcd evecs_;
};

// -------------------------------- Povm --------------------------------------

// Family of positive operators indexed by configurations, summing to the
// identity. PARTITION assigns each configuration a disjoint set of basis
// indices (projection onto those coordinates); GENERAL stores explicit
// positive matrices.
struct Povm {
    enum class Kind { Partition, General };

    Kind kind{Kind::Partition};
    int hilbert_dim{0};
    std::vector<std::vector<int>> sets;        // Partition only
    std::vector<Eigen::MatrixXcd> elements;    // General only

    static Povm partition(std::vector<std::vector<int>> index_sets, int hdim) {
        Povm p;
        p.kind = Kind::Partition;
        p.hilbert_dim = hdim;
        p.sets = std::move(index_sets);
        std::vector<int> owner(static_cast<std::size_t>(hdim), -1);
        for (int q = 0; q < static_cast<int>(p.sets.size()); ++q) {
            for (int i : p.sets[static_cast<std::size_t>(q)]) {
                if (i < 0 || i >= hdim) {
                    throw std::invalid_argument("Povm: basis index out of range");
                }
                if (owner[static_cast<std::size_t>(i)] != -1) {
                    throw std::invalid_argument("Povm: partition sets are not disjoint");
                }
                owner[static_cast<std::size_t>(i)] = q;
            }
        }
        for (int o : owner) {
            if (o == -1) {
                throw std::invalid_argument("Povm: partition does not cover the basis");
            }
        }
        return p;
    }

    static Povm general(std::vector<Eigen::MatrixXcd> elems) {
        if (elems.empty()) {
            throw std::invalid_argument("Povm: empty element list");
        }
        Povm p;
        p.kind = Kind::General;
        p.hilbert_dim = static_cast<int>(elems.front().rows());
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(p.hilbert_dim, p.hilbert_dim);
        for (const auto& e : elems) {
            if (e.rows() != p.hilbert_dim || e.cols() != p.hilbert_dim) {
                throw std::invalid_argument("Povm: inconsistent element dimensions");
            }
            if ((e - e.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
                throw std::invalid_argument("Povm: element is not self-adjoint");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(e);
            if (es.eigenvalues().minCoeff() < -1e-10) {
                throw std::invalid_argument("Povm: element is not positive semidefinite");
            }
            sum += e;
        }
        if ((sum - Eigen::MatrixXcd::Identity(p.hilbert_dim, p.hilbert_dim)).cwiseAbs().maxCoeff() >
            1e-10) {
            throw std::invalid_argument("Povm: elements do not sum to the identity");
        }
        p.elements = std::move(elems);
        return p;
    }

    int num_configs() const {
        return kind == Kind::Partition ? static_cast<int>(sets.size())
                                       : static_cast<int>(elements.size());
    }
};

// ----------------------------- Rate containers -------------------------------

// Net probability current between configurations at a fixed time.
// Antisymmetric with zero diagonal by construction.
struct CurrentMatrix {
    double t{0.0};
    Eigen::MatrixXd J;
};

// Minimal jump rates at a fixed time. Columns whose measure lies below the
// node threshold are flagged singular; their sigma/total entries hold NaN so
// they can never be mistaken for genuine zero rates.
struct RateKernel {
    double t{0.0};
    Eigen::MatrixXd sigma;
    Eigen::VectorXd total;
    std::vector<char> singular;

    bool is_singular(int q) const { return singular[static_cast<std::size_t>(q)] != 0; }
};

// ------------------------------ Operations ----------------------------------

// psi_t = V exp(-i lambda t / hbar) V† psi_0
StateVector evolve(const StateVector& psi0, const HermitianOperator& H, double t);

// mu(q) = <Psi, P(q) Psi>, clamped at -1e-14 roundoff negativity.
Eigen::VectorXd measure(const StateVector& psi, const Povm& povm);

// J(q,q') = (2/hbar) Im <Psi, P(q) H P(q') Psi>, antisymmetrized exactly.
CurrentMatrix current(const StateVector& psi, const HermitianOperator& H, const Povm& povm,
                      double t);

// sigma(q,q') = [J(q,q')]+ / mu(q') wherever mu(q') exceeds node_eps.
RateKernel minimal_rates(const StateVector& psi, const HermitianOperator& H, const Povm& povm,
                         double t, double node_eps = kDefaultNodeEps);

// mu_dot(q) = (2/hbar) Im <Psi, P(q) H Psi>  (equals the row sums of J).
Eigen::VectorXd measure_derivative(const StateVector& psi, const HermitianOperator& H,
                                   const Povm& povm);

// sum_{q,q'} |<Psi, P(q) H P(q') Psi>| over all pairs, diagonal included; the
// integrand of the non-explosion assumption.
double kernel_abs_sum(const StateVector& psi, const HermitianOperator& H, const Povm& povm);

// ------------------------------ JumpSystem ----------------------------------

// Single-column rate evaluation at an occupied configuration.
struct ColumnRates {
    Eigen::VectorXd sigma;   // sigma(q, x) over destinations q
    double total{0.0};
    double mu{0.0};
    bool singular{false};
};

// Bundle of quantum-core objects defining one jump process: configuration
// space, Hamiltonian, POVM, and the reference state at t = 0. Immutable after
// construction and safe to share across threads.
class JumpSystem {
public:
    JumpSystem(ConfigSpace space, HermitianOperator H, Povm povm, StateVector psi0,
               double node_eps = kDefaultNodeEps);

    int num_configs() const { return space_.size(); }
    int hilbert_dim() const { return H_.dim(); }
    double hbar() const { return psi0_.hbar(); }
    double node_eps() const { return node_eps_; }

    const ConfigSpace& space() const { return space_; }
    const HermitianOperator& hamiltonian() const { return H_; }
    const Povm& povm() const { return povm_; }
    const StateVector& psi0() const { return psi0_; }

    StateVector psi_at(double t) const;
    Eigen::VectorXd mu_at(double t) const;
    double mu_of(int q, double t) const;

    // Rates out of configuration x at time t. Singular columns are flagged,
    // with total = +inf so hazard integrators see the node divergence.
    ColumnRates rates_from(int x, double t) const;

    // Total jump rate sigma_t(Q, x); +inf when x sits on a node.
    double total_rate(int x, double t) const;

    RateKernel kernel_at(double t) const;
    CurrentMatrix current_at(double t) const;
    Eigen::VectorXd mu_dot_at(double t) const;

    // Optional per-configuration coordinate (used by lattice drift); empty if
    // the model has no geometric embedding.
    std::vector<double> positions;

    // Metric for traveled-distance diagnostics; defaults to one unit per jump.
    std::function<double(int, int)> jump_distance;

private:
    ConfigSpace space_;
    HermitianOperator H_;
    Povm povm_;
    StateVector psi0_;
    double node_eps_;
    Eigen::VectorXcd w0_;   // V† psi0, cached for propagation
};

}  // namespace bpl
