#include "bpl/quantum.hpp"

#include <cmath>

namespace bpl {

namespace {

// Dense hilbert_dim x num_configs matrix whose column q holds psi restricted
// to the indices owned by configuration q. P(q) psi appears as column q.
Eigen::MatrixXcd masked_columns(const Eigen::VectorXcd& psi, const Povm& povm) {
    const int C = povm.num_configs();
    Eigen::MatrixXcd mask = Eigen::MatrixXcd::Zero(psi.size(), C);
    for (int q = 0; q < C; ++q) {
        for (int i : povm.sets[static_cast<std::size_t>(q)]) {
            mask(i, q) = psi(i);
        }
    }
    return mask;
}

void check_dims(const StateVector& psi, const HermitianOperator& H, const Povm& povm) {
    if (psi.dim() != H.dim() || povm.hilbert_dim != H.dim()) {
        throw std::invalid_argument("quantum: dimension mismatch between psi, H, and POVM");
    }
}

}  // namespace

StateVector evolve(const StateVector& psi0, const HermitianOperator& H, double t) {
    if (psi0.dim() != H.dim()) {
        throw std::invalid_argument("evolve: state and Hamiltonian dimensions differ");
    }
    const Eigen::VectorXcd w = H.eigenvectors().adjoint() * psi0.amps();
    Eigen::VectorXcd phased(w.size());
    const double s = -t / psi0.hbar();
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        phased(k) = std::polar(1.0, H.eigenvalues()(k) * s) * w(k);
    }
    return StateVector(H.eigenvectors() * phased, psi0.hbar());
}

Eigen::VectorXd measure(const StateVector& psi, const Povm& povm) {
    if (psi.dim() != povm.hilbert_dim) {
        throw std::invalid_argument("measure: state and POVM dimensions differ");
    }
    const int C = povm.num_configs();
    Eigen::VectorXd mu(C);
    if (povm.kind == Povm::Kind::Partition) {
        for (int q = 0; q < C; ++q) {
            double s = 0.0;
            for (int i : povm.sets[static_cast<std::size_t>(q)]) {
                s += std::norm(psi[i]);
            }
            mu(q) = s;
        }
    } else {
        for (int q = 0; q < C; ++q) {
            const cxd val = psi.amps().dot(povm.elements[static_cast<std::size_t>(q)] * psi.amps());
            double p = val.real();
            if (p < 0.0) {
                if (p < -1e-14) {
                    throw std::invalid_argument(
                        "measure: negative probability beyond roundoff (non-positive element?)");
                }
                p = 0.0;
            }
            mu(q) = p;
        }
    }
    return mu;
}

CurrentMatrix current(const StateVector& psi, const HermitianOperator& H, const Povm& povm,
                      double t) {
    check_dims(psi, H, povm);
    const int C = povm.num_configs();
    const double pref = 2.0 / psi.hbar();
    Eigen::MatrixXd raw(C, C);

    if (povm.kind == Povm::Kind::Partition) {
        const Eigen::MatrixXcd mask = masked_columns(psi.amps(), povm);
        const Eigen::MatrixXcd overlap = mask.adjoint() * (H.matrix() * mask);
        raw = pref * overlap.imag();
    } else {
        std::vector<Eigen::VectorXcd> masked(static_cast<std::size_t>(C));
        for (int q = 0; q < C; ++q) {
            masked[static_cast<std::size_t>(q)] =
                povm.elements[static_cast<std::size_t>(q)] * psi.amps();
        }
        for (int qp = 0; qp < C; ++qp) {
            const Eigen::VectorXcd hp = H.matrix() * masked[static_cast<std::size_t>(qp)];
            for (int q = 0; q < C; ++q) {
                // dot() conjugates its receiver: <P(q) psi, H P(q') psi>
                raw(q, qp) = pref * masked[static_cast<std::size_t>(q)].dot(hp).imag();
            }
        }
    }

    // Exact antisymmetry: downstream one-direction minimality relies on
    // [J]+ and [J^T]+ having disjoint supports.
    CurrentMatrix out;
    out.t = t;
    out.J = 0.5 * (raw - raw.transpose());
    out.J.diagonal().setZero();
    return out;
}

RateKernel minimal_rates(const StateVector& psi, const HermitianOperator& H, const Povm& povm,
                         double t, double node_eps) {
    if (node_eps <= 0.0) {
        throw std::invalid_argument("minimal_rates: node_eps must be positive");
    }
    const CurrentMatrix cur = current(psi, H, povm, t);
    const Eigen::VectorXd mu = measure(psi, povm);
    const int C = povm.num_configs();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    RateKernel k;
    k.t = t;
    k.sigma = Eigen::MatrixXd::Zero(C, C);
    k.total = Eigen::VectorXd::Zero(C);
    k.singular.assign(static_cast<std::size_t>(C), 0);

    for (int qp = 0; qp < C; ++qp) {
        if (mu(qp) <= node_eps) {
            k.singular[static_cast<std::size_t>(qp)] = 1;
            k.sigma.col(qp).setConstant(nan);
            k.sigma(qp, qp) = 0.0;
            k.total(qp) = nan;
            continue;
        }
        double tot = 0.0;
        for (int q = 0; q < C; ++q) {
            if (q == qp) continue;
            const double r = std::max(cur.J(q, qp), 0.0) / mu(qp);
            k.sigma(q, qp) = r;
            tot += r;
        }
        k.total(qp) = tot;
    }
    return k;
}

Eigen::VectorXd measure_derivative(const StateVector& psi, const HermitianOperator& H,
                                   const Povm& povm) {
    check_dims(psi, H, povm);
    const int C = povm.num_configs();
    const double pref = 2.0 / psi.hbar();
    const Eigen::VectorXcd hpsi = H.matrix() * psi.amps();
    Eigen::VectorXd dot(C);
    if (povm.kind == Povm::Kind::Partition) {
        for (int q = 0; q < C; ++q) {
            cxd s = 0.0;
            for (int i : povm.sets[static_cast<std::size_t>(q)]) {
                s += std::conj(psi[i]) * hpsi(i);
            }
            dot(q) = pref * s.imag();
        }
    } else {
        for (int q = 0; q < C; ++q) {
            dot(q) = pref *
                     psi.amps().dot(povm.elements[static_cast<std::size_t>(q)] * hpsi).imag();
        }
    }
    return dot;
}

double kernel_abs_sum(const StateVector& psi, const HermitianOperator& H, const Povm& povm) {
    check_dims(psi, H, povm);
    const int C = povm.num_configs();
    if (povm.kind == Povm::Kind::Partition) {
        const Eigen::MatrixXcd mask = masked_columns(psi.amps(), povm);
        return (mask.adjoint() * (H.matrix() * mask)).cwiseAbs().sum();
    }
    double acc = 0.0;
    std::vector<Eigen::VectorXcd> masked(static_cast<std::size_t>(C));
    for (int q = 0; q < C; ++q) {
        masked[static_cast<std::size_t>(q)] = povm.elements[static_cast<std::size_t>(q)] * psi.amps();
    }
    for (int qp = 0; qp < C; ++qp) {
        const Eigen::VectorXcd hp = H.matrix() * masked[static_cast<std::size_t>(qp)];
        for (int q = 0; q < C; ++q) {
            acc += std::abs(masked[static_cast<std::size_t>(q)].dot(hp));
        }
    }
    return acc;
}

// ------------------------------ JumpSystem ----------------------------------

JumpSystem::JumpSystem(ConfigSpace space, HermitianOperator H, Povm povm, StateVector psi0,
                       double node_eps)
    : space_(std::move(space)),
      H_(std::move(H)),
      povm_(std::move(povm)),
      psi0_(std::move(psi0)),
      node_eps_(node_eps) {
    if (psi0_.dim() != H_.dim() || povm_.hilbert_dim != H_.dim()) {
        throw std::invalid_argument("JumpSystem: dimension mismatch");
    }
    if (povm_.num_configs() != space_.size()) {
        throw std::invalid_argument("JumpSystem: POVM configuration count differs from space");
    }
    if (node_eps_ <= 0.0) {
        throw std::invalid_argument("JumpSystem: node_eps must be positive");
    }
    w0_ = H_.eigenvectors().adjoint() * psi0_.amps();
    jump_distance = [](int, int) { return 1.0; };
}

StateVector JumpSystem::psi_at(double t) const {
    Eigen::VectorXcd phased(w0_.size());
    const double s = -t / psi0_.hbar();
    for (Eigen::Index k = 0; k < w0_.size(); ++k) {
        phased(k) = std::polar(1.0, H_.eigenvalues()(k) * s) * w0_(k);
    }
    return StateVector(H_.eigenvectors() * phased, psi0_.hbar());
}

Eigen::VectorXd JumpSystem::mu_at(double t) const { return measure(psi_at(t), povm_); }

double JumpSystem::mu_of(int q, double t) const {
    const StateVector psi = psi_at(t);
    if (povm_.kind == Povm::Kind::Partition) {
        double s = 0.0;
        for (int i : povm_.sets[static_cast<std::size_t>(q)]) {
            s += std::norm(psi[i]);
        }
        return s;
    }
    return std::max(
        0.0, psi.amps().dot(povm_.elements[static_cast<std::size_t>(q)] * psi.amps()).real());
}

ColumnRates JumpSystem::rates_from(int x, double t) const {
    const int C = space_.size();
    const StateVector psi = psi_at(t);
    const double pref = 2.0 / psi.hbar();

    ColumnRates col;
    col.sigma = Eigen::VectorXd::Zero(C);

    if (povm_.kind == Povm::Kind::Partition) {
        double mu_x = 0.0;
        for (int i : povm_.sets[static_cast<std::size_t>(x)]) {
            mu_x += std::norm(psi[i]);
        }
        col.mu = mu_x;
        if (mu_x <= node_eps_) {
            col.singular = true;
            col.total = std::numeric_limits<double>::infinity();
            return col;
        }
        // w = H P(x) psi, assembled from the columns H owns at x
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(psi.dim());
        for (int i : povm_.sets[static_cast<std::size_t>(x)]) {
            w += H_.matrix().col(i) * psi[i];
        }
        double tot = 0.0;
        for (int q = 0; q < C; ++q) {
            if (q == x) continue;
            cxd s = 0.0;
            for (int i : povm_.sets[static_cast<std::size_t>(q)]) {
                s += std::conj(psi[i]) * w(i);
            }
            const double rate = std::max(pref * s.imag(), 0.0) / mu_x;
            col.sigma(q) = rate;
            tot += rate;
        }
        col.total = tot;
        return col;
    }

    // GENERAL: direct sandwich evaluation (not on the sampling hot path).
    const Eigen::VectorXcd ex_psi = povm_.elements[static_cast<std::size_t>(x)] * psi.amps();
    const double mu_x = std::max(0.0, psi.amps().dot(ex_psi).real());
    col.mu = mu_x;
    if (mu_x <= node_eps_) {
        col.singular = true;
        col.total = std::numeric_limits<double>::infinity();
        return col;
    }
    const Eigen::VectorXcd w = H_.matrix() * ex_psi;
    double tot = 0.0;
    for (int q = 0; q < C; ++q) {
        if (q == x) continue;
        const cxd s = (povm_.elements[static_cast<std::size_t>(q)] * psi.amps()).dot(w);
        // dot() conjugates its receiver, so s = <P(q) psi, w>
        const double rate = std::max(pref * std::imag(s), 0.0) / mu_x;
        col.sigma(q) = rate;
        tot += rate;
    }
    col.total = tot;
    return col;
}

double JumpSystem::total_rate(int x, double t) const {
    if (povm_.kind != Povm::Kind::Partition) {
        return rates_from(x, t).total;
    }
    // Hot path of the hazard quadrature: thread-local scratch avoids per-call
    // allocation; each sampling worker owns its buffers.
    thread_local Eigen::VectorXcd phased, psi, w;
    const Eigen::Index D = w0_.size();
    phased.resize(D);
    const double s = -t / psi0_.hbar();
    for (Eigen::Index k = 0; k < D; ++k) {
        phased(k) = std::polar(1.0, H_.eigenvalues()(k) * s) * w0_(k);
    }
    psi.noalias() = H_.eigenvectors() * phased;

    double mu_x = 0.0;
    for (int i : povm_.sets[static_cast<std::size_t>(x)]) {
        mu_x += std::norm(psi(i));
    }
    if (mu_x <= node_eps_) {
        return std::numeric_limits<double>::infinity();
    }

    w.setZero(D);
    for (int i : povm_.sets[static_cast<std::size_t>(x)]) {
        w.noalias() += H_.matrix().col(i) * psi(i);
    }
    const double pref = 2.0 / psi0_.hbar();
    double tot = 0.0;
    const int C = space_.size();
    for (int q = 0; q < C; ++q) {
        if (q == x) continue;
        cxd acc = 0.0;
        for (int i : povm_.sets[static_cast<std::size_t>(q)]) {
            acc += std::conj(psi(i)) * w(i);
        }
        const double j = pref * acc.imag();
        if (j > 0.0) tot += j;
    }
    return tot / mu_x;
}

RateKernel JumpSystem::kernel_at(double t) const {
    return minimal_rates(psi_at(t), H_, povm_, t, node_eps_);
}

CurrentMatrix JumpSystem::current_at(double t) const {
    return current(psi_at(t), H_, povm_, t);
}

Eigen::VectorXd JumpSystem::mu_dot_at(double t) const {
    return measure_derivative(psi_at(t), H_, povm_);
}

}  // namespace bpl
