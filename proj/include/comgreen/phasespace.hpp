#pragma once

// Observables linear in (x, p) and Hamiltonians quadratic in (x, p).
//
// Phase-space coordinates are ordered z = (x_1..x_n, p_1..p_n) and the canonical
// commutators read [z_a, z_b] = i hbar J_ab with J = [[0, I], [-I, 0]].

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "comgreen/errors.hpp"
#include "comgreen/time_scalar.hpp"

namespace comgreen {

struct SymplecticForm {
    static Eigen::MatrixXd matrix(int dim) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
        j.topRightCorner(dim, dim).setIdentity();
        j.bottomLeftCorner(dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);
        return j;
    }
};

/// Coefficients of a linear observable frozen at one instant: alpha^T z + gamma.
struct LinearForm {
    Eigen::VectorXd alpha;
    double gamma = 0.0;

    int dim() const { return static_cast<int>(alpha.size()) / 2; }
    double max_abs() const { return std::max(alpha.size() ? alpha.cwiseAbs().maxCoeff() : 0.0, std::abs(gamma)); }
    bool is_zero(double tol) const { return max_abs() <= tol; }

    Eigen::VectorXd position_block() const { return alpha.head(dim()); }
    Eigen::VectorXd momentum_block() const { return alpha.tail(dim()); }

    friend LinearForm operator+(const LinearForm& a, const LinearForm& b) {
        if (a.alpha.size() != b.alpha.size()) throw DimensionMismatch("adding linear forms of different dimension");
        return {a.alpha + b.alpha, a.gamma + b.gamma};
    }
    friend LinearForm operator*(double s, const LinearForm& a) { return {s * a.alpha, s * a.gamma}; }
};

/// Hermitean operator A(t) = alpha(t)^T z + gamma(t) with real time-dependent coefficients.
class LinearObservable {
public:
    LinearObservable(int dim, std::vector<TimeScalar> alpha, TimeScalar gamma, std::string label = {})
        : dim_(dim), alpha_(std::move(alpha)), gamma_(std::move(gamma)), label_(std::move(label)) {
        if (dim_ <= 0) throw DimensionMismatch("observable dimension must be positive");
        if (static_cast<int>(alpha_.size()) != 2 * dim_)
            throw DimensionMismatch("observable '" + label_ + "' needs " + std::to_string(2 * dim_) + " coefficients, got " +
                                    std::to_string(alpha_.size()));
        domain_ = gamma_.domain();
        for (const auto& a : alpha_) domain_ = domain_.intersect(a.domain());
    }

    int dim() const noexcept { return dim_; }
    const std::string& label() const noexcept { return label_; }
    const std::vector<TimeScalar>& alpha() const noexcept { return alpha_; }
    const TimeScalar& gamma() const noexcept { return gamma_; }
    const Interval& domain() const noexcept { return domain_; }

    LinearForm at(double t) const {
        require_in_domain(t);
        LinearForm f{Eigen::VectorXd(2 * dim_), gamma_(t)};
        for (int a = 0; a < 2 * dim_; ++a) f.alpha(a) = alpha_[a](t);
        return f;
    }

    LinearForm derivative_at(double t) const {
        require_in_domain(t);
        LinearForm f{Eigen::VectorXd(2 * dim_), gamma_.derivative(t)};
        for (int a = 0; a < 2 * dim_; ++a) f.alpha(a) = alpha_[a].derivative(t);
        return f;
    }

    void require_in_domain(double t) const {
        if (!domain_.contains(t)) throw DomainError("time " + std::to_string(t) + " outside domain of observable '" + label_ + "'");
    }

private:
    int dim_;
    std::vector<TimeScalar> alpha_;
    TimeScalar gamma_;
    std::string label_;
    Interval domain_;
};

/// H(t) = 1/2 z^T M(t) z + v(t)^T z + c(t), products of non-commuting factors read in
/// Weyl (symmetrized) order.
class QuadraticHamiltonian {
public:
    /// `m` holds the 2n x 2n entries in row-major order.
    QuadraticHamiltonian(int dim, std::vector<TimeScalar> m, std::vector<TimeScalar> v, TimeScalar c, std::string label = {})
        : dim_(dim), m_(std::move(m)), v_(std::move(v)), c_(std::move(c)), label_(std::move(label)) {
        const int n2 = 2 * dim_;
        if (dim_ <= 0) throw DimensionMismatch("hamiltonian dimension must be positive");
        if (static_cast<int>(m_.size()) != n2 * n2) throw DimensionMismatch("hamiltonian M must have (2n)^2 entries");
        if (static_cast<int>(v_.size()) != n2) throw DimensionMismatch("hamiltonian v must have 2n entries");
        domain_ = c_.domain();
        for (const auto& e : m_) domain_ = domain_.intersect(e.domain());
        for (const auto& e : v_) domain_ = domain_.intersect(e.domain());
        for (double t : {-1.3, 0.0, 0.7, 2.1}) {
            if (!domain_.contains(t)) continue;
            const Eigen::MatrixXd mt = matrix(t);
            if ((mt - mt.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, mt.cwiseAbs().maxCoeff()))
                throw Error("hamiltonian '" + label_ + "' has non-symmetric M at t=" + std::to_string(t));
        }
    }

    int dim() const noexcept { return dim_; }
    const std::string& label() const noexcept { return label_; }
    const Interval& domain() const noexcept { return domain_; }
    const TimeScalar& entry(int a, int b) const { return m_.at(static_cast<std::size_t>(a * 2 * dim_ + b)); }
    const std::vector<TimeScalar>& linear() const noexcept { return v_; }
    const TimeScalar& scalar() const noexcept { return c_; }

    Eigen::MatrixXd matrix(double t) const {
        const int n2 = 2 * dim_;
        Eigen::MatrixXd mt(n2, n2);
        for (int a = 0; a < n2; ++a)
            for (int b = 0; b < n2; ++b) mt(a, b) = m_[static_cast<std::size_t>(a * n2 + b)](t);
        return mt;
    }

    Eigen::VectorXd vector(double t) const {
        Eigen::VectorXd vt(2 * dim_);
        for (int a = 0; a < 2 * dim_; ++a) vt(a) = v_[a](t);
        return vt;
    }

    double scalar_at(double t) const { return c_(t); }

private:
    int dim_;
    std::vector<TimeScalar> m_;
    std::vector<TimeScalar> v_;
    TimeScalar c_;
    std::string label_;
    Interval domain_;
};

/// alpha_A^T J alpha_B, so that [A, B] = i hbar * (returned value).
inline double symplectic_product(const LinearObservable& a, const LinearObservable& b, double t) {
    if (a.dim() != b.dim()) throw DimensionMismatch("symplectic product of observables with different dimension");
    const Eigen::MatrixXd j = SymplecticForm::matrix(a.dim());
    return a.at(t).alpha.dot(j * b.at(t).alpha);
}

/// L with [A, H] = i hbar L. Coefficients (J M)^T alpha, scalar alpha^T J v.
inline LinearForm commutator_with_hamiltonian(const LinearForm& a, const Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
    if (a.alpha.size() != m.rows() || a.alpha.size() != v.size()) throw DimensionMismatch("commutator with hamiltonian of different dimension");
    const Eigen::MatrixXd j = SymplecticForm::matrix(a.dim());
    return {(j * m).transpose() * a.alpha, a.alpha.dot(j * v)};
}

inline LinearForm commutator_with_hamiltonian(const LinearObservable& a, const QuadraticHamiltonian& h, double t) {
    if (a.dim() != h.dim()) throw DimensionMismatch("observable '" + a.label() + "' and hamiltonian '" + h.label() + "' differ in dimension");
    return commutator_with_hamiltonian(a.at(t), h.matrix(t), h.vector(t));
}

/// dA/dt at t, analytic where the coefficients carry derivatives, otherwise Richardson
/// central differences.
inline LinearForm observable_time_derivative(const LinearObservable& a, double t) { return a.derivative_at(t); }

}  // namespace comgreen
