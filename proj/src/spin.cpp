#include "qfragile/spin.hpp"

#include <bit>
#include <cmath>

namespace qfragile {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

Spin Spin::from_twice(int twice) {
    if (twice < 0) {
        throw ValidationError("Spin: 2J must be a nonnegative integer");
    }
    return Spin(twice);
}

Spin Spin::from_double(double j) {
    const double t = 2.0 * j;
    const double r = std::round(t);
    if (!std::isfinite(j) || std::abs(t - r) > 1e-12 || r < 0.0) {
        throw ValidationError("Spin: J = " + std::to_string(j) + " is not a nonnegative half-integer");
    }
    return Spin(static_cast<int>(r));
}

int Spin::index_of(double m) const {
    const double k = value() - m;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-12 || r < 0.0 || r > twice_) {
        throw ValidationError("Spin: M = " + std::to_string(m) + " invalid for J = " + std::to_string(value()));
    }
    return static_cast<int>(r);
}

SpinOperators angular_momentum_operators(Spin j) {
    const int d = j.dim();
    const double jj = j.value() * (j.value() + 1.0);
    SpinOperators ops;
    ops.j = j;
    ops.jz = ComplexMatrix::Zero(d, d);
    ops.jplus = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        const double m = j.m_at(k);
        ops.jz(k, k) = m;
        if (k > 0) {
            ops.jplus(k - 1, k) = std::sqrt(jj - m * (m + 1.0));
        }
    }
    ops.jminus = ops.jplus.adjoint();
    ops.jx = 0.5 * (ops.jplus + ops.jminus);
    ops.jy = (ops.jplus - ops.jminus) / (2.0 * kI);
    return ops;
}

ComplexVector dicke_ket(Spin j, double m) {
    ComplexVector v = ComplexVector::Zero(j.dim());
    v(j.index_of(m)) = 1.0;
    return v;
}

YRotation::YRotation(Spin j) : j_(j) {
    const auto ops = angular_momentum_operators(j);
    const auto ed = hermitian_eigendecomposition(ops.jy);
    w_ = ed.eigenvalues;
    v_ = ed.eigenvectors;
}

ComplexMatrix YRotation::operator()(double beta) const {
    ComplexVector d(w_.size());
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
        d(i) = std::polar(1.0, -beta * w_(i));
    }
    return v_ * d.asDiagonal() * v_.adjoint();
}

ComplexMatrix rotation_y(Spin j, double beta) { return YRotation(j)(beta); }

ComplexMatrix rotation_z(Spin j, double phi) {
    ComplexMatrix r = ComplexMatrix::Zero(j.dim(), j.dim());
    for (int k = 0; k < j.dim(); ++k) {
        r(k, k) = std::polar(1.0, -phi * j.m_at(k));
    }
    return r;
}

double log_binomial(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

ComplexVector spin_coherent_amplitudes(Spin j, double theta, double phi) {
    const double jv = j.value();
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    ComplexVector g(j.dim());
    for (int k = 0; k < j.dim(); ++k) {
        const double m = j.m_at(k);
        const double mag = std::exp(0.5 * log_binomial(2.0 * jv, jv - m)) * std::pow(c, jv + m) * std::pow(s, jv - m);
        g(k) = mag * std::polar(1.0, -m * phi);
    }
    return g;
}

ComplexVector rotated_first_dicke_amplitudes(Spin j, double theta) {
    if (j.twice() < 1) {
        throw ValidationError("rotated_first_dicke_amplitudes: J must be at least 1/2");
    }
    const double jv = j.value();
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const double ct = std::cos(theta);
    ComplexVector h(j.dim());
    for (int k = 0; k < j.dim(); ++k) {
        const double m = j.m_at(k);
        const double pref = std::exp(0.5 * (std::lgamma(2.0 * jv) - std::lgamma(jv - m + 1.0) - std::lgamma(jv + m + 1.0)));
        double val;
        if (k == 0) {
            // (J cos(theta) - J) / sin(theta/2) = -2J sin(theta/2)
            val = pref * std::pow(c, 2.0 * jv - 1.0) * (-2.0 * jv * s);
        } else if (k == j.dim() - 1) {
            val = pref * std::pow(s, 2.0 * jv - 1.0) * (2.0 * jv * c);
        } else {
            val = pref * std::pow(c, jv + m - 1.0) * std::pow(s, jv - m - 1.0) * (jv * ct - m);
        }
        h(k) = val;
    }
    return h;
}

ComplexMatrix CollectiveBasis::unitary() const {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    ComplexMatrix u(d, d);
    Eigen::Index col = 0;
    for (const auto& b : blocks) {
        u.middleCols(col, b.vectors.cols()) = b.vectors;
        col += b.vectors.cols();
    }
    return u;
}

TotalSpinOperators total_spin_operators(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 12) {
        throw ValidationError("total_spin_operators: qubit count must be in [1, 12]");
    }
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    TotalSpinOperators ops;
    ops.n_qubits = n_qubits;
    ops.jz = ComplexMatrix::Zero(d, d);
    ops.jplus = ComplexMatrix::Zero(d, d);
    for (Eigen::Index x = 0; x < d; ++x) {
        const int downs = std::popcount(static_cast<unsigned long>(x));
        ops.jz(x, x) = 0.5 * (n_qubits - 2 * downs);
        for (int q = 0; q < n_qubits; ++q) {
            const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - q);
            if (x & bit) {
                ops.jplus(x ^ bit, x) += 1.0;
            }
        }
    }
    ops.jminus = ops.jplus.adjoint();
    ops.jx = 0.5 * (ops.jplus + ops.jminus);
    ops.jy = (ops.jplus - ops.jminus) / (2.0 * kI);
    return ops;
}

int collective_multiplicity(int n_qubits, Spin j) {
    const int twice_j = j.twice();
    if (twice_j > n_qubits || (n_qubits - twice_j) % 2 != 0) {
        return 0;
    }
    const int k = (n_qubits - twice_j) / 2;
    auto binom = [](int n, int r) -> long {
        if (r < 0 || r > n) {
            return 0;
        }
        long v = 1;
        for (int i = 1; i <= r; ++i) {
            v = v * (n - r + i) / i;
        }
        return v;
    };
    return static_cast<int>(binom(n_qubits, k) - binom(n_qubits, k - 1));
}

CollectiveBasis build_collective_basis(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 10) {
        throw ValidationError("build_collective_basis: N = " + std::to_string(n_qubits) +
                              " outside [1, 10] supported by dense diagonalization");
    }
    const auto ops = total_spin_operators(n_qubits);
    const Eigen::Index d = Eigen::Index{1} << n_qubits;

    CollectiveBasis basis;
    basis.n_qubits = n_qubits;
    for (int twice_j = n_qubits; twice_j >= 0; twice_j -= 2) {
        const Spin j = Spin::from_twice(twice_j);
        const int downs = (n_qubits - twice_j) / 2;
        std::vector<Eigen::Index> sector;
        for (Eigen::Index x = 0; x < d; ++x) {
            if (std::popcount(static_cast<unsigned long>(x)) == downs) {
                sector.push_back(x);
            }
        }
        const auto ns = static_cast<Eigen::Index>(sector.size());
        ComplexMatrix a(d, ns);
        for (Eigen::Index c = 0; c < ns; ++c) {
            a.col(c) = ops.jplus.col(sector[c]);
        }
        const ComplexMatrix gram = a.adjoint() * a;
        const auto ed = hermitian_eigendecomposition(hermitian_part(gram));
        Eigen::Index nk = 0;
        while (nk < ns && ed.eigenvalues(nk) < 1e-9) {
            ++nk;
        }
        const ComplexMatrix kernel = ed.eigenvectors.leftCols(nk);
        const ComplexMatrix proj = kernel * kernel.adjoint();

        std::vector<ComplexVector> highest;
        for (Eigen::Index c = 0; c < ns && static_cast<Eigen::Index>(highest.size()) < nk; ++c) {
            ComplexVector u = proj.col(c);
            for (const auto& h : highest) {
                u -= h.dot(u) * h;
            }
            const double nrm = u.norm();
            if (nrm > 1e-8) {
                highest.push_back(u / nrm);
            }
        }
        const int expected = collective_multiplicity(n_qubits, j);
        if (static_cast<int>(highest.size()) != expected || nk != expected) {
            throw NumericalError("spin-algebra", "build_collective_basis",
                                 "multiplicity mismatch for 2J = " + std::to_string(twice_j));
        }

        const double jv = j.value();
        for (int copy = 0; copy < expected; ++copy) {
            CollectiveBlock block;
            block.j = j;
            block.copy = copy;
            block.vectors = ComplexMatrix::Zero(d, j.dim());
            ComplexVector top = ComplexVector::Zero(d);
            for (Eigen::Index c = 0; c < ns; ++c) {
                top(sector[c]) = highest[copy](c);
            }
            block.vectors.col(0) = top;
            for (int k = 1; k < j.dim(); ++k) {
                const double m = jv - (k - 1);
                const double norm = std::sqrt(jv * (jv + 1.0) - m * (m - 1.0));
                block.vectors.col(k) = ops.jminus * block.vectors.col(k - 1) / norm;
            }
            basis.blocks.push_back(std::move(block));
        }
    }
    return basis;
}

}  // namespace qfragile
