#pragma once

#include <vector>

#include "qfragile/linalg.hpp"

namespace qfragile {

// Half-integer stored as twice its value.
class Spin {
public:
    constexpr Spin() = default;
    static Spin from_twice(int twice);
    static Spin from_double(double j);

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr int dim() const { return twice_ + 1; }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }

    // Index of M in the M-descending basis.
    int index_of(double m) const;
    double m_at(int index) const { return value() - index; }

    friend constexpr bool operator==(Spin a, Spin b) { return a.twice_ == b.twice_; }

private:
    constexpr explicit Spin(int twice) : twice_(twice) {}
    int twice_ = 0;
};

struct SpinOperators {
    Spin j;
    ComplexMatrix jx, jy, jz, jplus, jminus;
};

SpinOperators angular_momentum_operators(Spin j);

ComplexVector dicke_ket(Spin j, double m);

ComplexMatrix rotation_y(Spin j, double beta);
ComplexMatrix rotation_z(Spin j, double phi);

// Reusable exp(-i beta J_y) from one cached eigendecomposition of J_y.
class YRotation {
public:
    explicit YRotation(Spin j);
    ComplexMatrix operator()(double beta) const;
    Spin spin() const { return j_; }

private:
    Spin j_;
    RealVector w_;
    ComplexMatrix v_;
};

ComplexVector spin_coherent_amplitudes(Spin j, double theta, double phi);
ComplexVector rotated_first_dicke_amplitudes(Spin j, double theta);

double log_binomial(double n, double k);

struct CollectiveBlock {
    Spin j;
    int copy = 0;
    ComplexMatrix vectors;  // 2^N x (2J+1), columns ordered M = J .. -J
};

struct CollectiveBasis {
    int n_qubits = 0;
    std::vector<CollectiveBlock> blocks;

    // Columns are the concatenated block vectors.
    ComplexMatrix unitary() const;
};

struct TotalSpinOperators {
    int n_qubits = 0;
    ComplexMatrix jx, jy, jz, jplus, jminus;
};

// Qubit 0 is the most significant bit of the product-basis index and |0> is spin up.
TotalSpinOperators total_spin_operators(int n_qubits);

int collective_multiplicity(int n_qubits, Spin j);

CollectiveBasis build_collective_basis(int n_qubits);

}  // namespace qfragile
