#include "qfragile/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "qfragile/parallel.hpp"

namespace qfragile {

namespace {

class SpinTables {
public:
    const SpinOperators& ops(Spin j) {
        auto it = ops_.find(j.twice());
        if (it == ops_.end()) {
            it = ops_.emplace(j.twice(), angular_momentum_operators(j)).first;
        }
        return it->second;
    }
    const YRotation& rot(Spin j) {
        auto it = rot_.find(j.twice());
        if (it == rot_.end()) {
            it = rot_.emplace(j.twice(), YRotation(j)).first;
        }
        return it->second;
    }

private:
    std::map<int, SpinOperators> ops_;
    std::map<int, YRotation> rot_;
};

// Built once per sweep and then shared read-only.
struct BlockTables {
    std::map<int, SpinOperators> ops;
    std::map<int, YRotation> rot;
    std::map<int, std::vector<ComplexVector>> candidates;
    std::map<int, std::shared_ptr<Povm>> povm;

    explicit BlockTables(const BlockOperator& b) {
        for (const auto& blk : b.blocks) {
            const int t = blk.j.twice();
            if (ops.count(t)) {
                continue;
            }
            ops.emplace(t, angular_momentum_operators(blk.j));
            rot.emplace(t, YRotation(blk.j));
            povm.emplace(t, std::make_shared<Povm>(Povm::computational(blk.j.dim())));
            std::vector<ComplexVector> c;
            if (blk.j.twice() >= 2) {
                c = first_dicke_fragile_candidates(blk.j);
                check_fragile_candidates(c, *povm.at(t));
            }
            candidates.emplace(t, std::move(c));
        }
    }
};

}  // namespace

std::vector<ComplexVector> first_dicke_fragile_candidates(Spin j) {
    const YRotation rot(j);
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    std::vector<ComplexVector> out;
    for (int k = 1; k < j.dim() - 1; ++k) {
        const double beta = std::acos(j.m_at(k) / j.value());
        for (double s : {1.0, -1.0}) {
            out.push_back(rot(s * beta) * psi);
        }
    }
    return out;
}

std::vector<JensenRow> collective_jensen_sweep(Spin j, double gamma_t, const std::vector<double>& betas, int threads) {
    const auto ops = angular_momentum_operators(j);
    const YRotation rot(j);
    const Povm povm = Povm::computational(j.dim());
    const auto candidates = first_dicke_fragile_candidates(j);
    check_fragile_candidates(candidates, povm);
    const DensityOperator noisy =
        apply_collective_depolarizing(DensityOperator::pure(dicke_ket(j, j.value() - 1.0)), j, gamma_t);
    std::vector<JensenRow> rows(betas.size());
    parallel_for(betas.size(), threads, [&](std::size_t i) {
        const ComplexMatrix u = rot(betas[i]);
        const ComplexMatrix rho_b = hermitian_part(u.adjoint() * noisy.matrix() * u);
        auto dec = greedy_extract(rho_b, candidates);
        const double bound = jensen_bound(dec, ops.jy, povm);
        rows[i] = {betas[i], cfi_matrix(rho_b, ops.jy, povm), bound, dec.fragile_trace, dec.residual_trace};
    });
    return rows;
}

double BlockOperator::trace() const {
    double t = 0.0;
    for (const auto& b : blocks) {
        t += b.m.trace().real();
    }
    return t;
}

ComplexMatrix BlockOperator::dense() const {
    Eigen::Index d = 0;
    for (const auto& b : blocks) {
        d += b.m.rows();
    }
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        out.block(off, off, b.m.rows(), b.m.cols()) = b.m;
        off += b.m.rows();
    }
    return out;
}

BlockOperator to_block_form(const ComplexMatrix& rho, const CollectiveBasis& basis, double tol) {
    const ComplexMatrix w = basis.unitary();
    if (rho.rows() != w.rows()) {
        throw ValidationError("to_block_form: dimension mismatch");
    }
    const ComplexMatrix c = w.adjoint() * rho * w;
    BlockOperator out;
    out.n_qubits = basis.n_qubits;
    ComplexMatrix off = c;
    Eigen::Index pos = 0;
    for (const auto& b : basis.blocks) {
        const Eigen::Index n = b.vectors.cols();
        out.blocks.push_back({b.j, b.copy, hermitian_part(c.block(pos, pos, n, n))});
        off.block(pos, pos, n, n).setZero();
        pos += n;
    }
    const double leak = max_abs(off);
    if (leak > tol) {
        throw NumericalError("fragility-analysis", "to_block_form",
                             "state is not block diagonal in the collective basis (leak " + std::to_string(leak) + ")");
    }
    return out;
}

OutcomeData block_outcome_data(const BlockOperator& rho) {
    const int n = rho.n_qubits;
    OutcomeData out;
    out.p.assign(static_cast<std::size_t>(n + 1), 0.0);
    out.dp.assign(static_cast<std::size_t>(n + 1), 0.0);
    SpinTables tables;
    for (const auto& b : rho.blocks) {
        const auto& h = tables.ops(b.j).jy;
        const int shift = (n - b.j.twice()) / 2;
        for (Eigen::Index k = 0; k < b.m.rows(); ++k) {
            const auto idx = static_cast<std::size_t>(shift + k);
            out.p[idx] += b.m(k, k).real();
            out.dp[idx] += 2.0 * h.row(k).transpose().cwiseProduct(b.m.col(k)).sum().imag();
        }
    }
    return out;
}

double block_cfi(const BlockOperator& rho) {
    const auto d = block_outcome_data(rho);
    return fisher_sum(d.p, d.dp);
}

LocalNoiseSetup local_noise_setup(int n_qubits, double gamma_t) {
    if (n_qubits < 2) {
        throw ValidationError("local_noise_setup: need at least 2 qubits");
    }
    LocalNoiseSetup s;
    s.basis = build_collective_basis(n_qubits);
    const ComplexVector psi = s.basis.blocks.front().vectors.col(1);
    const ComplexMatrix rho = local_depolarizing_matrix(projector(psi), n_qubits, gamma_t);
    s.noisy = to_block_form(rho, s.basis);
    SpinTables tables;
    for (const auto& b : s.noisy.blocks) {
        s.qfi += qfi_matrix(b.m, tables.ops(b.j).jy);
    }
    return s;
}

BlockOperator rotate_blocks(const BlockOperator& rho, double beta) {
    SpinTables tables;
    BlockOperator out = rho;
    for (auto& b : out.blocks) {
        const ComplexMatrix u = tables.rot(b.j)(beta);
        b.m = hermitian_part(u.adjoint() * b.m * u);
    }
    return out;
}

FisherSweep local_noise_sweep(const LocalNoiseSetup& setup, const std::vector<double>& betas, int threads) {
    FisherSweep sweep;
    sweep.beta = betas;
    sweep.cfi.assign(betas.size(), 0.0);
    sweep.qfi = setup.qfi;
    sweep.noise = "local-depolarizing";
    sweep.probe = "first-dicke N=" + std::to_string(setup.basis.n_qubits);
    parallel_for(betas.size(), threads,
                 [&](std::size_t i) { sweep.cfi[i] = block_cfi(rotate_blocks(setup.noisy, betas[i])); });
    return sweep;
}

std::vector<JensenRow> local_jensen_sweep(const LocalNoiseSetup& setup, const std::vector<double>& betas, int threads) {
    const BlockTables tables(setup.noisy);
    std::vector<JensenRow> rows(betas.size());
    parallel_for(betas.size(), threads, [&](std::size_t i) {
        BlockOperator rotated = setup.noisy;
        for (auto& b : rotated.blocks) {
            const ComplexMatrix u = tables.rot.at(b.j.twice())(betas[i]);
            b.m = hermitian_part(u.adjoint() * b.m * u);
        }
        BlockOperator residual = rotated;
        double fragile = 0.0;
        double member_bound = 0.0;
        for (auto& b : residual.blocks) {
            const int t = b.j.twice();
            const auto& cands = tables.candidates.at(t);
            if (cands.empty()) {
                continue;
            }
            const auto dec = greedy_extract(b.m, cands);
            for (const auto& m : dec.members) {
                member_bound += m.weight * cfi_matrix(projector(m.state), tables.ops.at(t).jy, *tables.povm.at(t));
            }
            fragile += dec.fragile_trace;
            b.m = dec.residual;
        }
        rows[i] = {betas[i], block_cfi(rotated), member_bound + block_cfi(residual), fragile, residual.trace()};
    });
    return rows;
}

std::vector<SphereRow> sphere_scan(Spin j, SphereProbe probe, double epsilon, const std::vector<double>& thetas,
                                   const std::vector<double>& phis, int threads) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ValidationError("sphere_scan: epsilon must lie in [0, 1]");
    }
    const auto ops = angular_momentum_operators(j);
    const YRotation rot(j);
    const Povm povm = Povm::computational(j.dim());
    const ComplexVector psi0 =
        probe == SphereProbe::first_dicke ? dicke_ket(j, j.value() - 1.0) : dicke_ket(j, j.value());
    const ComplexMatrix mixed = ComplexMatrix::Identity(j.dim(), j.dim()) / static_cast<double>(j.dim());
    std::vector<SphereRow> rows(thetas.size() * phis.size());
    parallel_for(rows.size(), threads, [&](std::size_t idx) {
        const double th = thetas[idx / phis.size()];
        const double ph = phis[idx % phis.size()];
        const ComplexMatrix rz = rotation_z(j, ph);
        const ComplexVector psi = rz * (rot(th) * psi0);
        const ComplexMatrix rho = (1.0 - epsilon) * projector(psi) + epsilon * mixed;
        const ComplexMatrix g = rz * ops.jy * rz.adjoint();
        rows[idx] = {th, ph, cfi_matrix(rho, g, povm), epsilon};
    });
    return rows;
}

LossCheck approximate_loss_check(Spin j, double m, double gamma_dt) {
    const auto ops = angular_momentum_operators(j);
    const double beta = std::acos(m / j.value());
    const ComplexMatrix u = rotation_y(j, beta);
    const Povm povm = Povm::computational(j.dim());
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    const ComplexMatrix pure = projector(psi);
    const ComplexVector psi_b = u.adjoint() * psi;

    const auto pd = outcome_data(projector(psi_b), ops.jy, povm);
    std::vector<double> table(pd.p.size());
    double before = 0.0;
    for (std::size_t l = 0; l < pd.p.size(); ++l) {
        if (pd.p[l] > kSupportThreshold) {
            table[l] = pd.dp[l] * pd.dp[l] / pd.p[l];
        } else {
            table[l] = jump_size_pure(psi_b, ops.jy, {povm[l]});
        }
        before += table[l];
    }

    const auto jumps = collective_depolarizing_jumps(j);
    const ComplexMatrix direction = u.adjoint() * lindblad_generator_apply(jumps, pure) * u;
    std::vector<double> sigma(pd.p.size());
    for (std::size_t l = 0; l < sigma.size(); ++l) {
        sigma[l] = direction(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)).real();
    }

    const DensityOperator noisy = apply_collective_depolarizing(DensityOperator(pure), j, gamma_dt);
    const double after = cfi_matrix(u.adjoint() * noisy.matrix() * u, ops.jy, povm);

    LossCheck out;
    out.before = before;
    out.after = after;
    out.exact_loss = before - after;
    out.approx_loss = approximate_loss(pd.p, sigma, gamma_dt, table);
    return out;
}

double well_half_width(Spin j, double m, double gamma_dt) {
    const auto ops = angular_momentum_operators(j);
    const YRotation rot(j);
    const double beta_m = std::acos(m / j.value());
    const auto idx = static_cast<Eigen::Index>(j.index_of(m));
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    const ComplexVector hpsi = ops.jy * psi;
    const ComplexMatrix pure = projector(psi);
    const ComplexMatrix noisy = apply_collective_depolarizing(DensityOperator(pure), j, gamma_dt).matrix();
    const double jump = discontinuity_size(j, m);

    auto pure_term = [&](double beta) {
        const ComplexMatrix u = rot(beta);
        const Complex a = u.col(idx).dot(psi);
        const Complex b = u.col(idx).dot(hpsi);
        const double p = std::norm(a);
        const double dp = 2.0 * std::imag(std::conj(a) * b);
        return p > kPureSupportThreshold ? dp * dp / p : 0.0;
    };

    auto term = [&](const ComplexMatrix& rho, double beta) {
        const ComplexMatrix u = rot(beta);
        const ComplexMatrix r = u.adjoint() * rho * u;
        const double p = r(idx, idx).real();
        const double dp = 2.0 * ops.jy.row(idx).transpose().cwiseProduct(r.col(idx)).sum().imag();
        return p > kSupportThreshold ? dp * dp / p : 0.0;
    };
    auto excess = [&](double delta) {
        double s = 0.0;
        for (double sign : {1.0, -1.0}) {
            const double b = beta_m + sign * delta;
            s += pure_term(b) - term(noisy, b);
        }
        return 0.5 * s - 0.5 * jump;
    };

    double lo = 1e-7;
    double hi = 0.05;
    if (!(excess(lo) > 0.0) || !(excess(hi) < 0.0)) {
        throw NumericalError("fragility-analysis", "well_half_width", "half-depth crossing not bracketed");
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (excess(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

double qubit_closed_form(double delta, double p) {
    const double a = (1.0 - p) * (1.0 - p);
    const double s = std::sin(delta);
    const double c = std::cos(delta);
    const double den = 1.0 - a * c * c;
    if (den <= 0.0) {
        return 0.0;
    }
    return a * s * s / den;
}

std::vector<QubitRow> qubit_demo(const std::vector<double>& betas, const std::vector<double>& ps, double theta) {
    ComplexVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    ComplexMatrix sz(2, 2);
    sz << 0.5, 0.0, 0.0, -0.5;
    std::vector<QubitRow> rows;
    for (double p : ps) {
        const EncodedModel em(identity_mix(DensityOperator::pure(plus), p), sz, theta);
        for (double beta : betas) {
            ComplexMatrix basis(2, 2);
            const Complex ph = std::polar(1.0, beta);
            basis << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), ph / std::sqrt(2.0), -ph / std::sqrt(2.0);
            rows.push_back({beta, p, cfi_state_povm(em, Povm::projective(basis)), qubit_closed_form(beta - theta, p)});
        }
    }
    return rows;
}

std::vector<EchoRow> echo_demo(Spin j, double design_theta, const std::vector<double>& epsilons,
                               const std::vector<double>& thetas) {
    const auto ops = angular_momentum_operators(j);
    const ComplexVector psi = dicke_ket(j, j.value() - 1.0);
    const auto echo = loschmidt_echo_povm(psi, ops.jy, design_theta);
    const auto ed = hermitian_eigendecomposition(ops.jy);
    std::vector<EchoRow> rows;
    for (double eps : epsilons) {
        const DensityOperator rho = identity_mix(DensityOperator::pure(psi), eps);
        const double q = qfi_matrix(rho.matrix(), ops.jy);
        for (double th : thetas) {
            ComplexVector d(ed.eigenvalues.size());
            for (Eigen::Index k = 0; k < d.size(); ++k) {
                d(k) = std::polar(1.0, -th * ed.eigenvalues(k));
            }
            const ComplexMatrix u = ed.eigenvectors * d.asDiagonal() * ed.eigenvectors.adjoint();
            rows.push_back({th, cfi_matrix(u * rho.matrix() * u.adjoint(), ops.jy, echo.povm), q, eps});
        }
    }
    return rows;
}

}  // namespace qfragile
