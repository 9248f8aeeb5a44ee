#include "cavitywalk/walk.hpp"

#include "cavitywalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cavitywalk {

namespace {

void check_loss(const std::optional<std::vector<double>>& loss, int n_cavities) {
    if (!loss) return;
    if (static_cast<int>(loss->size()) != n_cavities) {
        throw validation_error("loss vector has " + std::to_string(loss->size()) +
                               " entries, expected one per cavity (" + std::to_string(n_cavities) +
                               ")");
    }
    for (double t : *loss) {
        if (!(t > 0.0) || t > 1.0) {
            throw validation_error("per-cavity amplitude transmission must lie in (0,1]");
        }
    }
}

}  // namespace

double unitarity_defect(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXcd gram = m.adjoint() * m;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return (gram - id).cwiseAbs().maxCoeff();
}

CoinSpec coin_from_bias(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw validation_error("coin bias eta must lie in [0,1], got " + std::to_string(eta));
    }
    const double stay = std::sqrt(eta);
    const Complex cross(0.0, std::sqrt(1.0 - eta));
    Eigen::MatrixXcd u(2, 2);
    u << stay, cross, cross, stay;
    return CoinSpec{1, u, eta};
}

CoinSpec multiport_coin(int dims, const Eigen::MatrixXcd& matrix) {
    if (dims < 1) throw validation_error("lattice dimension must be >= 1");
    const int n = 2 * dims;
    if (matrix.rows() != n || matrix.cols() != n) {
        throw validation_error("coin matrix must be " + std::to_string(n) + "x" +
                               std::to_string(n) + " for dims=" + std::to_string(dims));
    }
    const double defect = unitarity_defect(matrix);
    if (defect > 1e-9) {
        std::ostringstream msg;
        msg << "coin matrix is not unitary (defect " << defect << " > 1e-9)";
        throw validation_error(msg.str());
    }
    return CoinSpec{dims, matrix, std::nullopt};
}

CoinSpec multiport_coin_fourier(int dims) {
    if (dims < 1) throw validation_error("lattice dimension must be >= 1");
    const int n = 2 * dims;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd u(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double phase = 2.0 * std::numbers::pi * j * k / n;
            u(j, k) = norm * Complex(std::cos(phase), std::sin(phase));
        }
    }
    return CoinSpec{dims, u, std::nullopt};
}

double WalkDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        m += probs[i] * (positions[i].empty() ? 0.0 : positions[i][0]);
    }
    return m;
}

double WalkDistribution::stddev() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double x = positions[i].empty() ? 0.0 : positions[i][0];
        v += probs[i] * (x - m) * (x - m);
    }
    return std::sqrt(std::max(0.0, v));
}

WalkState WalkState::localized(int dims, int cavity) {
    if (dims < 1) throw validation_error("lattice dimension must be >= 1");
    const int n = 2 * dims;
    if (cavity < 0 || cavity >= n) {
        throw validation_error("initial cavity index out of range");
    }
    WalkState state;
    state.dims = dims;
    state.step = 0;
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(n);
    amp[cavity] = 1.0;
    state.amplitudes.emplace(PositionKey(n - 1, 0), std::move(amp));
    state.surviving_norm = 1.0;
    return state;
}

double WalkState::total_energy() const {
    double e = 0.0;
    for (const auto& [pos, amps] : amplitudes) e += amps.squaredNorm();
    return e;
}

WalkDistribution WalkState::distribution() const {
    const double total = total_energy();
    if (!(total > 0.0)) {
        throw validation_error("walk state carries no energy, cannot normalize");
    }
    WalkDistribution dist;
    dist.step = step;
    if (dims == 1) {
        dist.positions.reserve(step + 1);
        dist.probs.assign(step + 1, 0.0);
        for (int k = 0; k <= step; ++k) dist.positions.push_back(PositionKey{k});
        for (const auto& [pos, amps] : amplitudes) {
            dist.probs[pos[0]] = amps.squaredNorm() / total;
        }
    } else {
        for (const auto& [pos, amps] : amplitudes) {
            dist.positions.push_back(pos);
            dist.probs.push_back(amps.squaredNorm() / total);
        }
    }
    return dist;
}

WalkState step(const WalkState& state, const CoinSpec& coin,
               const std::optional<std::vector<double>>& loss) {
    if (coin.dims != state.dims) {
        throw validation_error("coin dims (" + std::to_string(coin.dims) +
                               ") does not match walk state dims (" + std::to_string(state.dims) +
                               ")");
    }
    const int n = coin.n_cavities();
    check_loss(loss, n);

    WalkState out;
    out.dims = state.dims;
    out.step = state.step + 1;
    for (const auto& [pos, amps] : state.amplitudes) {
        const Eigen::VectorXcd mixed = coin.matrix * amps;
        for (int c = 0; c < n; ++c) {
            Complex a = mixed[c];
            if (a == Complex(0.0, 0.0)) continue;
            if (loss) a *= (*loss)[c];
            PositionKey dest = pos;
            if (c > 0) dest[c - 1] += 1;
            auto [it, inserted] = out.amplitudes.try_emplace(dest, Eigen::VectorXcd());
            if (inserted) it->second = Eigen::VectorXcd::Zero(n);
            it->second[c] += a;
        }
    }
    out.surviving_norm = out.total_energy();
    return out;
}

std::vector<WalkDistribution> evolve(const WalkState& initial, const CoinSpec& coin, int n_steps,
                                     const std::optional<std::vector<double>>& loss) {
    if (n_steps < 1) throw validation_error("evolve needs at least one step");
    std::vector<WalkDistribution> out;
    out.reserve(n_steps);
    WalkState state = initial;
    for (int i = 0; i < n_steps; ++i) {
        state = step(state, coin, loss);
        out.push_back(state.distribution());
    }
    return out;
}

double fidelity(const WalkDistribution& p, const WalkDistribution& q) {
    std::map<PositionKey, double> qmap;
    for (std::size_t i = 0; i < q.positions.size(); ++i) {
        if (q.probs[i] < 0.0) throw validation_error("negative probability in distribution");
        qmap.emplace(q.positions[i], q.probs[i]);
    }
    double f = 0.0;
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
        if (p.probs[i] < 0.0) throw validation_error("negative probability in distribution");
        auto it = qmap.find(p.positions[i]);
        if (it != qmap.end()) f += std::sqrt(p.probs[i] * it->second);
    }
    return f;
}

namespace {

// Path sums accumulate into a dense array indexed by (counts, final cavity)
// in mixed radix, which keeps the exponential enumeration cheap per leaf.
struct OracleAccumulator {
    int n_cavities;
    int radix;  // counts per coordinate: max step + 1
    std::vector<Complex> sums;

    std::size_t index(const PositionKey& counts, int cavity) const {
        std::size_t idx = 0;
        for (int v : counts) idx = idx * radix + static_cast<std::size_t>(v);
        return idx * n_cavities + static_cast<std::size_t>(cavity);
    }
};

void enumerate_paths(const Eigen::MatrixXcd& u, int depth, int n_steps, int prev_cavity,
                     Complex amp, PositionKey& counts, OracleAccumulator& acc) {
    if (depth == n_steps) {
        acc.sums[acc.index(counts, prev_cavity)] += amp;
        return;
    }
    for (int c = 0; c < acc.n_cavities; ++c) {
        const Complex next = amp * u(c, prev_cavity);
        if (next == Complex(0.0, 0.0)) continue;
        if (c > 0) ++counts[c - 1];
        enumerate_paths(u, depth + 1, n_steps, c, next, counts, acc);
        if (c > 0) --counts[c - 1];
    }
}

}  // namespace

WalkDistribution brute_force_oracle(const WalkState& initial, const CoinSpec& coin, int n_steps) {
    if (coin.dims != initial.dims) throw validation_error("coin dims mismatch");
    if (n_steps < 1) throw validation_error("oracle needs at least one step");
    if (n_steps > 12) {
        throw validation_error("path enumeration refused for n_steps > 12 (" +
                               std::to_string(n_steps) + " requested)");
    }
    const int n = coin.n_cavities();

    OracleAccumulator acc;
    acc.n_cavities = n;
    acc.radix = initial.step + n_steps + 1;
    std::size_t size = static_cast<std::size_t>(n);
    for (int c = 0; c < n - 1; ++c) size *= static_cast<std::size_t>(acc.radix);
    if (size > (std::size_t{1} << 26)) {
        throw validation_error("oracle position space too large to enumerate");
    }
    acc.sums.assign(size, Complex(0.0, 0.0));

    for (const auto& [pos, amps] : initial.amplitudes) {
        for (int s = 0; s < n; ++s) {
            if (amps[s] == Complex(0.0, 0.0)) continue;
            PositionKey counts = pos;
            enumerate_paths(coin.matrix, 0, n_steps, s, amps[s], counts, acc);
        }
    }

    std::map<PositionKey, double> energy;
    double total = 0.0;
    {
        PositionKey counts(n - 1, 0);
        for (std::size_t i = 0; i < acc.sums.size(); ++i) {
            const double e = std::norm(acc.sums[i]);
            if (e > 0.0) {
                std::size_t rest = i / static_cast<std::size_t>(n);
                for (int c = n - 2; c >= 0; --c) {
                    counts[c] = static_cast<int>(rest % acc.radix);
                    rest /= acc.radix;
                }
                energy[counts] += e;
                total += e;
            }
        }
    }
    if (!(total > 0.0)) throw validation_error("oracle state carries no energy");

    WalkDistribution dist;
    dist.step = initial.step + n_steps;
    if (initial.dims == 1) {
        dist.probs.assign(dist.step + 1, 0.0);
        for (int k = 0; k <= dist.step; ++k) dist.positions.push_back(PositionKey{k});
        for (const auto& [pos, e] : energy) dist.probs[pos[0]] = e / total;
    } else {
        for (const auto& [pos, e] : energy) {
            dist.positions.push_back(pos);
            dist.probs.push_back(e / total);
        }
    }
    return dist;
}

std::vector<WalkDistribution> classical_walk(const WalkState& initial, const CoinSpec& coin,
                                             int n_steps) {
    if (coin.dims != initial.dims) throw validation_error("coin dims mismatch");
    if (n_steps < 1) throw validation_error("classical walk needs at least one step");
    const int n = coin.n_cavities();
    const Eigen::MatrixXd transition = coin.matrix.cwiseAbs2();

    std::map<PositionKey, Eigen::VectorXd> occ;
    for (const auto& [pos, amps] : initial.amplitudes) {
        occ[pos] = amps.cwiseAbs2();
    }

    std::vector<WalkDistribution> out;
    out.reserve(n_steps);
    for (int s = 1; s <= n_steps; ++s) {
        std::map<PositionKey, Eigen::VectorXd> next;
        for (const auto& [pos, probs] : occ) {
            const Eigen::VectorXd mixed = transition * probs;
            for (int c = 0; c < n; ++c) {
                if (mixed[c] == 0.0) continue;
                PositionKey dest = pos;
                if (c > 0) ++dest[c - 1];
                auto [it, inserted] = next.try_emplace(dest, Eigen::VectorXd());
                if (inserted) it->second = Eigen::VectorXd::Zero(n);
                it->second[c] += mixed[c];
            }
        }
        occ = std::move(next);

        WalkDistribution dist;
        dist.step = initial.step + s;
        double total = 0.0;
        for (const auto& [pos, probs] : occ) total += probs.sum();
        if (initial.dims == 1) {
            dist.probs.assign(dist.step + 1, 0.0);
            for (int k = 0; k <= dist.step; ++k) dist.positions.push_back(PositionKey{k});
            for (const auto& [pos, probs] : occ) dist.probs[pos[0]] = probs.sum() / total;
        } else {
            for (const auto& [pos, probs] : occ) {
                dist.positions.push_back(pos);
                dist.probs.push_back(probs.sum() / total);
            }
        }
        out.push_back(std::move(dist));
    }
    return out;
}

}  // namespace cavitywalk
