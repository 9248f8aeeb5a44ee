#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <optional>
#include <vector>

namespace cavitywalk {

using Complex = std::complex<double>;

// Walk on a D-dimensional lattice realized with 2D cavities. A position is
// the vector of per-cavity traversal counts with cavity 0's count dropped
// (it equals step - sum of the others). For D=1 the key is the single index
// k = number of traversals of the longer cavity, 0 <= k <= step.
using PositionKey = std::vector<int>;

// Coin unitary acting on the cavity index.
struct CoinSpec {
    int dims = 1;                 // lattice dimension D
    Eigen::MatrixXcd matrix;      // 2D x 2D unitary
    std::optional<double> bias;   // coupler bias eta_c when built from one

    int n_cavities() const { return 2 * dims; }
};

// max |U^dag U - I|, the unitarity defect.
double unitarity_defect(const Eigen::MatrixXcd& m);

// Symmetric lattice label for D=1: position k of an N-step walk sits at
// x = 2k - N on the +-N axis.
constexpr int symmetric_label(int k, int step) { return 2 * k - step; }

// Coupler coin for D=1: U(eta) = [[sqrt(eta), i*sqrt(1-eta)],
//                                 [i*sqrt(1-eta), sqrt(eta)]].
// eta is the coupler reflectivity, i.e. the per-step probability of staying
// in the current cavity.
CoinSpec coin_from_bias(double eta);

// Explicit 2D x 2D coin; rejects matrices with unitarity defect > 1e-9.
CoinSpec multiport_coin(int dims, const Eigen::MatrixXcd& matrix);

// Canonical discrete-Fourier coin F_jk = exp(2*pi*i*j*k/2D)/sqrt(2D).
CoinSpec multiport_coin_fourier(int dims);

struct WalkDistribution {
    int step = 0;
    std::vector<PositionKey> positions;  // sorted lexicographically
    std::vector<double> probs;           // normalized to 1 within the step

    // Mean and standard deviation of the first position coordinate
    // (k for D=1).
    double mean() const;
    double stddev() const;
};

struct WalkState {
    int dims = 1;
    int step = 0;
    std::map<PositionKey, Eigen::VectorXcd> amplitudes;  // value length 2D
    double surviving_norm = 1.0;  // fraction of the launch energy still circulating

    static WalkState localized(int dims, int cavity = 0);

    double total_energy() const;
    // Per-step normalized distribution. For D=1 the position axis is dense
    // over k = 0..step; for D>1 only occupied positions are listed.
    WalkDistribution distribution() const;
};

// One walk step: coin at every occupied position, then the shift (the
// amplitude routed into cavity c increments that cavity's traversal count;
// cavity 0 leaves the position fixed), then per-cavity amplitude
// transmission when loss is given.
WalkState step(const WalkState& state, const CoinSpec& coin,
               const std::optional<std::vector<double>>& loss = std::nullopt);

// Distributions after steps 1..n_steps from the given initial state.
std::vector<WalkDistribution> evolve(const WalkState& initial, const CoinSpec& coin, int n_steps,
                                     const std::optional<std::vector<double>>& loss = std::nullopt);

// Bhattacharyya coefficient sum_i sqrt(p_i q_i); positions missing from one
// distribution count as probability zero.
double fidelity(const WalkDistribution& p, const WalkDistribution& q);

// Independent check of evolve: sums complex amplitudes over every cavity
// sequence of length n_steps (product of coin matrix elements), grouped by
// final traversal counts and final cavity. Exponential in n_steps; refuses
// n_steps > 12.
WalkDistribution brute_force_oracle(const WalkState& initial, const CoinSpec& coin, int n_steps);

// Incoherent reference walk: the coin's squared magnitudes used as a
// stochastic matrix over (position, cavity). Spreads diffusively, unlike
// the coherent walk.
std::vector<WalkDistribution> classical_walk(const WalkState& initial, const CoinSpec& coin,
                                             int n_steps);

}  // namespace cavitywalk
