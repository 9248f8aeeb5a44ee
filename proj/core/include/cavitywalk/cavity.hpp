#pragma once

#include "cavitywalk/walk.hpp"

#include <optional>
#include <vector>

namespace cavitywalk {

struct CavitySpec {
    double round_trip_time_ns = 0.0;
    double excess_loss_db = 0.0;                // per round trip, beyond coupler taps
    std::optional<Eigen::Matrix2cd> jones;      // polarization rotation per round trip
};

// The two-cavity network (2D cavities for a D-dimensional walk). Cavity 0
// holds the input coupler S1 and is where the pulse is launched; the output
// tap S2 sits in `output_cavity`. The inter-cavity coupler Sc applies the
// coin and is crossed once per round trip by every cavity.
struct NetworkConfig {
    int dims = 1;
    std::vector<CavitySpec> cavities;           // size 2D, distinct round-trip times
    CoinSpec coin;
    double input_coupler_reflectivity = 0.99;   // S1
    double output_coupler_reflectivity = 0.99;  // S2
    double coupler_excess_s1_db = 0.0;          // per pass
    double coupler_excess_s2_db = 0.0;
    double coupler_excess_sc_db = 0.0;
    double pulse_duration_ns = 2.5;
    double trial_period_ns = 33000.0;
    int output_cavity = 1;
    double detection_path_offset_ns = 0.0;

    void validate() const;
    int n_cavities() const { return 2 * dims; }
    // Time-bin spacing T_out - T_0 (8 ns for the reference network).
    double tau_ns() const;
};

// Nominal detection time of the pulse at (step, position):
// offset + sum_c n_c * T_c where n_c are the per-cavity traversal counts
// (n_0 = step - sum of the stored counts). For D=1 this is
// offset + N*T1 + k*tau.
double bin_time(const NetworkConfig& cfg, int step, const PositionKey& position);
double bin_time(const NetworkConfig& cfg, int step, int k);  // D=1 convenience

struct StepLimits {
    int repetition_limit = 0;  // trial period cuts detection off after this step
    int overlap_limit = 0;     // consecutive step clusters overlap beyond this step
    int limit() const { return std::min(repetition_limit, overlap_limit); }
};

StepLimits max_observable_steps(const NetworkConfig& cfg);

// Amplitude transmission for one round trip with the given excess loss and,
// when present, a tap coupler reflectivity. The energy factor is the square.
double round_trip_transmission(double excess_loss_db,
                               std::optional<double> tap_reflectivity = std::nullopt);

// Effective per-cavity amplitude transmissions for the network, folding the
// coupler excess losses into the loops they sit in (Sc into every loop, S1
// into cavity 0, S2 into the output cavity) along with the S1/S2 tap
// reflectivities.
std::vector<double> cavity_transmissions(const NetworkConfig& cfg);

struct PulseEntry {
    int step = 0;
    PositionKey position;   // k = position[0] for D=1
    double mu = 0.0;        // mean photons incident on the detector per trial
    double time_ns = 0.0;   // nominal detection time within the trial
};

struct PulseTable {
    std::vector<PulseEntry> entries;  // ordered by time_ns
    double trial_period_ns = 0.0;
    double total_mu = 0.0;
};

// Runs the lossy walk and emits, at every step up to n_max, the fraction
// (1 - R_out) of the energy in each time bin as the mean photon number seen
// by the detector at that bin's nominal time. input_energy is the mean
// photon number of the launched pulse and must keep the table total below
// one photon per trial.
PulseTable tapped_pulse_table(const NetworkConfig& cfg, int n_max, double input_energy);

// Axis-angle polarization rotation: cos(theta/2) I - i sin(theta/2) sigma_axis
// with axis 0,1,2 = x,y,z.
Eigen::Matrix2cd jones_rotation(double theta_rad, int axis);

struct PolarizationWalkResult {
    std::vector<WalkDistribution> distributions;   // steps 1..n
    std::vector<double> fidelity_to_scalar;        // vs the scalar walk, per step
    double commutator_defect = 0.0;                // max over cavity pairs of max|[J_i,J_j]|
};

// Joint coin (x) polarization evolution: each traversal of cavity c applies
// that cavity's Jones rotation to the polarization factor. Positions are
// reported after tracing out polarization and cavity. The commutator defect
// quantifies how far the cavity rotations are from the commuting ideal.
PolarizationWalkResult polarization_walk(const NetworkConfig& cfg, int n_steps);

}  // namespace cavitywalk
