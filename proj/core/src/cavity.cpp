#include "cavitywalk/cavity.hpp"

#include "cavitywalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cavitywalk {

void NetworkConfig::validate() const {
    if (dims < 1) throw validation_error("network dims must be >= 1");
    if (static_cast<int>(cavities.size()) != 2 * dims) {
        throw validation_error("network needs " + std::to_string(2 * dims) + " cavities, got " +
                               std::to_string(cavities.size()));
    }
    for (std::size_t i = 0; i < cavities.size(); ++i) {
        const auto& cav = cavities[i];
        if (!(cav.round_trip_time_ns > 0.0)) {
            throw validation_error("cavity " + std::to_string(i) + " round-trip time must be > 0");
        }
        if (cav.excess_loss_db < 0.0) {
            throw validation_error("cavity " + std::to_string(i) + " excess loss must be >= 0 dB");
        }
        if (cav.jones && unitarity_defect(*cav.jones) > 1e-12) {
            throw validation_error("cavity " + std::to_string(i) +
                                   " Jones matrix is not unitary within 1e-12");
        }
    }
    for (std::size_t i = 0; i < cavities.size(); ++i) {
        for (std::size_t j = i + 1; j < cavities.size(); ++j) {
            const double gap =
                std::abs(cavities[i].round_trip_time_ns - cavities[j].round_trip_time_ns);
            if (gap <= pulse_duration_ns) {
                std::ostringstream msg;
                msg << "round-trip time difference between cavities " << i << " and " << j << " ("
                    << gap << " ns) must exceed the pulse duration (" << pulse_duration_ns
                    << " ns) for distinct time bins";
                throw validation_error(msg.str());
            }
        }
    }
    auto check_r = [](double r, const char* name) {
        if (!(r > 0.0) || r > 1.0) {
            throw validation_error(std::string(name) + " reflectivity must lie in (0,1]");
        }
    };
    check_r(input_coupler_reflectivity, "input coupler");
    check_r(output_coupler_reflectivity, "output coupler");
    if (coupler_excess_s1_db < 0.0 || coupler_excess_s2_db < 0.0 || coupler_excess_sc_db < 0.0) {
        throw validation_error("coupler excess losses must be >= 0 dB");
    }
    if (!(pulse_duration_ns > 0.0)) throw validation_error("pulse duration must be > 0");
    if (!(trial_period_ns > 0.0)) throw validation_error("trial period must be > 0");
    if (output_cavity < 0 || output_cavity >= n_cavities()) {
        throw validation_error("output cavity index out of range");
    }
    if (detection_path_offset_ns < 0.0) {
        throw validation_error("detection path offset must be >= 0");
    }
    if (coin.dims != dims) {
        throw validation_error("coin dims does not match network dims");
    }
    if (unitarity_defect(coin.matrix) > 1e-9) {
        throw validation_error("network coin matrix is not unitary");
    }
}

double NetworkConfig::tau_ns() const {
    return cavities[output_cavity].round_trip_time_ns - cavities[0].round_trip_time_ns;
}

double bin_time(const NetworkConfig& cfg, int step, const PositionKey& position) {
    const int n = cfg.n_cavities();
    if (static_cast<int>(position.size()) != n - 1) {
        throw validation_error("position key length does not match the network");
    }
    int sum = 0;
    for (int c = 0; c < n - 1; ++c) {
        if (position[c] < 0) throw validation_error("negative traversal count");
        sum += position[c];
    }
    if (sum > step || step < 0) {
        throw validation_error("traversal counts exceed the step number");
    }
    double t = cfg.detection_path_offset_ns +
               static_cast<double>(step - sum) * cfg.cavities[0].round_trip_time_ns;
    for (int c = 1; c < n; ++c) {
        t += static_cast<double>(position[c - 1]) * cfg.cavities[c].round_trip_time_ns;
    }
    return t;
}

double bin_time(const NetworkConfig& cfg, int step, int k) {
    if (cfg.dims != 1) throw validation_error("scalar position only valid for dims=1");
    return bin_time(cfg, step, PositionKey{k});
}

StepLimits max_observable_steps(const NetworkConfig& cfg) {
    double t_max = 0.0;
    double t_min = cfg.cavities[0].round_trip_time_ns;
    for (const auto& cav : cfg.cavities) {
        t_max = std::max(t_max, cav.round_trip_time_ns);
        t_min = std::min(t_min, cav.round_trip_time_ns);
    }

    StepLimits limits;
    // Latest bin of step N sits at offset + N * t_max; it must fall inside
    // the trial period.
    int n = static_cast<int>(std::floor((cfg.trial_period_ns - cfg.detection_path_offset_ns) /
                                        t_max));
    while (cfg.detection_path_offset_ns + n * t_max >= cfg.trial_period_ns && n > 0) --n;
    limits.repetition_limit = std::max(0, n);

    // Step N's cluster spans N * (t_max - t_min); once that reaches t_min the
    // cluster runs into the next step's first bin.
    const double spread = t_max - t_min;
    if (spread >= t_min) {
        limits.overlap_limit = 0;  // degenerate geometry, clusters merge immediately
    } else {
        int m = static_cast<int>(std::floor(t_min / spread));
        while (m * spread >= t_min && m > 0) --m;
        limits.overlap_limit = std::max(0, m);
    }
    return limits;
}

double round_trip_transmission(double excess_loss_db, std::optional<double> tap_reflectivity) {
    if (excess_loss_db < 0.0) throw validation_error("excess loss must be >= 0 dB");
    double energy = std::pow(10.0, -excess_loss_db / 10.0);
    if (tap_reflectivity) {
        if (!(*tap_reflectivity > 0.0) || *tap_reflectivity > 1.0) {
            throw validation_error("tap reflectivity must lie in (0,1]");
        }
        energy *= *tap_reflectivity;
    }
    return std::sqrt(energy);
}

std::vector<double> cavity_transmissions(const NetworkConfig& cfg) {
    std::vector<double> t(cfg.n_cavities());
    for (int c = 0; c < cfg.n_cavities(); ++c) {
        double loss_db = cfg.cavities[c].excess_loss_db + cfg.coupler_excess_sc_db;
        std::optional<double> tap;
        if (c == 0) {
            loss_db += cfg.coupler_excess_s1_db;
            tap = cfg.input_coupler_reflectivity;
        }
        if (c == cfg.output_cavity) {
            loss_db += cfg.coupler_excess_s2_db;
            const double r = cfg.output_coupler_reflectivity;
            tap = tap ? *tap * r : r;
        }
        t[c] = round_trip_transmission(loss_db, tap);
    }
    return t;
}

PulseTable tapped_pulse_table(const NetworkConfig& cfg, int n_max, double input_energy) {
    cfg.validate();
    if (n_max < 0) throw validation_error("n_max must be >= 0");
    if (!(input_energy > 0.0)) throw validation_error("input energy must be > 0 photons");

    const double emit = input_energy * (1.0 - cfg.output_coupler_reflectivity);
    const std::vector<double> loss = cavity_transmissions(cfg);

    PulseTable table;
    table.trial_period_ns = cfg.trial_period_ns;

    WalkState state = WalkState::localized(cfg.dims, 0);
    auto emit_step = [&](const WalkState& s) {
        if (cfg.dims == 1) {
            // Dense over k: bins the walk cannot reach are real (empty) time
            // bins of the apparatus.
            std::vector<double> energy(s.step + 1, 0.0);
            for (const auto& [pos, amps] : s.amplitudes) energy[pos[0]] = amps.squaredNorm();
            for (int k = 0; k <= s.step; ++k) {
                table.entries.push_back(PulseEntry{s.step, PositionKey{k}, emit * energy[k],
                                                   bin_time(cfg, s.step, k)});
            }
        } else {
            for (const auto& [pos, amps] : s.amplitudes) {
                table.entries.push_back(PulseEntry{s.step, pos, emit * amps.squaredNorm(),
                                                   bin_time(cfg, s.step, pos)});
            }
        }
    };

    emit_step(state);
    for (int n = 1; n <= n_max; ++n) {
        state = step(state, cfg.coin, loss);
        emit_step(state);
    }

    std::stable_sort(table.entries.begin(), table.entries.end(),
                     [](const PulseEntry& a, const PulseEntry& b) { return a.time_ns < b.time_ns; });
    table.total_mu = 0.0;
    for (const auto& e : table.entries) table.total_mu += e.mu;

    if (table.total_mu >= 1.0) {
        std::ostringstream msg;
        msg << "table totals " << table.total_mu
            << " mean photons per trial; the detector budget requires < 1. "
            << "Reduce input_energy to at most " << 0.999 * input_energy / table.total_mu
            << " photons.";
        throw validation_error(msg.str());
    }
    return table;
}

Eigen::Matrix2cd jones_rotation(double theta_rad, int axis) {
    const Complex i(0.0, 1.0);
    Eigen::Matrix2cd sigma;
    switch (axis) {
        case 0: sigma << 0, 1, 1, 0; break;
        case 1: sigma << 0, -i, i, 0; break;
        case 2: sigma << 1, 0, 0, -1; break;
        default: throw validation_error("rotation axis must be 0, 1 or 2");
    }
    return std::cos(theta_rad / 2.0) * Eigen::Matrix2cd::Identity() -
           i * std::sin(theta_rad / 2.0) * sigma;
}

PolarizationWalkResult polarization_walk(const NetworkConfig& cfg, int n_steps) {
    cfg.validate();
    if (n_steps < 1) throw validation_error("polarization walk needs at least one step");
    const int n = cfg.n_cavities();

    std::vector<Eigen::Matrix2cd> jones(n);
    for (int c = 0; c < n; ++c) {
        jones[c] = cfg.cavities[c].jones.value_or(Eigen::Matrix2cd::Identity());
        if (unitarity_defect(jones[c]) > 1e-12) {
            throw validation_error("cavity " + std::to_string(c) + " Jones matrix is not unitary");
        }
    }

    PolarizationWalkResult result;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const Eigen::Matrix2cd comm = jones[a] * jones[b] - jones[b] * jones[a];
            result.commutator_defect =
                std::max(result.commutator_defect, comm.cwiseAbs().maxCoeff());
        }
    }

    // Joint state: per position, an n x 2 matrix of (cavity, polarization)
    // amplitudes. The coin mixes cavity rows; the traversal applies the
    // cavity's Jones rotation to its polarization spinor.
    std::map<PositionKey, Eigen::MatrixXcd> state;
    {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, 2);
        m(0, 0) = 1.0;
        state.emplace(PositionKey(n - 1, 0), std::move(m));
    }

    const std::vector<WalkDistribution> scalar =
        evolve(WalkState::localized(cfg.dims, 0), cfg.coin, n_steps);

    for (int s = 1; s <= n_steps; ++s) {
        std::map<PositionKey, Eigen::MatrixXcd> next;
        for (const auto& [pos, m] : state) {
            const Eigen::MatrixXcd mixed = cfg.coin.matrix * m;
            for (int c = 0; c < n; ++c) {
                const Eigen::RowVector2cd spinor =
                    (jones[c] * mixed.row(c).transpose()).transpose();
                if (spinor.squaredNorm() == 0.0) continue;
                PositionKey dest = pos;
                if (c > 0) ++dest[c - 1];
                auto [it, inserted] = next.try_emplace(dest, Eigen::MatrixXcd());
                if (inserted) it->second = Eigen::MatrixXcd::Zero(n, 2);
                it->second.row(c) += spinor;
            }
        }
        state = std::move(next);

        WalkDistribution dist;
        dist.step = s;
        double total = 0.0;
        for (const auto& [pos, m] : state) total += m.squaredNorm();
        if (cfg.dims == 1) {
            dist.probs.assign(s + 1, 0.0);
            for (int k = 0; k <= s; ++k) dist.positions.push_back(PositionKey{k});
            for (const auto& [pos, m] : state) dist.probs[pos[0]] = m.squaredNorm() / total;
        } else {
            for (const auto& [pos, m] : state) {
                dist.positions.push_back(pos);
                dist.probs.push_back(m.squaredNorm() / total);
            }
        }
        result.fidelity_to_scalar.push_back(fidelity(dist, scalar[s - 1]));
        result.distributions.push_back(std::move(dist));
    }
    return result;
}

}  // namespace cavitywalk
