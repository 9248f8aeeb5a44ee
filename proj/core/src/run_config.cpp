#include "cavitywalk/run_config.hpp"

#include "cavitywalk/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cavitywalk {

NetworkConfig RunConfig::network() const {
    NetworkConfig net;
    net.dims = 1;
    net.cavities = {CavitySpec{t1_ns, loss_c1_db, std::nullopt},
                    CavitySpec{t2_ns, loss_c2_db, std::nullopt}};
    net.coin = coin_from_bias(eta_c);
    net.input_coupler_reflectivity = r_s1;
    net.output_coupler_reflectivity = r_s2;
    net.coupler_excess_s1_db = coupler_loss_s1_db;
    net.coupler_excess_s2_db = coupler_loss_s2_db;
    net.coupler_excess_sc_db = coupler_loss_sc_db;
    net.pulse_duration_ns = pulse_ns;
    net.trial_period_ns = trial_period_us * 1e3;
    net.output_cavity = 1;
    net.detection_path_offset_ns = detection_path_offset_ns;
    return net;
}

DetectorSpec RunConfig::detector() const {
    DetectorSpec det;
    det.jitter_fwhm_ps = jitter_fwhm_ps;
    det.tdc_bin_ps = tdc_bin_ps;
    det.background_rate_per_ns = background_per_ns;
    det.efficiency = efficiency;
    return det;
}

void RunConfig::validate() const {
    const NetworkConfig net = network();
    net.validate();
    detector().validate();
    if (steps < 1) throw validation_error("steps must be >= 1");
    const StepLimits limits = max_observable_steps(net);
    if (steps > limits.limit()) {
        std::ostringstream msg;
        msg << "steps=" << steps << " exceeds the observable range: the trial period allows "
            << limits.repetition_limit << " steps and cluster overlap allows "
            << limits.overlap_limit << "; use steps <= " << limits.limit();
        throw validation_error(msg.str());
    }
    if (!(input_energy_photons > 0.0)) {
        throw validation_error("input_energy_photons must be > 0");
    }
    if (!(window_halfwidth_ns > 0.0)) {
        throw validation_error("window_halfwidth_ns must be > 0");
    }
    if (threads < 0) throw validation_error("threads must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw validation_error("config key '" + key + "': cannot parse '" + value +
                               "' as a number");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    std::int64_t v = 0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
        throw validation_error("config key '" + key + "': cannot parse '" + value +
                               "' as an integer");
    }
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
        throw validation_error("config key '" + key + "': cannot parse '" + value +
                               "' as a non-negative integer");
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Prefer the shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(shorter, "%lf", &back);
        if (back == v) return shorter;
    }
    return buf;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
        setters = {
            {"t1_ns", [&](const std::string& k, const std::string& v) { cfg.t1_ns = parse_double(k, v); }},
            {"t2_ns", [&](const std::string& k, const std::string& v) { cfg.t2_ns = parse_double(k, v); }},
            {"eta_c", [&](const std::string& k, const std::string& v) { cfg.eta_c = parse_double(k, v); }},
            {"r_s1", [&](const std::string& k, const std::string& v) { cfg.r_s1 = parse_double(k, v); }},
            {"r_s2", [&](const std::string& k, const std::string& v) { cfg.r_s2 = parse_double(k, v); }},
            {"loss_c1_db", [&](const std::string& k, const std::string& v) { cfg.loss_c1_db = parse_double(k, v); }},
            {"loss_c2_db", [&](const std::string& k, const std::string& v) { cfg.loss_c2_db = parse_double(k, v); }},
            {"coupler_loss_s1_db", [&](const std::string& k, const std::string& v) { cfg.coupler_loss_s1_db = parse_double(k, v); }},
            {"coupler_loss_s2_db", [&](const std::string& k, const std::string& v) { cfg.coupler_loss_s2_db = parse_double(k, v); }},
            {"coupler_loss_sc_db", [&](const std::string& k, const std::string& v) { cfg.coupler_loss_sc_db = parse_double(k, v); }},
            {"pulse_ns", [&](const std::string& k, const std::string& v) { cfg.pulse_ns = parse_double(k, v); }},
            {"trial_period_us", [&](const std::string& k, const std::string& v) { cfg.trial_period_us = parse_double(k, v); }},
            {"detection_path_offset_ns", [&](const std::string& k, const std::string& v) { cfg.detection_path_offset_ns = parse_double(k, v); }},
            {"jitter_fwhm_ps", [&](const std::string& k, const std::string& v) { cfg.jitter_fwhm_ps = parse_double(k, v); }},
            {"tdc_bin_ps", [&](const std::string& k, const std::string& v) { cfg.tdc_bin_ps = static_cast<int>(parse_int(k, v)); }},
            {"efficiency", [&](const std::string& k, const std::string& v) { cfg.efficiency = parse_double(k, v); }},
            {"background_per_ns", [&](const std::string& k, const std::string& v) { cfg.background_per_ns = parse_double(k, v); }},
            {"steps", [&](const std::string& k, const std::string& v) { cfg.steps = static_cast<int>(parse_int(k, v)); }},
            {"trials", [&](const std::string& k, const std::string& v) { cfg.trials = parse_uint(k, v); }},
            {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = parse_uint(k, v); }},
            {"input_energy_photons", [&](const std::string& k, const std::string& v) { cfg.input_energy_photons = parse_double(k, v); }},
            {"window_halfwidth_ns", [&](const std::string& k, const std::string& v) { cfg.window_halfwidth_ns = parse_double(k, v); }},
            {"threads", [&](const std::string& k, const std::string& v) { cfg.threads = static_cast<int>(parse_int(k, v)); }},
            {"out", [&](const std::string&, const std::string& v) { cfg.out = v; }},
        };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw validation_error("config line " + std::to_string(line_no) +
                                   ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw validation_error("config line " + std::to_string(line_no) + ": unknown key '" +
                                   key + "'");
        }
        it->second(key, value);
    }
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    return parse_run_config(in);
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "# cavitywalk run configuration\n";
    out << "t1_ns = " << format_double(cfg.t1_ns) << "\n";
    out << "t2_ns = " << format_double(cfg.t2_ns) << "\n";
    out << "eta_c = " << format_double(cfg.eta_c) << "\n";
    out << "r_s1 = " << format_double(cfg.r_s1) << "\n";
    out << "r_s2 = " << format_double(cfg.r_s2) << "\n";
    out << "loss_c1_db = " << format_double(cfg.loss_c1_db) << "\n";
    out << "loss_c2_db = " << format_double(cfg.loss_c2_db) << "\n";
    out << "coupler_loss_s1_db = " << format_double(cfg.coupler_loss_s1_db) << "\n";
    out << "coupler_loss_s2_db = " << format_double(cfg.coupler_loss_s2_db) << "\n";
    out << "coupler_loss_sc_db = " << format_double(cfg.coupler_loss_sc_db) << "\n";
    out << "pulse_ns = " << format_double(cfg.pulse_ns) << "\n";
    out << "trial_period_us = " << format_double(cfg.trial_period_us) << "\n";
    out << "detection_path_offset_ns = " << format_double(cfg.detection_path_offset_ns) << "\n";
    out << "jitter_fwhm_ps = " << format_double(cfg.jitter_fwhm_ps) << "\n";
    out << "tdc_bin_ps = " << cfg.tdc_bin_ps << "\n";
    out << "efficiency = " << format_double(cfg.efficiency) << "\n";
    out << "background_per_ns = " << format_double(cfg.background_per_ns) << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "trials = " << cfg.trials << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "input_energy_photons = " << format_double(cfg.input_energy_photons) << "\n";
    out << "window_halfwidth_ns = " << format_double(cfg.window_halfwidth_ns) << "\n";
    out << "threads = " << cfg.threads << "\n";
    if (!cfg.out.empty()) out << "out = " << cfg.out << "\n";
    return out.str();
}

}  // namespace cavitywalk
