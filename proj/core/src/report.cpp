#include "cavitywalk/report.hpp"

#include "cavitywalk/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cavitywalk {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

Report report_from_analysis(const AnalysisResult& analysis) {
    Report report;
    report.loss_input_cavity = analysis.loss_input_cavity;
    report.loss_output_cavity = analysis.loss_output_cavity;

    std::map<std::pair<int, int>, double> probs;
    for (const auto& dist : analysis.measured.distributions) {
        for (std::size_t i = 0; i < dist.positions.size(); ++i) {
            probs[{dist.step, dist.positions[i][0]}] = dist.probs[i];
        }
    }
    report.rows.reserve(analysis.peaks.rows.size());
    for (const auto& row : analysis.peaks.rows) {
        ReportRow r;
        r.step = row.step;
        r.k = row.k;
        r.raw_counts = row.raw_counts;
        r.background = row.background;
        r.mu = row.mu;
        r.sigma = row.sigma;
        auto it = probs.find({row.step, row.k});
        r.p = it == probs.end() ? 0.0 : it->second;
        report.rows.push_back(r);
    }
    report.fidelity = analysis.fidelity;

    if (analysis.histogram.overflow > 0) {
        report.notes.push_back("events beyond the trial window: " +
                               std::to_string(analysis.histogram.overflow));
    }
    if (analysis.measured.clamped_values > 0) {
        report.notes.push_back("negative energies clamped to zero: " +
                               std::to_string(analysis.measured.clamped_values));
    }
    if (!analysis.measured.dropped_steps.empty()) {
        std::ostringstream note;
        note << "steps dropped (no energy above background):";
        for (int s : analysis.measured.dropped_steps) note << ' ' << s;
        report.notes.push_back(note.str());
    }
    if (!analysis.loss_note.empty()) report.notes.push_back(analysis.loss_note);
    return report;
}

Report report_from_distributions(const std::vector<WalkDistribution>& distributions) {
    Report report;
    for (const auto& dist : distributions) {
        for (std::size_t i = 0; i < dist.positions.size(); ++i) {
            ReportRow r;
            r.step = dist.step;
            r.k = dist.positions[i][0];
            r.mu = dist.probs[i];
            r.p = dist.probs[i];
            report.rows.push_back(r);
        }
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.step != b.step ? a.step < b.step : a.k < b.k;
    });
    return report;
}

void write_report(const Report& report, std::ostream& out) {
    out << "#cavitywalk-report v1\n";
    auto write_loss = [&](int cavity, const std::optional<LossEstimate>& est) {
        if (!est) return;
        out << "#loss cavity=" << cavity << " excess_db=" << fmt(est->excess_db)
            << " sigma_db=" << fmt(est->sigma_db) << " points=" << est->points_used << "\n";
    };
    write_loss(0, report.loss_input_cavity);
    write_loss(1, report.loss_output_cavity);
    for (const auto& note : report.notes) out << "#note " << note << "\n";

    out << "#peaks N k raw_counts background mu sigma P\n";
    for (const auto& r : report.rows) {
        out << r.step << ' ' << r.k << ' ' << r.raw_counts << ' ' << fmt(r.background) << ' '
            << fmt(r.mu) << ' ' << fmt(r.sigma) << ' ' << fmt(r.p) << "\n";
    }
    if (!report.fidelity.steps.empty()) {
        out << "#fidelity N F\n";
        for (std::size_t i = 0; i < report.fidelity.steps.size(); ++i) {
            out << report.fidelity.steps[i] << ' ' << fmt(report.fidelity.values[i]) << "\n";
        }
    }
    if (!out) throw estimation_error("failure while writing report");
}

void write_report_file(const Report& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open report file for writing: " + path);
    write_report(report, out);
}

Report read_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("#cavitywalk-report v1", 0) != 0) {
        throw validation_error("missing '#cavitywalk-report v1' header");
    }

    Report report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#loss ", 0) == 0) {
                int cavity = -1, points = 0;
                double db = 0.0, sigma = 0.0;
                if (std::sscanf(line.c_str(), "#loss cavity=%d excess_db=%lf sigma_db=%lf points=%d",
                                &cavity, &db, &sigma, &points) == 4) {
                    LossEstimate est{db, sigma, points};
                    if (cavity == 0) {
                        report.loss_input_cavity = est;
                    } else {
                        report.loss_output_cavity = est;
                    }
                }
            } else if (line.rfind("#note ", 0) == 0) {
                report.notes.push_back(line.substr(6));
            }
            continue;
        }

        std::istringstream fields(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (fields >> tok) tokens.push_back(tok);
        if (tokens.size() == 7) {
            ReportRow r;
            try {
                r.step = std::stoi(tokens[0]);
                r.k = std::stoi(tokens[1]);
                r.raw_counts = std::stoll(tokens[2]);
                r.background = std::stod(tokens[3]);
                r.mu = std::stod(tokens[4]);
                r.sigma = std::stod(tokens[5]);
                r.p = std::stod(tokens[6]);
            } catch (const std::exception&) {
                throw validation_error("bad report row at line " + std::to_string(line_no));
            }
            report.rows.push_back(r);
        } else if (tokens.size() == 2) {
            try {
                report.fidelity.steps.push_back(std::stoi(tokens[0]));
                report.fidelity.values.push_back(std::stod(tokens[1]));
            } catch (const std::exception&) {
                throw validation_error("bad fidelity row at line " + std::to_string(line_no));
            }
        } else {
            throw validation_error("unrecognized report line " + std::to_string(line_no));
        }
    }
    return report;
}

Report read_report_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open report file: " + path);
    return read_report(in);
}

std::vector<WalkDistribution> report_distributions(const Report& report) {
    std::map<int, std::vector<std::pair<int, double>>> by_step;
    for (const auto& r : report.rows) by_step[r.step].emplace_back(r.k, r.p);

    std::vector<WalkDistribution> out;
    for (auto& [step, entries] : by_step) {
        std::sort(entries.begin(), entries.end());
        double total = 0.0;
        for (const auto& [k, p] : entries) {
            if (p < 0.0) throw validation_error("negative probability in report step " +
                                                std::to_string(step));
            total += p;
        }
        if (!(total > 0.0)) continue;  // dropped step
        WalkDistribution dist;
        dist.step = step;
        for (const auto& [k, p] : entries) {
            dist.positions.push_back(PositionKey{k});
            dist.probs.push_back(p / total);
        }
        out.push_back(std::move(dist));
    }
    return out;
}

}  // namespace cavitywalk
