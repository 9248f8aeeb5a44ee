#pragma once

#include "cavitywalk/analysis.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cavitywalk {

// Report file: "#cavitywalk-report v1" header, "#loss ..." and "#note ..."
// comment lines, then one "N k raw_counts background mu sigma P" row per
// peak and a fidelity block of "N F" lines.
struct ReportRow {
    int step = 0;
    int k = 0;
    std::int64_t raw_counts = 0;
    double background = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double p = 0.0;
};

struct Report {
    std::vector<ReportRow> rows;  // ordered by (step, k)
    FidelitySeries fidelity;      // may be empty (theory reports)
    std::optional<LossEstimate> loss_input_cavity;
    std::optional<LossEstimate> loss_output_cavity;
    std::vector<std::string> notes;
};

Report report_from_analysis(const AnalysisResult& analysis);

// Theory report: rows carry the probabilities themselves (mu = P), no
// counts, no fidelity block.
Report report_from_distributions(const std::vector<WalkDistribution>& distributions);

void write_report(const Report& report, std::ostream& out);
void write_report_file(const Report& report, const std::string& path);
Report read_report(std::istream& in);
Report read_report_file(const std::string& path);

// Per-step distributions from the P column. Steps whose rows are all zero
// (dropped during analysis) are skipped; the rest are renormalized against
// formatting rounding.
std::vector<WalkDistribution> report_distributions(const Report& report);

}  // namespace cavitywalk
