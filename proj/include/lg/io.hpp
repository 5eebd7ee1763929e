#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "lg/certificate.hpp"
#include "lg/concentration.hpp"
#include "lg/kdist.hpp"

namespace lg {

inline constexpr const char* kToolVersion = "0.1.0";

/// First line of every artifact file: tool version, resolved command, seed.
void write_provenance(std::ostream& os, const std::string& command, uint64_t seed);

std::string format_double(double v);  // shortest round-trippable form

/// Line-oriented graph exchange: `lg` header, `f` function line, `v`/`a`
/// structure lines, `w` weight rows for every assignment realized by the
/// domain, `input` domain rows, and one `flow` block per positive input.
void write_graph_file(std::ostream& os, const LearningGraph& g, const FunctionSpec& f,
                      const Domain& domain, const WeightFn<double>& weights,
                      const std::vector<Flow<double>>& flows, const std::string& command,
                      uint64_t seed);

struct GraphFile {
    LearningGraph graph;
    FunctionSpec f;
    Domain domain;
    std::shared_ptr<TableWeights<double>> weights;
    std::vector<Flow<double>> flows;  // aligned with domain.positives
};

GraphFile read_graph_file(std::istream& is);

void write_certificate(std::ostream& os, const CertificateBundle& bundle,
                       const std::string& command, uint64_t seed);

/// CSV x,y,sum,deviation (input points quoted).
void write_feasibility_csv(std::ostream& os, const FeasibilityReport& rep,
                           const std::string& command, uint64_t seed);

/// CSV classKey,pi,tau,mu,count.
void write_class_stats_csv(std::ostream& os, const std::vector<ClassStats>& stats,
                           const std::string& command, uint64_t seed);

/// CSV lambda,empirical,bound,stderr plus fit summary comments.
void write_tail_csv(std::ostream& os, const TailReport& rep, const std::string& command,
                    uint64_t seed);

/// CSV step,class,size,speciality,sqrtT.
void write_collapsed_csv(std::ostream& os, const CollapsedReport& rep, const std::string& command,
                         uint64_t seed);

/// CSV n,r1,estimate plus slope/intercept comments.
void write_scaling_csv(std::ostream& os, const ScalingFit& fit, const std::string& command,
                       uint64_t seed);

/// Companion gnuplot script for a tail CSV.
void write_tail_plot_script(std::ostream& os, const std::string& csv_path);

}  // namespace lg
