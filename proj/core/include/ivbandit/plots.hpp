#pragma once

#include <string>
#include <vector>

#include "ivbandit/runner.hpp"

namespace ivb {

enum class PlotKind { SuccessVsHorizon, SamplesBar };

// Hand-rolled static SVGs. Every plotted number is also emitted as a
// data-* attribute so tests can parse the figures back.

// Mean +/- sample-std of the samples column, one bar per algorithm.
std::string svg_samples_bar(const ResultsTable& table);

// Per-step curves for the optimistic baselines plus a step curve per
// elimination algorithm (0 until its mean total, its success rate after).
std::string svg_success_vs_horizon(const ResultsTable& table,
                                   const std::vector<SuccessCurve>& curves);

// Writes the requested figure into dir; EmptySelection when no data serves it.
void emit_plots(const ResultsTable& table, const RunArtifacts* artifacts,
                const std::string& dir, PlotKind kind);

}  // namespace ivb
