#pragma once

#include <string>
#include <vector>

#include "lowrank_harness/config.hpp"

namespace lowrank::harness {

/// The built-in defaults for a preset: problem kind, dimensions, noise,
/// solver list with the published step sizes, and a fixed seed list.
ExperimentConfig preset_defaults(Preset preset);

/// One runnable cell of an experiment grid: a fully resolved config (single
/// kappa / noise level / rank / sampling rate) plus the tag written to the
/// CSV `preset` column, e.g. "fig1/k100".
struct Panel {
  std::string tag;
  ExperimentConfig cfg;
};

/// Expands a config into its preset's panel grid (condition numbers, noise
/// levels, ranks, sampling rates). Custom configs become a single panel.
std::vector<Panel> expand_panels(const ExperimentConfig& cfg);

/// Step-size grid for the robustness sweep: covers (0, 1.2] and includes the
/// operating points 0.5, 0.7, and 1.0.
const std::vector<double>& stepsize_grid();

/// File-name-safe form of a panel tag ('/' becomes '_').
std::string tag_to_filename(const std::string& tag);

}  // namespace lowrank::harness
