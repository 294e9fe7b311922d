#pragma once

#include "dsekit/composition.hpp"
#include "dsekit/diffusion.hpp"
#include "dsekit/kinematics.hpp"
#include "dsekit/skills.hpp"

#include <memory>
#include <string>
#include <vector>

namespace dsekit {

/// Chain config JSON:
///   {"name": ..., "convention": "standard-dh",
///    "dh": [[a, alpha, d, theta_offset], ...],
///    "limits": [[lo, hi], ...], "control_points": [[x, y, z], ...],
///    "home": [q, ...]}           (control_points and home optional)
KinematicChain load_chain(const std::string& path);
void save_chain(const KinematicChain& chain, const std::string& path);

/// Dataset files are JSON Lines, one record per demo:
///   {"obs": [q...], "traj": [[q...], ...], "dt": float}
DemoSet load_dataset(const std::string& path);
void save_dataset(const DemoSet& set, const std::string& path);

/// Self-describing model JSON: architecture, schedule, normalizers, flat
/// parameter vector and training metadata.
DenoiserModel load_model(const std::string& path);
void save_model(const DenoiserModel& model, const std::string& path);

/// Ensemble manifest: {"models": [{"path": ..., "label": ...}, ...]};
/// relative paths resolve against the manifest's directory.
std::vector<std::shared_ptr<const DenoiserModel>> load_manifest(
    const std::string& path);
void save_manifest(const std::vector<std::string>& model_paths,
                   const std::vector<std::string>& labels,
                   const std::string& path);

/// Comma-separated weight list ("0.5,0.25,0.25") to validated weights.
CompositionWeights parse_weights(const std::string& csv);

}  // namespace dsekit
