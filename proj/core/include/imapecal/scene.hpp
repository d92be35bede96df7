// Array geometry and sky model: calibrator sources solved for during
// calibration, plus weak background sources that only contaminate the data.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imapecal/common.hpp"
#include "imapecal/rng.hpp"

namespace imapecal {

struct ArrayConfig {
  std::vector<Eigen::Vector2d> antenna_positions;  // meters

  int antenna_count() const { return static_cast<int>(antenna_positions.size()); }
  int baseline_count() const {
    const int m = antenna_count();
    return m * (m - 1) / 2;
  }
  /// Index of baseline (p, q), p < q, in the order (0,1), (0,2), ..., (M-2,M-1).
  int baseline_index(int p, int q) const;
  /// Inverse of baseline_index.
  std::pair<int, int> baseline_antennas(int k) const;
};

enum class SourceRole { Calibrator, Background };

struct Source {
  double l = 0.0;  // direction cosines, l^2 + m^2 <= 1
  double m = 0.0;
  double flux = 0.0;
  SourceRole role = SourceRole::Calibrator;
};

struct SceneOptions {
  double extent_m = 1000.0;            // antennas uniform in [0, extent]^2
  double direction_halfwidth = 0.7;    // l, m uniform in +/- halfwidth
  double calibrator_flux_min = 0.5;
  double calibrator_flux_max = 1.5;
  // background flux uniform in [min, max] * weakest calibrator flux
  double background_flux_min = 0.01;
  double background_flux_max = 0.1;
  // instrumental jitter (radians) applied to background-source Jones terms
  double background_angle_jitter = 0.1;
};

/// A generated observation scenario. Background sources carry their own
/// small Faraday/phase jitter, used only when synthesizing their
/// contribution to the data; they are never part of the fitted model.
struct Scene {
  ArrayConfig array;
  std::vector<Source> calibrators;
  std::vector<Source> background;
  Eigen::MatrixXd background_faraday;  // D' x M, radians
  Eigen::MatrixXd background_phase;    // D' x M, radians
  std::uint64_t seed = 0;

  int antenna_count() const { return array.antenna_count(); }
  int baseline_count() const { return array.baseline_count(); }
  int calibrator_count() const { return static_cast<int>(calibrators.size()); }
  int background_count() const { return static_cast<int>(background.size()); }
};

/// Builds a scene with M antennas, D calibrators and Dp background sources,
/// deterministically from the seed. Background fluxes stay at least a
/// factor 10 below the weakest calibrator.
Scene make_scene(std::uint64_t seed, int M, int D, int Dp,
                 const SceneOptions& options = {});

/// Redraws only the background population (positions, fluxes, jitter),
/// keeping the array and calibrators fixed.
void redraw_background(Scene& scene, std::uint64_t seed,
                       const SceneOptions& options = {});

/// Source coherency: unpolarized, (flux / 2) * I2.
Mat2 coherency(const Source& source);

/// Known direction-dependent effects for one source/antenna pair at a
/// frequency: geometric phase only, exp(-j 2 pi (f/c) (u l + v m)) * I2.
Mat2 known_effects(const ArrayConfig& array, const Source& source,
                   double frequency_hz, int antenna);

/// Deterministic text round-trip, used by the simulate/calibrate tools.
std::string serialize_scene(const Scene& scene);
Scene parse_scene(std::string_view text);

}  // namespace imapecal
