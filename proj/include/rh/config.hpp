#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rh/catastrophe.hpp"
#include "rh/model.hpp"
#include "rh/sde.hpp"
#include "rh/sequential.hpp"

namespace rh {

struct SurfaceSection {
  std::vector<double> lambdas{0.0};
  std::vector<double> horizons{5.0, 10.0, 20.0, 40.0};
  double x_min = 0.5;
  double x_max = 20.0;
  int nx = 40;
  double t = 0.0;  // time at which the surface is evaluated
};

struct CatastropheCase {
  std::string label;
  double x0 = 10.0;
  double lambda = 0.0;  // added to the natural drift
};

struct CatastropheSection {
  std::vector<CatastropheCase> cases;
  double t_max = 20.0;
  int n_t = 200;
  double horizon = 40.0;  // horizon of the KFE comparison
  bool kfe = true;        // run the q = 0 PDE next to the closed form
  int kfe_nx = 400;
  int kfe_nt = 4000;
};

struct DetectSection {
  std::string data;          // CSV with columns t, X (and optionally q)
  double lambda = 0.0;       // shift to detect; 0 means use episode.lambda0
  bool discrete_correction = true;
};

/// Everything a CLI run needs. Sections not present in the file keep their
/// defaults; unknown keys are rejected.
struct ScenarioConfig {
  MarketParams market{5.0, 0.75, 1.25, 0.5, 0.02};
  ResourceParams resource{6.0, 3.25, 10.0};
  DetectionConfig detection{50.0};
  SimConfig sim;
  EpisodeConfig episode;  // detection and sim are mirrored from the sections above
  SurfaceSection surface;
  CatastropheSection catastrophe;
  DetectSection detect;
  std::string out_dir;
  std::vector<std::string> figures;

  /// Copies detection and sim into the episode configuration.
  EpisodeConfig episode_config() const;
};

/// Parses a config document. Throws ConfigError with a line number for
/// syntax errors and with the key path for type or value errors.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
/// Canonical serialisation: keys sorted, numbers in shortest round-trip form.
std::string dump_config(const ScenarioConfig& cfg);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes) noexcept;

}  // namespace rh
