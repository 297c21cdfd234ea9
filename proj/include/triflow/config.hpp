#pragma once

#include <map>
#include <string>

#include "triflow/types.hpp"

namespace triflow {

// Flat key=value run configuration. Unknown keys are an error in strict mode.
struct RunConfig {
  std::string generator = "theta-network";
  Vec3 gamma = Vec3::Ones();
  int resolution = 64;
  double dt = 1e-4;
  double t_end = 1e-2;
  int max_steps = 1000000;
  double fp_tolerance = 1e-10;
  int fp_max_iters = 30;
  bool full_fixed_point = false;
  double eps_ref = 0.0;        // 0: 0.2 * min patch inradius
  double w_tau = 0.0;          // 0: 4 boundary element lengths
  double C_u = 0.0;
  double C_v = 0.0;
  double perturb_amplitude = 0.0;
  unsigned seed = 1;
  std::string output_dir = "out";
  int frame_stride = 0;        // 0: only first and last frame
  double energy_tolerance = 1e-10;   // relative per-step increase allowed
  double volume_tolerance = 1e-4;    // relative drift allowed over a run
};

RunConfig load_config(const std::string& path, bool strict = true);
RunConfig parse_config_text(const std::string& text, bool strict = true);
void write_resolved_config(const RunConfig& cfg, const std::string& path);

}  // namespace triflow
