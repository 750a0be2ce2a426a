#pragma once

// Two stock resources: a grid-forming LC-filtered converter with dq voltage
// control, and a grid-following L-filtered converter with dq current control
// fed by a PQ reference. All values come from the caller.

#include <string>

#include "hss/cider.hpp"

namespace hss {

struct VfParameters {
  double Lf = 0.0;    // filter inductance [H]
  double Rf = 0.0;    // filter resistance [ohm]
  double Cf = 0.0;    // filter capacitance [F]
  double kp_v = 0.0;  // voltage PI
  double ki_v = 0.0;
  double kp_i = 0.0;  // inner current loop, proportional
  double kff = 0.0;   // capacitor voltage feedforward
};

/// States: i_f (abc), v_c (abc) | xi (dq). Setpoint: (v_d*, v_q*).
/// W_pi = current drawn by the grid (abc), Y_pi = v_c (abc).
CiderSpec builtin_vf(const std::string& name, const VfParameters& p, const SignalSpec& setpoint,
                     const SignalSpec& operating_current);

struct PqParameters {
  double L = 0.0;   // filter inductance [H]
  double R = 0.0;   // filter resistance [ohm]
  double kp = 0.0;  // current PI
  double ki = 0.0;
};

/// States: i (abc) | xi (dq). Setpoint: (P, Q). W_pi = node voltage (abc),
/// Y_pi = injected current (abc).
CiderSpec builtin_pq(const std::string& name, const PqParameters& p, const SignalSpec& setpoint,
                     const SignalSpec& operating_voltage);

}  // namespace hss
