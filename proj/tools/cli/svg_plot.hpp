#pragma once

#include <iosfwd>
#include <string>

#include "invreg/integrate.hpp"

namespace invreg::cli {

/// Self-contained SVG with four panels: phase portrait (x against t when
/// n = 1), psi(x(t)), ||theta - theta_hat|| on a log scale and the V_theta /
/// V_xi traces on a log scale.
void write_svg(std::ostream& out, const Trajectory& traj, const Models& models,
               const std::string& title);

}  // namespace invreg::cli
