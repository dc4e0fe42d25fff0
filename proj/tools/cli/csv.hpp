#pragma once

// Trajectory CSV: one row per logged sample, header
//   t,x_1..x_n,theta_1..,theta_hat_1..,xi_1..,nu_1..,eps0,eps1,eps2,u_1..u_m,psi,varphi_psi
// Numbers use 17 significant digits so every double round-trips exactly.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "invreg/errors.hpp"
#include "invreg/integrate.hpp"

namespace invreg::cli {

class CsvError : public Error {
 public:
  CsvError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

std::vector<std::string> csv_header(std::size_t n, std::size_t m, std::size_t d);

/// 17 significant digits, locale independent.
std::string format_number(double value);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Models& models);

/// Rebuilds a trajectory from CSV rows. theta_hat is taken from its columns and
/// the remaining derived signals are recomputed from the logged states. Throws
/// CsvError with the 1-based file row (the header is row 1).
Trajectory read_trajectory_csv(std::istream& in, const Models& models,
                               const ControllerMode& mode);

}  // namespace invreg::cli
