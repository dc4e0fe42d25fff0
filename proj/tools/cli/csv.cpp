#include "csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "invreg/dynamics.hpp"
#include "invreg/errors.hpp"

namespace invreg::cli {
namespace {

void append_indexed(std::vector<std::string>& out, const char* stem, std::size_t count) {
  for (std::size_t i = 1; i <= count; ++i) out.push_back(std::string(stem) + "_" + std::to_string(i));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t row, std::size_t column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw CsvError(row, "column " + std::to_string(column + 1) + ": cannot parse '" + field +
                            "' as a number");
  }
  return value;
}

}  // namespace

std::vector<std::string> csv_header(std::size_t n, std::size_t m, std::size_t d) {
  std::vector<std::string> out{"t"};
  append_indexed(out, "x", n);
  append_indexed(out, "theta", d);
  append_indexed(out, "theta_hat", d);
  append_indexed(out, "xi", n);
  append_indexed(out, "nu", d);
  out.insert(out.end(), {"eps0", "eps1", "eps2"});
  append_indexed(out, "u", m);
  out.insert(out.end(), {"psi", "varphi_psi"});
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidArgument("format_number: conversion failed");
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Models& models) {
  const auto header = csv_header(models.n(), models.m(), models.d());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';

  std::string line;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const SimState& s = traj.states[k];
    const DerivedSignals& dv = traj.derived[k];
    line.clear();
    line += format_number(traj.times[k]);
    auto put = [&line](double v) {
      line += ',';
      line += format_number(v);
    };
    for (double v : s.x) put(v);
    for (double v : s.theta) put(v);
    for (double v : dv.theta_hat) put(v);
    for (double v : s.xi) put(v);
    for (double v : s.nu) put(v);
    put(s.eps0);
    put(s.eps1);
    put(s.eps2);
    for (double v : dv.u) put(v);
    put(dv.psi);
    put(dv.varphi_psi);
    line += '\n';
    out << line;
  }
}

Trajectory read_trajectory_csv(std::istream& in, const Models& models,
                               const ControllerMode& mode) {
  const std::size_t n = models.n();
  const std::size_t m = models.m();
  const std::size_t d = models.d();
  const auto expected = csv_header(n, m, d);

  std::string line;
  if (!std::getline(in, line)) throw CsvError(1, "missing header");
  if (split(line) != expected) {
    throw CsvError(1, "header does not match the scenario dimensions (n=" + std::to_string(n) +
                          ", m=" + std::to_string(m) + ", d=" + std::to_string(d) + ")");
  }

  Trajectory traj;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (in.eof()) throw CsvError(row, "truncated row (missing line terminator)");
    if (line.empty()) throw CsvError(row, "empty row");
    const auto fields = split(line);
    if (fields.size() != expected.size()) {
      throw CsvError(row, "expected " + std::to_string(expected.size()) + " fields, got " +
                              std::to_string(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) values[c] = parse_number(fields[c], row, c);

    std::size_t c = 0;
    auto take = [&](std::size_t count) {
      Vector v(values.begin() + static_cast<std::ptrdiff_t>(c),
               values.begin() + static_cast<std::ptrdiff_t>(c + count));
      c += count;
      return v;
    };
    SimState s;
    s.t = values[c++];
    s.x = take(n);
    s.theta = take(d);
    const Vector theta_hat_value = take(d);
    s.xi = take(n);
    s.nu = take(d);
    s.eps0 = values[c++];
    s.eps1 = values[c++];
    s.eps2 = values[c++];
    if (!traj.empty() && !(s.t > traj.times.back())) {
      throw CsvError(row, "time does not increase");
    }
    if (!all_finite(std::span<const double>(values))) {
      throw CsvError(row, "non-finite value");
    }
    s.theta_hat_i = sub(theta_hat_value, theta_hat(models, mode, s.x, s.xi, Vector(d, 0.0)));
    traj.push_back(s, derive(models, mode, s, theta_hat_value));
  }
  if (traj.empty()) throw CsvError(row + 1, "no data rows");
  return traj;
}

}  // namespace invreg::cli
