#pragma once

// Shared access to the pinned test data: reference objectives (computed with
// an independent solver and frozen under tests/data/) and the MPS fixtures.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "duplex/lp.hpp"
#include "duplex/mps.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
  return std::string(DUPLEX_TEST_DATA_DIR) + "/" + name;
}

inline std::map<std::string, double> load_objectives(const std::string& csv_name) {
  std::ifstream in(data_path(csv_name));
  if (!in) throw std::runtime_error("missing oracle file " + csv_name);
  std::map<std::string, double> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  return out;
}

inline const std::vector<std::string>& mps_fixture_names() {
  static const std::vector<std::string> names = {"simple_min", "blend", "boxed", "degen",
                                                 "wide"};
  return names;
}

inline duplex::CompLp load_fixture(const std::string& name) {
  return duplex::load_mps(data_path(name + ".mps"));
}

inline double rel_gap(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace testsupport
