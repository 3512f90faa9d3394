// Emits the pinned random LP suite as JSON (one object per instance) so an
// external solver can produce the reference objectives stored in
// tests/data/suite_objectives.csv. Infinite bounds are emitted as the strings
// "inf"/"-inf".

#include <cstdio>
#include <string>

#include "json.hpp"

#include "duplex/lp.hpp"
#include "support/lp_random.hpp"

using nlohmann::json;

static json bound(double v) {
  if (v == duplex::kInf) return "inf";
  if (v == -duplex::kInf) return "-inf";
  return v;
}

int main() {
  json out = json::array();
  for (const auto& spec : testsupport::reference_suite()) {
    duplex::CompLp lp = testsupport::make_random_lp(spec);
    json inst;
    inst["name"] = lp.name;
    inst["rows"] = lp.num_row;
    inst["cols"] = lp.num_col;
    inst["col_start"] = lp.col_start;
    inst["col_index"] = lp.col_index;
    inst["col_value"] = lp.col_value;
    inst["cost"] = lp.cost;
    json lo = json::array(), up = json::array();
    for (int j = 0; j < lp.num_col; ++j) {
      lo.push_back(bound(lp.lower[j]));
      up.push_back(bound(lp.upper[j]));
    }
    inst["lower"] = lo;
    inst["upper"] = up;
    out.push_back(inst);
  }
  std::printf("%s\n", out.dump().c_str());
  return 0;
}
