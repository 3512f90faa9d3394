#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "duplex/errors.hpp"
#include "duplex/lp.hpp"

namespace duplex {

// An LP as read from an MPS file, before conversion to computational form.
// Rows are the non-objective constraint rows; the single free (N) row is the
// objective.
struct RawLp {
  std::string name;
  bool maximize = false;

  std::string objective_name;
  std::vector<std::string> row_names;
  std::vector<char> row_types;  // 'L', 'G', 'E'
  std::vector<double> rhs;
  std::vector<bool> has_range;
  std::vector<double> range;
  double rhs_objective = 0.0;

  std::vector<std::string> col_names;
  std::vector<std::vector<std::pair<int, double>>> col_entries;  // (row, coeff)
  std::vector<double> cost;
  std::vector<double> col_lower;
  std::vector<double> col_upper;

  std::vector<std::string> warnings;

  int num_rows() const { return static_cast<int>(row_names.size()); }
  int num_cols() const { return static_cast<int>(col_names.size()); }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '$') break;  // inline comment
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_number(const std::string& tok, int line_no) {
  std::string t = tok;
  // Fortran-style exponents (1.5D+2) appear in older files.
  for (char& c : t)
    if (c == 'D' || c == 'd') c = 'E';
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError(line_no, "malformed number '" + tok + "'");
  return v;
}

}  // namespace detail

// Reads an MPS model. Handles fixed- and free-format files whose names carry
// no embedded blanks, '*' full-line and '$' inline comments, the OBJSENSE
// extension, RANGES, all standard bound types, and integer markers (warned
// about and relaxed to continuous). Structural errors throw ParseError.
inline RawLp parse_mps(std::istream& in) {
  RawLp lp;
  std::unordered_map<std::string, int> row_of;
  std::unordered_map<std::string, int> col_of;
  std::unordered_map<long long, int> seen_coeff;  // (col * rows + row) -> line
  std::vector<char> lower_explicit;               // per column: LO/MI/FX seen

  enum Section { kNone, kObjsense, kRows, kColumns, kRhs, kRanges, kBounds, kDone };
  Section section = kNone;
  bool integer_mode = false;
  bool warned_integer = false;
  bool saw_endata = false;

  std::string line;
  int line_no = 0;
  int last_col = -1;

  auto get_row = [&](const std::string& name, int ln) {
    auto it = row_of.find(name);
    if (it == row_of.end()) throw ParseError(ln, "unknown row '" + name + "'");
    return it->second;
  };
  auto get_col = [&](const std::string& name, int ln) {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw ParseError(ln, "unknown column '" + name + "'");
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;

    const bool is_header = !std::isspace(static_cast<unsigned char>(line[0]));
    if (is_header) {
      const std::string head = detail::upper(toks[0]);
      if (head == "NAME") {
        if (toks.size() > 1) lp.name = toks[1];
        continue;
      }
      if (head == "OBJSENSE") {
        if (toks.size() > 1) {
          const std::string s = detail::upper(toks[1]);
          if (s == "MAX" || s == "MAXIMIZE") lp.maximize = true;
          section = kNone;
        } else {
          section = kObjsense;
        }
        continue;
      }
      if (head == "ROWS") {
        section = kRows;
        continue;
      }
      if (head == "COLUMNS") {
        section = kColumns;
        continue;
      }
      if (head == "RHS") {
        section = kRhs;
        continue;
      }
      if (head == "RANGES") {
        section = kRanges;
        continue;
      }
      if (head == "BOUNDS") {
        section = kBounds;
        continue;
      }
      if (head == "ENDATA") {
        saw_endata = true;
        section = kDone;
        break;
      }
      throw ParseError(line_no, "unknown section '" + toks[0] + "'");
    }

    switch (section) {
      case kObjsense: {
        const std::string s = detail::upper(toks[0]);
        if (s == "MAX" || s == "MAXIMIZE") lp.maximize = true;
        section = kNone;
        break;
      }

      case kRows: {
        if (toks.size() < 2) throw ParseError(line_no, "row line needs a type and a name");
        const std::string type = detail::upper(toks[0]);
        const std::string& name = toks[1];
        if (type == "N") {
          if (!lp.objective_name.empty())
            throw ParseError(line_no, "multiple objective (N) rows: '" + name + "'");
          lp.objective_name = name;
          break;
        }
        if (type != "L" && type != "G" && type != "E")
          throw ParseError(line_no, "unknown row type '" + toks[0] + "'");
        if (row_of.count(name) || name == lp.objective_name)
          throw ParseError(line_no, "duplicate row '" + name + "'");
        row_of.emplace(name, lp.num_rows());
        lp.row_names.push_back(name);
        lp.row_types.push_back(type[0]);
        lp.rhs.push_back(0.0);
        lp.has_range.push_back(false);
        lp.range.push_back(0.0);
        break;
      }

      case kColumns: {
        // Integer markers toggle a mode we only warn about.
        if (toks.size() >= 3 && toks[1] == "'MARKER'") {
          const std::string mk = detail::upper(toks[2]);
          if (mk == "'INTORG'") {
            integer_mode = true;
            if (!warned_integer) {
              lp.warnings.push_back("integer columns relaxed to continuous");
              warned_integer = true;
            }
          } else if (mk == "'INTEND'" || mk == "'INTOFF'") {
            integer_mode = false;
          }
          break;
        }
        if (toks.size() < 3 || toks.size() % 2 == 0)
          throw ParseError(line_no, "column line needs name and (row, value) pairs");
        const std::string& cname = toks[0];
        int j;
        auto it = col_of.find(cname);
        if (it == col_of.end()) {
          j = lp.num_cols();
          col_of.emplace(cname, j);
          lp.col_names.push_back(cname);
          lp.col_entries.emplace_back();
          lp.cost.push_back(0.0);
          lp.col_lower.push_back(0.0);
          lp.col_upper.push_back(kInf);
          lower_explicit.push_back(0);
        } else {
          j = it->second;
        }
        (void)integer_mode;
        for (size_t t = 1; t + 1 < toks.size(); t += 2) {
          const std::string& rname = toks[t];
          const double v = detail::parse_number(toks[t + 1], line_no);
          if (rname == lp.objective_name) {
            if (lp.cost[j] != 0.0)
              throw ParseError(line_no, "duplicate objective entry for column '" + cname + "'");
            lp.cost[j] = v;
            continue;
          }
          const int i = get_row(rname, line_no);
          const long long key = static_cast<long long>(j) * (lp.num_rows() + 1) + i;
          if (seen_coeff.count(key))
            throw ParseError(line_no,
                             "duplicate coefficient (" + rname + ", " + cname + ")");
          seen_coeff.emplace(key, line_no);
          lp.col_entries[j].push_back({i, v});
        }
        break;
      }

      case kRhs: {
        if (toks.size() < 2) throw ParseError(line_no, "right-hand-side line too short");
        // The first token is the set name unless it is itself a row name.
        size_t t = 1;
        if (row_of.count(toks[0]) || toks[0] == lp.objective_name) t = 0;
        if ((toks.size() - t) % 2 != 0)
          throw ParseError(line_no, "right-hand-side line needs (row, value) pairs");
        for (; t + 1 < toks.size(); t += 2) {
          const std::string& rname = toks[t];
          const double v = detail::parse_number(toks[t + 1], line_no);
          if (rname == lp.objective_name) {
            lp.rhs_objective = v;
            continue;
          }
          lp.rhs[get_row(rname, line_no)] = v;
        }
        break;
      }

      case kRanges: {
        if (toks.size() < 2) throw ParseError(line_no, "range line too short");
        size_t t = 1;
        if (row_of.count(toks[0])) t = 0;
        if ((toks.size() - t) % 2 != 0)
          throw ParseError(line_no, "range line needs (row, value) pairs");
        for (; t + 1 < toks.size(); t += 2) {
          const int i = get_row(toks[t], line_no);
          lp.range[i] = detail::parse_number(toks[t + 1], line_no);
          lp.has_range[i] = true;
        }
        break;
      }

      case kBounds: {
        if (toks.size() < 2) throw ParseError(line_no, "bound line too short");
        const std::string type = detail::upper(toks[0]);
        // Layout: TYPE [setname] column [value]; drop the set name if the
        // second token is not a known column but the third is.
        size_t t = 1;
        if (!col_of.count(toks[1]) && toks.size() >= 3 && col_of.count(toks[2])) t = 2;
        const int j = get_col(toks[t], line_no);
        const bool has_val = toks.size() > t + 1;
        const double v = has_val ? detail::parse_number(toks[t + 1], line_no) : 0.0;
        if (type == "LO") {
          lp.col_lower[j] = v;
          lower_explicit[j] = 1;
        } else if (type == "UP") {
          lp.col_upper[j] = v;
          if (v < 0.0 && !lower_explicit[j]) {
            // De-facto rule: a negative upper bound on a column whose lower
            // bound was never set frees the lower bound.
            lp.col_lower[j] = -kInf;
            lp.warnings.push_back("negative upper bound on '" + lp.col_names[j] +
                                  "' frees its lower bound");
          }
        } else if (type == "FX") {
          lp.col_lower[j] = v;
          lp.col_upper[j] = v;
          lower_explicit[j] = 1;
        } else if (type == "FR") {
          lp.col_lower[j] = -kInf;
          lp.col_upper[j] = kInf;
          lower_explicit[j] = 1;
        } else if (type == "MI") {
          lp.col_lower[j] = -kInf;
          lower_explicit[j] = 1;
        } else if (type == "PL") {
          lp.col_upper[j] = kInf;
        } else if (type == "LI") {
          lp.col_lower[j] = v;
          lower_explicit[j] = 1;
          if (!warned_integer) {
            lp.warnings.push_back("integer columns relaxed to continuous");
            warned_integer = true;
          }
        } else if (type == "UI") {
          lp.col_upper[j] = v;
          if (!warned_integer) {
            lp.warnings.push_back("integer columns relaxed to continuous");
            warned_integer = true;
          }
        } else if (type == "BV") {
          throw ParseError(line_no, "binary bound type BV is not supported");
        } else {
          throw ParseError(line_no, "unknown bound type '" + toks[0] + "'");
        }
        break;
      }

      case kNone:
        throw ParseError(line_no, "data before any section header");
      case kDone:
        break;
    }
    if (section == kDone) break;
    (void)last_col;
  }

  if (lp.objective_name.empty())
    throw ParseError(line_no, "no objective (N) row declared");
  if (!saw_endata) lp.warnings.push_back("file ends without ENDATA");

  for (int j = 0; j < lp.num_cols(); ++j)
    if (lp.col_lower[j] > lp.col_upper[j])
      throw InconsistentBounds(lp.col_names[j], lp.col_lower[j], lp.col_upper[j]);
  return lp;
}

inline RawLp parse_mps_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return parse_mps(in);
}

// Converts the parsed model to computational form:
//   minimize c'x  subject to  A x = 0,  l <= x <= u
// where every constraint row i gains a logical column with coefficient +1
// whose value is the negated row activity; its bounds are the row's activity
// bounds negated and swapped. Maximization is handled by negating the costs
// (flagged so reported objectives can be negated back), and an RHS entry on
// the objective row becomes a constant offset.
inline CompLp to_computational_form(const RawLp& raw) {
  CompLp lp;
  lp.name = raw.name;
  lp.num_row = raw.num_rows();
  const int n = raw.num_cols();
  lp.num_col = n + lp.num_row;
  lp.maximize_negated = raw.maximize;
  lp.obj_offset = -raw.rhs_objective;

  lp.cost.assign(lp.num_col, 0.0);
  lp.lower.assign(lp.num_col, 0.0);
  lp.upper.assign(lp.num_col, 0.0);
  lp.col_start.assign(lp.num_col + 1, 0);

  const double sign = raw.maximize ? -1.0 : 1.0;
  for (int j = 0; j < n; ++j) {
    lp.cost[j] = sign * raw.cost[j];
    lp.lower[j] = raw.col_lower[j];
    lp.upper[j] = raw.col_upper[j];
    lp.col_start[j + 1] = lp.col_start[j] + static_cast<int>(raw.col_entries[j].size());
  }
  for (int i = 0; i < lp.num_row; ++i) lp.col_start[n + i + 1] = lp.col_start[n + i] + 1;

  lp.col_index.resize(lp.col_start[lp.num_col]);
  lp.col_value.resize(lp.col_start[lp.num_col]);
  for (int j = 0; j < n; ++j) {
    int at = lp.col_start[j];
    for (auto& e : raw.col_entries[j]) {
      lp.col_index[at] = e.first;
      lp.col_value[at] = e.second;
      ++at;
    }
  }

  for (int i = 0; i < lp.num_row; ++i) {
    // Activity bounds of row i.
    double rl = -kInf, ru = kInf;
    const double b = raw.rhs[i];
    switch (raw.row_types[i]) {
      case 'L':
        ru = b;
        break;
      case 'G':
        rl = b;
        break;
      case 'E':
        rl = b;
        ru = b;
        break;
    }
    if (raw.has_range[i]) {
      const double r = raw.range[i];
      switch (raw.row_types[i]) {
        case 'L':
          rl = b - std::abs(r);
          break;
        case 'G':
          ru = b + std::abs(r);
          break;
        case 'E':
          if (r >= 0.0)
            ru = b + r;
          else
            rl = b + r;
          break;
      }
    }
    const int j = n + i;
    lp.col_index[lp.col_start[j]] = i;
    lp.col_value[lp.col_start[j]] = 1.0;
    lp.lower[j] = (ru >= kInf) ? -kInf : -ru;
    lp.upper[j] = (rl <= -kInf) ? kInf : -rl;
  }

  lp.build_rows();
  return lp;
}

inline CompLp load_mps(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  RawLp raw = parse_mps_file(path);
  if (warnings != nullptr) *warnings = raw.warnings;
  return to_computational_form(raw);
}

}  // namespace duplex
