#ifndef HLSA_REPORT_HPP
#define HLSA_REPORT_HPP

#include <span>
#include <string>
#include <vector>

#include "hlsa/eval.hpp"

namespace hlsa {

struct Chart {
  std::string name;  // file stem, e.g. "median_l2"
  std::string svg;
};

// Line charts of median L2, mean PP and SR against the baseline budget N,
// one polyline per (Q, p) pair. Output depends only on the rows.
std::vector<Chart> render_charts(std::span<const SummaryRow> rows);

}  // namespace hlsa

#endif  // HLSA_REPORT_HPP
