#include "spdalp/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spdalp/errors.hpp"
#include "spdalp/format.hpp"

namespace spdalp {

std::int64_t default_stride(std::int64_t iterations) { return std::max<std::int64_t>(1, iterations / 1000); }

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.t << ',' << format_double(r.objective) << ',' << format_double(r.violation) << ','
        << format_double(r.avg_objective) << ',' << format_double(r.avg_violation) << ','
        << format_double(r.lambda_norm) << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw DomainError(path.string() + ": unexpected trace header");
  std::vector<TraceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw DomainError(path.string() + ": trace row with " + std::to_string(cells.size()) + " fields");
    TraceRecord r;
    r.t = std::stoll(cells[0]);
    r.objective = parse_double(cells[1]);
    r.violation = parse_double(cells[2]);
    r.avg_objective = parse_double(cells[3]);
    r.avg_violation = parse_double(cells[4]);
    r.lambda_norm = parse_double(cells[5]);
    records.push_back(r);
  }
  return records;
}

}  // namespace spdalp
