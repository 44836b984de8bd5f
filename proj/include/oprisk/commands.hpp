#pragma once

// One entry point per CLI mode. Each writes its CSVs and a metadata.json
// into config.output_dir and prints a short summary to `out`.

#include <iosfwd>
#include <optional>
#include <vector>

#include "oprisk/io.hpp"

namespace oprisk {

struct SmaRun {
  SmaBreakdown breakdown;
  std::size_t events_read = 0;
  std::size_t outside_window = 0;
  std::size_t below_floor = 0;
};

SmaRun cmd_sma(const RunConfig& config, std::ostream& out);

struct LdaRun {
  Eur var = 0.0;
  Eur sla = 0.0;
  Eur mean = 0.0;
  Eur span = 0.0;
  std::optional<double> cdf_at_capital;
  std::optional<double> nines;
};

LdaRun cmd_lda(const RunConfig& config, std::ostream& out);

GridStudyResult cmd_grid(const RunConfig& config, std::ostream& out);

std::vector<Table2Row> cmd_table2(const RunConfig& config, std::ostream& out);

void cmd_curves(const RunConfig& config, std::ostream& out);

}  // namespace oprisk
