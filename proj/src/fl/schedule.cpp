#include "spikelink/fl/schedule.hpp"

#include <ostream>

namespace spikelink::fl {

void FLSchedule::validate() const {
  if (delta_t < 1 || delta_j < 1)
    throw ConfigError("schedule: delta_t and delta_j must be >= 1");
  if (horizon_t < 1) throw ConfigError("schedule: horizon must be >= 1");
  if (examples_n < 1) throw ConfigError("schedule: needs >= 1 example");
  if (rounds_budget < 1) throw ConfigError("schedule: needs >= 1 round");
}

FLSchedule FLSchedule::from_examples(long examples, long horizon, int delta_t,
                                     int delta_j, std::ostream* warn) {
  FLSchedule s;
  s.delta_t = delta_t;
  s.delta_j = delta_j;
  s.examples_n = examples;
  s.horizon_t = horizon;
  if (delta_t < 1 || delta_j < 1 || horizon < 1 || examples < 1)
    throw ConfigError("schedule: all sizes must be >= 1");
  const long total = examples * horizon;
  if (total % delta_t != 0)
    throw ConfigError("schedule: N*T must be divisible by delta_t");
  const long j = total / delta_t;
  s.rounds_budget = j / delta_j;
  if (s.rounds_budget < 1)
    throw ConfigError("schedule: fewer than delta_j local iterations");
  if (j % delta_j != 0 && warn)
    *warn << "schedule: discarding trailing partial round ("
          << (j % delta_j) << " of " << delta_j << " local iterations)\n";
  return s;
}

FLSchedule FLSchedule::from_rounds(long rounds, long horizon, int delta_t,
                                   int delta_j, std::ostream* warn) {
  FLSchedule s;
  s.delta_t = delta_t;
  s.delta_j = delta_j;
  s.horizon_t = horizon;
  s.rounds_budget = rounds;
  if (delta_t < 1 || delta_j < 1 || horizon < 1 || rounds < 1)
    throw ConfigError("schedule: all sizes must be >= 1");
  const long steps = s.total_steps();
  s.examples_n = (steps + horizon - 1) / horizon;
  if (steps % horizon != 0 && warn)
    *warn << "schedule: run ends mid-example (" << steps % horizon << " of "
          << horizon << " steps into the last window)\n";
  return s;
}

}  // namespace spikelink::fl
