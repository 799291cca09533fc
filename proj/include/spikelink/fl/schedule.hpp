#pragma once

#include <iosfwd>

#include "spikelink/errors.hpp"

namespace spikelink::fl {

// Ties the SNN step clock to local iterations and communication rounds:
// one local update every delta_t steps, one averaging round every delta_j
// local updates, so N * T = J * delta_t and a round spans delta_t * delta_j
// steps.
struct FLSchedule {
  int delta_t = 1;
  int delta_j = 1;
  long examples_n = 0;
  long horizon_t = 0;
  long rounds_budget = 0;

  long local_iterations() const { return examples_n * horizon_t / delta_t; }
  long steps_per_round() const {
    return static_cast<long>(delta_t) * delta_j;
  }
  long total_steps() const { return rounds_budget * steps_per_round(); }

  // From a dataset-presentation budget: J = N*T/delta_t must be whole;
  // a trailing partial round is discarded with a warning.
  static FLSchedule from_examples(long examples, long horizon, int delta_t,
                                  int delta_j, std::ostream* warn = nullptr);

  // From a communication budget: presents as many examples as the step
  // budget needs, warning when the run ends mid-example.
  static FLSchedule from_rounds(long rounds, long horizon, int delta_t,
                                int delta_j, std::ostream* warn = nullptr);

  void validate() const;
};

}  // namespace spikelink::fl
