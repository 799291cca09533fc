#include "spikelink/snn/exact_nll.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace spikelink::snn {

namespace {

struct EnumContext {
  const NetworkParams* params;
  const SpikeRaster* exogenous;
  const SpikeRaster* target;
  int horizon;
  std::vector<double> leaf_log_joint;  // log p(h||x) + log p(x||h)
  double bound_acc = 0.0;              // sum_h p(h||x) * loss(h)
};

void check_enumerable(const NetworkParams& params, const SpikeRaster& exo,
                      const SpikeRaster& target) {
  params.validate();
  if (exo.channels() != params.exogenous_count)
    throw ConfigError("exogenous raster does not match network inputs");
  if (target.channels() != params.visible_count())
    throw ConfigError("target raster does not match visible neurons");
  if (target.horizon() != exo.horizon())
    throw ConfigError("target and exogenous horizons differ");
  const long hidden_bits =
      static_cast<long>(params.partition.hidden.size()) * exo.horizon();
  if (hidden_bits > 16)
    throw ConfigError("enumeration bound exceeded: |H| * T > 16");
}

// Depth-first walk over all hidden configurations, one time step per level.
// States are copied per branch; the networks involved are tiny by contract.
void recurse(EnumContext& ctx, GlmNetwork net, int t, double log_p_hidden,
             double log_p_visible) {
  if (t > ctx.horizon) {
    ctx.leaf_log_joint.push_back(log_p_hidden + log_p_visible);
    ctx.bound_acc += std::exp(log_p_hidden) * (-log_p_visible);
    return;
  }
  const auto& params = *ctx.params;
  const int n_hidden = static_cast<int>(params.partition.hidden.size());
  net.compute_potentials();
  const auto exo_col = ctx.exogenous->column(t - 1);

  std::vector<std::uint8_t> spikes(params.neuron_count(), 0);
  for (int v = 0; v < params.visible_count(); ++v)
    spikes[params.partition.visible[v]] = ctx.target->at(v, t - 1);

  double lp_vis = log_p_visible;
  for (int v = 0; v < params.visible_count(); ++v) {
    const int i = params.partition.visible[v];
    const double p = sigmoid(net.state().potentials[i]);
    lp_vis -= bce_loss(ctx.target->at(v, t - 1), p);
  }

  const unsigned patterns = 1u << n_hidden;
  for (unsigned pat = 0; pat < patterns; ++pat) {
    double lp_hid = log_p_hidden;
    for (int h = 0; h < n_hidden; ++h) {
      const int i = params.partition.hidden[h];
      const int bit = (pat >> h) & 1u;
      spikes[i] = static_cast<std::uint8_t>(bit);
      lp_hid -= bce_loss(bit, sigmoid(net.state().potentials[i]));
    }
    GlmNetwork branch = net;
    branch.advance(exo_col, spikes);
    recurse(ctx, std::move(branch), t + 1, lp_hid, lp_vis);
  }
}

EnumContext run_enumeration(const NetworkParams& params,
                            const SpikeRaster& exo,
                            const SpikeRaster& target) {
  check_enumerable(params, exo, target);
  EnumContext ctx{&params, &exo, &target, exo.horizon(), {}, 0.0};
  GlmNetwork net(params);
  recurse(ctx, std::move(net), 1, 0.0, 0.0);
  return ctx;
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double exact_nll_oracle(const NetworkParams& params, const SpikeRaster& exo,
                        const SpikeRaster& target) {
  EnumContext ctx = run_enumeration(params, exo, target);
  return -log_sum_exp(ctx.leaf_log_joint);
}

double enumerate_network_bound(const NetworkParams& params,
                               const SpikeRaster& exo,
                               const SpikeRaster& target) {
  EnumContext ctx = run_enumeration(params, exo, target);
  return ctx.bound_acc;
}

namespace {

template <typename PerSample>
McEstimate mc_over_clamped_runs(const NetworkParams& params,
                                const SpikeRaster& exo,
                                const SpikeRaster& target, int samples,
                                std::uint64_t seed, PerSample&& value_of) {
  RngStream rng(seed);
  GlmNetwork net(params);
  std::vector<std::uint8_t> clamp(params.visible_count());
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    net.reset_state();
    double loss = 0.0;
    for (int t = 0; t < exo.horizon(); ++t) {
      for (int v = 0; v < params.visible_count(); ++v)
        clamp[v] = target.at(v, t);
      net.compute_potentials();
      StepResult r = net.sample(clamp.data(), rng);
      for (double l : r.visible_losses) loss += l;
      net.advance(exo.column(t), r.spikes);
    }
    const double x = value_of(loss);
    sum += x;
    sum_sq += x * x;
  }
  McEstimate est;
  est.mean = sum / samples;
  const double var =
      std::max(0.0, sum_sq / samples - est.mean * est.mean);
  est.std_error = std::sqrt(var / samples);
  return est;
}

}  // namespace

McEstimate mc_bound_estimate(const NetworkParams& params,
                             const SpikeRaster& exo, const SpikeRaster& target,
                             int samples, std::uint64_t seed) {
  return mc_over_clamped_runs(params, exo, target, samples, seed,
                              [](double loss) { return loss; });
}

McEstimate mc_likelihood_estimate(const NetworkParams& params,
                                  const SpikeRaster& exo,
                                  const SpikeRaster& target, int samples,
                                  std::uint64_t seed) {
  return mc_over_clamped_runs(params, exo, target, samples, seed,
                              [](double loss) { return std::exp(-loss); });
}

}  // namespace spikelink::snn
