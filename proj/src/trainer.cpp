#include "breakeven/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

namespace {

// Stream identifiers for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kGramStream = 3;
constexpr std::uint64_t kLanczosStream = 4;
constexpr std::uint64_t kSubsetStream = 5;

}  // namespace

double LrSchedule::lr_at(double eta, std::size_t epoch) const {
  if (kind == Kind::step_decay && epoch >= decay_epoch) return eta * factor;
  return eta;
}

std::size_t SpectraConfig::resolved_batch_size(std::size_t n_train) const {
  if (batch_size) return *batch_size;
  return std::min(n_train, std::max<std::size_t>(8, n_train / 25));
}

HvpMethod SpectraConfig::resolved_method(const MlpSpec& spec) const {
  if (hvp_method) return *hvp_method;
  return spec.has_batch_norm() ? HvpMethod::fd : HvpMethod::pearlmutter;
}

void RunConfig::validate() const {
  model.validate();
  if (!std::isfinite(eta) || !(eta > 0.0)) throw SchemaError("eta", "must be > 0");
  if (batch_size < 1) throw SchemaError("batch_size", "must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw SchemaError("momentum", "must be in [0, 1)");
  if (eval_every < 1) throw SchemaError("eval_every", "must be >= 1");
  if (eval_every_examples && (*eval_every_examples == 0 || *eval_every_examples % batch_size != 0))
    throw SchemaError("eval_every_examples", "must be a positive multiple of batch_size");
  if (schedule.kind == LrSchedule::Kind::step_decay && !(schedule.factor > 0.0))
    throw SchemaError("schedule.factor", "must be > 0");
  if (spectra.num_batches < 2) throw SchemaError("spectra.num_batches", "must be >= 2");
  if (spectra.hessian_k < 1) throw SchemaError("spectra.hessian_k", "must be >= 1");
  if (spectra.lanczos_iters < spectra.hessian_k)
    throw SchemaError("spectra.lanczos_iters", "must be >= hessian_k");
  if (!(spectra.eval_subset_fraction > 0.0 && spectra.eval_subset_fraction <= 1.0))
    throw SchemaError("spectra.eval_subset_fraction", "must be in (0, 1]");
  if (spectra.g_ratio_k + 1 > spectra.num_batches)
    throw SchemaError("spectra.g_ratio_k", "must be <= num_batches - 1");
  if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0))
    throw SchemaError("accuracy_threshold", "must be in [0, 1]");
  if (epochs == 0) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
}

void RunConfig::validate_against(std::size_t n_train) const {
  if (batch_size > n_train) throw SchemaError("batch_size", "exceeds training set size");
  if (spectra.enabled && spectra.resolved_batch_size(n_train) > n_train)
    throw SchemaError("spectra.batch_size", "exceeds training set size");
}

std::size_t RunConfig::eval_interval() const {
  return eval_every_examples ? *eval_every_examples / batch_size : eval_every;
}

void sgd_step(std::span<double> theta, std::span<const double> g, std::span<double> velocity,
              double eta, double beta) {
  if (theta.size() != g.size() || velocity.size() != g.size())
    throw Error(ErrorKind::DimensionMismatch, "sgd_step");
  for (std::size_t i = 0; i < g.size(); ++i) {
    velocity[i] = beta * velocity[i] + g[i];
    theta[i] -= eta * velocity[i];
  }
}

double delta_loss(const MlpSpec& spec, std::span<const double> before,
                  std::span<const double> after, const Batch& data, const BnMode& bn) {
  return forward_loss(spec, before, data, bn).mean_loss -
         forward_loss(spec, after, data, bn).mean_loss;
}

std::uint64_t init_seed(const RunConfig& config) { return derive_seed(config.seed, kInitStream); }

std::vector<std::vector<std::size_t>> epoch_batches(const RunConfig& config, std::size_t n_train,
                                                    std::size_t epoch) {
  std::vector<std::size_t> perm = iota_indices(n_train);
  Rng rng(derive_seed(config.seed, kShuffleStream, epoch));
  rng.shuffle(perm);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n_train; start += config.batch_size) {
    const std::size_t end = std::min(n_train, start + config.batch_size);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

namespace {

template <class T, class Key>
void take_max(const std::vector<MetricRecord>& log, Key key, std::optional<T>& best,
              std::optional<std::size_t>& step) {
  for (const auto& r : log) {
    const std::optional<double> v = key(r);
    if (v && (!best || *v > *best)) {
      best = *v;
      step = r.step;
    }
  }
}

struct RunContext {
  const RunConfig& config;
  const Dataset& data;
  MlpSpec spec;
  Batch eval_subset;
  std::size_t gram_batch = 0;
  HvpMethod method = HvpMethod::pearlmutter;
};

MetricRecord instrument(const RunContext& ctx, std::size_t step, std::size_t epoch, double lr,
                        std::span<const double> theta, std::span<const double> minibatch_grad,
                        std::span<const double> velocity, const BnMode& frozen) {
  const RunConfig& cfg = ctx.config;
  MetricRecord rec;
  rec.step = step;
  rec.epoch = epoch;
  rec.lr_current = lr;

  const ForwardResult train = forward_loss(ctx.spec, theta, ctx.data.train, frozen);
  rec.train_loss = train.mean_loss;
  rec.train_acc = train.accuracy;
  if (ctx.data.val.n > 0) rec.val_acc = forward_loss(ctx.spec, theta, ctx.data.val, frozen).accuracy;

  ParamVector after(theta.begin(), theta.end());
  Vec v(velocity.begin(), velocity.end());
  sgd_step(after, minibatch_grad, v, lr, cfg.momentum);
  try {
    rec.delta_loss = train.mean_loss - forward_loss(ctx.spec, after, ctx.data.train, frozen).mean_loss;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFinite) throw;
  }

  if (cfg.spectra.enabled) {
    const MinibatchGradients mg = sample_minibatch_gradients(
        ctx.spec, theta, ctx.data.train, cfg.spectra.num_batches, ctx.gram_batch,
        derive_seed(cfg.seed, kGramStream, step), frozen);
    const GramMatrix gram = gram_from_gradients(mg.grads, mg.mean);
    const KSpectrum ks = k_spectrum(gram);
    rec.lambda_k1 = ks.lambda_k1;
    rec.lambda_k_star = ks.lambda_k_star;
    rec.cond_ratio = ks.cond_ratio;
    rec.trace_k = ks.trace_k;
    rec.gram_spectrum = ks.gram_spectrum;
    try {
      const auto top = k_top_eigvecs(mg.grads, mg.mean, gram, cfg.spectra.g_ratio_k);
      rec.g_ratio = grad_subspace_ratio(minibatch_grad, top);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::DegenerateProjection)
        throw;
    }
    const HessianSpectrum hs =
        hessian_spectrum(ctx.spec, theta, ctx.eval_subset, cfg.spectra.hessian_k, ctx.method,
                         cfg.spectra.lanczos_iters, derive_seed(cfg.seed, kLanczosStream, step),
                         frozen);
    rec.lambda_h_top = hs.top;
    rec.negative_ritz = hs.negative_ritz;
  }
  for (std::size_t l = 0; l < ctx.spec.num_hidden(); ++l)
    if (ctx.spec.batch_norm[l]) rec.bn_gamma_norms.push_back(bn_gamma_norm(ctx.spec, theta, l));
  return rec;
}

}  // namespace

RunSummary summarize(const std::vector<MetricRecord>& log, double accuracy_threshold,
                     bool diverged) {
  RunSummary s;
  s.diverged = diverged;
  take_max<double>(log, [](const MetricRecord& r) { return r.lambda_k1; }, s.max_lambda_k1,
                   s.max_lambda_k1_step);
  take_max<double>(log, [](const MetricRecord& r) { return r.cond_ratio; }, s.max_cond_ratio,
                   s.max_cond_ratio_step);
  take_max<double>(
      log,
      [](const MetricRecord& r) {
        return r.lambda_h_top.empty() ? std::nullopt : std::optional<double>(r.lambda_h_top[0]);
      },
      s.max_lambda_h1, s.max_lambda_h1_step);
  std::optional<std::size_t> unused;
  take_max<double>(log, [](const MetricRecord& r) { return r.trace_k; }, s.max_trace_k, unused);
  for (const auto& r : log) {
    if (!s.threshold_epoch && r.train_acc && *r.train_acc >= accuracy_threshold)
      s.threshold_epoch = r.epoch;
    if (!s.first_negative_delta_loss_step && r.delta_loss && *r.delta_loss < 0.0)
      s.first_negative_delta_loss_step = r.step;
    if (r.lambda_k1 && !r.lambda_h_top.empty() && r.lambda_h_top[0] > 0.0) {
      s.alpha_series.push_back(*r.lambda_k1 / r.lambda_h_top[0]);
    } else {
      s.alpha_series.push_back(std::nullopt);
    }
  }
  return s;
}

namespace {

// MSE on a classification set regresses one-hot label vectors.
void attach_one_hot(Batch& b, std::size_t classes) {
  b.target_dim = classes;
  b.targets.assign(b.n * classes, 0.0);
  for (std::size_t i = 0; i < b.n; ++i) {
    const auto label = static_cast<std::size_t>(b.labels[i]);
    if (label >= classes) throw Error(ErrorKind::DimensionMismatch, "label exceeds output width");
    b.targets[i * classes + label] = 1.0;
  }
}

}  // namespace

RunResult run_training(const RunConfig& config, const Dataset& data, const RunHooks& hooks) {
  config.validate();
  config.validate_against(data.train.n);
  if (config.model.loss == LossKind::mse && data.train.targets.empty()) {
    Dataset with_targets = data;
    for (Batch* b : {&with_targets.all, &with_targets.train, &with_targets.val})
      attach_one_hot(*b, config.model.output_dim());
    return run_training(config, with_targets, hooks);
  }

  RunContext ctx{config, data, config.model, {}, 0, HvpMethod::pearlmutter};
  ctx.spec.seed = init_seed(config);
  ctx.method = config.spectra.resolved_method(ctx.spec);
  ctx.gram_batch = config.spectra.resolved_batch_size(data.train.n);
  {
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.spectra.eval_subset_fraction *
                                                  static_cast<double>(data.train.n))));
    std::vector<std::size_t> rows = iota_indices(data.train.n);
    Rng rng(derive_seed(config.seed, kSubsetStream));
    rng.partial_shuffle(rows, count);
    rows.resize(count);
    std::sort(rows.begin(), rows.end());
    ctx.eval_subset = data.train.select(rows);
  }

  RunResult result;
  ParamVector theta = init_params(ctx.spec);
  Vec velocity(theta.size(), 0.0);
  const bool bn = ctx.spec.has_batch_norm();
  BnStats running = initial_bn_stats(ctx.spec);
  bool diverged = false;
  try {
    // Running statistics start from the population statistics at init.
    if (bn) running = forward_loss(ctx.spec, theta, data.train, BnMode::batch()).batch_stats;

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs && !diverged; ++epoch) {
      const double lr = config.schedule.lr_at(config.eta, epoch);
      for (const auto& rows : epoch_batches(config, data.train.n, epoch)) {
        const Batch batch = data.train.select(rows);
        const LossAndGrad lg = loss_and_grad(ctx.spec, theta, batch, BnMode::batch());
        if (step % config.eval_interval() == 0) {
          if (hooks.on_checkpoint) hooks.on_checkpoint(step, Checkpoint{theta, running});
          result.log.push_back(instrument(ctx, step, epoch, lr, theta, lg.grad, velocity,
                                          BnMode::frozen(running)));
        }
        if (bn) ema_update(running, lg.forward.batch_stats, kBnEmaDecay);
        sgd_step(theta, lg.grad, velocity, lr, config.momentum);
        ++step;
        if (!all_finite(theta)) throw Error(ErrorKind::NonFinite, "parameters overflowed");
        if (hooks.on_step) hooks.on_step(step, theta);
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFinite) throw;
    diverged = true;
    result.divergence_reason = e.what();
  }
  result.summary = summarize(result.log, config.accuracy_threshold, diverged);
  result.final_theta = std::move(theta);
  result.final_bn_stats = std::move(running);
  return result;
}

RunResult run_training(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  return run_training(config, make_dataset(config.dataset, config.data_seed), hooks);
}

BreakEvenIndicators breakeven_indicators(const std::vector<MetricRecord>& log) {
  std::vector<const MetricRecord*> complete;
  for (const auto& r : log)
    if (r.lambda_k1 && !r.lambda_h_top.empty()) complete.push_back(&r);
  if (complete.size() < 5)
    throw Error(ErrorKind::InsufficientData, "need >= 5 checkpoints with spectra");

  BreakEvenIndicators out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < complete.size(); ++i)
    if (*complete[i]->lambda_k1 > *complete[best]->lambda_k1) best = i;
  out.argmax_lambda_k1_step = complete[best]->step;
  for (const auto& r : log)
    if (r.delta_loss && *r.delta_loss < 0.0) {
      out.first_negative_delta_loss_step = r.step;
      break;
    }
  std::vector<double> k1, h1;
  for (std::size_t i = 0; i <= best; ++i) {
    k1.push_back(*complete[i]->lambda_k1);
    h1.push_back(complete[i]->lambda_h_top[0]);
  }
  out.early_points = k1.size();
  out.lambda_k1_lambda_h1_pearson = pearson(k1, h1);
  return out;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window <= 1) return {x.begin(), x.end()};
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    if (i >= window) sum -= x[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

std::string encode_snapshot(std::span<const double> theta) {
  std::string out = "BKLB";
  put_le(out, kSnapshotVersion, 4);
  put_le(out, theta.size(), 8);
  for (double v : theta) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

ParamVector decode_snapshot(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != "BKLB")
    throw Error(ErrorKind::Io, "not a parameter snapshot");
  if (get_le(bytes, 4, 4) != kSnapshotVersion)
    throw Error(ErrorKind::Io, "unsupported snapshot version");
  const std::uint64_t d = get_le(bytes, 8, 8);
  if (bytes.size() != 16 + 8 * d) throw Error(ErrorKind::Io, "truncated snapshot");
  ParamVector theta(d);
  for (std::size_t i = 0; i < d; ++i)
    theta[i] = std::bit_cast<double>(get_le(bytes, 16 + 8 * i, 8));
  return theta;
}

}  // namespace breakeven
