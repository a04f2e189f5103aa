// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/nasa/nasa.hpp"

#include <cmath>

#include "snoopi/ad/ops.hpp"
#include "snoopi/diffusion/guidance.hpp"
#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/error.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::nasa {

using ad::Array;
using ad::Tape;
using ad::Var;

void NasaConfig::validate(std::size_t block_count) const {
  if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("nasa.alpha must be finite and >= 0");
  if (layers) {
    if (layers->empty()) throw ConfigError("nasa layer mask is empty; steering would be a silent no-op");
    for (std::size_t b : *layers)
      if (b >= block_count) throw ConfigError("nasa layer " + std::to_string(b) + " does not exist");
  }
}

Var nasa_combine(Var positive, Var negative, double alpha) { return ad::sub(positive, ad::scale(negative, alpha)); }

SteeredAttentionOutput nasa_attention(const Array& query, const Array& c_p, const Array& c_n, const Array& w_k,
                                      const Array& w_v, double alpha) {
  SNOOPI_REQUIRE(c_p.cols() == w_k.rows() && c_n.cols() == w_k.rows(),
                 "nasa_attention: embedding width does not match W_k");
  SNOOPI_REQUIRE(w_v.rows() == w_k.rows(), "nasa_attention: W_k and W_v disagree on input width");
  SNOOPI_REQUIRE(std::isfinite(alpha) && alpha >= 0.0, "nasa_attention: alpha must be finite and >= 0");
  Tape tape(ad::TapeMode::inference);
  Var q = tape.view(query);
  Var wk = tape.view(w_k);
  Var wv = tape.view(w_v);
  Var cp = tape.view(c_p);
  Var cn = tape.view(c_n);
  Var zp = model::attention(q, ad::matmul(cp, wk), ad::matmul(cp, wv));
  Var zn = model::attention(q, ad::matmul(cn, wk), ad::matmul(cn, wv));
  Var z = nasa_combine(zp, zn, alpha);
  return {zp.value(), zn.value(), z.value()};
}

Var NasaSteering::attend(Tape& tape, const model::AttentionSite& site) const {
  (void)tape;
  Var positive = model::attention(site.query, site.keys, site.values);
  if (!config_.steers(site.block)) return positive;
  const auto [keys, values] = site.project(site.embed(config_.negative));
  Var negative = model::attention(site.query, keys, values);
  return nasa_combine(positive, negative, config_.alpha);
}

Var EmbeddingSubtraction::attend(Tape& tape, const model::AttentionSite& site) const {
  Var neg = site.embed(negative_);
  Var mean_row = ad::matmul(tape.constant(Array({1, neg.rows()}, 1.0 / static_cast<double>(neg.rows()))), neg);
  Var context = ad::sub(site.context, ad::scale(ad::broadcast_rows(mean_row, site.context.rows()), alpha_));
  const auto [keys, values] = site.project(context);
  return model::attention(site.query, keys, values);
}

SteeredModel::SteeredModel(const model::DenoiserModel& model, NasaConfig config)
    : model_(&model), steering_(std::move(config)) {
  steering_.config().validate(model.block_count());
  model::validate_prompt(steering_.config().negative, model.config().vocab, model.config().max_prompt_length);
}

Array SteeredModel::predict(const Array& x_t, int t, const model::Prompt& prompt) const {
  return model_->predict_eps(x_t, t, prompt, &steering_);
}

Array SteeredModel::generate(const Array& z, const model::Prompt& prompt,
                             const diffusion::NoiseSchedule& schedule) const {
  return model::student_generate(*model_, z, prompt, schedule, &steering_);
}

SteeredModel install_nasa(const model::DenoiserModel& model, NasaConfig config) {
  if (model.block_count() == 0) throw ConfigError("model has no cross-attention layers");
  return SteeredModel(model, std::move(config));
}

namespace {

Array output_cfg_generate(const model::DenoiserModel& student, const Array& z, const model::Prompt& positive,
                          const model::Prompt& negative, double alpha, const diffusion::NoiseSchedule& schedule) {
  const int ts = model::student_timestep(schedule);
  const Array eps = diffusion::negative_cfg_combine(student.predict_eps(z, ts, negative),
                                                    student.predict_eps(z, ts, positive), 1.0 + alpha);
  const double inv = 1.0 / schedule.alpha(ts);
  const double s = schedule.sigma(ts);
  Array out(z.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z[i] - s * eps[i]) * inv;
  return out;
}

}  // namespace

std::vector<SweepRow> nasa_sweep(const model::DenoiserModel& student, const diffusion::NoiseSchedule& schedule,
                                 const oracle::GaussianMixture& mixture, const model::Prompt& positive,
                                 const model::Prompt& negative, const SweepOptions& options) {
  if (options.alphas.empty()) throw ConfigError("nasa sweep needs at least one alpha");
  const std::set<int> negative_classes = mixture.classes_for_prompt(negative);
  if (negative_classes.size() != 1) throw ConfigError("negative prompt must name exactly one class");
  const int negative_class = *negative_classes.begin();
  std::set<int> target = mixture.classes_for_prompt(positive);
  if (target.empty())
    for (int c = 0; c < mixture.class_count(); ++c) target.insert(c);
  target.erase(negative_class);
  if (target.empty()) throw ConfigError("positive prompt has no classes left after removing the negative class");

  const Array z = diffusion::sampler_noise(options.samples, student.data_dim(), options.seed);
  const Array reference = mixture.sample_classes(target, options.samples, derive_seed(options.seed, 1)).points;
  std::vector<SweepRow> rows;
  for (double alpha : options.alphas) {
    SweepRow row;
    row.alpha = alpha;
    switch (options.method) {
      case SweepMethod::nasa: {
        NasaConfig cfg{alpha, options.layers, negative};
        row.samples = install_nasa(student, cfg).generate(z, positive, schedule);
        break;
      }
      case SweepMethod::output_cfg:
        if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha must be finite and >= 0");
        row.samples = output_cfg_generate(student, z, positive, negative, alpha, schedule);
        break;
      case SweepMethod::embedding: {
        if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha must be finite and >= 0");
        EmbeddingSubtraction stub(negative, alpha);
        row.samples = model::student_generate(student, z, positive, schedule, &stub);
        break;
      }
    }
    row.removal_rate = metrics::removal_rate(mixture, row.samples, negative_class);
    double mass = 0.0;
    for (std::size_t i = 0; i < row.samples.rows(); ++i) {
      const Array x = row.samples.row(i);
      const oracle::Classification c = mixture.bayes_classify(x.data());
      for (int cls : target) mass += c.posterior[static_cast<std::size_t>(cls)];
    }
    row.alignment = mass / static_cast<double>(row.samples.rows());
    row.fd = metrics::frechet_distance(reference, row.samples).distance;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace snoopi::nasa
