// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/verify/gradient_suite.hpp"

#include <algorithm>

#include "snoopi/ad/ops.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/distill/vsd.hpp"
#include "snoopi/model/denoiser.hpp"
#include "snoopi/model/training.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/rng.hpp"

namespace snoopi::verify {

namespace {

using ad::Array;
using ad::Parameter;
using ad::Tape;
using ad::Var;

Array random_array(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Array a({rows, cols});
  for (double& v : a.data()) v = scale * rng.normal();
  return a;
}

/// Scalar read-out with fixed random weights so that every output entry
/// carries a distinct adjoint.
Var readout(Tape& tape, Var y, const Array& weights) { return sum(mul(y, tape.view(weights))); }

model::DenoiserConfig small_config() {
  model::DenoiserConfig c;
  c.data_dim = 2;
  c.vocab = 6;
  c.max_prompt_length = 3;
  c.embed_dim = 4;
  c.width = 6;
  c.key_dim = 3;
  c.blocks = 2;
  c.time_dim = 4;
  c.embed_init = 0.5;
  return c;
}

std::vector<model::Prompt> mixed_prompts(std::size_t rows) {
  const std::vector<model::Prompt> forms{model::Prompt::null(), model::Prompt{{1}}, model::Prompt{{2, 1}},
                                         model::Prompt{{3}}};
  std::vector<model::Prompt> out;
  for (std::size_t i = 0; i < rows; ++i) out.push_back(forms[i % forms.size()]);
  return out;
}

/// Random adapter factors so that both factors receive non-zero gradients.
void perturb_adapters(model::DenoiserModel& m, Rng& rng) {
  for (Parameter* p : m.lora_parameters())
    for (double& v : p->value().data()) v = 0.05 * rng.normal();
}

struct Cases {
  const SuiteOptions& options;
  SuiteReport report;
  Rng rng;

  void run(const std::string& name, const ad::ScalarFunction& f, std::span<Parameter* const> params,
           std::size_t subset = 0) {
    ad::GradcheckOptions go;
    go.max_coordinates_per_parameter = subset;
    go.seed = derive_seed(options.seed, report.cases.size());
    report.cases.push_back({name, ad::gradcheck(f, params, go)});
  }

  void affine() {
    Parameter w("w", random_array(5, 4, rng)), b("b", random_array(1, 4, rng));
    const Array x = random_array(3, 5, rng), out = random_array(3, 4, rng);
    std::vector<Parameter*> ps{&w, &b};
    run("affine+silu", [&](Tape& t) {
      Var y = add(matmul(t.constant(x), t.param(w)), broadcast_rows(t.param(b), 3));
      return readout(t, silu(y), out);
    }, ps);
  }

  void embedding_and_time() {
    Parameter table("table", random_array(6, 4, rng)), pos("positions", Array::matrix(4, 1, {3, 250, 600, 999}));
    const std::vector<std::size_t> idx{0, 3, 3, 5};
    const std::vector<double> freqs = ad::sinusoid_frequencies(3);
    const Array out = random_array(4, 10, rng);
    std::vector<Parameter*> ps{&table, &pos};
    run("embedding+sinusoid", [&](Tape& t) {
      const std::vector<Var> parts{gather_rows(t.param(table), idx), sinusoid(t.param(pos), freqs)};
      return readout(t, concat_cols(parts), out);
    }, ps);
  }

  void cross_attention() {
    Parameter wq("wq", random_array(5, 3, rng)), wk("wk", random_array(4, 3, rng)), wv("wv", random_array(4, 3, rng));
    const Array h = random_array(3, 5, rng), cp = random_array(2, 4, rng), cn = random_array(3, 4, rng);
    const Array out = random_array(3, 3, rng);
    std::vector<Parameter*> ps{&wq, &wk, &wv};
    run("cross-attention", [&](Tape& t) {
      Var q = matmul(t.constant(h), t.param(wq));
      Var c = t.constant(cp);
      return readout(t, model::attention(q, matmul(c, t.param(wk)), matmul(c, t.param(wv))), out);
    }, ps);
    run("steered-attention", [&](Tape& t) {
      Var q = matmul(t.constant(h), t.param(wq));
      Var p = t.constant(cp), n = t.constant(cn);
      Var zp = model::attention(q, matmul(p, t.param(wk)), matmul(p, t.param(wv)));
      Var zn = model::attention(q, matmul(n, t.param(wk)), matmul(n, t.param(wv)));
      return readout(t, nasa::nasa_combine(zp, zn, 0.7), out);
    }, ps);
  }

  void denoiser(const model::DenoiserConfig& config, const std::string& tag, std::size_t subset) {
    const auto schedule = diffusion::make_schedule(diffusion::ScheduleKind::cosine, 1000);
    const std::size_t rows = 8;
    const Array x_t = random_array(rows, config.data_dim, rng), eps = random_array(rows, config.data_dim, rng);
    std::vector<int> ts;
    for (std::size_t i = 0; i < rows; ++i) ts.push_back(static_cast<int>(rng.uniform_int(1, 1000)));
    const std::vector<model::Prompt> prompts = mixed_prompts(rows);

    model::DenoiserModel teacher(config, derive_seed(options.seed, 41));
    std::vector<Parameter*> all = teacher.parameter_pointers();
    run(tag + "denoising-loss", [&](Tape& t) {
      return model::denoising_loss(t, teacher, x_t, ts, prompts, eps);
    }, all, subset);

    const nasa::NasaSteering steering({0.5, std::nullopt, model::Prompt{{2}}});
    const Array out = random_array(rows, config.data_dim, rng);
    run(tag + "steered-forward", [&](Tape& t) {
      return readout(t, teacher.forward(t, t.constant(x_t), ts, model::Prompt{{1}}, &steering), out);
    }, all, subset);

    model::DenoiserModel adapted = teacher;
    adapted.attach_lora({4, 8.0, derive_seed(options.seed, 42)});
    perturb_adapters(adapted, rng);
    std::vector<Parameter*> lora = adapted.lora_parameters();
    run(tag + "lora-denoising-loss", [&](Tape& t) {
      return model::denoising_loss(t, adapted, x_t, ts, prompts, eps);
    }, lora, subset);

    model::DenoiserModel student = teacher;
    student.set_role(model::Role::student);
    for (Parameter* p : student.parameter_pointers())
      for (double& v : p->value().data()) v += 0.01 * rng.normal();
    const int t_dir = 500;
    const Array x_dir = random_array(rows, config.data_dim, rng);
    const Array direction = distill::vsd_direction(teacher, adapted, x_dir, t_dir, model::Prompt{{2}}, 3.0, 1.5,
                                                   distill::timestep_weight(distill::Weighting::sigma_squared,
                                                                            schedule, t_dir));
    const Array z = random_array(rows, config.data_dim, rng);
    std::vector<Parameter*> sp = student.parameter_pointers();
    run(tag + "distillation-surrogate", [&](Tape& t) {
      Var x0 = model::student_generate(t, student, t.constant(z), model::Prompt{{2}}, schedule);
      return distill::vsd_surrogate(x0, direction);
    }, sp, subset);
  }
};

}  // namespace

double SuiteReport::max_error() const {
  double worst = 0.0;
  for (const GradientCase& c : cases) worst = std::max(worst, c.result.max_relative_error);
  return worst;
}

SuiteReport run_gradient_suite(const SuiteOptions& options) {
  Cases cases{options, {}, Rng(derive_seed(options.seed, 40))};
  cases.report.tolerance = options.tolerance;
  cases.affine();
  cases.embedding_and_time();
  cases.cross_attention();
  cases.denoiser(small_config(), "small/", 0);
  if (options.include_default_size) cases.denoiser({}, "default/", options.default_size_coordinates);
  return cases.report;
}

}  // namespace snoopi::verify
