// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdio>
#include <map>
#include <memory>

#include "common.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/io/table.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/verify/gradient_suite.hpp"

namespace snoopi::cli {

namespace {

struct EvalArgs {
  ConfigOptions config;
  std::string real;
  std::string fake;
  std::string out;
  std::optional<int> prompted_class;
  std::optional<int> negative_class;
};

int majority_label(const oracle::GaussianMixture& gm, const ad::Array& x) {
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < x.rows(); ++i) ++counts[gm.bayes_classify(x.row(i).data()).label];
  int best = 0;
  std::size_t most = 0;
  for (const auto& [label, n] : counts)
    if (n > most) {
      best = label;
      most = n;
    }
  return best;
}

int run_eval(const EvalArgs& a) {
  const io::RunConfig cfg = a.config.build();
  const auto gm = io::mixture_from(cfg);
  const io::PointsTable real = io::read_points_csv(a.real);
  const io::PointsTable fake = io::read_points_csv(a.fake);

  metrics::EvalReport report;
  const metrics::FrechetResult fd = metrics::frechet_distance(real.points, fake.points);
  report.fd = fd.distance;
  report.fd_regularized = fd.regularized;
  const metrics::PrecisionRecall pr =
      metrics::precision_recall(real.points, fake.points, static_cast<int>(cfg.integer("eval.k")));
  report.precision = pr.precision;
  report.recall = pr.recall;
  const int cls = a.prompted_class.value_or(majority_label(gm, fake.points));
  report.alignment = metrics::alignment(gm, fake.points, cls);
  if (a.negative_class) report.removal_rate = metrics::removal_rate(gm, fake.points, *a.negative_class);
  report.n_real = real.points.rows();
  report.n_fake = fake.points.rows();
  report.seed = static_cast<std::uint64_t>(cfg.integer("seed"));

  const std::string text = provenance_of(cfg) + metrics::EvalReport::csv_header() + "\n" + report.csv_row() + "\n";
  if (a.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_text(a.out, text);
  }
  return kExitOk;
}

struct GradcheckArgs {
  std::optional<std::int64_t> seed;
  bool quick = false;
  std::size_t coordinates = 64;
};

int run_gradcheck(const GradcheckArgs& a) {
  verify::SuiteOptions options;
  options.seed = static_cast<std::uint64_t>(a.seed.value_or(0));
  options.include_default_size = !a.quick;
  options.default_size_coordinates = a.coordinates;
  const auto start = std::chrono::steady_clock::now();
  const verify::SuiteReport report = verify::run_gradient_suite(options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const verify::GradientCase& c : report.cases)
    std::printf("%-44s max relative error %.3e over %zu coordinates\n", c.name.c_str(), c.result.max_relative_error,
                c.result.coordinates);
  std::printf("max error %.3e (tolerance %.0e) in %.1f s: %s\n", report.max_error(), report.tolerance, seconds,
              report.passed() ? "pass" : "FAIL");
  if (!report.passed()) throw ExitRequest(kExitVerification, "gradient check failed");
  return kExitOk;
}

}  // namespace

CLI::App* add_eval(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<EvalArgs>();
  CLI::App* sub = app.add_subcommand("eval", "compare two points CSVs: FD, precision, recall, alignment, removal");
  args->config.attach(*sub);
  sub->add_option("--real", args->real, "reference points CSV")->required();
  sub->add_option("--fake", args->fake, "generated points CSV")->required();
  sub->add_option("--out", args->out, "report CSV (default stdout)");
  sub->add_option("--class", args->prompted_class, "class for alignment (default: majority label of --fake)");
  sub->add_option("--negative-class", args->negative_class, "class whose removal rate is reported");
  sub->callback([args, &exit_code] { exit_code = run_eval(*args); });
  return sub;
}

CLI::App* add_gradcheck(CLI::App& app, int& exit_code) {
  auto args = std::make_shared<GradcheckArgs>();
  CLI::App* sub = app.add_subcommand("gradcheck", "central-difference check of every layer and both losses");
  sub->add_option("--seed", args->seed, "seed for the checked models and coordinate subsets");
  sub->add_flag("--quick", args->quick, "skip the default-size model cases");
  sub->add_option("--coordinates", args->coordinates, "coordinates per default-size case");
  sub->callback([args, &exit_code] { exit_code = run_gradcheck(*args); });
  return sub;
}

}  // namespace snoopi::cli
