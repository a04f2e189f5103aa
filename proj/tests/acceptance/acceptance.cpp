// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance criterion end to end and prints one PASS or FAIL line
// per criterion. Intermediate tables are written under --work.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snoopi/diffusion/sampler.hpp"
#include "snoopi/distill/evaluate.hpp"
#include "snoopi/error.hpp"
#include "snoopi/experiments.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/io/config.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/setup.hpp"
#include "snoopi/io/table.hpp"
#include "snoopi/metrics/metrics.hpp"
#include "snoopi/nasa/nasa.hpp"
#include "snoopi/oracle/mixture.hpp"
#include "snoopi/oracle/task.hpp"
#include "snoopi/rng.hpp"
#include "snoopi/verify/gradient_suite.hpp"

namespace fs = std::filesystem;
using namespace snoopi;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<double>& v, int digits = 4) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i], digits);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  io::write_file(path, text);
}

/// At most one adjacent step against `direction` (+1 rising, -1 falling),
/// and that step no larger than `tolerance`.
bool trend_holds(const std::vector<double>& v, int direction, double tolerance) {
  int inversions = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double against = -direction * (v[i] - v[i - 1]);
    if (against > 0.0) {
      ++inversions;
      if (against > tolerance) return false;
    }
  }
  return inversions <= 1;
}

struct Context {
  fs::path recipes;
  fs::path work;
  std::string cli;

  io::RunConfig recipe(const std::string& name) const { return io::RunConfig::load((recipes / name / "config.cfg").string()); }

  // Lazily built and shared between criteria.
  std::optional<io::Checkpoint> teacher;
  std::optional<oracle::EpsBenchmark> teacher_benchmark;
  double teacher_seconds = 0.0;
  std::optional<model::DenoiserModel> removal_student;
};

const io::Checkpoint& teacher(Context& ctx) {
  if (ctx.teacher) return *ctx.teacher;
  const io::RunConfig cfg = ctx.recipe("table1-cfg-sweep");
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto policy = io::prompt_policy_from(cfg);
  const auto train = io::teacher_config_from(cfg);
  model::DenoiserModel m(io::model_config_from(cfg), train.seed, model::Role::teacher);
  std::fprintf(stderr, "training teacher (%lld steps)\n", static_cast<long long>(train.steps));
  const Stopwatch watch;
  const std::vector<double> losses = model::train_teacher(m, oracle::make_training_source(gm, policy), schedule, train);
  ctx.teacher_seconds = watch.seconds();
  ctx.teacher_benchmark = oracle::heldout_eps_mse(m, gm, schedule, static_cast<std::size_t>(cfg.integer("train.eval_samples")),
                                                  derive_seed(train.seed, 90), policy);
  const io::CheckpointMeta meta = io::checkpoint_meta(cfg, model::Role::teacher);
  io::save_checkpoint(ctx.work / "teacher.snpk", m, meta);
  ctx.teacher = io::Checkpoint{meta, std::move(m)};
  return *ctx.teacher;
}

const model::DenoiserModel& removal_student(Context& ctx) {
  if (ctx.removal_student) return *ctx.removal_student;
  const io::RunConfig cfg = ctx.recipe("table4-removal");
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto prompts = io::parse_prompt_list(cfg.text("distill.prompts"));
  std::fprintf(stderr, "distilling the removal student\n");
  distill::DistillResult r = distill::distill(io::distill_config_from(cfg), teacher(ctx).model, prompts, schedule,
                                              distill::make_evaluator(gm, schedule, io::eval_protocol_from(cfg, prompts)));
  write_text(ctx.work / "removal_student.trace.csv",
             io::provenance(static_cast<std::uint64_t>(cfg.integer("seed")), cfg.hash()) + distill::DistillTrace::csv_header() + "\n" +
                 r.trace.csv_body());
  io::save_checkpoint(ctx.work / "removal_student.snpk", r.student, io::checkpoint_meta(cfg, model::Role::student));
  ctx.removal_student = std::move(r.student);
  return *ctx.removal_student;
}

// 1. Gradient suite.
Verdict gradients(Context&) {
  const Stopwatch watch;
  const verify::SuiteReport report = verify::run_gradient_suite();
  const double s = watch.seconds();
  return {report.passed() && s < 60.0, std::to_string(report.cases.size()) + " cases, max relative error " +
                                           io::format_double(report.max_error()) + " (< 1e-4), " + fmt(s, 1) +
                                           " s (< 60 s)"};
}

// 2. Teacher convergence.
Verdict teacher_convergence(Context& ctx) {
  teacher(ctx);
  const double reduction = ctx.teacher_benchmark->reduction();
  return {reduction >= 0.8 && ctx.teacher_seconds < 600.0,
          "held-out eps-MSE " + io::format_double(ctx.teacher_benchmark->model_mse) + " vs zero predictor " +
              io::format_double(ctx.teacher_benchmark->zero_mse) + ", reduction " + fmt(reduction) + " (>= 0.80), " +
              fmt(ctx.teacher_seconds, 1) + " s (< 600 s)"};
}

// 3. Oracle sampling.
Verdict oracle_sampling(Context& ctx) {
  const io::RunConfig cfg = ctx.recipe("table1-cfg-sweep");
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const oracle::MixtureOracle eps(gm, schedule);
  diffusion::SamplerOptions options;
  options.steps = 100;
  options.count = 8192;
  options.seed = derive_seed(static_cast<std::uint64_t>(cfg.integer("seed")), 300);
  options.alpha_floor = cfg.real("sample.alpha_floor");
  const ad::Array x = diffusion::ddim_sample(eps, schedule, model::Prompt::null(), std::nullopt,
                                             diffusion::GuidanceConfig::fixed(1.0), options);
  const ad::Array ref = gm.sample(8192, derive_seed(options.seed, 1)).points;
  const double fd = metrics::frechet_distance(ref, x).distance;
  write_text(ctx.work / "oracle_ddim.csv", io::provenance(options.seed, cfg.hash()) +
                                               io::points_csv(x, std::vector<std::string>(x.rows(), "0"), options.seed));
  return {fd < 0.02, "FD " + io::format_double(fd) + " (< 0.02) at n = 8192, 100 steps"};
}

// 4. Guidance sweep trend.
Verdict cfg_trend(Context& ctx) {
  const io::RunConfig cfg = ctx.recipe("table1-cfg-sweep");
  const auto rows = experiments::cfg_sweep(teacher(ctx).model, io::schedule_from(cfg), io::mixture_from(cfg),
                                           io::cfg_sweep_options_from(cfg));
  write_text(ctx.work / "cfg_sweep.csv", io::provenance(static_cast<std::uint64_t>(cfg.integer("seed")), cfg.hash()) +
                                             experiments::cfg_sweep_csv(rows));
  std::vector<double> p, r;
  for (const auto& row : rows) p.push_back(row.precision), r.push_back(row.recall);
  const bool ok_p = trend_holds(p, +1, 0.02), ok_r = trend_holds(r, -1, 0.02);
  return {ok_p && ok_r, "precision " + join(p) + (ok_p ? " (non-decreasing)" : " (NOT non-decreasing)") + "; recall " +
                            join(r) + (ok_r ? " (non-increasing)" : " (NOT non-increasing)")};
}

std::vector<experiments::DistillRun> run_ablation(Context& ctx, const std::string& recipe,
                                                  const std::vector<std::string>& modes) {
  const io::RunConfig cfg = ctx.recipe(recipe);
  const auto schedule = io::schedule_from(cfg);
  const auto gm = io::mixture_from(cfg);
  const auto prompts = io::parse_prompt_list(cfg.text("distill.prompts"));
  std::vector<experiments::DistillArm> arms;
  for (const std::string& mode : modes) {
    io::RunConfig arm = cfg;
    arm.set("distill.mode", mode);
    arms.push_back({mode, io::distill_config_from(arm)});
  }
  experiments::ArmOptions options;
  options.protocol = io::eval_protocol_from(cfg, prompts);
  options.final_samples = 8192;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  std::fprintf(stderr, "%s: %zu distillation runs\n", recipe.c_str(), arms.size() * seeds.size());
  auto runs = experiments::run_arms(arms, seeds, teacher(ctx).model, prompts, schedule, gm, options);
  write_text(ctx.work / (recipe + ".csv"), io::provenance(0, cfg.hash()) + experiments::runs_csv(runs));
  return runs;
}

std::map<std::string, std::vector<double>> final_fds(const std::vector<experiments::DistillRun>& runs) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : runs) out[r.arm].push_back(r.final_eval.fd);
  return out;
}

// 5. Stability under a sensitive configuration.
Verdict stability(Context& ctx) {
  teacher(ctx);
  const Stopwatch watch;
  const auto fds = final_fds(run_ablation(ctx, "fig2-stability", {"none", "both"}));
  const double s = watch.seconds();
  const auto fixed = experiments::mean_std(fds.at("none"));
  const auto random = experiments::mean_std(fds.at("both"));
  const bool a = random.mean <= fixed.mean, b = random.std < fixed.std;
  return {a && b && s < 3600.0,
          "fixed kappa FD " + join(fds.at("none")) + " (mean " + fmt(fixed.mean) + ", std " + fmt(fixed.std) +
              "); random kappa FD " + join(fds.at("both")) + " (mean " + fmt(random.mean) + ", std " +
              fmt(random.std) + "); mean " + (a ? "ok" : "WORSE") + ", std " + (b ? "ok" : "NOT smaller") + ", " +
              fmt(s, 0) + " s (< 3600 s)"};
}

// 6. Ablation ordering.
Verdict ablation(Context& ctx) {
  const auto fds = final_fds(run_ablation(ctx, "table3-ablation", {"none", "teacher", "lora", "both"}));
  int both_wins = 0, lora_wins = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    both_wins += fds.at("both")[i] <= fds.at("none")[i];
    lora_wins += fds.at("lora")[i] < fds.at("teacher")[i];
  }
  std::string detail;
  for (const char* m : {"none", "teacher", "lora", "both"}) detail += std::string(m) + " " + join(fds.at(m)) + "; ";
  detail += "both <= none on " + std::to_string(both_wins) + "/3, lora < teacher on " + std::to_string(lora_wins) +
            "/3 (need 2/3 each)";
  return {both_wins >= 2 && lora_wins >= 2, detail};
}

std::vector<nasa::SweepRow> removal_sweep(Context& ctx, const std::string& recipe) {
  const io::RunConfig cfg = ctx.recipe(recipe);
  const auto rows = nasa::nasa_sweep(removal_student(ctx), io::schedule_from(cfg), io::mixture_from(cfg),
                                     model::Prompt::parse(cfg.text("nasa.positive")),
                                     model::Prompt::parse(cfg.text("nasa.negative")), io::nasa_sweep_options_from(cfg));
  std::string table = io::provenance(static_cast<std::uint64_t>(cfg.integer("seed")), cfg.hash()) +
                      "alpha,removal_rate,alignment,fd\n";
  for (const auto& r : rows)
    table += io::format_double(r.alpha) + "," + io::format_double(r.removal_rate) + "," +
             io::format_double(r.alignment) + "," + io::format_double(r.fd) + "\n";
  write_text(ctx.work / (recipe + ".csv"), table);
  return rows;
}

// 7. Feature removal.
Verdict removal(Context& ctx) {
  const auto rows = removal_sweep(ctx, "table4-removal");
  double base = NAN, steered = NAN;
  for (const auto& r : rows) {
    if (r.alpha == 0.0) base = r.removal_rate;
    if (r.alpha == 0.5) steered = r.removal_rate;
  }
  const bool ok_base = std::abs(base - 0.5) <= 0.10, ok_steer = steered >= 0.90;
  return {ok_base && ok_steer, "removal at alpha 0 " + fmt(base) + (ok_base ? " (within 0.10 of 0.50)" : " (OFF prior)") +
                                   ", at alpha 0.5 " + fmt(steered) + (ok_steer ? " (>= 0.90)" : " (< 0.90)")};
}

// 8. Removal against alpha.
Verdict alpha_sweep(Context& ctx) {
  const auto rows = removal_sweep(ctx, "fig5-alpha-sweep");
  std::vector<double> rates;
  for (const auto& r : rows) rates.push_back(r.removal_rate);
  const bool ok = trend_holds(rates, +1, 0.02);
  return {ok, "removal " + join(rates) + " over alpha 0..1" + (ok ? " (non-decreasing)" : " (NOT non-decreasing)")};
}

// 9. Exact identities.
Verdict identities(Context& ctx) {
  const io::RunConfig cfg = ctx.recipe("table3-ablation");
  const auto schedule = io::schedule_from(cfg);
  const model::DenoiserModel& base = teacher(ctx).model;
  const model::DenoiserModel& student = removal_student(ctx);
  const model::Prompt p = model::Prompt::of({1}), neg = model::Prompt::of({2});
  const ad::Array z = diffusion::sampler_noise(512, 2, 901);
  std::vector<std::string> failures;

  // Steering at alpha 0.
  const bool nasa_zero = nasa::install_nasa(student, {0.0, std::nullopt, neg}).generate(z, p, schedule)
                             .bit_equal(model::student_generate(student, z, p, schedule));
  if (!nasa_zero) failures.push_back("NASA alpha = 0");

  // Same positive and negative prompt: (1 - alpha) Z+ at the first layer only.
  {
    const double alpha = 0.4;
    model::DenoiserModel scaled = student;
    for (double& v : scaled.find_parameter("block0.attn.o.weight")->value().data()) v *= 1.0 - alpha;
    const ad::Array steered = nasa::install_nasa(student, {alpha, std::set<std::size_t>{0}, p}).predict(z, 664, p);
    const double err = ad::max_abs_diff(steered, scaled.predict_eps(z, 664, p));
    if (!(err < 1e-12)) failures.push_back("c_n = c_p layer identity (" + io::format_double(err) + ")");
  }

  // Degenerate random interval against fixed guidance.
  {
    distill::DistillConfig fixed = io::distill_config_from(cfg);
    fixed.steps = 40;
    fixed.batch = 16;
    fixed.eval_every = 1000000;
    distill::DistillConfig uniform = fixed;
    fixed.set_mode(distill::AblationMode::none, 2.5, 0.5, 4.0);
    uniform.set_mode(distill::AblationMode::both, 4.5, 2.5, 2.5);
    const auto prompts = io::parse_prompt_list(cfg.text("distill.prompts"));
    const auto a = distill::distill(fixed, base, prompts, schedule);
    const auto b = distill::distill(uniform, base, prompts, schedule);
    bool same = a.trace.csv_body() == b.trace.csv_body();
    for (std::size_t i = 0; same && i < a.student.parameters().size(); ++i)
      same = a.student.parameters()[i].value().bit_equal(b.student.parameters()[i].value());
    if (!same) failures.push_back("kappa_min = kappa_max trace identity");
  }

  // Zero adapter.
  {
    model::DenoiserModel lora = base;
    lora.attach_lora({64, 128.0, 5});
    bool same = true;
    for (int t : {20, 500, 980}) same = same && lora.predict_eps(z, t, p).bit_equal(base.predict_eps(z, t, p));
    if (!same) failures.push_back("LoRA B = 0");
  }

  // Forward then inverse diffusion.
  double worst = 0.0;
  {
    const ad::Array x0 = io::mixture_from(cfg).sample(256, 902).points;
    const ad::Array eps = diffusion::sampler_noise(256, 2, 903);
    for (int t = 0; t < schedule.T(); ++t) {
      if (!(schedule.alpha(t) > 0.0)) continue;
      const ad::Array back = diffusion::invert_diffuse(diffusion::forward_diffuse(x0, t, eps, schedule), schedule);
      worst = std::max(worst, ad::max_abs_diff(back, x0));
    }
    if (!(worst < 1e-10)) failures.push_back("diffusion round trip (" + io::format_double(worst) + ")");
  }

  std::string detail = "5 identities";
  if (failures.empty()) return {true, detail + " hold; round-trip max error " + io::format_double(worst)};
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {false, detail};
}

// 10. Command determinism.
int shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism(Context& ctx) {
  const fs::path root = ctx.work / "determinism";
  fs::remove_all(root);
  const std::string config_text =
      "model.width = 16\nmodel.embed_dim = 8\nmodel.key_dim = 8\nmodel.blocks = 2\n"
      "train.steps = 300\ntrain.batch = 32\ntrain.eval_samples = 256\n"
      "distill.steps = 30\ndistill.batch = 16\ndistill.eval_every = 10\ndistill.eval_samples = 128\n"
      "lora.rank = 4\nlora.gamma = 8\nsample.count = 256\nsample.steps = 20\n"
      "nasa.samples = 256\ncfg_sweep.samples = 128\nseed = 11\n";
  const std::vector<std::string> commands = {
      "train-teacher --config {c} --out {d}/teacher.snpk",
      "distill --config {c} --teacher {d}/teacher.snpk --out {d}/student.snpk --lora-out {d}/lora.snpk",
      "sample --config {c} --checkpoint {d}/teacher.snpk --kappa 3 --negative 3 --out {d}/teacher_samples.csv --svg "
      "{d}/teacher_samples.svg",
      "sample --config {c} --checkpoint {d}/student.snpk --prompt 1 --negative 2 --out {d}/student_samples.csv",
      "nasa-sweep --config {c} --student {d}/student.snpk --out {d}/nasa.csv --pairs-dir {d}/pairs",
      "cfg-sweep --config {c} --teacher {d}/teacher.snpk --kappas 1,2,3 --jobs 3 --out {d}/cfg.csv",
      "ablate --config {c} --teacher {d}/teacher.snpk --modes none,both --seeds 0,1 --steps 10 --final-samples 128 "
      "--jobs 2 --out-dir {d}/ablate",
      "eval --config {c} --real {d}/teacher_samples.csv --fake {d}/student_samples.csv --negative-class 0 --out "
      "{d}/eval.csv",
  };
  for (const char* rep : {"a", "b"}) {
    const fs::path dir = root / rep;
    fs::create_directories(dir);
    io::write_file(dir / "run.cfg", config_text);
    for (std::string cmd : commands) {
      for (std::size_t pos; (pos = cmd.find("{c}")) != std::string::npos;) cmd.replace(pos, 3, "'" + (dir / "run.cfg").string() + "'");
      for (std::size_t pos; (pos = cmd.find("{d}")) != std::string::npos;) cmd.replace(pos, 3, "'" + dir.string() + "'");
      const int code = shell("SNOOPI_LAB_THREADS=1 '" + ctx.cli + "' " + cmd + " > /dev/null 2>&1");
      if (code != 0) return {false, "command failed with exit " + std::to_string(code) + ": " + cmd};
    }
  }
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    if (rel == "run.cfg") continue;
    ++files;
    const fs::path other = root / "b" / rel;
    if (!fs::exists(other) || io::read_file(entry.path()) != io::read_file(other)) differing.push_back(rel.string());
  }
  if (!differing.empty()) return {false, std::to_string(differing.size()) + " of " + std::to_string(files) + " outputs differ, e.g. " + differing[0]};
  return {files > 0, std::to_string(commands.size()) + " commands run twice, " + std::to_string(files) +
                         " CSV/SVG/SNPK outputs byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snoopi-lab acceptance checks"};
  Context ctx;
  std::string recipes, work, cli;
  std::vector<int> only;
  app.add_option("--recipes", recipes, "recipes directory")->required();
  app.add_option("--work", work, "scratch directory for intermediate outputs")->required();
  app.add_option("--cli", cli, "snoopi-lab binary")->required();
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  ctx.recipes = recipes;
  ctx.work = work;
  ctx.cli = cli;
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Verdict(Context&)>>> criteria = {
      {"gradient suite", gradients},
      {"teacher convergence", teacher_convergence},
      {"oracle sampling", oracle_sampling},
      {"guidance sweep trend", cfg_trend},
      {"random-kappa stability", stability},
      {"random-kappa ablation", ablation},
      {"negative-prompt removal", removal},
      {"removal against alpha", alpha_sweep},
      {"exact identities", identities},
      {"determinism", determinism},
  };
  int failed = 0;
  std::string report = "criterion,name,result,seconds,detail\n";
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    const Stopwatch watch;
    Verdict v;
    try {
      v = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  %2d  %-24s %s\n", v.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
    std::string quoted = v.detail;
    std::replace(quoted.begin(), quoted.end(), '"', '\'');
    report += std::to_string(number) + "," + criteria[i].first + "," + (v.pass ? "PASS" : "FAIL") + "," +
              fmt(watch.seconds(), 1) + ",\"" + quoted + "\"\n";
  }
  write_text(ctx.work / "acceptance.csv", report);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
