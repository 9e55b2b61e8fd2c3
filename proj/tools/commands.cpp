#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bintensor/decomp.hpp"
#include "bintensor/errors.hpp"
#include "bintensor/experiments.hpp"
#include "bintensor/io.hpp"
#include "bintensor/sim.hpp"

namespace bintensor::cli {

namespace fs = std::filesystem;

namespace {

struct FitFlags {
  std::string input;
  std::size_t rank = 1;
  std::string link = "logistic";
  double sigma = 1.0;
  std::string alpha = "inf";
  double tol = 1e-4;
  int max_iters = 100;
  int starts = 5;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  std::string out_dir = ".";
  std::string absent = "mask";
};

void add_fit_flags(CLI::App* app, FitFlags& f, bool with_rank) {
  app->add_option("--input", f.input, "tensor file")->required();
  if (with_rank) app->add_option("--rank", f.rank, "CP rank")->check(CLI::PositiveNumber);
  app->add_option("--link", f.link, "logistic | probit | laplace")
      ->check(CLI::IsMember({"logistic", "probit", "laplace", "laplacian"}));
  app->add_option("--sigma", f.sigma, "link scale")->check(CLI::PositiveNumber);
  app->add_option("--alpha", f.alpha, "max-norm bound on Theta (inf for none)");
  app->add_option("--tol", f.tol, "relative objective tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", f.max_iters, "maximum sweeps")->check(CLI::PositiveNumber);
  app->add_option("--starts", f.starts, "random starts")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--init-scale", f.init_scale, "half-width of the uniform start")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", f.out_dir, "output directory");
  app->add_option("--absent", f.absent, "sparse files: absent cells are masked or zero")
      ->check(CLI::IsMember({"mask", "zero"}));
}

FitConfig to_config(const FitFlags& f) {
  FitConfig cfg;
  cfg.rank = f.rank;
  cfg.link = LinkSpec(parse_link_family(f.link), f.sigma);
  cfg.alpha = io::parse_double(f.alpha);
  if (!(cfg.alpha > 0)) throw InvalidArgument("--alpha must be positive");
  cfg.tol = f.tol;
  cfg.max_iters = f.max_iters;
  cfg.n_starts = f.starts;
  cfg.seed = f.seed;
  cfg.init_scale = f.init_scale;
  cfg.validate();
  return cfg;
}

BinaryTensor load(const FitFlags& f) {
  return io::read_binary_tensor(fs::path(f.input), f.absent == "zero" ? io::Absent::zero : io::Absent::mask);
}

fs::path out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::vector<std::size_t> multi_index(std::size_t flat, const Dims& dims) {
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t m = dims.size(); m-- > 0;) {
    idx[m] = flat % dims[m];
    flat /= dims[m];
  }
  return idx;
}

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* s = std::getenv("BINTENSOR_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

int cmd_decompose(const FitFlags& f, std::ostream& out) {
  const BinaryTensor y = load(f);
  const FitConfig cfg = to_config(f);
  const FitResult res = fit(y, cfg);
  const fs::path dir = out_dir(f.out_dir);

  io::FactorManifest m;
  m.link = std::string(to_string(cfg.link.family()));
  m.sigma = cfg.link.sigma();
  m.rank = cfg.rank;
  m.dims = y.dims();
  m.alpha = cfg.alpha;
  m.final_loglik = res.final_loglik;
  m.bic = res.bic;
  m.n_observed = y.num_observed();
  m.n_iterations = res.n_iterations;
  m.converged = res.converged;
  m.start_index = res.start_index;
  io::write_factors(dir, res.factors, m);
  io::write_trace(dir / "trace.csv", res.loglik_trace);

  out << "rank " << cfg.rank << "  loglik " << io::format_double(res.final_loglik) << "  bic "
      << io::format_double(res.bic) << "  iterations " << res.n_iterations
      << (res.converged ? "  converged" : "  not converged") << "\n";
  return kExitOk;
}

int cmd_select_rank(const FitFlags& f, std::size_t rmin, std::size_t rmax, std::ostream& out) {
  if (rmin < 1 || rmin > rmax) throw InvalidArgument("need 1 <= --rmin <= --rmax");
  const BinaryTensor y = load(f);
  FitConfig cfg = to_config(f);
  cfg.rank = rmin;
  const RankSelection sel = select_rank(y, cfg, rmin, rmax);

  io::CsvTable t;
  t.header = {"rank", "loglik", "p_e", "bic"};
  for (const auto& r : sel.table) {
    if (r.ok) {
      t.rows.push_back({std::to_string(r.rank), io::format_double(r.loglik), std::to_string(r.p_e),
                        io::format_double(r.bic)});
    } else {
      t.rows.push_back({std::to_string(r.rank), "NA", std::to_string(r.p_e), "NA"});
    }
  }
  io::write_csv(out_dir(f.out_dir) / "bic_table.csv", t);
  out << "selected rank: " << sel.best_rank << "\n";
  return kExitOk;
}

int cmd_complete(const FitFlags& f, const std::string& holdout_arg, std::ostream& out) {
  const BinaryTensor y = load(f);
  const FitConfig cfg = to_config(f);

  std::optional<double> fraction;
  try {
    fraction = io::parse_double(holdout_arg);
  } catch (const ParseError&) {
  }
  ObservationMask holdout(y.dims(), false);
  if (fraction) {
    if (!(*fraction > 0.0 && *fraction < 1.0)) throw InvalidArgument("--holdout fraction must lie in (0, 1)");
    Rng rng = make_rng(replicate_seed(f.seed, 0, 0));
    holdout = stratified_holdout(y, *fraction, rng);
  } else {
    std::ifstream in(holdout_arg);
    if (!in) throw ParseError("cannot open holdout file " + holdout_arg);
    for (const auto& idx : io::read_index_list(in, y.dims().size())) holdout.set(y.base.flat_index(idx), true);
  }

  const CompletionResult res = complete(y, holdout, cfg);

  io::CsvTable t;
  for (std::size_t m = 0; m < y.dims().size(); ++m) t.header.push_back("i" + std::to_string(m + 1));
  t.header.push_back("prob");
  t.header.push_back("truth");
  for (const auto& p : res.predictions) {
    std::vector<std::string> row;
    for (std::size_t i : multi_index(p.flat, y.dims())) row.push_back(std::to_string(i + 1));
    row.push_back(io::format_double(p.prob));
    row.push_back(p.truth ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  io::write_csv(out_dir(f.out_dir) / "predictions.csv", t);
  out << "heldout " << res.predictions.size() << "\n"
      << "AUC " << io::format_double(res.auc) << "\n"
      << "RMSE " << io::format_double(res.rmse) << "\n"
      << "baseline RMSE " << io::format_double(res.baseline_rmse) << "\n";
  return kExitOk;
}

const std::set<std::string> kExperiments{"consistency", "dithering", "rank_table", "block_table",
                                         "boolean_compare"};

int cmd_experiment(const std::string& name, const std::string& config, const std::string& dir,
                   std::ostream& out) {
  if (!kExperiments.count(name)) throw InvalidArgument("unknown experiment '" + name + "'");
  io::ConfigSection section;
  if (!config.empty()) {
    const auto all = io::read_config(fs::path(config));
    if (auto it = all.find(name); it != all.end()) section = it->second;
  }
  const TidyTable tidy = run_experiment(name, section);
  const io::CsvTable summary = summarize(tidy);
  const fs::path d = out_dir(dir);
  io::write_csv(d / (name + "_tidy.csv"), tidy.to_csv());
  io::write_csv(d / (name + "_summary.csv"), summary);
  io::write_csv(out, summary);
  return kExitOk;
}

struct SimFlags {
  std::string model = "cp";
  std::vector<std::size_t> dims{20, 20, 20};
  std::size_t rank = 1;
  std::string link = "probit";
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string truth;
};

int cmd_simulate(const SimFlags& s, std::ostream& out) {
  Rng rng = make_rng(s.seed);
  BinaryTensor y;
  DenseTensor truth;
  if (s.model == "cp") {
    truth = gen_cp_signal(s.dims, s.rank, rng);
    y = quantize_latent(truth, LinkSpec(parse_link_family(s.link), s.sigma), rng);
  } else if (s.model == "bernoulli") {
    truth = gen_cp_signal(s.dims, s.rank, rng);
    y = sample_bernoulli(truth, LinkSpec(parse_link_family(s.link), s.sigma), rng);
  } else if (s.model == "additive" || s.model == "multiplicative" || s.model == "combinatorial") {
    BlockModelSpec spec;
    spec.dims = s.dims;
    spec.mean_model = parse_block_mean(s.model);
    BlockSample b = gen_block_tensor(spec, rng);
    y = std::move(b.y);
    truth = std::move(b.latent);
  } else {
    BooleanModelSpec spec;
    spec.dims = s.dims;
    spec.boolean_rank = s.rank;
    BooleanSample b = gen_boolean_tensor(spec, rng);
    y = std::move(b.y);
    truth = std::move(b.prob);
  }
  io::write_tensor(fs::path(s.output), y);
  if (!s.truth.empty()) {
    std::ofstream t(s.truth);
    if (!t) throw Error("cannot write " + s.truth);
    io::write_tensor(t, truth);
  }
  out << "wrote " << s.output << "\n";
  return kExitOk;
}

bool is_input_error(const std::exception& e) {
  return dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DimensionMismatch*>(&e) ||
         dynamic_cast<const ModeOutOfRange*>(&e) || dynamic_cast<const EmptySlab*>(&e) ||
         dynamic_cast<const InvalidArgument*>(&e);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  apply_thread_cap();

  CLI::App app{"Binary tensor decomposition under a Bernoulli CP model", "bintensor"};
  app.require_subcommand(1);

  FitFlags dec;
  auto* decompose = app.add_subcommand("decompose", "fit a rank-R model and write its factors");
  add_fit_flags(decompose, dec, true);

  FitFlags sel;
  std::size_t rmin = 1;
  std::size_t rmax = 10;
  auto* select = app.add_subcommand("select-rank", "fit a range of ranks and pick the BIC minimizer");
  add_fit_flags(select, sel, false);
  select->add_option("--rmin", rmin, "smallest rank");
  select->add_option("--rmax", rmax, "largest rank");

  FitFlags cmp;
  std::string holdout;
  auto* completion = app.add_subcommand("complete", "hold out cells, fit the rest and score the holdout");
  add_fit_flags(completion, cmp, true);
  completion->add_option("--holdout", holdout, "fraction in (0,1) or a file of 1-based indices")->required();

  std::string exp_name;
  std::string exp_config;
  std::string exp_out = ".";
  auto* experiment = app.add_subcommand("experiment", "run a simulation suite");
  experiment->add_option("name", exp_name, "consistency | dithering | rank_table | block_table | boolean_compare")
      ->required();
  experiment->add_option("--config", exp_config, "config file with a [name] section");
  experiment->add_option("--out-dir", exp_out, "output directory");

  SimFlags sim;
  auto* simulate = app.add_subcommand("simulate", "write a simulated binary tensor");
  simulate->add_option("--model", sim.model, "cp | bernoulli | additive | multiplicative | combinatorial | boolean")
      ->check(CLI::IsMember({"cp", "bernoulli", "additive", "multiplicative", "combinatorial", "boolean"}));
  simulate->add_option("--dims", sim.dims, "dimensions")->expected(2, 16);
  simulate->add_option("--rank", sim.rank, "CP or boolean rank")->check(CLI::PositiveNumber);
  simulate->add_option("--link", sim.link, "noise family for the cp models")
      ->check(CLI::IsMember({"logistic", "probit", "laplace", "laplacian"}));
  simulate->add_option("--sigma", sim.sigma, "noise scale")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--output", sim.output, "tensor file to write")->required();
  simulate->add_option("--truth", sim.truth, "also write the signal tensor here");

  std::vector<const char*> argv{"bintensor"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (decompose->parsed()) return cmd_decompose(dec, out);
    if (select->parsed()) return cmd_select_rank(sel, rmin, rmax, out);
    if (completion->parsed()) return cmd_complete(cmp, holdout, out);
    if (experiment->parsed()) return cmd_experiment(exp_name, exp_config, exp_out, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e) ? kExitUsage : kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace bintensor::cli
