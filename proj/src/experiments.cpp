#include "bintensor/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "bintensor/errors.hpp"

namespace bintensor {

namespace {

constexpr double kLogisticProbitRatio = 1.702;

FitConfig make_fit_config(const FitSettings& s, const LinkSpec& link, std::size_t rank, std::uint64_t seed) {
  FitConfig cfg;
  cfg.rank = rank;
  cfg.link = link;
  cfg.seed = seed;
  cfg.n_starts = s.n_starts;
  cfg.tol = s.tol;
  cfg.max_iters = s.max_iters;
  cfg.alpha = s.alpha;
  cfg.init_scale = s.init_scale;
  cfg.line_search_grid = s.line_search_grid;
  return cfg;
}

// Fit seeds are decorrelated from the generator stream of the same replicate.
std::uint64_t fit_seed(std::uint64_t rep_seed) { return rep_seed ^ 0xD1B54A32D192ED03ULL; }

Dims cube(std::size_t d, std::size_t order) { return Dims(order, d); }

struct FitOutcome {
  FitResult fit;
  std::size_t rank;
};

FitOutcome fit_or_select(const BinaryTensor& y, FitConfig cfg, bool select, std::size_t r_min,
                         std::size_t r_max) {
  if (!select) {
    FitResult r = fit(y, cfg);
    return {std::move(r), cfg.rank};
  }
  RankSelection sel = select_rank(y, cfg, r_min, r_max);
  return {*sel.best(), sel.best_rank};
}

// Reads typed values out of a config section and rejects unknown keys.
class SectionReader {
 public:
  explicit SectionReader(const io::ConfigSection& s) : section_(s) {}

  template <class T>
  void get(const std::string& key, T& out) {
    const auto it = section_.find(key);
    used_.insert(key);
    if (it == section_.end()) return;
    parse(it->second, out);
  }

  void finish(const std::string& name) const {
    for (const auto& [k, v] : section_) {
      if (!used_.count(k)) throw ParseError("unknown key '" + k + "' in [" + name + "]");
    }
  }

 private:
  static std::vector<std::string> items(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string tok; std::getline(ss, tok, ',');) {
      const auto b = tok.find_first_not_of(" \t");
      const auto e = tok.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(tok.substr(b, e - b + 1));
    }
    if (out.empty()) throw ParseError("empty list value");
    return out;
  }
  static void parse(const std::string& v, double& out) { out = io::parse_double(v); }
  static void parse(const std::string& v, int& out) { out = static_cast<int>(io::parse_double(v)); }
  static void parse(const std::string& v, std::size_t& out) {
    const double d = io::parse_double(v);
    if (d < 0 || d != std::floor(d)) throw ParseError("expected a non-negative integer, got '" + v + "'");
    out = static_cast<std::size_t>(d);
  }
  static void parse(const std::string& v, unsigned long long& out) { out = std::stoull(v); }
  static void parse(const std::string& v, bool& out) {
    if (v == "true" || v == "1" || v == "yes") out = true;
    else if (v == "false" || v == "0" || v == "no") out = false;
    else throw ParseError("expected a boolean, got '" + v + "'");
  }
  static void parse(const std::string& v, LinkFamily& out) { out = parse_link_family(v); }
  static void parse(const std::string& v, std::vector<double>& out) {
    out.clear();
    for (const auto& s : items(v)) out.push_back(io::parse_double(s));
  }
  static void parse(const std::string& v, std::vector<std::size_t>& out) {
    out.clear();
    for (const auto& s : items(v)) {
      std::size_t x = 0;
      parse(s, x);
      out.push_back(x);
    }
  }
  static void parse(const std::string& v, std::vector<BlockMean>& out) {
    out.clear();
    for (const auto& s : items(v)) out.push_back(parse_block_mean(s));
  }

  const io::ConfigSection& section_;
  std::set<std::string> used_;
};

void read_fit_settings(SectionReader& r, FitSettings& s) {
  r.get("starts", s.n_starts);
  r.get("tol", s.tol);
  r.get("max_iters", s.max_iters);
  r.get("alpha", s.alpha);
  r.get("init_scale", s.init_scale);
  r.get("line_search_grid", s.line_search_grid);
}

}  // namespace

double matched_sigma_scale(LinkFamily gen, LinkFamily fit) {
  if (gen == LinkFamily::probit && fit == LinkFamily::logistic) return 1.0 / kLogisticProbitRatio;
  if (gen == LinkFamily::logistic && fit == LinkFamily::probit) return kLogisticProbitRatio;
  return 1.0;
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t rep) {
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + cell * 0xBF58476D1CE4E5B9ULL + rep * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  z *= 0xD6E8FEB86659FD93ULL;
  z ^= z >> 32;
  return z;
}

ObservationMask stratified_holdout(const BinaryTensor& y, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("holdout fraction must lie in (0, 1)");
  std::vector<std::size_t> ones;
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y.observed(i)) continue;
    (y.label(i) ? ones : zeros).push_back(i);
  }
  ObservationMask held(y.dims(), false);
  for (auto* cls : {&ones, &zeros}) {
    auto& v = *cls;
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(v.size())));
    // Partial Fisher-Yates: the first `take` entries become a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
      std::swap(v[i], v[pick(rng)]);
      held.set(v[i], true);
    }
  }
  return held;
}

CompletionResult complete(const BinaryTensor& y, const ObservationMask& holdout, const FitConfig& cfg) {
  if (holdout.dims() != y.dims()) throw DimensionMismatch("holdout mask shape differs from data");
  ObservationMask train(y.dims(), false);
  std::size_t n_held = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (holdout.observed(i)) {
      if (!y.observed(i)) throw Error("holdout contains an unobserved cell");
      ++n_held;
    } else if (y.observed(i)) {
      train.set(i, true);
    }
  }
  if (n_held == 0) throw Error("empty holdout");
  const BinaryTensor y_train(y.base, train);

  CompletionResult out;
  out.fit = fit(y_train, cfg);
  std::vector<Scored> scored;
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!holdout.observed(i)) continue;
    const double p = cfg.link.f(out.fit.theta_hat[i]);
    const bool t = y.label(i);
    out.predictions.push_back({i, p, t});
    scored.push_back({p, t});
    sq += (p - (t ? 1.0 : 0.0)) * (p - (t ? 1.0 : 0.0));
  }
  out.rmse = std::sqrt(sq / static_cast<double>(n_held));
  out.auc = auc(std::move(scored));
  return out;
}

double TidyTable::metric(const Row& row, const std::string& name) const {
  const auto it = std::find(metric_names.begin(), metric_names.end(), name);
  if (it == metric_names.end()) throw Error("no metric named " + name);
  return row.metrics[static_cast<std::size_t>(it - metric_names.begin())];
}

io::CsvTable TidyTable::to_csv() const {
  io::CsvTable t;
  t.header = key_names;
  t.header.insert(t.header.end(), metric_names.begin(), metric_names.end());
  for (const auto& r : rows) {
    std::vector<std::string> cells = r.keys;
    for (double m : r.metrics) cells.push_back(io::format_double(m));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

io::CsvTable summarize(const TidyTable& tidy, const std::string& replicate_key) {
  std::vector<std::size_t> key_cols;
  for (std::size_t j = 0; j < tidy.key_names.size(); ++j) {
    if (tidy.key_names[j] != replicate_key) key_cols.push_back(j);
  }
  std::vector<std::vector<std::string>> cells;
  std::map<std::vector<std::string>, std::vector<const TidyTable::Row*>> groups;
  for (const auto& r : tidy.rows) {
    std::vector<std::string> k;
    for (std::size_t j : key_cols) k.push_back(r.keys[j]);
    if (!groups.count(k)) cells.push_back(k);
    groups[k].push_back(&r);
  }
  io::CsvTable out;
  for (std::size_t j : key_cols) out.header.push_back(tidy.key_names[j]);
  out.header.push_back("n");
  for (const auto& m : tidy.metric_names) {
    out.header.push_back(m + "_mean");
    out.header.push_back(m + "_se");
  }
  for (const auto& k : cells) {
    const auto& members = groups[k];
    std::vector<std::string> row = k;
    const double n = static_cast<double>(members.size());
    row.push_back(std::to_string(members.size()));
    for (std::size_t m = 0; m < tidy.metric_names.size(); ++m) {
      double sum = 0.0;
      for (const auto* r : members) sum += r->metrics[m];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto* r : members) ss += (r->metrics[m] - mean) * (r->metrics[m] - mean);
      const double se = members.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      row.push_back(io::format_double(mean));
      row.push_back(io::format_double(se));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

TidyTable run_cp_suite(const CpSuiteConfig& cfg) {
  TidyTable t;
  t.key_names = {"d", "rank", "sigma", "rep"};
  t.metric_names = {"loss", "selected_rank", "loglik_hat", "loglik_true", "iterations", "seconds"};
  const double scale = cfg.fit_sigma_scale > 0 ? cfg.fit_sigma_scale : matched_sigma_scale(cfg.gen_link, cfg.fit_link);
  std::uint64_t cell = 0;
  for (std::size_t d : cfg.d_values) {
    for (std::size_t R : cfg.ranks) {
      for (double sigma : cfg.sigmas) {
        for (int rep = 0; rep < cfg.n_sim; ++rep) {
          const std::uint64_t s = replicate_seed(cfg.seed, cell, static_cast<std::uint64_t>(rep));
          Rng rng = make_rng(s);
          const DenseTensor theta = gen_cp_signal(cube(d, cfg.order), R, rng);
          const BinaryTensor y = quantize_latent(theta, LinkSpec(cfg.gen_link, sigma), rng);
          const LinkSpec fit_link(cfg.fit_link, sigma * scale);
          const FitConfig fc = make_fit_config(cfg.fit, fit_link, R, fit_seed(s));
          const std::size_t lo = R > cfg.rank_radius ? R - cfg.rank_radius : 1;
          const FitOutcome o = fit_or_select(y, fc, cfg.select_rank, lo, R + cfg.rank_radius);
          t.rows.push_back({{std::to_string(d), std::to_string(R), io::format_double(sigma), std::to_string(rep)},
                            {loss(o.fit.theta_hat, theta), static_cast<double>(o.rank), o.fit.final_loglik,
                             log_likelihood(y, theta, fit_link), static_cast<double>(o.fit.n_iterations),
                             o.fit.seconds}});
        }
        ++cell;
      }
    }
  }
  return t;
}

TidyTable run_rank_table(const RankTableConfig& cfg) {
  TidyTable t;
  t.key_names = {"d", "rank", "sigma", "rep"};
  t.metric_names = {"selected_rank", "correct", "seconds"};
  std::uint64_t cell = 0;
  for (std::size_t d : cfg.d_values) {
    for (std::size_t R : cfg.ranks) {
      for (double sigma : cfg.sigmas) {
        for (int rep = 0; rep < cfg.n_sim; ++rep) {
          const std::uint64_t s = replicate_seed(cfg.seed, cell, static_cast<std::uint64_t>(rep));
          Rng rng = make_rng(s);
          const DenseTensor theta = gen_cp_signal(cube(d, 3), R, rng);
          const BinaryTensor y = sample_bernoulli(theta, LinkSpec(cfg.gen_link, sigma), rng);
          const FitConfig fc = make_fit_config(cfg.fit, LinkSpec(cfg.fit_link, sigma), R, fit_seed(s));
          const std::size_t lo = R > cfg.rank_radius ? R - cfg.rank_radius : 1;
          double seconds = 0.0;
          RankSelection sel = select_rank(y, fc, lo, R + cfg.rank_radius);
          for (const auto& f : sel.fits) seconds += f.seconds;
          t.rows.push_back({{std::to_string(d), std::to_string(R), io::format_double(sigma), std::to_string(rep)},
                            {static_cast<double>(sel.best_rank), sel.best_rank == R ? 1.0 : 0.0, seconds}});
        }
        ++cell;
      }
    }
  }
  return t;
}

TidyTable run_block_table(const BlockTableConfig& cfg) {
  TidyTable t;
  t.key_names = {"model", "d", "rep"};
  t.metric_names = {"relative_loss", "selected_rank", "seconds"};
  const double sigma = cfg.fit_sigma > 0 ? cfg.fit_sigma : matched_sigma_scale(LinkFamily::probit, cfg.fit_link);
  std::uint64_t cell = 0;
  for (BlockMean model : cfg.models) {
    for (std::size_t d : cfg.d_values) {
      for (int rep = 0; rep < cfg.n_sim; ++rep) {
        const std::uint64_t s = replicate_seed(cfg.seed, cell, static_cast<std::uint64_t>(rep));
        Rng rng = make_rng(s);
        BlockModelSpec spec;
        spec.dims = cube(d, 3);
        spec.n_blocks = cfg.n_blocks;
        spec.mean_model = model;
        const BlockSample sample = gen_block_tensor(spec, rng);
        const FitConfig fc = make_fit_config(cfg.fit, LinkSpec(cfg.fit_link, sigma), cfg.r_min, fit_seed(s));
        double seconds = 0.0;
        RankSelection sel = select_rank(sample.y, fc, cfg.r_min, cfg.r_max);
        for (const auto& f : sel.fits) seconds += f.seconds;
        const FitResult& best = *sel.best();
        t.rows.push_back({{std::string(to_string(model)), std::to_string(d), std::to_string(rep)},
                          {relative_loss(best.theta_hat, sample.latent), static_cast<double>(sel.best_rank), seconds}});
      }
      ++cell;
    }
  }
  return t;
}

TidyTable run_boolean_compare(const BooleanConfig& cfg) {
  TidyTable t;
  t.key_names = {"d", "boolean_rank", "rep"};
  t.metric_names = {"rmse", "mer", "selected_rank", "seconds"};
  std::uint64_t cell = 0;
  for (std::size_t d : cfg.d_values) {
    for (std::size_t R : cfg.boolean_ranks) {
      for (int rep = 0; rep < cfg.n_sim; ++rep) {
        const std::uint64_t s = replicate_seed(cfg.seed, cell, static_cast<std::uint64_t>(rep));
        Rng rng = make_rng(s);
        BooleanModelSpec spec;
        spec.dims = cube(d, 3);
        spec.boolean_rank = R;
        spec.flip_prob = cfg.flip_prob;
        const BooleanSample sample = gen_boolean_tensor(spec, rng);
        const LinkSpec link(cfg.fit_link, cfg.fit_sigma);
        const FitConfig fc = make_fit_config(cfg.fit, link, cfg.r_min, fit_seed(s));
        double seconds = 0.0;
        RankSelection sel = select_rank(sample.y, fc, cfg.r_min, cfg.r_max);
        for (const auto& f : sel.fits) seconds += f.seconds;
        const DenseTensor prob = predict_proba(*sel.best(), link);
        t.rows.push_back({{std::to_string(d), std::to_string(R), std::to_string(rep)},
                          {rmse(prob, sample.prob), mer(prob, sample.prob), static_cast<double>(sel.best_rank), seconds}});
      }
      ++cell;
    }
  }
  return t;
}

TidyTable run_experiment(const std::string& name, const io::ConfigSection& section) {
  SectionReader r(section);
  if (name == "consistency" || name == "dithering") {
    CpSuiteConfig c;
    c.n_sim = 30;
    if (name == "consistency") {
      c.d_values = {20, 30, 40, 50, 60};
      c.ranks = {1, 3, 5};
      c.sigmas = {std::pow(10.0, -0.5)};
    } else {
      c.d_values = {50};
      c.ranks = {1, 3, 5};
      c.sigmas.clear();
      for (int i = 0; i <= 7; ++i) c.sigmas.push_back(std::pow(10.0, -3.0 + 0.5 * i));
    }
    r.get("d", c.d_values);
    r.get("rank", c.ranks);
    r.get("sigma", c.sigmas);
    r.get("order", c.order);
    r.get("n_sim", c.n_sim);
    r.get("seed", c.seed);
    r.get("gen_link", c.gen_link);
    r.get("fit_link", c.fit_link);
    r.get("fit_sigma_scale", c.fit_sigma_scale);
    r.get("select_rank", c.select_rank);
    r.get("rank_radius", c.rank_radius);
    read_fit_settings(r, c.fit);
    r.finish(name);
    return run_cp_suite(c);
  }
  if (name == "rank_table") {
    RankTableConfig c;
    c.n_sim = 30;
    c.d_values = {20, 40, 60};
    c.ranks = {5, 10, 20, 40};
    c.sigmas = {0.1, 0.01};
    r.get("d", c.d_values);
    r.get("rank", c.ranks);
    r.get("sigma", c.sigmas);
    r.get("n_sim", c.n_sim);
    r.get("seed", c.seed);
    r.get("gen_link", c.gen_link);
    r.get("fit_link", c.fit_link);
    r.get("rank_radius", c.rank_radius);
    read_fit_settings(r, c.fit);
    r.finish(name);
    return run_rank_table(c);
  }
  if (name == "block_table") {
    BlockTableConfig c;
    c.n_sim = 30;
    r.get("d", c.d_values);
    r.get("models", c.models);
    r.get("n_blocks", c.n_blocks);
    r.get("n_sim", c.n_sim);
    r.get("seed", c.seed);
    r.get("fit_link", c.fit_link);
    r.get("fit_sigma", c.fit_sigma);
    r.get("rmin", c.r_min);
    r.get("rmax", c.r_max);
    read_fit_settings(r, c.fit);
    r.finish(name);
    return run_block_table(c);
  }
  if (name == "boolean_compare") {
    BooleanConfig c;
    c.n_sim = 30;
    r.get("d", c.d_values);
    r.get("boolean_rank", c.boolean_ranks);
    r.get("flip_prob", c.flip_prob);
    r.get("n_sim", c.n_sim);
    r.get("seed", c.seed);
    r.get("fit_link", c.fit_link);
    r.get("fit_sigma", c.fit_sigma);
    r.get("rmin", c.r_min);
    r.get("rmax", c.r_max);
    read_fit_settings(r, c.fit);
    r.finish(name);
    return run_boolean_compare(c);
  }
  throw ParseError("unknown experiment '" + name + "'");
}

}  // namespace bintensor
