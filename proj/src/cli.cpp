#include "gfflab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gfflab/efron_stein.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/events.hpp"
#include "gfflab/iteration.hpp"
#include "gfflab/locality.hpp"
#include "gfflab/parallel.hpp"
#include "gfflab/rng.hpp"
#include "gfflab/snapshot.hpp"
#include "gfflab/svg.hpp"

namespace gfflab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSubcommands = {"sample",     "dist",        "annulus-scan", "iterate",
                                               "covering",   "efron-stein", "bilip-probe",  "locality-check"};

const std::set<std::string> kKnownKeys = {
    "experiment", "grid",    "xi",        "sigma",      "C",        "s1",       "s2",          "scales",
    "k_max",      "r0",      "center",    "epsilon_ladder", "replicates", "seed", "output",     "field",
    "pin_radius", "builder", "queries",   "masks",      "geodesics", "svg",     "same_metric", "flat_field",
    "exact",      "b",       "synthetic_p", "region",   "probes",   "V",        "z",           "w",
    "snapshot",   "trials"};

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return get<T>(j, key, T{});
}

Point point_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string("'") + what + "' must be a pair of numbers");
  return Point(j[0].get<double>(), j[1].get<double>());
}

Vertex vertex_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ConfigError(std::string("'") + what + "' must be a pair of integers");
  return {j[0].get<int>(), j[1].get<int>()};
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GFFLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw ConfigError("GFFLAB_THREADS must be a positive integer");
    return static_cast<unsigned>(n);
  }
  return default_threads();
}

/// Everything an experiment needs: parsed config, resolved seed, output sink.
class Run {
 public:
  Run(json cfg, fs::path config_dir, const Options& options)
      : cfg_(std::move(cfg)), config_dir_(std::move(config_dir)) {
    seed_ = options.seed ? *options.seed : get<std::uint64_t>(cfg_, "seed", 0);
    cfg_["seed"] = seed_;
    threads_ = resolve_threads(options.threads);
    if (options.format == "csv") {
      csv_ = true;
    } else if (options.format == "json") {
      json_ = true;
    } else if (options.format == "both") {
      csv_ = json_ = true;
    } else {
      throw ConfigError("--format must be csv, json or both");
    }
    const std::string out = !options.output.empty() ? options.output : get<std::string>(cfg_, "output", "gfflab-out");
    out_ = out;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) throw ConfigError("cannot create output directory '" + out + "'");

    grid_.nx = require<int>(require<json>(cfg_, "grid"), "nx");
    const json& g = cfg_["grid"];
    grid_.ny = require<int>(g, "ny");
    grid_.spacing = get<double>(g, "spacing", 1.0);
    if (g.contains("origin")) grid_.origin = point_of(g["origin"], "grid.origin");
    grid_.validate();
    if (cfg_.contains("replicates")) {
      const long long n = get<long long>(cfg_, "replicates", 0);
      if (n < 1) throw ConfigError("replicates must be at least 1");
    }
  }

  const json& cfg() const { return cfg_; }
  const GridSpec& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }
  unsigned threads() const { return threads_; }
  bool csv() const { return csv_; }
  bool json_out() const { return json_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const fs::path& out_dir() const { return out_; }

  std::size_t replicates(std::size_t fallback = 0) const {
    if (!cfg_.contains("replicates")) {
      if (fallback == 0) throw ConfigError("missing key 'replicates'");
      return fallback;
    }
    return static_cast<std::size_t>(get<long long>(cfg_, "replicates", 1));
  }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : config_dir_ / path;
  }

  void write(const std::string& name, std::string_view bytes) {
    write_file(out_ / name, bytes);
    outputs_.push_back(name);
  }
  void write_csv(const std::string& name, const std::string& bytes) {
    if (csv_) write(name, bytes);
  }
  void write_summary(const json& summary) {
    if (json_) write("summary.json", summary.dump(2) + "\n");
  }

  Point center() const {
    if (cfg_.contains("center")) return point_of(cfg_["center"], "center");
    return grid_.point(grid_.nx / 2, grid_.ny / 2);
  }

  std::vector<double> scales() const {
    if (cfg_.contains("scales")) {
      auto s = get<std::vector<double>>(cfg_, "scales", {});
      if (s.empty()) throw ConfigError("'scales' is empty");
      return s;
    }
    if (cfg_.contains("k_max")) {
      const int k = get<int>(cfg_, "k_max", 0);
      if (k < 1) throw ConfigError("k_max must be at least 1");
      const double r0 = get<double>(cfg_, "r0", std::min(grid_.nx, grid_.ny) * grid_.spacing / 8);
      return AnnulusEventConfig::dyadic(r0, k);
    }
    throw ConfigError("one of 'scales' or 'k_max' is required");
  }

  MetricLaw law() const {
    MetricLaw law;
    law.xi = get<double>(cfg_, "xi", 0.3);
    law.sigma = get<double>(cfg_, "sigma", 0.1);
    if (!std::isfinite(law.xi) || !(law.sigma >= 0.0) || !std::isfinite(law.sigma))
      throw ConfigError("xi must be finite and sigma >= 0");
    const std::string builder = get<std::string>(cfg_, "builder", "lfpp");
    if (builder == "lfpp") {
      law.builder = MetricBuilder::lfpp;
    } else if (builder == "global_max") {
      law.builder = MetricBuilder::global_max;
    } else {
      throw ConfigError("builder must be lfpp or global_max");
    }
    return law;
  }

  double pin_radius() const {
    if (cfg_.contains("pin_radius")) return get<double>(cfg_, "pin_radius", 0.0);
    if (cfg_.contains("scales") || cfg_.contains("k_max")) return scales().front();
    return std::min(grid_.nx, grid_.ny) * grid_.spacing / 8;
  }

  FieldSample field(std::uint64_t seed) const {
    if (cfg_.contains("snapshot")) {
      FieldSample f = load_snapshot(resolve(get<std::string>(cfg_, "snapshot", "")));
      if (!(f.spec == grid_)) throw ConfigError("snapshot grid does not match 'grid'");
      return f;
    }
    const std::string kind = get<std::string>(cfg_, "field", "pinned");
    if (kind == "pinned") return sample_pinned(grid_, center(), pin_radius(), seed);
    if (kind == "zero_boundary") return sample_zero_boundary(grid_, seed);
    if (kind == "torus") return sample_torus(grid_, seed);
    if (kind == "flat") return constant_field(grid_, 0.0);
    throw ConfigError("field must be pinned, zero_boundary, torus or flat");
  }

  DomainMask mask(const json& m) const {
    const std::string type = require<std::string>(m, "type");
    if (type == "full") return DomainMask::full(grid_);
    if (type == "rect")
      return DomainMask::rect(grid_, require<int>(m, "i0"), require<int>(m, "j0"), require<int>(m, "i1"),
                              require<int>(m, "j1"));
    if (type == "disk") return DomainMask::disk(grid_, point_of(require<json>(m, "center"), "center"), require<double>(m, "radius"));
    if (type == "annulus")
      return DomainMask::annulus(grid_, point_of(require<json>(m, "center"), "center"), require<double>(m, "r_in"),
                                 require<double>(m, "r_out"));
    throw ConfigError("mask type must be full, rect, disk or annulus");
  }

  AnnulusEventConfig event_config() const {
    AnnulusEventConfig c;
    c.grid = grid_;
    c.center = center();
    c.s1 = get<double>(cfg_, "s1", 0.5);
    c.s2 = get<double>(cfg_, "s2", 0.75);
    c.C = get<double>(cfg_, "C", 4.0);
    c.scales = scales();
    c.same_metric = get<bool>(cfg_, "same_metric", false);
    c.flat_field = get<bool>(cfg_, "flat_field", false) || get<std::string>(cfg_, "field", "pinned") == "flat";
    return c;
  }

 private:
  json cfg_;
  fs::path config_dir_;
  fs::path out_;
  GridSpec grid_;
  std::uint64_t seed_ = 0;
  unsigned threads_ = 1;
  bool csv_ = false;
  bool json_ = false;
  std::vector<std::string> outputs_;
};

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(format_number(x)));
  return a;
}

void run_sample(Run& run) {
  const std::size_t n = run.replicates(1);
  std::ostringstream csv;
  csv << "replicate,min,max,mean,variance\n";
  double var_sum = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const FieldSample f = run.field(rng::derive(run.seed(), q));
    const double mean = f.values.mean();
    const double var = (f.values - mean).square().mean();
    var_sum += var;
    csv << q << ',' << format_number(f.values.minCoeff()) << ',' << format_number(f.values.maxCoeff()) << ','
        << format_number(mean) << ',' << format_number(var) << '\n';
    run.write("field_" + std::to_string(q) + ".gffm", encode_snapshot(f));
    if (q == 0 && get<bool>(run.cfg(), "svg", false)) run.write("field_0.svg", render_svg(f));
  }
  run.write_csv("samples.csv", csv.str());
  run.write_summary({{"estimates", {{"mean_empirical_variance", var_sum / n}}}, {"confidence", nullptr}, {"fit", nullptr}});
}

void run_dist(Run& run) {
  const FieldSample f = run.field(rng::derive(run.seed(), 0));
  const LatticeMetric metric = run.law().build(f, rng::derive(run.seed(), 1));
  const auto queries = parse_batch(read_file(run.resolve(require<std::string>(run.cfg(), "queries"))));

  std::map<std::string, DomainMask> masks;
  if (run.cfg().contains("masks")) {
    const json& m = run.cfg()["masks"];
    if (!m.is_object()) throw ConfigError("'masks' must map ids to mask specs");
    for (const auto& [id, spec] : m.items()) masks.emplace(id, run.mask(spec));
  }
  auto mask_for = [&](const Query& q) -> const DomainMask* {
    if (!q.mask) return nullptr;
    auto it = masks.find(*q.mask);
    if (it == masks.end()) throw ConfigError("unknown mask id '" + *q.mask + "'");
    return &it->second;
  };

  const bool geodesics = get<bool>(run.cfg(), "geodesics", false);
  const bool svg = get<bool>(run.cfg(), "svg", false);
  std::ostringstream csv;
  csv << "query_index,distance\n";
  std::size_t reachable = 0;
  SvgOverlay overlay;
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const Query& q = queries[k];
    const DomainMask* mask = mask_for(q);
    const double d = mask ? distance(metric, q.u, q.v, *mask) : distance(metric, q.u, q.v);
    csv << k << ',' << format_number(d) << '\n';
    if (d == kInfinite) continue;
    ++reachable;
    if (!geodesics) continue;
    const PathRecord p = mask ? geodesic(metric, q.u, q.v, *mask) : geodesic(metric, q.u, q.v);
    std::ostringstream g;
    g << "step,i,j,x,y,cumulative\n";
    for (std::size_t s = 0; s < p.vertices.size(); ++s) {
      const Point x = run.grid().point(p.vertices[s]);
      g << s << ',' << p.vertices[s].i << ',' << p.vertices[s].j << ',' << format_number(x.x()) << ','
        << format_number(x.y()) << ',' << format_number(p.cumulative[s]) << '\n';
    }
    run.write_csv("geodesic_" + std::to_string(k) + ".csv", g.str());
    overlay.paths.push_back(p);
  }
  run.write_csv("distances.csv", csv.str());
  if (svg) run.write("geodesics.svg", render_svg(f, overlay));
  run.write_summary({{"estimates", {{"queries", queries.size()}, {"reachable", reachable}}},
                     {"confidence", nullptr},
                     {"fit", nullptr}});
}

void write_event_rows(Run& run, const EventTable& table, const std::vector<double>& scales, const char* name,
                      const IterationReport* iteration) {
  std::ostringstream csv;
  csv << "replicate,scale_index,r,event";
  if (!table.across.empty()) csv << ",across,diameter";
  if (iteration) csv << ",N";
  csv << '\n';
  for (std::size_t q = 0; q < table.replicates; ++q)
    for (std::size_t k = 0; k < table.scales; ++k) {
      csv << q << ',' << k << ',' << (k < scales.size() ? format_number(scales[k]) : "") << ',' << int(table(q, k));
      if (!table.across.empty())
        csv << ',' << format_number(table.across[q * table.scales + k]) << ','
            << format_number(table.diameter[q * table.scales + k]);
      if (iteration) csv << ',' << iteration->N(q, k + 1);
      csv << '\n';
    }
  run.write_csv(name, csv.str());
}

void run_annulus_scan(Run& run) {
  const AnnulusEventConfig config = run.event_config();
  const bool exact = get<bool>(run.cfg(), "exact", false);
  const EventTable table = sample_event_table(config, run.law(), run.replicates(), run.seed(), run.threads(), exact);
  const ProbabilityEstimate est = estimate_event_probability(table);
  write_event_rows(run, table, config.scales, "events.csv", nullptr);
  run.write_summary({{"estimates", {{"scales", doubles(config.scales)}, {"p_hat", doubles(est.p_hat)}}},
                     {"confidence",
                      {{"level", 0.95},
                       {"method", "wilson"},
                       {"lower", doubles(est.lower)},
                       {"upper", doubles(est.upper)},
                       {"half_width", doubles(est.half_width)}}},
                     {"fit", nullptr},
                     {"warnings", est.warnings}});
}

void run_iterate(Run& run) {
  const double b = get<double>(run.cfg(), "b", 0.5);
  EventTable table;
  std::vector<double> scales;
  if (run.cfg().contains("synthetic_p")) {
    std::size_t count = 0;
    if (run.cfg().contains("scales")) {
      scales = run.scales();
      count = scales.size();
    } else {
      const int k = get<int>(run.cfg(), "k_max", 0);
      if (k < 1) throw ConfigError("synthetic iteration needs 'scales' or 'k_max'");
      count = static_cast<std::size_t>(k);
    }
    table = synthetic_event_table(run.replicates(), count, get<double>(run.cfg(), "synthetic_p", 0.0), run.seed());
  } else {
    const AnnulusEventConfig config = run.event_config();
    scales = config.scales;
    table = sample_event_table(config, run.law(), run.replicates(), run.seed(), run.threads());
  }
  const IterationReport report = iteration_statistic(table, b, rng::derive(run.seed(), 99));
  write_event_rows(run, table, scales, "iteration.csv", &report);
  json fit = nullptr;
  if (report.fit.fitted)
    fit = {{"slope", report.fit.slope},
           {"intercept", report.fit.intercept},
           {"points", report.fit.points},
           {"model", "log P[N(K) < bK] = intercept + slope K"}};
  run.write_summary({{"estimates", {{"b", b}, {"tail", doubles(report.tail)}}},
                     {"confidence",
                      {{"slope_upper95", report.fit.fitted ? json(report.fit.slope_upper95) : json(nullptr)},
                       {"bootstrap_resamples", report.fit.bootstrap_resamples},
                       {"decay_consistent", report.decay_consistent}}},
                     {"fit", fit},
                     {"warnings", report.warnings}});
}

void run_covering(Run& run) {
  const auto ladder = require<std::vector<double>>(run.cfg(), "epsilon_ladder");
  if (ladder.empty()) throw ConfigError("'epsilon_ladder' is empty");
  const MetricLaw law = run.law();
  const double C = get<double>(run.cfg(), "C", 4.0);
  DomainMask region;
  if (run.cfg().contains("region")) {
    region = run.mask(run.cfg()["region"]);
  } else {
    const int h = std::max(1, std::min(run.grid().nx, run.grid().ny) / 16);
    region = DomainMask::rect(run.grid(), run.grid().nx / 2 - h, run.grid().ny / 2 - h, run.grid().nx / 2 + h,
                              run.grid().ny / 2 + h);
  }
  const auto probes = probe_pairs(region, static_cast<std::size_t>(get<int>(run.cfg(), "probes", 100)),
                                  rng::derive(run.seed(), 7));
  const std::size_t n = run.replicates();

  struct Row {
    double eps;
    CoveringReport cover;
    long violations = -1;
    int connected = -1;
  };
  std::vector<std::vector<Row>> rows(n);
  parallel_for(n, run.threads(), [&](std::size_t q) {
    const FieldSample f = run.field(rng::derive(run.seed(), q, 0));
    const auto [d, dt] = sample_pair_given_field(law, f, rng::derive(run.seed(), q, 1), rng::derive(run.seed(), q, 2));
    for (double eps : ladder) {
      Row row{eps, covering_check(d, dt, region, eps, C)};
      if (row.cover.pass) {
        row.violations = static_cast<long>(bilip_conclusion_check(d, dt, C, probes).size());
        const auto& [u, v] = probes.front();
        const PathRecord p = geodesic(d, u, v);
        const auto seq = crossing_sequence(run.grid(), p, row.cover.good);
        std::vector<GoodAnnulus> circles;
        for (const auto& c : seq.crossings) circles.push_back({c.w, c.r});
        double rmin = kInfinite;
        for (const auto& c : circles) rmin = std::min(rmin, c.r);
        const double raster = circles.empty() ? run.grid().spacing : std::min(run.grid().spacing / 2, rmin / 8);
        row.connected = circles_connectivity_oracle(circles, run.grid().point(u), run.grid().point(v), eps, raster);
      }
      rows[q].push_back(std::move(row));
    }
  });

  std::ostringstream csv;
  csv << "replicate,eps,pass,uncovered,good_annuli,coarsened,violations,connected\n";
  std::size_t passes = 0, violations = 0;
  for (std::size_t q = 0; q < n; ++q) {
    bool any = false;
    for (const Row& r : rows[q]) {
      csv << q << ',' << format_number(r.eps) << ',' << int(r.cover.pass) << ',' << r.cover.uncovered.size() << ','
          << r.cover.good.size() << ',' << int(r.cover.coarsened) << ','
          << (r.violations >= 0 ? std::to_string(r.violations) : "") << ','
          << (r.connected >= 0 ? std::to_string(r.connected) : "") << '\n';
      any |= r.cover.pass;
      if (r.violations > 0) violations += static_cast<std::size_t>(r.violations);
    }
    passes += any;
  }
  run.write_csv("covering.csv", csv.str());
  run.write_summary({{"estimates",
                      {{"covering_pass_fraction", static_cast<double>(passes) / n},
                       {"violations_on_passing", violations},
                       {"probes", probes.size()}}},
                     {"confidence", nullptr},
                     {"fit", nullptr}});
}

void run_efron_stein(Run& run) {
  const auto ladder = require<std::vector<double>>(run.cfg(), "epsilon_ladder");
  const GridSpec& g = run.grid();
  const DomainMask V = run.cfg().contains("V") ? run.mask(run.cfg()["V"]) : DomainMask::rect(g, 1, 1, g.nx - 2, g.ny - 2);
  Vertex z{g.nx / 4, g.ny / 2};
  Vertex w{(3 * g.nx) / 4, g.ny / 2};
  if (run.cfg().contains("z")) z = vertex_of(run.cfg()["z"], "z");
  if (run.cfg().contains("w")) w = vertex_of(run.cfg()["w"], "w");
  const FieldSample f = run.field(rng::derive(run.seed(), 0));
  const EfronSteinReport report =
      efron_stein_experiment(run.law(), f, z, w, V, ladder, run.replicates(), rng::derive(run.seed(), 1), run.threads());

  std::ostringstream csv;
  csv << "level,eps,kx,ky,vertices,path_length,boundary_length,mean_sq_diff,max_positive_diff,bound_holds\n";
  std::vector<double> proxies, max_len;
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    const auto& level = report.levels[l];
    proxies.push_back(level.proxy);
    max_len.push_back(level.max_square_length);
    for (const auto& s : level.squares)
      csv << l << ',' << format_number(level.eps) << ',' << s.key.kx << ',' << s.key.ky << ',' << s.vertices << ','
          << format_number(s.path_length) << ',' << format_number(s.boundary_length) << ','
          << format_number(s.mean_sq_diff) << ',' << format_number(s.max_positive_diff) << ',' << int(s.bound_holds)
          << '\n';
  }
  run.write_csv("efron_stein.csv", csv.str());
  if (get<bool>(run.cfg(), "svg", false) && !report.levels.empty()) {
    SvgOverlay overlay;
    overlay.paths.push_back(geodesic(run.law().build(f, noise_field(g, rng::derive(rng::derive(run.seed(), 1), 0))), z, w, V));
    overlay.grid_eps = report.levels.back().eps;
    overlay.grid_theta = report.levels.back().theta;
    run.write("efron_stein.svg", render_svg(f, overlay));
  }
  run.write_summary({{"estimates",
                      {{"eps", doubles(ladder)},
                       {"proxy", doubles(proxies)},
                       {"max_square_length", doubles(max_len)},
                       {"distance", report.levels.empty() ? 0.0 : report.levels.front().distance}}},
                     {"confidence", nullptr},
                     {"fit", nullptr},
                     {"partition_exact", report.partition_exact()},
                     {"one_sided_bound_holds", report.bound_holds()}});
}

void run_bilip_probe(Run& run) {
  const MetricLaw law = run.law();
  const std::size_t n = run.replicates();
  const auto probes = probe_pairs(DomainMask::full(run.grid()), static_cast<std::size_t>(get<int>(run.cfg(), "probes", 100)),
                                  rng::derive(run.seed(), 7));
  std::vector<RatioRange> path(n), edge(n);
  parallel_for(n, run.threads(), [&](std::size_t q) {
    const FieldSample f = run.field(rng::derive(run.seed(), q, 0));
    const auto [d, dt] = sample_pair_given_field(law, f, rng::derive(run.seed(), q, 1), rng::derive(run.seed(), q, 2));
    path[q] = lipschitz_ratio(d, dt, probes);
    edge[q] = edge_ratio_range(d, dt);
  });
  std::ostringstream csv;
  csv << "replicate,max_ratio,min_ratio,edge_max_ratio,edge_min_ratio\n";
  std::vector<double> maxima;
  for (std::size_t q = 0; q < n; ++q) {
    csv << q << ',' << format_number(path[q].max_ratio) << ',' << format_number(path[q].min_ratio) << ','
        << format_number(edge[q].max_ratio) << ',' << format_number(edge[q].min_ratio) << '\n';
    maxima.push_back(std::max(path[q].max_ratio, 1.0 / path[q].min_ratio));
  }
  run.write_csv("bilip.csv", csv.str());
  run.write_summary({{"estimates",
                      {{"max_bilipschitz", *std::max_element(maxima.begin(), maxima.end())},
                       {"median_bilipschitz", quantile(maxima, 0.5)},
                       {"q90_bilipschitz", quantile(maxima, 0.9)}}},
                     {"confidence", nullptr},
                     {"fit", nullptr}});
}

DomainMask random_mask(const GridSpec& g, std::uint64_t seed) {
  rng::Stream s(seed);
  const int kind = static_cast<int>(s.uniform() * 3);
  if (kind == 0) {
    const int i0 = 1 + static_cast<int>(s.uniform() * (g.nx / 2));
    const int j0 = 1 + static_cast<int>(s.uniform() * (g.ny / 2));
    const int i1 = std::min(g.nx - 3, i0 + 2 + static_cast<int>(s.uniform() * (g.nx / 3)));
    const int j1 = std::min(g.ny - 3, j0 + 2 + static_cast<int>(s.uniform() * (g.ny / 3)));
    return DomainMask::rect(g, i0, j0, i1, j1);
  }
  const double extent = std::min(g.nx, g.ny) * g.spacing;
  const Point c = g.origin + Point(g.nx * g.spacing * (0.3 + 0.4 * s.uniform()), g.ny * g.spacing * (0.3 + 0.4 * s.uniform()));
  const double r = extent * (0.08 + 0.12 * s.uniform());
  if (kind == 1) return DomainMask::disk(g, c, r);
  return DomainMask::annulus(g, c, r / 2, r);
}

void run_locality_check(Run& run) {
  const MetricLaw law = run.law();
  const std::size_t n = run.replicates();
  std::vector<LocalityReport> reports(n);
  std::vector<XiAdditivityReport> additivity(n);
  parallel_for(n, run.threads(), [&](std::size_t q) {
    const FieldSample f = run.field(rng::derive(run.seed(), q, 0));
    reports[q] = verify_locality(law, f, random_mask(run.grid(), rng::derive(run.seed(), q, 1)), 1,
                                 rng::derive(run.seed(), q, 2), rng::derive(run.seed(), q, 3));
    additivity[q] = verify_xi_additivity(law, f, run.center(), run.pin_radius(), rng::derive(run.seed(), q, 4),
                                         rng::derive(run.seed(), q, 3));
  });
  std::ostringstream csv;
  csv << "trial,mask,discrepancy,pass,xi_shift,xi_relative_error,xi_pass\n";
  double worst = 0.0, worst_rel = 0.0;
  bool all = true, all_xi = true;
  for (std::size_t q = 0; q < n; ++q) {
    csv << q << ",\"" << reports[q].mask << "\"," << format_number(reports[q].discrepancy) << ','
        << int(reports[q].pass) << ',' << format_number(additivity[q].shift) << ','
        << format_number(additivity[q].max_relative_error) << ',' << int(additivity[q].pass) << '\n';
    worst = std::max(worst, reports[q].discrepancy);
    worst_rel = std::max(worst_rel, additivity[q].max_relative_error);
    all = all && reports[q].pass;
    all_xi = all_xi && additivity[q].pass;
  }
  run.write_csv("locality.csv", csv.str());
  const json params = {{"xi", law.xi},
                       {"sigma", law.sigma},
                       {"builder", law.builder == MetricBuilder::lfpp ? "lfpp" : "global_max"},
                       {"grid", {{"nx", run.grid().nx}, {"ny", run.grid().ny}, {"spacing", run.grid().spacing}}},
                       {"trials", n}};
  const json seeds = {{"master", run.seed()}};
  if (run.json_out()) {
    json out = json::array();
    out.push_back({{"check", "locality"},
                   {"parameters", params},
                   {"discrepancy", std::isfinite(worst) ? json(worst) : json("inf")},
                   {"pass", all},
                   {"seeds", seeds}});
    out.push_back({{"check", "xi_additivity"},
                   {"parameters", params},
                   {"discrepancy", worst_rel},
                   {"pass", all_xi},
                   {"seeds", seeds}});
    run.write("locality.json", out.dump(2) + "\n");
  }
  run.write_summary({{"estimates", {{"locality_discrepancy", std::isfinite(worst) ? json(worst) : json("inf")},
                                    {"xi_additivity_relative_error", worst_rel}}},
                     {"confidence", nullptr},
                     {"fit", nullptr},
                     {"pass", all && all_xi}});
}

void dispatch(const std::string& name, Run& run) {
  if (name == "sample") return run_sample(run);
  if (name == "dist") return run_dist(run);
  if (name == "annulus-scan") return run_annulus_scan(run);
  if (name == "iterate") return run_iterate(run);
  if (name == "covering") return run_covering(run);
  if (name == "efron-stein") return run_efron_stein(run);
  if (name == "bilip-probe") return run_bilip_probe(run);
  if (name == "locality-check") return run_locality_check(run);
  throw ConfigError("unknown experiment '" + name + "'");
}

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

}  // namespace

std::vector<Query> parse_batch(std::string_view text) {
  std::vector<Query> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Query q;
    if (!(fields >> q.u.i >> q.u.j >> q.v.i >> q.v.j))
      throw ParseError("batch line " + std::to_string(number) + ": expected 'u_i u_j v_i v_j [maskid]'");
    std::string id;
    if (fields >> id) q.mask = id;
    std::string extra;
    if (fields >> extra) throw ParseError("batch line " + std::to_string(number) + ": trailing fields");
    out.push_back(q);
  }
  return out;
}

std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

int run(const Options& options, std::ostream& out, std::ostream& err) {
  const std::string started = timestamp();
  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), options.subcommand) == kSubcommands.end())
      throw ConfigError("unknown experiment '" + options.subcommand + "'");
    if (options.config_path.empty()) throw ConfigError("--config is required");
    json cfg;
    try {
      cfg = json::parse(read_file(options.config_path));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : cfg.items())
      if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    const std::string experiment = get<std::string>(cfg, "experiment", options.subcommand);
    if (experiment != options.subcommand)
      throw ConfigError("config is for '" + experiment + "' but '" + options.subcommand + "' was invoked");

    Run run(cfg, fs::path(options.config_path).parent_path(), options);
    dispatch(options.subcommand, run);

    json manifest = {{"tool", "gfflab"},
                     {"version", kVersion},
                     {"experiment", options.subcommand},
                     {"config_hash", hex64(fnv1a64(run.cfg().dump()))},
                     {"seed", run.seed()},
                     {"started", started},
                     {"finished", timestamp()}};
    json files = json::array();
    for (const auto& name : run.outputs()) {
      const std::string bytes = read_file(run.out_dir() / name);
      files.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    manifest["outputs"] = files;
    write_file(run.out_dir() / "manifest.json", manifest.dump(2) + "\n");
    out << (run.out_dir() / "manifest.json").string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    return report_error(err, e.kind(), e.what(), kExitValidation);
  } catch (const ParseError& e) {
    return report_error(err, e.kind(), e.what(), kExitValidation);
  } catch (const Error& e) {
    return report_error(err, e.kind(), e.what(), kExitNumerical);
  } catch (const json::exception& e) {
    return report_error(err, "config", e.what(), kExitValidation);
  } catch (const std::exception& e) {
    return report_error(err, "internal", e.what(), kExitNumerical);
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on lattice Gaussian free field metrics"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options options;
  std::uint64_t seed = 0;
  for (const auto& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", options.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--threads", options.threads, "worker threads (default: GFFLAB_THREADS or all cores)");
    sub->add_option("--output", options.output, "output directory, overrides the config");
    sub->add_option("--format", options.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(std::cerr, "usage", e.what(), kExitValidation);
  }
  CLI::App* sub = app.get_subcommands().front();
  options.subcommand = sub->get_name();
  if (sub->count("--seed")) options.seed = seed;
  return run(options, std::cout, std::cerr);
}

}  // namespace gfflab::cli
