#include "chaoscope/bounds.hpp"
#include "chaoscope/gaussian.hpp"
#include "chaoscope/io.hpp"
#include "chaoscope/percolation.hpp"
#include "chaoscope/sde.hpp"
#include "chaoscope/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>
#include <map>

using namespace chaoscope;
using nlohmann::json;

namespace {

constexpr const char* tool_version = "0.1.0";

// Exit codes.
constexpr int exit_ok = 0, exit_check_failed = 1, exit_usage = 2;

struct Globals {
  int threads = 0;
  std::string format = "json";
  std::string out;
  bool emit_gnuplot = false;
};

// Shortest decimal that round-trips.
std::string shortest(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// A table rendered either as CSV or as a JSON array of row objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }

  json to_json() const {
    json a = json::array();
    for (const auto& r : rows) {
      json o = json::object();
      for (std::size_t c = 0; c < columns.size(); ++c) o[columns[c]] = r[c];
      a.push_back(o);
    }
    return a;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) os << ',';
        const auto& v = r[c];
        if (v.is_null()) continue;
        if (v.is_string())
          os << v.get<std::string>();
        else if (v.is_number_float())
          os << shortest(v.get<double>());
        else
          os << v.dump();
      }
      os << '\n';
    }
    return os.str();
  }
};

json opt_num(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

// Everything a run writes, plus its manifest.
class Run {
 public:
  Run(std::string subcommand, const Globals& g, CLI::App* app) : sub_(std::move(subcommand)), g_(g), app_(app) {
    start_ = std::chrono::steady_clock::now();
  }

  void set_seed(std::optional<std::uint64_t> s) { seed_ = s; }
  bool csv() const { return g_.format == "csv"; }
  int threads() const { return g_.threads; }

  // Main output: --out path if given, else stdout.
  void emit(const std::string& text) {
    if (g_.out.empty()) {
      std::cout << text;
      if (!text.empty() && text.back() != '\n') std::cout << '\n';
      return;
    }
    write_file(g_.out, text);
    if (g_.emit_gnuplot && g_.format == "csv") write_gnuplot(g_.out, text);
  }

  void emit(const Table& t) { emit(g_.format == "csv" ? t.to_csv() : t.to_json().dump(2)); }
  void emit(const json& j) { emit(j.dump(2)); }

  void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    require(f.good(), ErrorCode::io_error, "cannot write " + path);
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
    outputs_.push_back(path);
  }

  void note_output(const std::string& path) { outputs_.push_back(path); }

  // Sidecar manifest next to every file this run wrote.
  void finish() const {
    if (outputs_.empty()) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m;
    m["subcommand"] = sub_;
    m["version"] = tool_version;
    m["seed"] = seed_ ? json(*seed_) : json(nullptr);
    m["threads"] = g_.threads;
    m["format"] = g_.format;
    m["parameters"] = parameters();
    m["outputs"] = outputs_;
    m["wall_clock_seconds"] = secs;
    for (const auto& path : outputs_) {
      std::ofstream f(path + ".manifest.json");
      f << m.dump(2) << '\n';
    }
  }

 private:
  json parameters() const {
    json p = json::object();
    for (const CLI::Option* o : app_->get_options()) {
      const auto& names = o->get_lnames();
      if (names.empty() || names[0] == "help") continue;
      if (o->count() > 0) {
        const auto& r = o->results();
        p[names[0]] = r.size() == 1 ? json(r[0]) : json(r);
      } else if (!o->get_default_str().empty()) {
        p[names[0]] = o->get_default_str();
      } else {
        p[names[0]] = nullptr;
      }
    }
    return p;
  }

  void write_gnuplot(const std::string& csv_path, const std::string& csv) {
    const auto header = csv.substr(0, csv.find('\n'));
    std::vector<std::string> cols;
    std::stringstream ss(header);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    std::ostringstream gp;
    gp << "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n"
       << "set output '" << csv_path << ".png'\nplot ";
    bool first = true;
    for (std::size_t c = 1; c < cols.size(); ++c) {
      gp << (first ? "" : ", \\\n     ") << "'" << csv_path << "' using 0:" << c + 1 << " with linespoints";
      first = false;
    }
    if (first) gp << "'" << csv_path << "' using 0:1 with linespoints";
    gp << '\n';
    write_file(csv_path + ".gp", gp.str());
  }

  std::string sub_;
  const Globals& g_;
  CLI::App* app_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

// --------------------------------------------------------------------------
// matrix

struct MatrixArgs {
  std::optional<int> mean_field, sequential, random;
  std::optional<std::string> random_walk, scaled_adjacency, load;
  std::vector<double> er;
  std::vector<int> regular;
  std::vector<std::string> rank_one;
  double scale = 1.0;
  double density = 0.6;
  bool stochastic = false;
  std::uint64_t seed = 0;
  std::string save, graph_out, v;
};

int cmd_matrix(const MatrixArgs& a, Run& run) {
  int sources = a.mean_field.has_value() + a.sequential.has_value() + a.random.has_value() +
                a.random_walk.has_value() + a.scaled_adjacency.has_value() + a.load.has_value() + !a.er.empty() +
                !a.regular.empty() + !a.rank_one.empty();
  require(sources == 1, ErrorCode::invalid_argument,
          "give exactly one of --mean-field, --random-walk, --scaled-adjacency, --er, --regular, --rank-one, "
          "--sequential, --random, --load");
  std::optional<Graph> graph;
  InteractionMatrix xi;
  bool seeded = false;
  if (a.mean_field) xi = build_mean_field(*a.mean_field);
  if (a.sequential) xi = build_sequential(*a.sequential);
  if (a.random) {
    xi = sample_random_interaction(*a.random, a.seed, a.density, a.stochastic);
    seeded = true;
  }
  if (a.load) xi = load_matrix(*a.load);
  if (a.random_walk) {
    graph = load_graph(*a.random_walk);
    xi = build_random_walk(*graph);
  }
  if (a.scaled_adjacency) {
    graph = load_graph(*a.scaled_adjacency);
    xi = build_scaled_adjacency(*graph, a.scale);
  }
  if (!a.er.empty()) {
    require(a.er[0] >= 1 && a.er[0] == std::floor(a.er[0]), ErrorCode::invalid_argument, "--er needs N P");
    graph = sample_erdos_renyi(static_cast<int>(a.er[0]), a.er[1], a.seed);
    xi = build_random_walk(*graph);
    seeded = true;
  }
  if (!a.regular.empty()) {
    graph = sample_random_regular(a.regular[0], a.regular[1], a.seed);
    xi = build_random_walk(*graph);
    seeded = true;
  }
  if (!a.rank_one.empty()) xi = build_rank_one(load_vector(a.rank_one[0]), load_vector(a.rank_one[1]));
  if (seeded) run.set_seed(a.seed);

  if (!a.save.empty()) {
    save_matrix(a.save, xi);
    run.note_output(a.save);
  }
  if (!a.graph_out.empty()) {
    require(graph.has_value(), ErrorCode::invalid_argument, "--graph-out needs a graph-based source");
    std::ostringstream os;
    write_graph(os, *graph);
    run.write_file(a.graph_out, os.str());
  }

  const auto rep = validate(xi, true);
  Table t;
  t.columns = {"i", "degree", "delta_i", "row_sum", "col_sum"};
  for (Index i = 0; i < xi.size(); ++i)
    t.add({i, graph ? json(graph->degrees()[static_cast<std::size_t>(i)]) : json(nullptr), xi.row_max()(i),
           xi.row_sums()(i), xi.col_sums()(i)});

  json s;
  s["n"] = xi.size();
  s["nonzeros"] = xi.nonzeros();
  s["delta"] = xi.delta();
  s["symmetric"] = xi.is_symmetric();
  s["nonnegative"] = rep.nonnegative;
  s["zero_diagonal"] = rep.zero_diagonal;
  s["rows_ok"] = rep.rows_ok;
  s["columns_ok"] = rep.columns_ok.value_or(true);
  s["bad_rows"] = rep.bad_rows;
  s["bad_columns"] = rep.bad_columns;
  s["max_row_sum"] = rep.max_row_sum;
  s["max_col_sum"] = rep.max_col_sum;
  s["p_xi"] = p_xi(xi);
  if (graph) s["edges"] = graph->edge_count();
  if (!a.v.empty()) {
    const auto v = parse_subset(static_cast<int>(xi.size()), a.v);
    s["v"] = v.members();
    s["q_xi"] = q_xi(xi, v);
  }
  if (run.csv()) {
    std::cerr << "n=" << xi.size() << " delta=" << std::setprecision(17) << xi.delta() << " p_xi=" << p_xi(xi)
              << " rows_ok=" << rep.rows_ok << " columns_ok=" << rep.columns_ok.value_or(true);
    if (s.contains("q_xi")) std::cerr << " q_xi=" << s["q_xi"].get<double>();
    std::cerr << '\n';
    run.emit(t);
  } else {
    s["vertices"] = t.to_json();
    run.emit(s);
  }
  return exit_ok;
}


// --------------------------------------------------------------------------
// shared model inputs

struct MatrixSource {
  std::string matrix;
  std::optional<int> mean_field;

  void attach(CLI::App* sub) {
    sub->add_option("--matrix", matrix, "interaction matrix file (.json or .csv)");
    sub->add_option("--mean-field", mean_field, "use the mean-field matrix on N sites");
  }

  bool given() const { return !matrix.empty() || mean_field.has_value(); }

  InteractionMatrix load() const {
    require(matrix.empty() != !mean_field.has_value(), ErrorCode::invalid_argument,
            "give exactly one of --matrix and --mean-field");
    return mean_field ? build_mean_field(*mean_field) : load_matrix(matrix);
  }
};

struct ConstantArgs {
  ModelConstants c;
  std::optional<double> eta;

  void attach(CLI::App* sub) {
    sub->add_option("--gamma", c.gamma, "transport constant gamma")->capture_default_str();
    sub->add_option("--M", c.M, "drift second-moment bound M")->capture_default_str();
    sub->add_option("--sigma", c.sigma, "noise level sigma")->capture_default_str();
    sub->add_option("--C0", c.C0, "initial three-particle level C0")->capture_default_str();
    sub->add_option("--T", c.T, "time horizon")->capture_default_str();
    sub->add_option("--eta", eta, "log-Sobolev constant (uniform-in-time mode)");
  }

  ModelConstants get() const {
    ModelConstants out = c;
    out.eta = eta;
    check_constants(out);
    return out;
  }
};

// --------------------------------------------------------------------------
// percolate

struct PercolateArgs {
  MatrixSource src;
  double kappa = 1.0;
  std::string engine = "exact";
  std::string functional = "size";
  std::string x_path, G_path;
  ConstantArgs constants;
  double h3 = 0.0;
  std::string v;
  std::vector<double> t{1.0};
  std::int64_t reps = 10000;
  std::uint64_t seed = 0;
  double tol = 1e-12;
  int max_n = default_exact_limit;
  std::string family;
  std::string trajectory;
};

int cmd_percolate(const PercolateArgs& a, Run& run) {
  const PercolationModel model(a.src.load(), a.kappa);
  const int n = model.size();
  require(!a.v.empty(), ErrorCode::invalid_argument, "--v is required");
  const auto v = parse_subset(n, a.v);
  Functional f = Functional::parse(a.functional);
  if (!a.x_path.empty()) f.x = load_vector(a.x_path);
  if (!a.G_path.empty()) f.G = load_dense(a.G_path);
  f.constants = a.constants.get();
  f.h3 = a.h3;
  for (double t : a.t) require(t >= 0.0, ErrorCode::invalid_argument, "times must be nonnegative");

  std::optional<Family> fam;
  if (!a.family.empty()) fam = parse_family(a.family);
  Payload payload{f.x, f.G};

  Table t;
  t.columns = {"engine", "functional", "v", "t", "value", "stderr", "reps", "seed"};
  if (fam) t.columns.push_back("bound_" + family_name(*fam));
  if (a.engine == "exact") {
    ExactEngine eng(model, a.max_n);
    const Vec table = f.tabulate(model.xi).values;
    for (double time : a.t) {
      const double val = eng.expectation(table, time, a.tol)(static_cast<Index>(v.mask()));
      std::vector<json> row{"exact", f.name(), v.to_string(), time, val, nullptr, nullptr, nullptr};
      if (fam) row.push_back(expectation_bound(model, *fam, v, time, payload));
      t.add(std::move(row));
    }
  } else {
    require(a.engine == "mc" || a.engine == "fpp", ErrorCode::invalid_argument,
            "--engine must be exact, mc or fpp");
    run.set_seed(a.seed);
    const McEngine e = a.engine == "fpp" ? McEngine::fpp : McEngine::gillespie;
    for (double time : a.t) {
      const auto est = mc_expectation(model, f, v, time, a.reps, a.seed, run.threads(), e);
      std::vector<json> row{a.engine, f.name(), v.to_string(), time, est.mean, est.std_error, est.reps, est.seed};
      if (fam) row.push_back(expectation_bound(model, *fam, v, time, payload));
      t.add(std::move(row));
    }
  }
  if (!a.trajectory.empty()) {
    run.set_seed(a.seed);
    const double tmax = *std::max_element(a.t.begin(), a.t.end());
    Stream rng(a.seed, 0);
    const auto tr = a.engine == "fpp" ? fpp_simulate(model, v, tmax, rng) : simulate(model, v, tmax, rng);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    run.write_file(a.trajectory, os.str());
  }
  run.emit(t);
  return exit_ok;
}

// --------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite = "all";
  int instances = 50;
  std::uint64_t seed = 1;
  std::string report;
};

int cmd_verify(const VerifyArgs& a, Run& run) {
  run.set_seed(a.seed);
  const auto rep = run_suite(a.suite, a.instances, a.seed);
  // one summary row per (suite, check)
  Table t;
  t.columns = {"suite", "check", "instances", "evaluations", "min_slack", "tolerance", "worst", "pass"};
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const CheckRecord*>> groups;
  for (const auto& c : rep.checks) {
    const auto key = std::make_pair(c.suite, c.check);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&c);
  }
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::int64_t count = 0;
    const CheckRecord* worst = g.front();
    bool pass = true;
    for (const auto* c : g) {
      count += c->count;
      if (c->min_slack < worst->min_slack) worst = c;
      pass = pass && c->pass();
    }
    t.add({key.first, key.second, g.size(), count, worst->min_slack, worst->tolerance,
           "instance " + std::to_string(worst->instance) + " " + worst->worst, pass ? "pass" : "fail"});
  }
  if (!a.report.empty()) run.write_file(a.report, rep.to_json().dump(2));
  run.emit(t);
  std::cerr << (rep.pass() ? "PASS" : "FAIL") << ": " << rep.checks.size() << " records, " << rep.evaluations()
            << " inequality evaluations, min slack " << rep.min_slack() << '\n';
  return rep.pass() ? exit_ok : exit_check_failed;
}

// --------------------------------------------------------------------------
// gaussian

struct GaussianArgs {
  MatrixSource src;
  std::optional<int> n;
  std::uint64_t seed = 0;
  double density = 0.6;
  bool stochastic = false;
  std::optional<double> T;
  double window_fraction = 0.0;
  std::vector<std::string> v;
  bool all_subsets = false;
  std::optional<int> avg_k;
  std::string avg_mode = "auto";
  std::int64_t reps = 10000;
  bool certify = false;
  std::string sigma_out;
};

int cmd_gaussian(const GaussianArgs& a, Run& run) {
  InteractionMatrix xi;
  if (a.n) {
    require(!a.src.given(), ErrorCode::invalid_argument, "give either --n or a matrix source");
    xi = sample_random_interaction(*a.n, a.seed, a.density, a.stochastic);
    run.set_seed(a.seed);
  } else {
    xi = a.src.load();
  }
  const double rho = operator_norm(xi);
  require(a.T.has_value() != (a.window_fraction > 0.0), ErrorCode::invalid_argument,
          "give exactly one of --T and --window-fraction");
  require(a.T || rho > 0.0, ErrorCode::invalid_argument, "--window-fraction needs a nonzero matrix; give --T");
  const double T = a.T ? *a.T : a.window_fraction * small_time_window(rho);
  const auto model = sigma_T(xi, T);
  const int n = static_cast<int>(xi.size());
  if (!a.sigma_out.empty()) {
    std::ostringstream os;
    write_matrix_csv(os, InteractionMatrix::from_dense(model.sigma));
    run.write_file(a.sigma_out, os.str());
  }

  std::vector<SubsetState> subsets;
  for (const auto& s : a.v) subsets.push_back(parse_subset(n, s));
  if (a.all_subsets) {
    require(n <= 20, ErrorCode::engine_too_large, "--all-subsets needs n <= 20");
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) subsets.push_back(SubsetState::from_mask(n, m));
  }
  require(!subsets.empty() || a.avg_k, ErrorCode::invalid_argument, "nothing to do: give --v, --all-subsets or --avg-k");

  std::optional<ModelConstants> cert;
  std::optional<PercolationModel> perc;
  if (a.certify) {
    cert = certification_constants(model);
    perc.emplace(xi, cert->gamma / (cert->sigma * cert->sigma));
  }

  Table rows;
  rows.columns = {"v", "exact", "lower", "upper", "in_window"};
  if (cert) rows.columns.push_back("fk_bound");
  for (const auto& v : subsets) {
    const auto e = entropy_bounds(model, v);
    std::vector<json> r{v.to_string(), e.exact, e.lower, e.upper, e.in_window};
    if (cert) r.push_back(percolation_entropy_bound(*perc, v, *cert, std::nullopt, false, 0.0, false).structural);
    rows.add(std::move(r));
  }

  Table avg;
  if (a.avg_k) {
    const int k = *a.avg_k;
    std::string mode = a.avg_mode;
    if (mode == "auto") {
      double b = 1.0;
      for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
      mode = b <= static_cast<double>(enumerate_limit) ? "enumerate" : "sample";
    }
    require(mode == "enumerate" || mode == "sample", ErrorCode::invalid_argument,
            "--avg-mode must be auto, enumerate or sample");
    const auto ae = mode == "enumerate" ? avg_entropy_enumerate(model, k, run.threads())
                                        : avg_entropy_sample(model, k, a.reps, a.seed, run.threads());
    if (mode == "sample") run.set_seed(a.seed);
    const auto sw = average_sandwich(model, k);
    const Mat A = model.sigma / T - Mat::Identity(n, n);
    avg.columns = {"k", "T", "rho", "mode", "count", "average", "stderr", "avg_trace_sq", "sandwich_lower",
                   "sandwich_upper", "in_window"};
    avg.add({k, T, rho, ae.mode, ae.count, ae.value, opt_num(ae.std_error), avg_trace_sq(A, k), sw.lower, sw.upper,
             T <= small_time_window(rho)});
  }

  if (run.csv()) {
    std::string text;
    if (!subsets.empty()) text += rows.to_csv();
    if (a.avg_k) text += (text.empty() ? "" : "\n") + avg.to_csv();
    run.emit(text);
  } else {
    json j{{"n", n}, {"T", T}, {"rho", rho}, {"series_order", model.series_order}, {"tail_bound", model.tail_bound}};
    if (!subsets.empty()) j["entropies"] = rows.to_json();
    if (a.avg_k) j["average"] = avg.to_json()[0];
    run.emit(j);
  }
  return exit_ok;
}

// --------------------------------------------------------------------------
// bound

struct BoundArgs {
  MatrixSource src;
  std::string theorem;
  std::optional<int> k;
  std::string v;
  std::string pi;
  ConstantArgs constants;
  std::optional<double> kappa;
  bool use_chat = false;
  std::optional<double> h3;
  bool uniform = false;
  bool reversed = false;
  std::optional<double> oracle;
  double tol = 1e-10;
  int max_n = default_exact_limit;
  std::string batch;
};

BoundReport evaluate_bound(const BoundArgs& a, const InteractionMatrix& xi, const std::string& theorem,
                           std::optional<int> k, const std::string& vtext) {
  const auto c = a.constants.get();
  const int n = static_cast<int>(xi.size());
  auto need_k = [&] {
    require(k.has_value(), ErrorCode::invalid_argument, "theorem '" + theorem + "' needs --k");
    return *k;
  };
  auto need_v = [&] {
    require(!vtext.empty(), ErrorCode::invalid_argument, "theorem '" + theorem + "' needs --v");
    return parse_subset(n, vtext);
  };
  BoundReport r;
  if (theorem == "max") {
    r = max_entropy_bound(xi, need_k(), c);
  } else if (theorem == "avg") {
    r = avg_entropy_bound(xi, need_k(), c);
  } else if (theorem == "weighted") {
    require(!a.pi.empty(), ErrorCode::invalid_argument, "theorem 'weighted' needs --pi");
    r = weighted_avg_bound(xi, need_k(), load_vector(a.pi), c);
  } else if (theorem == "sharper") {
    r = sharper_avg_bound(xi, need_k(), c);
  } else if (theorem == "setwise") {
    r = setwise_bound(xi, need_v(), c);
  } else if (theorem == "feynman-kac") {
    const double kappa = a.kappa.value_or(c.gamma / (c.sigma * c.sigma));
    const double h3 = a.h3 ? *a.h3 : (a.use_chat ? h3_bound(c, xi.delta(), a.uniform) : 0.0);
    r = percolation_entropy_bound(PercolationModel(xi, kappa), need_v(), c, std::nullopt, a.use_chat, h3, a.uniform,
                                  a.tol, a.max_n);
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown theorem '" + theorem +
                                                 "' (max, avg, weighted, sharper, setwise, feynman-kac)");
  }
  if (a.reversed) r = reversed_variant(r);
  r.oracle = a.oracle;
  return r;
}

int cmd_bound(const BoundArgs& a, Run& run) {
  const auto xi = a.src.load();
  std::vector<BoundReport> reps;
  if (!a.batch.empty()) {
    require(a.theorem.empty(), ErrorCode::invalid_argument, "--batch replaces --theorem");
    std::ifstream in(a.batch);
    require(in.good(), ErrorCode::io_error, "cannot open " + a.batch);
    std::string line;
    int lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (header.empty()) {
        header = cells;
        require(std::find(header.begin(), header.end(), "theorem") != header.end(), ErrorCode::parse_error,
                "batch line " + std::to_string(lineno) + ": header needs a theorem column");
        continue;
      }
      std::string theorem, vtext;
      std::optional<int> k;
      for (std::size_t c = 0; c < header.size() && c < cells.size(); ++c) {
        if (header[c] == "theorem") theorem = cells[c];
        if (header[c] == "v") vtext = cells[c];
        if (header[c] == "k" && !cells[c].empty()) {
          try {
            k = std::stoi(cells[c]);
          } catch (const std::logic_error&) {
            throw Error(ErrorCode::parse_error, "batch line " + std::to_string(lineno) + ": bad k");
          }
        }
      }
      std::replace(vtext.begin(), vtext.end(), ' ', ',');
      try {
        reps.push_back(evaluate_bound(a, xi, theorem, k, vtext));
      } catch (const Error& e) {
        throw Error(e.code(), "batch line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  } else {
    require(!a.theorem.empty(), ErrorCode::invalid_argument, "--theorem or --batch is required");
    reps.push_back(evaluate_bound(a, xi, a.theorem, a.k, a.v));
  }
  bool ok = true;
  for (const auto& r : reps) ok = ok && r.verdict().value_or(true);
  if (run.csv()) {
    std::string text = BoundReport::csv_header() + "\n";
    for (const auto& r : reps) text += r.csv_row() + "\n";
    run.emit(text);
  } else if (a.batch.empty()) {
    run.emit(reps.front().to_json());
  } else {
    json arr = json::array();
    for (const auto& r : reps) arr.push_back(r.to_json());
    run.emit(arr);
  }
  return ok ? exit_ok : exit_check_failed;
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  MatrixSource src;
  std::optional<int> n;
  std::uint64_t matrix_seed = 0;
  double density = 0.6;
  bool stochastic = false;
  bool linear = false;
  std::string drift;
  int d = 1;
  std::string mode = "particles";
  SimConfig cfg;
  std::string samples_out;
  std::string entropy_v;
};

int cmd_simulate(SimulateArgs a, Run& run) {
  require(a.linear != !a.drift.empty(), ErrorCode::invalid_argument, "give exactly one of --linear and --drift");
  const auto drift = a.linear ? DriftSpec::linear(a.d) : DriftSpec::named(a.drift, a.d);
  InteractionMatrix xi;
  if (a.n) {
    require(!a.src.given(), ErrorCode::invalid_argument, "give either --n or a matrix source");
    const bool stochastic = a.stochastic || drift.kind == DriftSpec::Kind::custom;
    xi = sample_random_interaction(*a.n, a.matrix_seed, a.density, stochastic);
  } else {
    xi = a.src.load();
  }
  a.cfg.threads = run.threads();
  run.set_seed(a.cfg.seed);
  require(a.mode == "particles" || a.mode == "projection", ErrorCode::invalid_argument,
          "--mode must be particles or projection");
  const Mat samples = a.mode == "particles" ? simulate_particles(xi, drift, a.cfg) : simulate_projection(xi, drift, a.cfg);
  if (!a.samples_out.empty()) {
    std::ostringstream os;
    write_samples_csv(os, samples, a.d);
    run.write_file(a.samples_out, os.str());
  }
  const auto est = sample_covariance(samples);
  const bool oracle = drift.kind == DriftSpec::Kind::linear && a.d == 1;
  Mat exact, euler;
  if (oracle) {
    exact = a.mode == "particles" ? sigma_T(xi, a.cfg.T).sigma : a.cfg.T * Mat::Identity(xi.size(), xi.size());
    exact *= a.cfg.sigma * a.cfg.sigma;
    euler = a.mode == "particles" ? euler_covariance(xi, a.cfg.dt, a.cfg.T, a.cfg.sigma) : exact;
  }
  Table t;
  t.columns = {"i", "j", "mean_i", "cov", "stderr"};
  if (oracle) {
    t.columns.insert(t.columns.end(), {"sigma_T", "euler", "z"});
  }
  const Index p = samples.cols();
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) {
      std::vector<json> r{i, j, est.mean(i), est.cov(i, j), est.std_error(i, j)};
      if (oracle) {
        r.push_back(exact(i, j));
        r.push_back(euler(i, j));
        r.push_back((est.cov(i, j) - exact(i, j)) / est.std_error(i, j));
      }
      t.add(std::move(r));
    }
  if (!a.entropy_v.empty()) {
    const auto v = parse_subset(static_cast<int>(p), a.entropy_v);
    const double h = gaussian_entropy_from_samples(samples, v, a.cfg.T);
    std::cerr << "entropy estimate v={" << v.to_string() << "}: " << std::setprecision(17) << h;
    if (oracle && a.cfg.sigma == 1.0 && a.mode == "particles")
      std::cerr << " exact " << exact_entropy(sigma_T(xi, a.cfg.T), v);
    std::cerr << '\n';
  }
  run.emit(t);
  return exit_ok;
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaoscope: propagation of chaos, interaction percolation and entropy bounds"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.threads = default_threads();
  app.add_option("--threads", g.threads, "worker threads (env CHAOSCOPE_THREADS)")
      ->envname("CHAOSCOPE_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--out", g.out, "write the main output to this file (a manifest is written beside it)");
  app.add_flag("--emit-gnuplot", g.emit_gnuplot, "write a gnuplot script next to CSV output files");

  MatrixArgs ma;
  auto* matrix = app.add_subcommand("matrix", "build or load an interaction matrix and report its functionals");
  matrix->add_option("--mean-field", ma.mean_field, "complete graph, xi_ij = 1/(n-1)");
  matrix->add_option("--random-walk", ma.random_walk, "random walk on the graph in this edge-list file");
  matrix->add_option("--scaled-adjacency", ma.scaled_adjacency, "scaled adjacency of the graph in this file");
  matrix->add_option("--scale", ma.scale, "scale for --scaled-adjacency")->capture_default_str();
  matrix->add_option("--er", ma.er, "random walk on an Erdos-Renyi graph: N P")->expected(2);
  matrix->add_option("--regular", ma.regular, "random walk on a random regular graph: N M")->expected(2);
  matrix->add_option("--rank-one", ma.rank_one, "rank-one matrix from two vector files: ALPHA BETA")->expected(2);
  matrix->add_option("--sequential", ma.sequential, "lower-triangular xi_ij = 1/i, j < i");
  matrix->add_option("--random", ma.random, "random sub-stochastic matrix on N sites");
  matrix->add_option("--density", ma.density, "fill density for --random")->capture_default_str();
  matrix->add_flag("--stochastic", ma.stochastic, "normalise rows of --random to sum one");
  matrix->add_option("--load", ma.load, "load a matrix file");
  matrix->add_option("--seed", ma.seed, "seed for random sources")->capture_default_str();
  matrix->add_option("--save", ma.save, "write the matrix (.json or .csv)");
  matrix->add_option("--graph-out", ma.graph_out, "write the underlying graph as an edge list");
  matrix->add_option("--v", ma.v, "also report q_xi(v) for this subset, e.g. 0,2,5");

  PercolateArgs pa;
  auto* perc = app.add_subcommand("percolate", "expectations of the interaction percolation process");
  pa.src.attach(perc);
  perc->add_option("--kappa", pa.kappa, "rate multiplier")->capture_default_str();
  perc->add_option("--engine", pa.engine, "exact, mc or fpp")->check(CLI::IsMember({"exact", "mc", "fpp"}))->capture_default_str();
  perc->add_option("--functional", pa.functional, "size^p, linear^p, quadratic^p, C or Chat")->capture_default_str();
  perc->add_option("--x", pa.x_path, "vector file for linear functionals");
  perc->add_option("--G", pa.G_path, "matrix CSV for quadratic functionals");
  pa.constants.attach(perc);
  perc->add_option("--h3", pa.h3, "three-particle level for Chat")->capture_default_str();
  perc->add_option("--v", pa.v, "initial subset, e.g. 0,1")->required();
  perc->add_option("--t", pa.t, "evaluation times")->delimiter(',')->capture_default_str();
  perc->add_option("--reps", pa.reps, "Monte Carlo replications")->capture_default_str();
  perc->add_option("--seed", pa.seed, "Monte Carlo seed")->capture_default_str();
  perc->add_option("--tol", pa.tol, "exact engine truncation tolerance")->capture_default_str();
  perc->add_option("--max-n", pa.max_n, "exact engine size limit")->capture_default_str();
  perc->add_option("--bound", pa.family, "also report this expectation bound family (ia..iiib)");
  perc->add_option("--trajectory", pa.trajectory, "write one sample trajectory as CSV");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "run the verification battery");
  ver->add_option("--suite", va.suite, "generator, expectations, gaussian, bounds or all")
      ->check(CLI::IsMember({"generator", "expectations", "gaussian", "bounds", "all"}))
      ->capture_default_str();
  ver->add_option("--instances", va.instances, "random instances per suite")->capture_default_str();
  ver->add_option("--seed", va.seed, "ensemble seed")->capture_default_str();
  ver->add_option("--report", va.report, "write the full JSON report here");

  GaussianArgs ga;
  auto* gau = app.add_subcommand("gaussian", "linear-drift Gaussian oracle: exact entropies and bounds");
  ga.src.attach(gau);
  gau->add_option("--n", ga.n, "random matrix on N sites");
  gau->add_option("--seed", ga.seed, "seed for --n and sampled averages")->capture_default_str();
  gau->add_option("--density", ga.density, "fill density for --n")->capture_default_str();
  gau->add_flag("--stochastic", ga.stochastic, "row-stochastic random matrix");
  gau->add_option("--T", ga.T, "time horizon");
  gau->add_option("--window-fraction", ga.window_fraction, "T as a fraction of log 2 / (2 rho)");
  gau->add_option("--v", ga.v, "subset(s) to evaluate, e.g. --v 0,1 --v 2,3");
  gau->add_flag("--all-subsets", ga.all_subsets, "evaluate every nonempty subset");
  gau->add_option("--avg-k", ga.avg_k, "also report the k-subset average and its explicit bracket");
  gau->add_option("--avg-mode", ga.avg_mode, "auto, enumerate or sample")->capture_default_str();
  gau->add_option("--reps", ga.reps, "samples for --avg-mode sample")->capture_default_str();
  gau->add_flag("--certify", ga.certify, "add the Feynman-Kac percolation bound with derived constants");
  gau->add_option("--sigma-out", ga.sigma_out, "write Sigma_T as CSV");

  BoundArgs ba;
  auto* bnd = app.add_subcommand("bound", "evaluate an entropy bound");
  ba.src.attach(bnd);
  bnd->add_option("--theorem", ba.theorem, "max, avg, weighted, sharper, setwise or feynman-kac");
  bnd->add_option("--k", ba.k, "subset size");
  bnd->add_option("--v", ba.v, "subset, e.g. 0,2");
  bnd->add_option("--pi", ba.pi, "weight vector file for the weighted bound");
  ba.constants.attach(bnd);
  bnd->add_option("--kappa", ba.kappa, "percolation rate (default gamma / sigma^2)");
  bnd->add_flag("--use-chat", ba.use_chat, "use the Chat source term");
  bnd->add_option("--h3", ba.h3, "three-particle level (default: explicit h3 bound)");
  bnd->add_flag("--uniform", ba.uniform, "uniform-in-time mode (needs --eta)");
  bnd->add_flag("--reversed", ba.reversed, "drop the (delta k + 1) prefactor");
  bnd->add_option("--oracle", ba.oracle, "reference value to compare against");
  bnd->add_option("--tol", ba.tol, "exact engine tolerance")->capture_default_str();
  bnd->add_option("--max-n", ba.max_n, "exact engine size limit")->capture_default_str();
  bnd->add_option("--batch", ba.batch, "CSV with columns theorem,k,v (v space separated)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Euler-Maruyama simulation of the particle system or its projection");
  sa.src.attach(sim);
  sim->add_option("--n", sa.n, "random matrix on N sites");
  sim->add_option("--matrix-seed", sa.matrix_seed, "seed for the --n matrix")->capture_default_str();
  sim->add_option("--density", sa.density, "fill density for --n")->capture_default_str();
  sim->add_flag("--stochastic", sa.stochastic, "row-stochastic random matrix");
  sim->add_flag("--linear", sa.linear, "linear drift b(x, y) = y");
  sim->add_option("--drift", sa.drift, "named drift: zero, kuramoto, kuramoto-ou, relax");
  sim->add_option("--d", sa.d, "dimension per particle")->capture_default_str();
  sim->add_option("--mode", sa.mode, "particles or projection")->capture_default_str();
  sim->add_option("--dt", sa.cfg.dt, "time step")->capture_default_str();
  sim->add_option("--T", sa.cfg.T, "horizon")->capture_default_str();
  sim->add_option("--samples", sa.cfg.samples, "independent samples")->capture_default_str();
  sim->add_option("--seed", sa.cfg.seed, "Brownian seed")->capture_default_str();
  sim->add_option("--sigma", sa.cfg.sigma, "noise level")->capture_default_str();
  sim->add_option("--samples-out", sa.samples_out, "write terminal samples as CSV");
  sim->add_option("--entropy-v", sa.entropy_v, "report the Gaussian entropy estimate for this subset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Run run(chosen->get_name(), g, chosen);
  try {
    int rc = exit_ok;
    if (chosen == matrix) rc = cmd_matrix(ma, run);
    if (chosen == perc) rc = cmd_percolate(pa, run);
    if (chosen == ver) rc = cmd_verify(va, run);
    if (chosen == gau) rc = cmd_gaussian(ga, run);
    if (chosen == bnd) rc = cmd_bound(ba, run);
    if (chosen == sim) rc = cmd_simulate(sa, run);
    run.finish();
    return rc;
  } catch (const Error& e) {
    std::cerr << "error " << e.what() << '\n';
    return exit_usage;
  }
}
