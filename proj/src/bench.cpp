#include "dpl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dpl/metrics.hpp"
#include "dpl/plot.hpp"

namespace dpl::bench {

std::string method_name(Method m) {
  switch (m) {
  case Method::dpl: return "dpl";
  case Method::dcpl: return "dcpl";
  case Method::pl: return "pl";
  case Method::cpl: return "cpl";
  }
  return "?";
}

Method parse_method(const std::string &name) {
  if (name == "dpl") return Method::dpl;
  if (name == "dcpl") return Method::dcpl;
  if (name == "pl" || name == "pl-oracle") return Method::pl;
  if (name == "cpl") return Method::cpl;
  throw std::invalid_argument("unknown method '" + name + "'");
}

namespace {

double mean_of(const std::vector<double> &v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double> &v) {
  if (v.size() < 2) {
    return 0.0;
  }
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) {
    ss += (x - m) * (x - m);
  }
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Matrix example3_theta() {
  Matrix theta = Matrix::Constant(3, 3, 3e-3);
  theta(0, 0) += 3e-3 * 2;
  theta(1, 1) += 3e-3 * 3;
  theta(2, 2) += 3e-3 * 4;
  return theta;
}

} // namespace

std::vector<SummaryRow> BenchTable::summary() const {
  std::map<std::tuple<std::string, std::string, double, std::string>, std::vector<const BenchRow *>> groups;
  std::vector<std::tuple<std::string, std::string, double, std::string>> order;
  for (const auto &r : rows) {
    auto key = std::make_tuple(r.case_name, r.param, r.value, r.method);
    if (!groups.contains(key)) {
      order.push_back(key);
    }
    groups[key].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto &key : order) {
    const auto &g = groups[key];
    std::vector<double> nmis;
    std::vector<double> reds;
    std::vector<double> walls;
    for (const auto *r : g) {
      nmis.push_back(r->nmi);
      if (std::isfinite(r->red)) {
        reds.push_back(r->red);
      }
      walls.push_back(r->wall_ms);
    }
    SummaryRow s;
    std::tie(s.case_name, s.param, s.value, s.method) = key;
    s.reps = static_cast<int>(g.size());
    s.mean_nmi = mean_of(nmis);
    s.sd_nmi = sd_of(nmis);
    s.mean_red = reds.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(reds);
    s.mean_wall_ms = mean_of(walls);
    out.push_back(s);
  }
  return out;
}

std::optional<SummaryRow> BenchTable::cell(const std::string &case_name, double value,
                                           const std::string &method) const {
  for (const auto &s : summary()) {
    if (s.case_name == case_name && s.method == method && std::abs(s.value - value) < 1e-12) {
      return s;
    }
  }
  return std::nullopt;
}

void BenchTable::write_csv(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.precision(17);
  out << "example,case,param,value,method,rep,seed,N,n,R,nmi,red,wall_ms,rounds,bits_per_round,ops_per_round\n";
  for (const auto &r : rows) {
    out << r.example << ',' << r.case_name << ',' << r.param << ',' << r.value << ',' << r.method << ',' << r.rep
        << ',' << r.seed << ',' << r.num_nodes << ',' << r.block_size << ',' << r.num_workers << ',' << r.nmi << ','
        << r.red << ',' << r.wall_ms << ',' << r.rounds << ',' << r.bits_per_round << ',' << r.ops_per_round
        << '\n';
  }
}

void BenchTable::write_summary_csv(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.precision(10);
  out << "case,param,value,method,reps,mean_nmi,sd_nmi,mean_red,mean_wall_ms\n";
  for (const auto &s : summary()) {
    out << s.case_name << ',' << s.param << ',' << s.value << ',' << s.method << ',' << s.reps << ','
        << s.mean_nmi << ',' << s.sd_nmi << ',' << s.mean_red << ',' << s.mean_wall_ms << '\n';
  }
}

SplitResult make_within_block_shards(const SparseGraph &g, std::size_t num_workers, std::uint64_t seed) {
  const SplitResult full = block_split(g, num_workers, seed);
  const IndexMap &map = *full.index_map;
  SplitResult out;
  out.index_map = full.index_map;
  for (std::size_t r = 0; r < num_workers; ++r) {
    std::vector<EdgeIndex> offsets{0};
    std::vector<NodeId> cols;
    for (NodeId v : map.members[r]) {
      for (NodeId j : g.neighbors(v)) {
        if (map.block_of[j] == r) {
          cols.push_back(j);
        }
      }
      offsets.push_back(cols.size());
    }
    out.shards.emplace_back(r, g.num_nodes(), std::move(offsets), std::move(cols), full.index_map);
  }
  return out;
}

BenchRow run_point(const PointSpec &point, Method method, std::uint64_t seed) {
  PlantedNetwork net;
  if (point.degree_corrected) {
    DcsbmConfig cfg;
    cfg.base = SbmConfig{point.num_nodes, point.num_blocks, point.pi, point.theta, seed, false};
    cfg.heterogeneity = point.heterogeneity;
    net = generate_dcsbm(cfg);
  } else {
    net = generate_sbm(SbmConfig{point.num_nodes, point.num_blocks, point.pi, point.theta, seed, false});
  }

  FitConfig fit;
  fit.seed = derive_seed(seed, 11);
  fit.max_rounds = point.max_rounds;
  fit.parallel_workers = false;
  fit.kind = (method == Method::dpl || method == Method::pl) ? ModelKind::sbm : ModelKind::dcsbm;

  BenchRow row;
  row.seed = seed;
  row.method = method_name(method);
  row.num_nodes = point.num_nodes;
  row.density = degree_summary(net.graph).density;

  const auto start = std::chrono::steady_clock::now();
  FitResult res;
  if (method == Method::pl || method == Method::cpl) {
    fit.num_workers = 1;
    res = run_pl_reference(net.graph, point.num_blocks, fit);
    row.block_size = point.num_nodes;
    row.num_workers = 1;
  } else {
    fit.num_workers = point.num_nodes / point.block_size;
    const SplitResult split = point.splitting == Splitting::block_wise
                                  ? block_split(net.graph, fit.num_workers, fit.seed)
                                  : make_within_block_shards(net.graph, fit.num_workers, fit.seed);
    res = run_fit(split, point.num_blocks, fit);
    row.block_size = point.block_size;
    row.num_workers = fit.num_workers;
  }
  const auto stop = std::chrono::steady_clock::now();
  row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();

  row.nmi = nmi(net.truth, res.labels);
  try {
    row.red = red(net.graph, res.labels);
  } catch (const std::invalid_argument &) {
    row.red = std::numeric_limits<double>::quiet_NaN();
  }
  row.rounds = res.rounds;
  row.em_invocations = res.em_invocations;
  row.ascent_violations = res.ascent_violations;
  if (!res.ledger.rounds.empty()) {
    double bits = 0.0;
    double ops = 0.0;
    for (const auto &r : res.ledger.rounds) {
      bits += static_cast<double>(r.bits_broadcast + r.bits_gathered);
      ops += static_cast<double>(r.ops);
    }
    const auto rounds = static_cast<double>(res.ledger.rounds.size());
    row.bits_per_round = bits / rounds;
    row.ops_per_round = ops / rounds / static_cast<double>(row.num_workers);
  }
  return row;
}

std::uint64_t ExperimentSpec::seed_for(std::uint64_t cell, int rep) const {
  return derive_seed(derive_seed(seed, cell), static_cast<std::uint64_t>(rep));
}

ExperimentSpec ExperimentSpec::from_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open experiment spec " + path.string());
  }
  const nlohmann::json j = nlohmann::json::parse(in);
  ExperimentSpec spec;
  for (const auto &[key, value] : j.items()) {
    if (key == "replications") spec.replications = value.get<int>();
    else if (key == "seed") spec.seed = value.get<std::uint64_t>();
    else if (key == "out") spec.out_dir = value.get<std::string>();
    else if (key == "plots") spec.plots = value.get<bool>();
    else if (key == "threads") spec.threads = value.get<unsigned>();
    else if (key == "methods") {
      spec.methods.clear();
      for (const auto &m : value) {
        spec.methods.push_back(parse_method(m.get<std::string>()));
      }
    } else if (key == "ex1_block_sizes") spec.ex1_block_sizes = value.get<std::vector<std::size_t>>();
    else if (key == "ex1_network_sizes") spec.ex1_network_sizes = value.get<std::vector<std::size_t>>();
    else if (key == "ex2_rhos") spec.ex2_rhos = value.get<std::vector<double>>();
    else if (key == "ex2_betas") spec.ex2_betas = value.get<std::vector<double>>();
    else if (key == "ex3_levels") spec.ex3_levels = value.get<std::vector<double>>();
    else if (key == "ablation_block_sizes") spec.ablation_block_sizes = value.get<std::vector<std::size_t>>();
    else if (key == "ablation_heterogeneity") spec.ablation_heterogeneity = value.get<double>();
    else throw std::invalid_argument("unknown experiment spec key '" + key + "'");
  }
  if (spec.replications < 1) {
    throw std::invalid_argument("replications must be positive");
  }
  return spec;
}

namespace {

struct Task {
  std::string case_name;
  std::string param;
  double value = 0.0;
  PointSpec point;
  Method method = Method::dpl;
  int rep = 0;
  std::uint64_t seed = 0;
};

// Runs tasks on a bounded pool; rows come back in task order.
std::vector<BenchRow> run_tasks(const std::string &example, const std::vector<Task> &tasks, unsigned threads) {
  std::vector<BenchRow> rows(tasks.size());
  unsigned workers = threads != 0 ? threads : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const Task &t = tasks[i];
        BenchRow row = run_point(t.point, t.method, t.seed);
        row.example = example;
        row.case_name = t.case_name;
        row.param = t.param;
        row.value = t.value;
        row.rep = t.rep;
        rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(body);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  return rows;
}

void add_cell(std::vector<Task> &tasks, const ExperimentSpec &spec, std::uint64_t cell, const std::string &case_name,
              const std::string &param, double value, const PointSpec &point, const std::vector<Method> &methods) {
  for (int rep = 0; rep < spec.replications; ++rep) {
    const std::uint64_t seed = spec.seed_for(cell, rep);
    for (Method m : methods) {
      tasks.push_back(Task{case_name, param, value, point, m, rep, seed});
    }
  }
}

std::vector<Method> methods_or(const ExperimentSpec &spec, std::vector<Method> fallback) {
  return spec.methods.empty() ? fallback : spec.methods;
}

// Consecutive grid means never drop by more than one sd.
Check monotone_check(const BenchTable &table, const std::string &name, const std::string &case_name,
                     const std::vector<double> &values, const std::string &method) {
  Check c;
  c.name = name;
  c.passed = true;
  std::ostringstream detail;
  std::optional<SummaryRow> prev;
  for (double v : values) {
    auto cur = table.cell(case_name, v, method);
    if (!cur) {
      continue;
    }
    detail << v << ':' << cur->mean_nmi << ' ';
    if (prev) {
      const double slack = std::max(prev->sd_nmi, cur->sd_nmi);
      if (cur->mean_nmi < prev->mean_nmi - slack) {
        c.passed = false;
      }
    }
    prev = cur;
  }
  c.detail = detail.str();
  return c;
}

} // namespace

BenchTable run_example1(const ExperimentSpec &spec) {
  std::vector<Task> tasks;
  std::uint64_t cell = 100;
  const auto methods = methods_or(spec, {Method::dpl, Method::pl});
  for (std::size_t n : spec.ex1_block_sizes) {
    PointSpec p;
    p.num_nodes = 10'000;
    p.theta = make_planted_theta(5e-3, 0.8, 3);
    p.block_size = n;
    add_cell(tasks, spec, cell++, "case1", "n", static_cast<double>(n), p, {Method::dpl});
  }
  for (std::size_t big_n : spec.ex1_network_sizes) {
    PointSpec p;
    p.num_nodes = big_n;
    p.theta = make_planted_theta(3e-3, 0.8, 3);
    p.block_size = 200;
    add_cell(tasks, spec, cell++, "case2", "N", static_cast<double>(big_n), p, methods);
  }
  BenchTable table;
  table.rows = run_tasks("example1", tasks, spec.threads);

  std::vector<double> ns(spec.ex1_block_sizes.begin(), spec.ex1_block_sizes.end());
  table.checks.push_back(monotone_check(table, "example1 case1: mean NMI non-decreasing in n (1 sd)", "case1", ns, "dpl"));
  std::vector<double> bigs(spec.ex1_network_sizes.begin(), spec.ex1_network_sizes.end());
  table.checks.push_back(
      monotone_check(table, "example1 case2: mean NMI non-decreasing in N (1 sd)", "case2", bigs, "dpl"));
  return table;
}

BenchTable run_example2(const ExperimentSpec &spec) {
  std::vector<Task> tasks;
  std::uint64_t cell = 200;
  const auto methods = methods_or(spec, {Method::dpl, Method::pl});
  for (double rho : spec.ex2_rhos) {
    PointSpec p;
    p.num_nodes = 10'000;
    p.block_size = 500;
    p.theta = make_planted_theta(rho, 0.8, 3);
    add_cell(tasks, spec, cell++, "case1", "rho", rho, p, methods);
  }
  for (double beta : spec.ex2_betas) {
    PointSpec p;
    p.num_nodes = 10'000;
    p.block_size = 500;
    p.theta = make_planted_theta(0.01, beta, 3);
    add_cell(tasks, spec, cell++, "case2", "beta", beta, p, methods);
  }
  BenchTable table;
  table.rows = run_tasks("example2", tasks, spec.threads);
  table.checks.push_back(monotone_check(table, "example2 case1: mean NMI non-decreasing in rho (1 sd)", "case1",
                                        spec.ex2_rhos, "dpl"));
  table.checks.push_back(monotone_check(table, "example2 case2: mean NMI non-decreasing in beta (1 sd)", "case2",
                                        spec.ex2_betas, "dpl"));
  return table;
}

BenchTable run_example3(const ExperimentSpec &spec) {
  std::vector<Task> tasks;
  std::uint64_t cell = 300;
  const auto methods = methods_or(spec, {Method::dpl, Method::dcpl});
  const std::vector<std::pair<std::string, std::vector<double>>> mixes{{"balanced", {0.3, 0.3, 0.4}},
                                                                       {"imbalanced", {0.1, 0.2, 0.7}}};
  for (const auto &[name, pi] : mixes) {
    for (double m : spec.ex3_levels) {
      PointSpec p;
      p.degree_corrected = true;
      p.num_nodes = 10'000;
      p.block_size = 500;
      p.pi = pi;
      p.theta = example3_theta();
      p.heterogeneity = m;
      add_cell(tasks, spec, cell++, name, "m", m, p, methods);
    }
  }
  BenchTable table;
  table.rows = run_tasks("example3", tasks, spec.threads);

  const double top = spec.ex3_levels.empty() ? 10.0 : *std::max_element(spec.ex3_levels.begin(), spec.ex3_levels.end());
  if (auto a = table.cell("balanced", top, "dcpl"), b = table.cell("balanced", top, "dpl"); a && b) {
    table.checks.push_back(Check{"example3: DCPL mean NMI >= DPL mean NMI at largest m (balanced)",
                                 a->mean_nmi >= b->mean_nmi,
                                 "dcpl=" + std::to_string(a->mean_nmi) + " dpl=" + std::to_string(b->mean_nmi)});
  }
  if (auto a = table.cell("balanced", 1.0, "dcpl"), b = table.cell("balanced", 1.0, "dpl"); a && b) {
    table.checks.push_back(Check{"example3: m=1 methods coincide within 0.02",
                                 std::abs(a->mean_nmi - b->mean_nmi) <= 0.02,
                                 "dcpl=" + std::to_string(a->mean_nmi) + " dpl=" + std::to_string(b->mean_nmi)});
  }
  return table;
}

BenchTable run_ablation(const ExperimentSpec &spec) {
  std::vector<Task> tasks;
  std::uint64_t cell = 400;
  for (std::size_t n : spec.ablation_block_sizes) {
    const std::uint64_t c = cell++;
    for (auto splitting : {Splitting::random, Splitting::block_wise}) {
      for (int rounds : {1, 10}) {
        PointSpec p;
        p.degree_corrected = true;
        p.num_nodes = 10'000;
        p.block_size = n;
        p.pi = {0.3, 0.3, 0.4};
        p.theta = example3_theta();
        p.heterogeneity = spec.ablation_heterogeneity;
        p.splitting = splitting;
        p.max_rounds = rounds;
        const std::string name = std::string(splitting == Splitting::random ? "random" : "blockwise") + "-" +
                                 (rounds == 1 ? "oneshot" : "multiround");
        // Same cell id for all four variants: paired graphs.
        add_cell(tasks, spec, c, name, "n", static_cast<double>(n), p, {Method::dcpl});
      }
    }
  }
  BenchTable table;
  table.rows = run_tasks("ablation", tasks, spec.threads);

  for (std::size_t n : spec.ablation_block_sizes) {
    const auto v = static_cast<double>(n);
    auto get = [&](const std::string &name) { return table.cell(name, v, "dcpl"); };
    const auto ro = get("random-oneshot");
    const auto rm = get("random-multiround");
    const auto bo = get("blockwise-oneshot");
    const auto bm = get("blockwise-multiround");
    if (!(ro && rm && bo && bm)) {
      continue;
    }
    const std::string tag = " (n=" + std::to_string(n) + ")";
    table.checks.push_back(Check{"ablation: multi-round RED <= one-shot RED, block-wise" + tag,
                                 bm->mean_red <= bo->mean_red,
                                 std::to_string(bm->mean_red) + " vs " + std::to_string(bo->mean_red)});
    table.checks.push_back(Check{"ablation: multi-round RED <= one-shot RED, random" + tag,
                                 rm->mean_red <= ro->mean_red,
                                 std::to_string(rm->mean_red) + " vs " + std::to_string(ro->mean_red)});
    table.checks.push_back(Check{"ablation: block-wise RED <= random RED, multi-round" + tag,
                                 bm->mean_red <= rm->mean_red,
                                 std::to_string(bm->mean_red) + " vs " + std::to_string(rm->mean_red)});
  }
  return table;
}

void emit(const BenchTable &table, const ExperimentSpec &spec, const std::string &stem) {
  if (spec.out_dir.empty()) {
    return;
  }
  std::filesystem::create_directories(spec.out_dir);
  table.write_csv(spec.out_dir / (stem + "_rows.csv"));
  table.write_summary_csv(spec.out_dir / (stem + "_summary.csv"));
  {
    std::ofstream out(spec.out_dir / (stem + "_checks.txt"));
    for (const auto &c : table.checks) {
      out << (c.passed ? "PASS " : "FAIL ") << c.name << " | " << c.detail << '\n';
    }
  }
  if (!spec.plots) {
    return;
  }
  // One plot per case: mean NMI (or RED for the ablation) against the swept parameter.
  const auto summary = table.summary();
  std::map<std::string, std::map<std::string, PlotSeries>> by_case;
  std::map<std::string, std::string> param_of;
  const bool ablation = stem == "ablation";
  for (const auto &s : summary) {
    const std::string plot_key = ablation ? std::string("ablation") : s.case_name;
    const std::string series_key = ablation ? s.case_name : s.method;
    auto &ser = by_case[plot_key][series_key];
    ser.name = series_key;
    ser.x.push_back(s.value);
    ser.y.push_back(ablation ? s.mean_red : s.mean_nmi);
    ser.err.push_back(ablation ? 0.0 : s.sd_nmi);
    param_of[plot_key] = s.param;
  }
  for (const auto &[case_name, series_map] : by_case) {
    std::vector<PlotSeries> series;
    for (const auto &[_, s] : series_map) {
      series.push_back(s);
    }
    write_line_plot(spec.out_dir / (stem + "_" + case_name + ".svg"), stem + " " + case_name, param_of[case_name],
                    ablation ? "mean RED" : "mean NMI", series);
  }
  if (stem == "example1") {
    std::map<std::string, PlotSeries> time_series;
    for (const auto &s : summary) {
      if (s.case_name != "case2") {
        continue;
      }
      auto &ser = time_series[s.method];
      ser.name = s.method;
      ser.x.push_back(s.value);
      ser.y.push_back(s.mean_wall_ms / 1000.0);
    }
    std::vector<PlotSeries> series;
    for (const auto &[_, s] : time_series) {
      series.push_back(s);
    }
    if (!series.empty()) {
      write_line_plot(spec.out_dir / "example1_case2_time.svg", "example1 case2 time", "N", "seconds", series, true);
    }
  }
}

} // namespace dpl::bench
