// dpl: generate, split, fit, select-k, eval, bench.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dpl/bench.hpp"
#include "dpl/graph.hpp"
#include "dpl/io.hpp"
#include "dpl/master.hpp"
#include "dpl/metrics.hpp"
#include "dpl/model_selection.hpp"
#include "dpl/partition.hpp"
#include "dpl/sbm_sim.hpp"

namespace {

std::vector<std::size_t> parse_range(const std::string &text) {
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t lo = std::stoul(text.substr(0, dots));
    const std::size_t hi = std::stoul(text.substr(dots + 2));
    if (lo > hi) {
      throw std::invalid_argument("empty candidate range " + text);
    }
    for (std::size_t k = lo; k <= hi; ++k) {
      out.push_back(k);
    }
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(std::stoul(item));
  }
  return out;
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"distributed pseudo-likelihood community detection"};
  app.require_subcommand(1);

  // generate
  auto *gen = app.add_subcommand("generate", "simulate a planted SBM or DCSBM network");
  std::string gen_model = "sbm";
  std::size_t gen_n = 10'000;
  std::size_t gen_k = 3;
  std::vector<double> gen_pi;
  double gen_rho = 5e-3;
  double gen_beta = 0.8;
  double gen_m = 1.0;
  std::uint64_t gen_seed = 1;
  std::string gen_edges = "graph.txt";
  std::string gen_truth = "truth.txt";
  gen->add_option("--model", gen_model)->check(CLI::IsMember({"sbm", "dcsbm"}));
  gen->add_option("-N,--nodes", gen_n);
  gen->add_option("-K,--blocks", gen_k);
  gen->add_option("--pi", gen_pi, "block proportions (default uniform)")->delimiter(',');
  gen->add_option("--rho", gen_rho);
  gen->add_option("--beta", gen_beta);
  gen->add_option("-m,--heterogeneity", gen_m);
  gen->add_option("--seed", gen_seed);
  gen->add_option("-o,--out", gen_edges, "edge list path");
  gen->add_option("--truth", gen_truth, "label file path");

  // split
  auto *split_cmd = app.add_subcommand("split", "block-wise split into R shards");
  std::string split_graph;
  std::size_t split_r = 1;
  std::uint64_t split_seed = 1;
  std::string split_out = "partition.txt";
  split_cmd->add_option("graph", split_graph)->required();
  split_cmd->add_option("-R,--workers", split_r)->required();
  split_cmd->add_option("--seed", split_seed);
  split_cmd->add_option("-o,--out", split_out);

  // fit
  auto *fit_cmd = app.add_subcommand("fit", "fit DPL (sbm) or DCPL (dcsbm)");
  std::string fit_graph;
  std::string fit_model = "sbm";
  std::size_t fit_k = 3;
  std::size_t fit_r = 1;
  std::uint64_t fit_seed = 1;
  int fit_rounds = 10;
  double fit_tol = 1e-6;
  std::string fit_init = "auto";
  std::string fit_init_file;
  std::string fit_labels = "labels.txt";
  std::string fit_params;
  std::string fit_ledger;
  fit_cmd->add_option("graph", fit_graph)->required();
  fit_cmd->add_option("--model", fit_model)->check(CLI::IsMember({"sbm", "dcsbm"}));
  fit_cmd->add_option("-K,--k", fit_k);
  fit_cmd->add_option("-R,--workers", fit_r);
  fit_cmd->add_option("--seed", fit_seed);
  fit_cmd->add_option("--max-rounds", fit_rounds);
  fit_cmd->add_option("--tol", fit_tol);
  fit_cmd->add_option("--init", fit_init)->check(CLI::IsMember({"auto", "scp", "ssc", "file"}));
  fit_cmd->add_option("--init-file", fit_init_file);
  fit_cmd->add_option("-o,--labels", fit_labels);
  fit_cmd->add_option("--params", fit_params, "JSON parameter output");
  fit_cmd->add_option("--ledger", fit_ledger, "per-round CSV output");

  // select-k
  auto *sel_cmd = app.add_subcommand("select-k", "choose K by the corrected BIC");
  std::string sel_graph;
  std::string sel_candidates = "2..8";
  std::size_t sel_r = 1;
  std::uint64_t sel_seed = 1;
  std::string sel_model = "sbm";
  std::string sel_out;
  sel_cmd->add_option("graph", sel_graph)->required();
  sel_cmd->add_option("--candidates", sel_candidates);
  sel_cmd->add_option("-R,--workers", sel_r);
  sel_cmd->add_option("--seed", sel_seed);
  sel_cmd->add_option("--model", sel_model)->check(CLI::IsMember({"sbm", "dcsbm"}));
  sel_cmd->add_option("-o,--out", sel_out, "score CSV");

  // eval
  auto *eval_cmd = app.add_subcommand("eval", "score a label file");
  std::string eval_metric = "nmi";
  std::string eval_labels;
  std::string eval_truth;
  std::string eval_graph;
  eval_cmd->add_option("--metric", eval_metric)->check(CLI::IsMember({"nmi", "red"}));
  eval_cmd->add_option("labels", eval_labels)->required();
  eval_cmd->add_option("--truth", eval_truth);
  eval_cmd->add_option("--graph", eval_graph);

  // bench
  auto *bench_cmd = app.add_subcommand("bench", "run a simulation study");
  std::string bench_example = "1";
  int bench_reps = 0;
  std::string bench_out = "bench_out";
  std::string bench_spec;
  unsigned bench_threads = 0;
  bool bench_no_plots = false;
  bench_cmd->add_option("--example", bench_example)->check(CLI::IsMember({"1", "2", "3", "ablation"}));
  bench_cmd->add_option("--reps", bench_reps);
  bench_cmd->add_option("--out", bench_out);
  bench_cmd->add_option("--spec", bench_spec, "JSON experiment spec");
  bench_cmd->add_option("--threads", bench_threads);
  bench_cmd->add_flag("--no-plots", bench_no_plots);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    // Usage errors exit 2 like malformed input; --help exits 0.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      if (gen_pi.empty()) {
        gen_pi.assign(gen_k, 1.0 / static_cast<double>(gen_k));
      }
      dpl::SbmConfig base{gen_n, gen_k, gen_pi, dpl::make_planted_theta(gen_rho, gen_beta, gen_k), gen_seed, false};
      dpl::PlantedNetwork net;
      if (gen_model == "dcsbm") {
        dpl::DcsbmConfig cfg;
        cfg.base = base;
        cfg.heterogeneity = gen_m;
        net = dpl::generate_dcsbm(cfg);
      } else {
        net = dpl::generate_sbm(base);
      }
      dpl::write_edge_list(net.graph, gen_edges);
      dpl::write_labels(gen_truth, net.truth);
      std::cout << "nodes " << net.graph.num_nodes() << " edges " << net.graph.num_edges() << '\n';
      if (net.saturated_pairs > 0) {
        std::cerr << "warning: " << net.saturated_pairs << " pairs saturated\n";
      }
    } else if (*split_cmd) {
      const auto loaded = dpl::load_edge_list(split_graph);
      const auto split = dpl::block_split(loaded.graph, split_r, split_seed);
      dpl::write_partition(split_out, *split.index_map, loaded.original_ids);
    } else if (*fit_cmd) {
      const auto loaded = dpl::load_edge_list(fit_graph);
      dpl::FitConfig cfg;
      cfg.kind = fit_model == "dcsbm" ? dpl::ModelKind::dcsbm : dpl::ModelKind::sbm;
      cfg.num_workers = fit_r;
      cfg.seed = fit_seed;
      cfg.max_rounds = fit_rounds;
      cfg.tolerance = fit_tol;
      if (fit_init == "scp") {
        cfg.init = dpl::InitMode::scp;
      } else if (fit_init == "ssc") {
        cfg.init = dpl::InitMode::ssc;
      } else if (fit_init == "file") {
        if (fit_init_file.empty()) {
          throw std::invalid_argument("--init file needs --init-file");
        }
        cfg.init = dpl::InitMode::provided;
        cfg.initial_labels = dpl::read_labels(fit_init_file, loaded.original_ids);
      }
      dpl::FitResult res;
      try {
        res = cfg.kind == dpl::ModelKind::dcsbm ? dpl::run_dcpl(loaded.graph, fit_k, cfg)
                                                : dpl::run_dpl(loaded.graph, fit_k, cfg);
      } catch (const dpl::FitAborted &e) {
        if (!fit_ledger.empty()) {
          write_text(fit_ledger, e.ledger.to_csv());
        }
        throw;
      }
      dpl::write_labels(fit_labels, res.labels, loaded.original_ids);
      if (!fit_params.empty()) {
        write_text(fit_params, dpl::params_to_json(res.params) + "\n");
      }
      if (!fit_ledger.empty()) {
        write_text(fit_ledger, res.ledger.to_csv());
      }
      std::cout << "rounds " << res.rounds << (res.converged ? " converged" : " not converged") << " bits "
                << res.ledger.total_bits() << " ops " << res.ledger.total_ops() << '\n';
      if (res.init_fell_back) {
        std::cerr << "warning: spectral initialization fell back to random labels\n";
      }
    } else if (*sel_cmd) {
      const auto loaded = dpl::load_edge_list(sel_graph);
      const auto candidates = parse_range(sel_candidates);
      dpl::SelectConfig cfg;
      cfg.fit.kind = sel_model == "dcsbm" ? dpl::ModelKind::dcsbm : dpl::ModelKind::sbm;
      cfg.fit.num_workers = sel_r;
      cfg.fit.seed = sel_seed;
      const auto sel = dpl::select_k(loaded.graph, candidates, cfg);
      std::ostringstream csv;
      csv.precision(12);
      csv << "k,loglik,penalty,score,failed\n";
      for (const auto &s : sel.scores) {
        double total = 0.0;
        for (double v : s.worker_loglik) {
          total += v;
        }
        csv << s.k << ',' << total << ',' << s.penalty << ',' << s.score << ',' << (s.failed ? 1 : 0) << '\n';
      }
      if (sel_out.empty()) {
        std::cout << csv.str();
      } else {
        write_text(sel_out, csv.str());
      }
      std::cout << "selected K=" << sel.best_k << '\n';
    } else if (*eval_cmd) {
      if (eval_metric == "nmi") {
        if (eval_truth.empty()) {
          throw std::invalid_argument("nmi needs --truth");
        }
        auto est = dpl::read_label_pairs(eval_labels);
        auto truth = dpl::read_label_pairs(eval_truth);
        std::sort(est.begin(), est.end());
        std::sort(truth.begin(), truth.end());
        if (est.size() != truth.size()) {
          throw std::invalid_argument("label files cover different node sets");
        }
        dpl::LabelVector a;
        dpl::LabelVector b;
        for (std::size_t i = 0; i < est.size(); ++i) {
          if (est[i].first != truth[i].first) {
            throw std::invalid_argument("label files cover different node sets");
          }
          a.push_back(truth[i].second);
          b.push_back(est[i].second);
        }
        std::printf("%.12g\n", dpl::nmi(a, b));
      } else {
        if (eval_graph.empty()) {
          throw std::invalid_argument("red needs --graph");
        }
        const auto loaded = dpl::load_edge_list(eval_graph);
        const auto labels = dpl::read_labels(eval_labels, loaded.original_ids);
        std::printf("%.12g\n", dpl::red(loaded.graph, labels));
      }
    } else if (*bench_cmd) {
      namespace db = dpl::bench;
      db::ExperimentSpec spec = bench_spec.empty() ? db::ExperimentSpec{} : db::ExperimentSpec::from_json(bench_spec);
      if (bench_reps > 0) {
        spec.replications = bench_reps;
      }
      if (bench_threads > 0) {
        spec.threads = bench_threads;
      }
      if (bench_no_plots) {
        spec.plots = false;
      }
      spec.out_dir = bench_out;
      db::BenchTable table;
      std::string stem;
      if (bench_example == "1") {
        table = db::run_example1(spec);
        stem = "example1";
      } else if (bench_example == "2") {
        table = db::run_example2(spec);
        stem = "example2";
      } else if (bench_example == "3") {
        table = db::run_example3(spec);
        stem = "example3";
      } else {
        table = db::run_ablation(spec);
        stem = "ablation";
      }
      db::emit(table, spec, stem);
      for (const auto &s : table.summary()) {
        std::printf("%-22s %-5s %-8g %-5s nmi %.4f (sd %.4f) red %.4g  %.1f ms\n", s.case_name.c_str(),
                    s.param.c_str(), s.value, s.method.c_str(), s.mean_nmi, s.sd_nmi, s.mean_red, s.mean_wall_ms);
      }
      bool ok = true;
      for (const auto &c : table.checks) {
        std::printf("%s %s | %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.passed;
      }
      return ok ? 0 : 3;
    }
  } catch (const dpl::ParseError &e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
