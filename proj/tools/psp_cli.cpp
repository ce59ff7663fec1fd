// Command-line front end: one binary, subcommand per pipeline stage.
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "psp/aet_train.hpp"
#include "psp/evalbench.hpp"
#include "psp/index_io.hpp"
#include "psp/knn_graph.hpp"
#include "psp/oracle.hpp"
#include "psp/rng.hpp"
#include "psp/search.hpp"
#include "psp/synth.hpp"
#include "psp/theory.hpp"

using json = nlohmann::json;

namespace {

struct GlobalOpts {
  uint64_t seed = 1;
  int threads = 0;
  int verbosity = 1;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

psp::VectorStore load_vectors(const std::string& path) {
  if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".bvecs") == 0)
    return psp::load_bvecs(path);
  return psp::load_fvecs(path);
}

void write_text(const std::string& path, const std::string& text) {
  psp::atomic_write_file(path, text.data(), text.size());
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<uint32_t> parse_u32_list(const std::string& s, const char* what) {
  std::vector<uint32_t> out;
  for (const auto& tok : split_csv(s)) {
    try {
      out.push_back(static_cast<uint32_t>(std::stoul(tok)));
    } catch (const std::exception&) {
      throw psp::DataError(std::string("InvalidParam: bad ") + what + " entry '" + tok + "'");
    }
  }
  if (out.empty()) throw psp::DataError(std::string("InvalidParam: empty ") + what + " list");
  return out;
}

std::vector<double> parse_f64_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& tok : split_csv(s)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw psp::DataError(std::string("InvalidParam: bad ") + what + " entry '" + tok + "'");
    }
  }
  if (out.empty()) throw psp::DataError(std::string("InvalidParam: empty ") + what + " list");
  return out;
}

// ---- synth --------------------------------------------------------------

struct SynthArgs {
  std::string kind = "gaussian", out;
  uint64_t n = 1000;
  uint32_t d = 16;
  double sigma2 = 1.0, log_sigma = 0.5;
  uint32_t centers = 16;
};

int run_synth(const GlobalOpts& g, const SynthArgs& a) {
  psp::SynthSpec spec;
  spec.kind = psp::synth_kind_from_name(a.kind);
  spec.n = a.n;
  spec.d = a.d;
  spec.sigma2 = a.sigma2;
  spec.log_sigma = a.log_sigma;
  spec.centers = a.centers;
  spec.seed = g.seed;
  psp::VectorStore store = psp::synth_generate(spec);
  psp::save_fvecs(store, a.out);
  if (g.verbosity >= 1)
    std::cout << "wrote " << store.count() << " x " << store.dim << " vectors to " << a.out
              << "\n";
  return psp::kExitOk;
}

// ---- gt -----------------------------------------------------------------

struct GtArgs {
  std::string base, query, metric = "ip", out;
  uint32_t k = 100;
};

int run_gt(const GlobalOpts& g, const GtArgs& a) {
  if (g.threads > 0) omp_set_num_threads(g.threads);
  psp::VectorStore base = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);
  psp::GroundTruth truth =
      psp::brute_topk_all(base, queries, a.k, psp::metric_from_name(a.metric));
  psp::truth_to_ivecs(truth, a.out);
  if (g.verbosity >= 1)
    std::cout << "wrote truth for " << truth.count << " queries (k=" << truth.k << ") to "
              << a.out << "\n";
  return psp::kExitOk;
}

// ---- build --------------------------------------------------------------

struct BuildArgs {
  std::string base, out, knn_cache, knn_mode = "auto", report;
  uint32_t K = 400, L = 800, R = 40, S = 5, c = 0, m = 0;
  double alpha = 60.0;
};

int run_build(const GlobalOpts& g, const BuildArgs& a) {
  psp::VectorStore store = load_vectors(a.base);
  psp::BuildParams params;
  params.K = a.K;
  params.L = a.L;
  params.R = a.R;
  params.S = a.S;
  params.alpha_deg = a.alpha;
  params.clusters = a.c;
  params.nav_total = a.m;
  params.seed = g.seed;
  params.threads = g.threads;
  if (a.knn_mode == "auto") params.knn_mode = psp::BuildParams::KnnMode::automatic;
  else if (a.knn_mode == "exact") params.knn_mode = psp::BuildParams::KnnMode::exact;
  else if (a.knn_mode == "nndescent") params.knn_mode = psp::BuildParams::KnnMode::nndescent;
  else throw psp::DataError("InvalidParam: unknown knn mode '" + a.knn_mode + "'");

  psp::KnnGraph cache;
  bool have_cache = false;
  if (!a.knn_cache.empty() && std::filesystem::exists(a.knn_cache)) {
    cache = psp::load_knn_cache(a.knn_cache);
    have_cache = true;
    if (g.verbosity >= 1)
      std::cout << "loaded kNN bootstrap cache (K=" << cache.K << ") from " << a.knn_cache
                << "\n";
  }

  psp::BuildReport rep;
  psp::PspIndex index = psp::build_index(store, params, &rep, have_cache ? &cache : nullptr);
  psp::save_index(index, a.out);

  json j{{"n", index.n()},
         {"d", index.dim},
         {"knn_seconds", rep.knn_seconds},
         {"knn_acc", rep.knn_acc},
         {"nndescent_iters", rep.nndescent_iters},
         {"prune_seconds", rep.prune_seconds},
         {"ef_seconds", rep.ef_seconds},
         {"nav_seconds", rep.nav_seconds},
         {"kmeans_iters", rep.kmeans_iters},
         {"repair_seconds", rep.repair_seconds},
         {"repair_edges", rep.repair_edges},
         {"reachable_fraction", rep.reachable_fraction},
         {"degree_mean_pre_ef", rep.pre_ef_degrees.mean},
         {"degree_mean", rep.final_degrees.mean},
         {"degree_std", rep.final_degrees.stddev},
         {"degree_max", rep.final_degrees.max}};
  if (!a.report.empty()) write_json(a.report, j);
  if (g.verbosity >= 1) std::cout << j.dump(2) << "\n";
  return psp::kExitOk;
}

// ---- train-aet ----------------------------------------------------------

struct TrainAetArgs {
  std::string base, index_in, index_out, report;
  double split = 0.9;
  uint32_t k = 100, ls = 500, samples = 8, K = 0, L = 0;
  double theta = 2.0;
};

int run_train_aet(const GlobalOpts& g, const TrainAetArgs& a) {
  psp::VectorStore store = load_vectors(a.base);
  psp::PspIndex index = psp::load_index(a.index_in);
  if (index.dim != store.dim)
    throw psp::DataError("DimMismatch: index dim vs base dim");

  psp::AetTrainParams tp;
  tp.split = a.split;
  tp.k = a.k;
  tp.ls = a.ls;
  tp.theta = static_cast<float>(a.theta);
  tp.samples_per_side = a.samples;
  tp.seed = g.seed;
  tp.build.R = index.R;
  tp.build.S = index.S;
  tp.build.alpha_deg = static_cast<double>(index.alpha_millideg) / 1000.0;
  tp.build.threads = g.threads;
  if (a.K > 0) tp.build.K = a.K;
  if (a.L > 0) tp.build.L = a.L;
  if (tp.build.L < tp.build.R) tp.build.L = tp.build.R;

  psp::AetTrainReport rep;
  psp::AetModel model = psp::train_aet(store, tp, &rep);
  index.aet = model;
  psp::save_index(index, a.index_out);

  json j{{"queries", rep.queries},
         {"degenerate", rep.degenerate},
         {"pos_rows", rep.pos_rows},
         {"neg_rows", rep.neg_rows},
         {"class_prior", rep.class_prior},
         {"heldout_accuracy", rep.heldout_accuracy},
         {"tree_nodes", rep.tree_nodes},
         {"theta", a.theta}};
  if (!a.report.empty()) write_json(a.report, j);
  if (g.verbosity >= 1) std::cout << j.dump(2) << "\n";
  if (g.verbosity >= 2) std::cout << psp::export_rules(model);
  return psp::kExitOk;
}

// ---- search -------------------------------------------------------------

struct SearchArgs {
  std::string index, base, query, metric = "ip", aet = "off", entry = "sn", out;
  uint32_t k = 10, ls = 100;
  double theta = std::numeric_limits<double>::quiet_NaN();
};

int run_search(const GlobalOpts& g, const SearchArgs& a) {
  psp::PspIndex index = psp::load_index(a.index);
  psp::VectorStore store = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);

  psp::SearchParams sp;
  sp.ls = a.ls;
  sp.k = a.k;
  sp.metric = psp::metric_from_name(a.metric);
  if (a.entry == "sn") sp.entry = psp::SearchParams::Entry::sn;
  else if (a.entry == "random") sp.entry = psp::SearchParams::Entry::random;
  else throw psp::DataError("InvalidParam: unknown entry mode '" + a.entry + "'");
  if (a.aet == "on") sp.use_aet = true;
  else if (a.aet != "off") throw psp::DataError("InvalidParam: --aet must be on|off");
  sp.theta_override = static_cast<float>(a.theta);

  std::string csv = "query_id,rank,base_id,score,dc,wall_ns\n";
  psp::SearchScratch scratch;
  for (size_t qi = 0; qi < queries.count(); ++qi) {
    sp.seed = g.seed ^ psp::splitmix64(qi);
    psp::SearchTrace trace =
        psp::greedy_search(index, store, queries.row(static_cast<uint32_t>(qi)), sp, scratch);
    for (size_t r = 0; r < trace.result.size(); ++r) {
      csv += std::to_string(qi);
      csv += ',';
      csv += std::to_string(r);
      csv += ',';
      csv += std::to_string(trace.result[r].first);
      csv += ',';
      csv += fmt_double(trace.result[r].second);
      csv += ',';
      csv += std::to_string(trace.dc);
      csv += ',';
      csv += std::to_string(trace.wall_ns);
      csv += '\n';
    }
  }
  if (a.out == "-") std::cout << csv;
  else {
    write_text(a.out, csv);
    if (g.verbosity >= 1)
      std::cout << "wrote results for " << queries.count() << " queries to " << a.out << "\n";
  }
  return psp::kExitOk;
}

// ---- eval ---------------------------------------------------------------

struct EvalArgs {
  std::string index, base, query, gt, ls = "100,200,400", aet = "off", metric = "ip",
              entry = "sn", out_dir = ".";
  uint32_t k = 100;
  bool brute = false, plot_data = false;
};

int run_eval(const GlobalOpts& g, const EvalArgs& a) {
  psp::PspIndex index = psp::load_index(a.index);
  psp::VectorStore store = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);
  psp::GroundTruth truth = psp::truth_from_ivecs(a.gt);
  auto ls_list = parse_u32_list(a.ls, "l_s");
  int aet_mode = a.aet == "off" ? 0 : a.aet == "on" ? 1 : 2;
  if (a.aet != "off" && a.aet != "on" && a.aet != "both")
    throw psp::DataError("InvalidParam: --aet must be off|on|both");
  psp::Metric metric = psp::metric_from_name(a.metric);
  psp::SearchParams::Entry entry = a.entry == "random" ? psp::SearchParams::Entry::random
                                                       : psp::SearchParams::Entry::sn;

  psp::BenchReport rep =
      psp::run_sweep(index, store, queries, truth, a.k, ls_list, aet_mode, metric, entry, g.seed);
  rep.dataset = a.base;

  std::filesystem::create_directories(a.out_dir);
  std::string csv = "ls,aet,recall_mean,qps,mean_dc,median_dc,mean_hops,mean_wall_ns,p50_ns,p99_ns\n";
  auto add_row = [&](const psp::BenchRow& r, const char* tag) {
    csv += std::to_string(r.ls);
    csv += ',';
    csv += tag;
    csv += ',';
    csv += fmt_double(r.recall_mean);
    csv += ',';
    csv += fmt_double(r.qps);
    csv += ',';
    csv += fmt_double(r.mean_dc);
    csv += ',';
    csv += fmt_double(r.median_dc);
    csv += ',';
    csv += fmt_double(r.mean_hops);
    csv += ',';
    csv += fmt_double(r.mean_wall_ns);
    csv += ',';
    csv += std::to_string(r.p50_ns);
    csv += ',';
    csv += std::to_string(r.p99_ns);
    csv += '\n';
  };
  for (const auto& r : rep.rows) add_row(r, r.aet ? "on" : "off");
  if (a.brute) add_row(psp::brute_force_row(store, queries, truth, a.k, metric), "brute");
  write_text(a.out_dir + "/sweep.csv", csv);

  json j{{"dataset", rep.dataset}, {"k", rep.k}, {"metric", psp::metric_name(rep.metric)},
         {"seed", g.seed},         {"rows", json::array()}};
  for (const auto& r : rep.rows)
    j["rows"].push_back({{"ls", r.ls},
                         {"aet", r.aet},
                         {"recall_mean", r.recall_mean},
                         {"qps", r.qps},
                         {"mean_dc", r.mean_dc},
                         {"median_dc", r.median_dc},
                         {"mean_hops", r.mean_hops},
                         {"mean_wall_ns", r.mean_wall_ns},
                         {"p50_ns", r.p50_ns},
                         {"p99_ns", r.p99_ns}});
  write_json(a.out_dir + "/summary.json", j);

  if (a.plot_data) {
    std::string qps_csv = "recall,qps,aet\n", dc_csv = "recall,mean_dc,aet\n";
    for (const auto& r : rep.rows) {
      qps_csv += fmt_double(r.recall_mean) + "," + fmt_double(r.qps) + "," +
                 (r.aet ? "on" : "off") + "\n";
      dc_csv += fmt_double(r.recall_mean) + "," + fmt_double(r.mean_dc) + "," +
                (r.aet ? "on" : "off") + "\n";
    }
    write_text(a.out_dir + "/plot_recall_qps.csv", qps_csv);
    write_text(a.out_dir + "/plot_recall_dc.csv", dc_csv);
  }
  if (g.verbosity >= 1)
    std::cout << "wrote " << rep.rows.size() << " operating points to " << a.out_dir << "\n";
  return psp::kExitOk;
}

// ---- theory -------------------------------------------------------------

struct TheoryMuBarArgs {
  std::string base, query, out;
};

int run_theory_mu_bar(const GlobalOpts& g, const TheoryMuBarArgs& a) {
  psp::VectorStore store = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);
  std::string csv = "query_id,mu_bar,effective_lower,witness,optimum_count,grid_ok\n";
  size_t ok = 0;
  for (size_t qi = 0; qi < queries.count(); ++qi) {
    psp::MuBarReport rep = psp::compute_mu_bar(store, queries.row(static_cast<uint32_t>(qi)));
    csv += std::to_string(qi) + "," + fmt_double(rep.mu_bar) + "," +
           fmt_double(rep.effective_lower) + "," + std::to_string(rep.witness) + "," +
           std::to_string(rep.optimum_set.size()) + "," + (rep.grid_ok ? "1" : "0") + "\n";
    ok += rep.grid_ok;
  }
  write_text(a.out, csv);
  if (g.verbosity >= 1)
    std::cout << "grid verification passed for " << ok << "/" << queries.count()
              << " queries\n";
  return psp::kExitOk;
}

struct TheoryOverlapArgs {
  std::string base, query, index, mu = "0.1,1,10,100,1200", out_dir = ".";
  uint32_t max_steps = 15, k = 100, ls = 500;
  bool ideal = false;
  double alpha = 60.0;
};

int run_theory_overlap(const GlobalOpts& g, const TheoryOverlapArgs& a) {
  psp::VectorStore store = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);
  psp::ProximityGraph graph;
  if (a.ideal) {
    graph = psp::ideal_prune(store, a.alpha, g.threads);
  } else {
    if (a.index.empty())
      throw psp::DataError("InvalidParam: --index required unless --ideal is set");
    graph = psp::load_index(a.index).graph;
  }
  psp::OverlapParams op;
  op.mu_list = parse_f64_list(a.mu, "mu");
  op.max_steps = a.max_steps;
  op.k = a.k;
  op.ls = a.ls;
  op.seed = g.seed;
  op.threads = g.threads;
  psp::OverlapReport rep = psp::overlap_experiment(graph, store, queries, op);

  std::filesystem::create_directories(a.out_dir);
  std::string csv = "mu,mean_overlap,mean_l2_recall\n";
  for (size_t i = 0; i < rep.mu.size(); ++i)
    csv += fmt_double(rep.mu[i]) + "," + fmt_double(rep.mean_overlap[i]) + "," +
           fmt_double(rep.mean_l2_recall[i]) + "\n";
  write_text(a.out_dir + "/overlap.csv", csv);
  json j{{"seed", g.seed},
         {"ideal", a.ideal},
         {"max_steps", a.max_steps},
         {"k", a.k},
         {"overlap_definition", "positional id agreement over aligned steps / longer path length"},
         {"mu", rep.mu},
         {"mean_overlap", rep.mean_overlap},
         {"mean_l2_recall", rep.mean_l2_recall},
         {"spearman_mu_overlap", psp::spearman(rep.mu, rep.mean_overlap)}};
  write_json(a.out_dir + "/overlap.json", j);
  if (g.verbosity >= 1) std::cout << j.dump(2) << "\n";
  return psp::kExitOk;
}

struct TheoryQsArgs {
  std::string s_grid = "auto", out;
  uint32_t d = 8;
  double sigma2 = 1.0;
  uint64_t trials = 1000000;
};

int run_theory_qs(const GlobalOpts& g, const TheoryQsArgs& a) {
  std::vector<double> grid;
  if (a.s_grid == "auto") {
    // cover the distribution body: mean of ||X-Y||^2 is 2 d sigma^2
    double scale = 2.0 * a.d * a.sigma2;
    for (double f : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0})
      grid.push_back(f * scale);
  } else {
    grid = parse_f64_list(a.s_grid, "s");
  }
  std::string csv = "s,q_paper,q_exact,q_mc,gap_paper,gap_exact\n";
  double max_gap_paper = 0, max_gap_exact = 0;
  json rows = json::array();
  for (double s : grid) {
    double qp = psp::qs_probability_paper(a.d, a.sigma2, s);
    double qe = psp::qs_probability_exact(a.d, a.sigma2, s);
    double mc = psp::qs_monte_carlo(a.d, a.sigma2, s, a.trials, g.seed);
    double gp = std::abs(qp - mc), ge = std::abs(qe - mc);
    max_gap_paper = std::max(max_gap_paper, gp);
    max_gap_exact = std::max(max_gap_exact, ge);
    csv += fmt_double(s) + "," + fmt_double(qp) + "," + fmt_double(qe) + "," + fmt_double(mc) +
           "," + fmt_double(gp) + "," + fmt_double(ge) + "\n";
    rows.push_back({{"s", s}, {"q_paper", qp}, {"q_exact", qe}, {"q_mc", mc}});
  }
  json j{{"d", a.d},
         {"sigma2", a.sigma2},
         {"trials", a.trials},
         {"seed", g.seed},
         {"max_gap_paper_scale", max_gap_paper},
         {"max_gap_exact_scale", max_gap_exact},
         {"mc_matches_paper_scale", max_gap_paper <= 0.01},
         {"mc_matches_exact_scale", max_gap_exact <= 0.01},
         {"note",
          "q_paper uses the stated 2*sigma^2 gamma scale; q_exact uses the 4*sigma^2 scale "
          "implied by the difference distribution; the Monte-Carlo column is the oracle"},
         {"rows", rows}};
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    write_text(a.out + "/qs.csv", csv);
    write_json(a.out + "/qs.json", j);
  }
  if (g.verbosity >= 1) std::cout << j.dump(2) << "\n";
  return psp::kExitOk;
}

struct TheoryKmipsArgs {
  std::string base, query, s_grid = "auto", out_dir = ".";
  uint32_t k = 100;
};

int run_theory_kmips(const GlobalOpts& g, const TheoryKmipsArgs& a) {
  psp::VectorStore store = load_vectors(a.base);
  psp::VectorStore queries = load_vectors(a.query);
  std::vector<double> grid;
  if (a.s_grid != "auto") grid = parse_f64_list(a.s_grid, "s");
  psp::KmipsOverlapReport rep =
      psp::kmips_neighborhood_overlap(store, queries, a.k, grid, g.seed, g.threads);

  std::filesystem::create_directories(a.out_dir);
  std::string csv = "s,overlap\n";
  for (size_t i = 0; i < rep.s_grid.size(); ++i)
    csv += fmt_double(rep.s_grid[i]) + "," + fmt_double(rep.overlap[i]) + "\n";
  write_text(a.out_dir + "/kmips_overlap.csv", csv);
  json j{{"k", a.k},
         {"seed", g.seed},
         {"median_pairwise_sq", rep.median_pairwise_sq},
         {"s_grid", rep.s_grid},
         {"overlap", rep.overlap}};
  write_json(a.out_dir + "/kmips_overlap.json", j);
  if (g.verbosity >= 1) std::cout << j.dump(2) << "\n";
  return psp::kExitOk;
}

struct TheoryHopsArgs {
  std::string bases, indexes, query, ls_grid = "10,20,40,80,160,320,640", out;
  uint32_t k = 1;
  double target = 0.95;
};

int run_theory_hops(const GlobalOpts& g, const TheoryHopsArgs& a) {
  auto base_paths = split_csv(a.bases);
  auto index_paths = split_csv(a.indexes);
  if (base_paths.size() != index_paths.size() || base_paths.empty())
    throw psp::DataError("InvalidParam: --bases and --indexes must list the same number of files");
  psp::VectorStore queries = load_vectors(a.query);
  auto ls_grid = parse_u32_list(a.ls_grid, "l_s");
  const float nan_theta = std::numeric_limits<float>::quiet_NaN();

  std::string csv = "n,ls,recall,mean_hops,mean_dc,qps,met\n";
  json rows = json::array();
  for (size_t i = 0; i < base_paths.size(); ++i) {
    psp::VectorStore store = load_vectors(base_paths[i]);
    psp::PspIndex index = psp::load_index(index_paths[i]);
    psp::GroundTruth truth = psp::brute_topk_all(store, queries, a.k, psp::Metric::ip);
    psp::OperatingPoint op =
        psp::operating_point(index, store, queries, truth, a.k, ls_grid, a.target,
                             psp::Metric::ip, psp::SearchParams::Entry::sn, false, nan_theta,
                             g.seed);
    csv += std::to_string(store.count()) + "," + std::to_string(op.row.ls) + "," +
           fmt_double(op.row.recall_mean) + "," + fmt_double(op.row.mean_hops) + "," +
           fmt_double(op.row.mean_dc) + "," + fmt_double(op.row.qps) + "," +
           (op.met ? "1" : "0") + "\n";
    rows.push_back({{"n", store.count()},
                    {"ls", op.row.ls},
                    {"recall", op.row.recall_mean},
                    {"mean_hops", op.row.mean_hops},
                    {"mean_dc", op.row.mean_dc},
                    {"met", op.met}});
  }
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    write_text(a.out + "/hop_scaling.csv", csv);
    write_json(a.out + "/hop_scaling.json",
               json{{"k", a.k}, {"target_recall", a.target}, {"seed", g.seed}, {"rows", rows}});
  }
  if (g.verbosity >= 1) std::cout << csv;
  return psp::kExitOk;
}

// ---- inspect ------------------------------------------------------------

struct InspectArgs {
  std::string index;
};

int run_inspect(const GlobalOpts& g, const InspectArgs& a) {
  std::vector<psp::SectionInfo> sections;
  psp::PspIndex index = psp::load_index(a.index, &sections);
  const psp::ProximityGraph& graph = index.graph;
  psp::DegreeStats deg = psp::degree_stats(graph);
  double cc = psp::sampled_clustering_coefficient(graph, 1000, g.seed);

  auto nav_ids = index.nav.all_ids();
  auto hops = psp::bfs_hops(graph, nav_ids);
  size_t reachable = psp::count_reachable(hops);
  // path-length stats over sampled reachable targets
  psp::CounterRng rng(g.seed, 0x1A57ULL);
  double hop_mean = 0, hop_m2 = 0;
  size_t hop_count = 0;
  for (size_t t = 0; t < 1000 && hop_count < index.n(); ++t) {
    uint32_t v = rng.next_below(static_cast<uint32_t>(index.n()));
    if (hops[v] == UINT32_MAX) continue;
    ++hop_count;
    double delta = static_cast<double>(hops[v]) - hop_mean;
    hop_mean += delta / static_cast<double>(hop_count);
    hop_m2 += delta * (static_cast<double>(hops[v]) - hop_mean);
  }
  double hop_std = hop_count > 1 ? std::sqrt(hop_m2 / static_cast<double>(hop_count)) : 0.0;

  std::cout << "n: " << index.n() << "\n"
            << "d: " << index.dim << "\n"
            << "R: " << index.R << "  S: " << index.S << "  alpha_millideg: "
            << index.alpha_millideg << "\n"
            << "clusters: " << index.clusters << "  nav nodes: " << nav_ids.size() << "\n"
            << "degree mean: " << deg.mean << "  std: " << deg.stddev << "  min: " << deg.min
            << "  max: " << deg.max << "\n"
            << "clustering coefficient (sampled 1000): " << cc << "\n"
            << "reachable from navigation: " << reachable << "/" << index.n() << "\n"
            << "bfs path length mean: " << hop_mean << "  std: " << hop_std << " (sampled "
            << hop_count << " targets)\n"
            << "aet model: " << (index.aet ? "present" : "absent");
  if (index.aet)
    std::cout << " (" << index.aet->nodes.size() << " nodes, theta " << index.aet->theta << ")";
  std::cout << "\nsections:\n";
  for (const auto& s : sections)
    std::cout << "  " << s.tag << " " << s.payload_bytes << " bytes\n";
  if (g.verbosity >= 2 && index.aet) std::cout << psp::export_rules(*index.aet);
  return psp::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-based maximum inner product search toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // let --seed/--threads appear after the subcommand too
  app.set_config("--config", "", "key=value config file; explicit flags win");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0 = library default)")
      ->capture_default_str();
  app.add_option("--verbosity", g.verbosity, "0 quiet, 1 normal, 2 debug")
      ->capture_default_str();

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--kind", synth_args.kind, "gaussian|lognormal|clustered|sphere")
      ->capture_default_str();
  synth->add_option("--n", synth_args.n, "row count")->required();
  synth->add_option("--d", synth_args.d, "dimension")->required();
  synth->add_option("--sigma2", synth_args.sigma2, "component variance")->capture_default_str();
  synth->add_option("--log-sigma", synth_args.log_sigma, "lognormal radius spread")
      ->capture_default_str();
  synth->add_option("--centers", synth_args.centers, "cluster count (clustered kind)")
      ->capture_default_str();
  synth->add_option("--out", synth_args.out, "output fvecs path")->required();

  GtArgs gt_args;
  auto* gt = app.add_subcommand("gt", "brute-force ground truth");
  gt->add_option("--base", gt_args.base, "base vectors (fvecs/bvecs)")->required();
  gt->add_option("--query", gt_args.query, "query vectors")->required();
  gt->add_option("--k", gt_args.k, "neighbors per query")->capture_default_str();
  gt->add_option("--metric", gt_args.metric, "ip|l2|cosine")->capture_default_str();
  gt->add_option("--out", gt_args.out, "output ivecs path")->required();

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "build an index");
  build->add_option("--base", build_args.base, "base vectors")->required();
  build->add_option("--out", build_args.out, "output index path")->required();
  build->add_option("--K", build_args.K, "bootstrap neighbors per node")->capture_default_str();
  build->add_option("--L", build_args.L, "candidate pool for pruning")->capture_default_str();
  build->add_option("--R", build_args.R, "max out-degree before refinement")
      ->capture_default_str();
  build->add_option("--alpha", build_args.alpha, "pruning angle, degrees")->capture_default_str();
  build->add_option("--S", build_args.S, "extra refinement edges per node")
      ->capture_default_str();
  build->add_option("--c", build_args.c, "navigation clusters (0 = auto)")->capture_default_str();
  build->add_option("--m", build_args.m, "navigation nodes (0 = auto)")->capture_default_str();
  build->add_option("--knn-mode", build_args.knn_mode, "auto|exact|nndescent")
      ->capture_default_str();
  build->add_option("--knn-cache", build_args.knn_cache, "bootstrap cache file (reused if present)");
  build->add_option("--report", build_args.report, "write build report JSON here");

  TrainAetArgs aet_args;
  auto* taet = app.add_subcommand("train-aet", "train the early-termination model");
  taet->add_option("--base", aet_args.base, "base vectors the index was built on")->required();
  taet->add_option("--index-in", aet_args.index_in, "index to read")->required();
  taet->add_option("--index-out", aet_args.index_out, "index copy with the model embedded")
      ->required();
  taet->add_option("--split", aet_args.split, "base fraction of the training split")
      ->capture_default_str();
  taet->add_option("--k", aet_args.k, "recall target k")->capture_default_str();
  taet->add_option("--ls", aet_args.ls, "trace pool size")->capture_default_str();
  taet->add_option("--theta", aet_args.theta, "stop confidence ratio")->capture_default_str();
  taet->add_option("--samples", aet_args.samples, "rows sampled per boundary side")
      ->capture_default_str();
  taet->add_option("--K", aet_args.K, "bootstrap K for the split index (0 = default)")
      ->capture_default_str();
  taet->add_option("--L", aet_args.L, "prune pool for the split index (0 = default)")
      ->capture_default_str();
  taet->add_option("--report", aet_args.report, "write training report JSON here");

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "query an index");
  search->add_option("--index", search_args.index, "index file")->required();
  search->add_option("--base", search_args.base, "base vectors")->required();
  search->add_option("--query", search_args.query, "query vectors")->required();
  search->add_option("--k", search_args.k, "results per query")->capture_default_str();
  search->add_option("--ls", search_args.ls, "candidate pool size")->capture_default_str();
  search->add_option("--metric", search_args.metric, "ip|l2|cosine")->capture_default_str();
  search->add_option("--aet", search_args.aet, "on|off")->capture_default_str();
  search->add_option("--entry", search_args.entry, "sn|random")->capture_default_str();
  search->add_option("--theta", search_args.theta, "theta override (default: model theta)");
  search->add_option("--out", search_args.out, "output CSV path, or - for stdout")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "recall/QPS/dc sweep");
  eval->add_option("--index", eval_args.index, "index file")->required();
  eval->add_option("--base", eval_args.base, "base vectors")->required();
  eval->add_option("--query", eval_args.query, "query vectors")->required();
  eval->add_option("--gt", eval_args.gt, "ground truth ivecs")->required();
  eval->add_option("--k", eval_args.k, "recall k")->capture_default_str();
  eval->add_option("--ls", eval_args.ls, "comma-separated l_s sweep")->capture_default_str();
  eval->add_option("--aet", eval_args.aet, "off|on|both")->capture_default_str();
  eval->add_option("--metric", eval_args.metric, "ip|l2|cosine")->capture_default_str();
  eval->add_option("--entry", eval_args.entry, "sn|random")->capture_default_str();
  eval->add_option("--out-dir", eval_args.out_dir, "report directory")->capture_default_str();
  eval->add_flag("--brute", eval_args.brute, "append an exhaustive-scan reference row");
  eval->add_flag("--plot-data", eval_args.plot_data, "emit recall/qps and recall/dc series");

  auto* theory = app.add_subcommand("theory", "scaling-equivalence lab");
  theory->require_subcommand(1);

  TheoryMuBarArgs mu_args;
  auto* mu = theory->add_subcommand("mu-bar", "exact scaling threshold per query");
  mu->add_option("--base", mu_args.base, "base vectors")->required();
  mu->add_option("--query", mu_args.query, "query vectors")->required();
  mu->add_option("--out", mu_args.out, "output CSV path")->required();

  TheoryOverlapArgs ov_args;
  auto* ov = theory->add_subcommand("overlap", "dual-walk path overlap vs mu");
  ov->add_option("--base", ov_args.base, "base vectors")->required();
  ov->add_option("--query", ov_args.query, "query vectors")->required();
  ov->add_option("--index", ov_args.index, "index whose graph to walk");
  ov->add_flag("--ideal", ov_args.ideal, "build the uncapped ideal graph instead");
  ov->add_option("--alpha", ov_args.alpha, "ideal-graph pruning angle")->capture_default_str();
  ov->add_option("--mu", ov_args.mu, "comma-separated mu sweep")->capture_default_str();
  ov->add_option("--max-steps", ov_args.max_steps, "walk cap")->capture_default_str();
  ov->add_option("--k", ov_args.k, "recall k for the L2 search column")->capture_default_str();
  ov->add_option("--ls", ov_args.ls, "pool for the L2 search column")->capture_default_str();
  ov->add_option("--out-dir", ov_args.out_dir, "report directory")->capture_default_str();

  TheoryQsArgs qs_args;
  auto* qs = theory->add_subcommand("qs", "neighborhood-mass law vs Monte Carlo");
  qs->add_option("--d", qs_args.d, "dimension")->capture_default_str();
  qs->add_option("--sigma2", qs_args.sigma2, "component variance")->capture_default_str();
  qs->add_option("--s-grid", qs_args.s_grid, "comma-separated s values, or auto")
      ->capture_default_str();
  qs->add_option("--trials", qs_args.trials, "Monte-Carlo trials")->capture_default_str();
  qs->add_option("--out", qs_args.out, "report directory (optional)");

  TheoryKmipsArgs km_args;
  auto* km = theory->add_subcommand("kmips-overlap", "top-k mass near the top-1 solution");
  km->add_option("--base", km_args.base, "base vectors")->required();
  km->add_option("--query", km_args.query, "query vectors")->required();
  km->add_option("--k", km_args.k, "solutions per query")->capture_default_str();
  km->add_option("--s-grid", km_args.s_grid, "comma-separated s values, or auto")
      ->capture_default_str();
  km->add_option("--out-dir", km_args.out_dir, "report directory")->capture_default_str();

  TheoryHopsArgs hop_args;
  auto* hop = theory->add_subcommand("hop-scaling", "mean hops at matched recall across sizes");
  hop->add_option("--bases", hop_args.bases, "comma-separated base files")->required();
  hop->add_option("--indexes", hop_args.indexes, "comma-separated index files")->required();
  hop->add_option("--query", hop_args.query, "query vectors")->required();
  hop->add_option("--k", hop_args.k, "recall k")->capture_default_str();
  hop->add_option("--target", hop_args.target, "target recall")->capture_default_str();
  hop->add_option("--ls-grid", hop_args.ls_grid, "l_s candidates")->capture_default_str();
  hop->add_option("--out", hop_args.out, "report directory (optional)");

  InspectArgs inspect_args;
  auto* inspect = app.add_subcommand("inspect", "summarize an index file");
  inspect->add_option("--index", inspect_args.index, "index file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return psp::kExitUsage;
  }

  try {
    if (g.threads > 0) omp_set_num_threads(g.threads);
    if (*synth) return run_synth(g, synth_args);
    if (*gt) return run_gt(g, gt_args);
    if (*build) return run_build(g, build_args);
    if (*taet) return run_train_aet(g, aet_args);
    if (*search) return run_search(g, search_args);
    if (*eval) return run_eval(g, eval_args);
    if (*theory) {
      if (*mu) return run_theory_mu_bar(g, mu_args);
      if (*ov) return run_theory_overlap(g, ov_args);
      if (*qs) return run_theory_qs(g, qs_args);
      if (*km) return run_theory_kmips(g, km_args);
      if (*hop) return run_theory_hops(g, hop_args);
    }
    if (*inspect) return run_inspect(g, inspect_args);
    std::cerr << "error: no subcommand selected\n";
    return psp::kExitUsage;
  } catch (const psp::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return psp::kExitData;
  } catch (const psp::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return psp::kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return psp::kExitInternal;
  }
}
