#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "psp/graph.hpp"
#include "psp/vecstore.hpp"

namespace psp {

// ---- scaling-equivalence lab --------------------------------------------

// Exact inner-product argmax set of a query (all ties), ascending ids.
std::vector<uint32_t> mips_argmax_set(const VectorStore& store, const float* query);

// Nearest neighbor of mu*q by the expanded objective ||p||^2 - 2 mu <p,q>
// (the ||mu q||^2 term is constant per query, dropping it is exact).
uint32_t scaled_nn(const VectorStore& store, const float* query, double mu);

struct MuBarReport {
  double mu_bar = 0.0;            // supremum term; may be <= 0
  double effective_lower = 0.0;   // max(mu_bar, 0)
  uint32_t witness = 0;           // representative optimum p*
  std::vector<uint32_t> optimum_set;
  // competitor id -> (||p*||^2 - ||p||^2) / (2 (<p*,q> - <p,q>)), kept for audit
  std::vector<std::pair<uint32_t, double>> terms;
  std::vector<double> grid;       // verification scales
  bool grid_ok = false;           // NN(mu q) was an optimum at every grid mu
};

// Exact threshold above which L2-nearest of mu*q solves the inner-product
// problem, verified against the scaled-NN oracle on a small grid.
MuBarReport compute_mu_bar(const VectorStore& store, const float* query);

// ---- path-overlap experiment --------------------------------------------

struct OverlapParams {
  std::vector<double> mu_list{0.1, 1.0, 10.0, 100.0, 1200.0};
  uint32_t max_steps = 15;
  uint32_t k = 100;    // recall target for the L2 full-search column
  uint32_t ls = 500;   // pool for the L2 full search
  uint64_t seed = 1;
  int threads = 0;
};

struct OverlapReport {
  std::vector<double> mu;
  std::vector<double> mean_overlap;    // positional agreement / longer path
  std::vector<double> mean_l2_recall;  // L2 search toward mu q vs. IP truth
};

OverlapReport overlap_experiment(const ProximityGraph& g, const VectorStore& store,
                                 const QuerySet& queries, const OverlapParams& params);

// ---- neighborhood-mass law ----------------------------------------------

// Stated closed form: regularized lower incomplete gamma at scale 2 sigma^2.
double qs_probability_paper(uint32_t d, double sigma2, double s);
// Distribution of ||X - Y||^2 for X,Y ~ N(0, sigma^2 I): chi-square of d
// degrees scaled by 2 sigma^2, i.e. gamma scale 4 sigma^2.
double qs_probability_exact(uint32_t d, double sigma2, double s);
// Empirical oracle; deterministic for a given seed at any thread count.
double qs_monte_carlo(uint32_t d, double sigma2, double s, uint64_t trials, uint64_t seed);

struct KmipsOverlapReport {
  std::vector<double> s_grid;
  std::vector<double> overlap;     // mean fraction of top-k within sqrt(s) of top-1
  double median_pairwise_sq = 0;   // sampled estimate over the store
};

KmipsOverlapReport kmips_neighborhood_overlap(const VectorStore& store, const QuerySet& queries,
                                              uint32_t k, std::vector<double> s_grid,
                                              uint64_t seed, int threads = 0);

// Sampled median of ||x_i - x_j||^2 over random pairs.
double median_pairwise_sq_distance(const VectorStore& store, size_t pairs, uint64_t seed);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace psp
