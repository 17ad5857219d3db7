#pragma once

#include "mcgc/graph_weights.hpp"
#include "mcgc/point_cloud.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mcgc {

inline constexpr double default_degree_floor = 1e-12;

/// L = D^-1/2 (D - W) D^-1/2 with degrees floored at `deg_floor`.
/// Throws Contract if W is not symmetric (1e-10 relative to its largest
/// entry), has negative entries or a non-zero diagonal.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& w, double deg_floor = default_degree_floor);

/// Leading eigenpairs of the normalised Laplacian, eigenvalues ascending.
struct EigenPairs
{
  Eigen::VectorXd values;  ///< in [0, 2]
  Eigen::MatrixXd vectors; ///< n x values.size(), orthonormal columns
};

/// Nystrom extension from the landmark rows of the weight matrix.
///
/// `landmark_rows` is m x n: row r holds the weights between point
/// `landmarks[r]` and every point. Degrees of non-landmark points are
/// estimated from the low-rank extension; the eigenvectors come from the
/// one-shot symmetric orthogonalisation, generalised with a sign matrix so
/// an indefinite landmark block is handled. With every point a landmark the
/// result is the exact eigendecomposition.
///
/// Returns up to `count` pairs: fewer when the landmark block has lower rank.
/// Throws Parameter if count > m.
EigenPairs nystrom_eigs(Eigen::MatrixXd landmark_rows, std::span<const std::size_t> landmarks, std::size_t count,
                        double deg_floor = default_degree_floor);

struct NystromResult
{
  EigenPairs eig;
  std::vector<std::size_t> landmarks; ///< sorted point indices
};

/// Draws ceil(sample_fraction * n) landmarks uniformly without replacement
/// (at least k_upper + 1), builds their weight rows and extends the first
/// k_upper + 1 eigenpairs to all points.
NystromResult nystrom_eigs(const PointCloud& cloud, const GraphContext& ctx, double sample_fraction,
                           std::size_t k_upper, std::uint64_t rng_seed);

/// As above with an explicit landmark count (clamped to the cloud size).
NystromResult nystrom_eigs_sized(const PointCloud& cloud, const GraphContext& ctx, std::size_t landmark_count,
                                 std::size_t k_upper, std::uint64_t rng_seed);

/// argmax over i in [k_min, k_max] of lambda_{i+1} - lambda_i (1-based),
/// smallest i on ties. Needs at least k_max + 1 eigenvalues.
std::size_t choose_k(std::span<const double> eigenvalues, std::size_t k_min, std::size_t k_max);

/// lambda_{i+1} - lambda_i for consecutive eigenvalues.
std::vector<double> eigengaps(std::span<const double> eigenvalues);

struct Embedding
{
  Eigen::MatrixXd rows;         ///< n x k, unit rows except degenerate ones
  std::vector<bool> degenerate; ///< rows that were all-zero before normalising
};

/// First k eigenvectors as rows, each scaled to unit length.
Embedding spectral_embedding(const Eigen::MatrixXd& vectors, std::size_t k);

struct SpectralResult
{
  std::vector<double> eigenvalues;
  std::vector<double> eigengaps;
  std::size_t chosen_k = 0;
  Embedding embedding;
};

struct ClusterAssignment
{
  std::vector<int> labels;       ///< per row, in [0, k)
  Eigen::MatrixXd centers;       ///< k x dims
  double wcss = 0.0;             ///< within-cluster sum of squares
  std::size_t empty_cluster_events = 0;
};

struct KMeansOptions
{
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
};

/// Best-of-restarts Lloyd iterations with k-means++ seeding. Empty clusters
/// are re-seeded from the point farthest from its centre. Deterministic for
/// a given seed. Throws Parameter if rows < k or k == 0.
ClusterAssignment kmeans_assign(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t rng_seed,
                                const KMeansOptions& options = {});

/// Normalised multi-class cut: 1/2 sum_i cut(A_i, ~A_i) / vol(A_i).
/// Throws Degenerate if some label in [0, max label] has zero volume.
double ncut_value(const Eigen::MatrixXd& w, std::span<const int> labels);

/// Full relaxed normalised cut on a dense graph: exact eigenpairs, eigengap
/// choice of k in [k_min, k_max], row-normalised embedding, k-means.
/// Degenerate rows join the cluster of their most strongly linked vertex.
struct GraphPartition
{
  SpectralResult spectral;
  ClusterAssignment assignment;
};
GraphPartition partition_graph(const Eigen::MatrixXd& w, std::size_t k_min, std::size_t k_max, std::uint64_t rng_seed,
                               const KMeansOptions& options = {});

} // namespace mcgc
