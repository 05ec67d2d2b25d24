#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace pialab {

enum class DatasetKind { gaussian_mixture, ring, grid_image };

const char* kind_label(DatasetKind k);
DatasetKind kind_from_label(const std::string& s);

// Immutable after generation; (kind, n, dim, seed) fully determines every
// byte, so regeneration is a substitute for persistence.
struct Dataset {
  DatasetKind kind = DatasetKind::gaussian_mixture;
  Eigen::MatrixXd samples;  // n x dim, standardized
  int dim = 0;
  std::uint64_t seed = 0;
};

// Standardized samples: raw generation followed by (x - mean) / std over all
// entries of the matrix (population std), so the pooled mean is 0 and the
// pooled variance is 1 to floating-point accuracy.
Dataset gen_dataset(DatasetKind kind, int n, int dim, std::uint64_t seed);

// The same draw before standardization; exposes the raw geometry (mixture
// corners, ring radii) that standardization rescales.
Eigen::MatrixXd gen_raw_samples(DatasetKind kind, int n, int dim, std::uint64_t seed);

struct Split {
  std::vector<long long> member_ids;
  std::vector<long long> holdout_ids;
  std::uint64_t split_seed = 0;
};

// Selects floor(fraction * n) ids by seeded shuffle and assigns the first
// half (rounded down) as members, the rest as holdout. Ids come back sorted.
Split make_split(const Dataset& ds, double fraction_of_total, std::uint64_t seed);

// Gathers the given rows into a dense matrix, in id order.
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& samples, const std::vector<long long>& ids);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

void save_split(const Split& sp, const std::string& path);
Split load_split(const std::string& path);

}  // namespace pialab
