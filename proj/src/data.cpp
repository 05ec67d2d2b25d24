#include "pialab/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "framing.hpp"
#include "pialab/errors.hpp"
#include "pialab/rng.hpp"

namespace pialab {

const char* kind_label(DatasetKind k) {
  switch (k) {
    case DatasetKind::gaussian_mixture: return "gaussian-mixture";
    case DatasetKind::ring: return "ring";
    case DatasetKind::grid_image: return "grid-image";
  }
  throw invalid_argument_error("kind_label: unknown dataset kind");
}

DatasetKind kind_from_label(const std::string& s) {
  if (s == "gaussian-mixture") return DatasetKind::gaussian_mixture;
  if (s == "ring") return DatasetKind::ring;
  if (s == "grid-image") return DatasetKind::grid_image;
  throw invalid_argument_error("unknown dataset kind '" + s +
                               "' (expected gaussian-mixture|ring|grid-image)");
}

namespace {

Eigen::MatrixXd raw_mixture(int n, int dim, Rng& rng) {
  // four equal-weight components; centers are hypercube corners at
  // half-coordinate +-0.5 (sign pattern on the first two axes), noise 0.25
  static const double sx[4] = {1.0, 1.0, -1.0, -1.0};
  static const double sy[4] = {1.0, -1.0, 1.0, -1.0};
  std::vector<int> comp(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) comp[static_cast<size_t>(i)] = static_cast<int>(rng.below(4));
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i) {
    int c = comp[static_cast<size_t>(i)];
    for (int j = 0; j < dim; ++j) {
      double center = j == 0 ? 0.5 * sx[c] : j == 1 ? 0.5 * sy[c] : 0.5;
      x(i, j) = center + 0.25 * rng.normal();
    }
  }
  return x;
}

Eigen::MatrixXd raw_ring(int n, int dim, Rng& rng) {
  if (dim < 2) throw invalid_argument_error("ring dataset needs dim >= 2");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, dim);
  for (int i = 0; i < n; ++i) {
    double theta = 2.0 * std::numbers::pi * rng.unit();
    double radius = 1.0 + 0.05 * rng.normal();
    x(i, 0) = radius * std::cos(theta);
    x(i, 1) = radius * std::sin(theta);
  }
  return x;
}

Eigen::MatrixXd raw_grid_image(int n, int dim, Rng& rng) {
  int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (side * side != dim)
    throw invalid_argument_error("grid-image dataset needs a square dim");
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i) {
    // one soft blob per image: random center and width, plus pixel noise
    double cx = (side - 1) * rng.unit();
    double cy = (side - 1) * rng.unit();
    double w = 0.75 + 0.3 * side * rng.unit();
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        double d2 = (r - cx) * (r - cx) + (c - cy) * (c - cy);
        x(i, r * side + c) = std::exp(-d2 / (2.0 * w * w)) + 0.05 * rng.normal();
      }
  }
  return x;
}

}  // namespace

Eigen::MatrixXd gen_raw_samples(DatasetKind kind, int n, int dim, std::uint64_t seed) {
  if (n < 2) throw invalid_argument_error("gen_dataset: n must be >= 2");
  if (dim < 1) throw invalid_argument_error("gen_dataset: dim must be >= 1");
  Rng rng(seed);
  switch (kind) {
    case DatasetKind::gaussian_mixture: return raw_mixture(n, dim, rng);
    case DatasetKind::ring: return raw_ring(n, dim, rng);
    case DatasetKind::grid_image: return raw_grid_image(n, dim, rng);
  }
  throw invalid_argument_error("gen_dataset: unknown kind");
}

Dataset gen_dataset(DatasetKind kind, int n, int dim, std::uint64_t seed) {
  Eigen::MatrixXd x = gen_raw_samples(kind, n, dim, seed);
  double mean = x.mean();
  double sd = std::sqrt((x.array() - mean).square().mean());
  if (sd == 0.0) throw degenerate_input_error("gen_dataset: zero-variance draw");
  Dataset ds;
  ds.kind = kind;
  ds.samples = (x.array() - mean) / sd;
  ds.dim = dim;
  ds.seed = seed;
  return ds;
}

Split make_split(const Dataset& ds, double fraction_of_total, std::uint64_t seed) {
  if (!(fraction_of_total > 0.0) || fraction_of_total > 1.0)
    throw invalid_argument_error("split: fraction must be in (0, 1]");
  long long n = ds.samples.rows();
  // tolerant floor so fractions like 0.3 select the intended count
  long long sel = static_cast<long long>(std::floor(fraction_of_total * static_cast<double>(n) + 1e-9));
  if (sel < 2) throw invalid_argument_error("split: selection too small (needs >= 2 samples)");
  std::vector<long long> ids(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(ids);
  long long n_mem = sel / 2;
  Split sp;
  sp.member_ids.assign(ids.begin(), ids.begin() + n_mem);
  sp.holdout_ids.assign(ids.begin() + n_mem, ids.begin() + sel);
  std::sort(sp.member_ids.begin(), sp.member_ids.end());
  std::sort(sp.holdout_ids.begin(), sp.holdout_ids.end());
  sp.split_seed = seed;
  return sp;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& samples, const std::vector<long long>& ids) {
  Eigen::MatrixXd out(static_cast<long long>(ids.size()), samples.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    long long id = ids[i];
    if (id < 0 || id >= samples.rows())
      throw invalid_argument_error("gather_rows: id out of range");
    out.row(static_cast<long long>(i)) = samples.row(id);
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os = detail::open_out(path, std::ios::binary);
  nlohmann::json header = {
      {"kind", "dataset"},
      {"dataset_kind", kind_label(ds.kind)},
      {"n", ds.samples.rows()},
      {"dim", ds.dim},
      {"seed", ds.seed},
  };
  detail::write_header(os, header);
  std::vector<double> block;
  block.reserve(static_cast<size_t>(ds.samples.size()));
  for (long long i = 0; i < ds.samples.rows(); ++i)
    for (long long j = 0; j < ds.samples.cols(); ++j) block.push_back(ds.samples(i, j));
  detail::write_block(os, block);
  if (!os) throw io_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is = detail::open_in(path, std::ios::binary);
  nlohmann::json header = detail::read_header(is, "dataset");
  Dataset ds;
  ds.kind = kind_from_label(detail::get_field<std::string>(header, "dataset_kind"));
  long long n = detail::get_field<long long>(header, "n");
  ds.dim = detail::get_field<int>(header, "dim");
  ds.seed = detail::get_field<std::uint64_t>(header, "seed");
  if (n < 1 || ds.dim < 1) throw format_error("header field out of range: n/dim");
  std::vector<double> block =
      detail::read_block(is, static_cast<size_t>(n) * static_cast<size_t>(ds.dim), "samples");
  ds.samples.resize(n, ds.dim);
  size_t k = 0;
  for (long long i = 0; i < n; ++i)
    for (int j = 0; j < ds.dim; ++j) ds.samples(i, j) = block[k++];
  return ds;
}

void save_split(const Split& sp, const std::string& path) {
  std::ofstream os = detail::open_out(path, std::ios::out);
  nlohmann::json j = {
      {"member_ids", sp.member_ids},
      {"holdout_ids", sp.holdout_ids},
      {"split_seed", sp.split_seed},
  };
  os << j.dump(2) << "\n";
  if (!os) throw io_error("write failed: " + path);
}

Split load_split(const std::string& path) {
  std::ifstream is = detail::open_in(path, std::ios::in);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception&) {
    throw format_error("split file is not valid json: " + path);
  }
  if (!j.is_object()) throw format_error("split file must be a json object");
  for (const auto& item : j.items())
    if (item.key() != "member_ids" && item.key() != "holdout_ids" && item.key() != "split_seed")
      throw format_error("split file has unknown field: " + item.key());
  Split sp;
  sp.member_ids = detail::get_field<std::vector<long long>>(j, "member_ids");
  sp.holdout_ids = detail::get_field<std::vector<long long>>(j, "holdout_ids");
  sp.split_seed = detail::get_field<std::uint64_t>(j, "split_seed");
  return sp;
}

}  // namespace pialab
