#include "pialab/checkpoint.hpp"

#include "framing.hpp"
#include "pialab/errors.hpp"

namespace pialab {

void save_checkpoint(const EpsilonModel& model, const NoiseSchedule& sched,
                     const std::string& path) {
  if (model.params.empty()) throw invalid_argument_error("save_checkpoint: uninitialized model");
  std::ofstream os = detail::open_out(path, std::ios::binary);
  nlohmann::json schedule;
  if (sched.continuous) {
    schedule = {{"continuous", true}, {"beta_min", sched.beta_min}, {"beta_max", sched.beta_max}};
  } else {
    schedule = {{"continuous", false},
                {"T", sched.T},
                {"beta_start", sched.beta_start},
                {"beta_end", sched.beta_end}};
  }
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.params)
    tensors.push_back({{"rows", p.rows()}, {"cols", p.cols()}});
  nlohmann::json header = {
      {"kind", "checkpoint"},
      {"dim", model.dim},
      {"init_seed", model.init_seed},
      {"layers", model.layer_dims()},
      {"schedule", schedule},
      {"tensors", tensors},
  };
  detail::write_header(os, header);
  for (const auto& p : model.params) {
    std::vector<double> block;
    block.reserve(static_cast<size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j) block.push_back(p(i, j));
    detail::write_block(os, block);
  }
  if (!os) throw io_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is = detail::open_in(path, std::ios::binary);
  nlohmann::json header = detail::read_header(is, "checkpoint");

  Checkpoint out;
  nlohmann::json sj = header.contains("schedule") ? header["schedule"] : nlohmann::json();
  if (!sj.is_object()) throw format_error("header missing field: schedule");
  if (detail::get_field<bool>(sj, "continuous")) {
    out.sched = make_vp_schedule(detail::get_field<double>(sj, "beta_min"),
                                 detail::get_field<double>(sj, "beta_max"));
  } else {
    out.sched = make_linear_schedule(detail::get_field<int>(sj, "T"),
                                     detail::get_field<double>(sj, "beta_start"),
                                     detail::get_field<double>(sj, "beta_end"));
  }

  out.model.dim = detail::get_field<int>(header, "dim");
  out.model.init_seed = detail::get_field<std::uint64_t>(header, "init_seed");
  if (out.model.dim < 1) throw format_error("header field out of range: dim");

  if (!header.contains("tensors") || !header["tensors"].is_array())
    throw format_error("header missing field: tensors");
  for (const auto& tj : header["tensors"]) {
    long long rows = detail::get_field<long long>(tj, "rows");
    long long cols = detail::get_field<long long>(tj, "cols");
    if (rows < 1 || cols < 1) throw format_error("header field out of range: tensor shape");
    std::vector<double> block =
        detail::read_block(is, static_cast<size_t>(rows) * static_cast<size_t>(cols), "tensor");
    Eigen::MatrixXd m(rows, cols);
    size_t k = 0;
    for (long long i = 0; i < rows; ++i)
      for (long long j = 0; j < cols; ++j) m(i, j) = block[k++];
    out.model.params.push_back(std::move(m));
  }
  if (out.model.params.size() != 2 * EpsilonModel::kLayers)
    throw format_error("wrong tensor count for the pinned architecture");
  if (out.model.params[0].rows() != out.model.dim + kTimeEmbedDim)
    throw format_error("tensor shape inconsistent with dim");
  return out;
}

}  // namespace pialab
