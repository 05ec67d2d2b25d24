#pragma once

#include <stdexcept>
#include <string>

namespace pialab {

// Exit-code buckets used by the CLI: 2 = bad config/arguments,
// 3 = numerical failure, 4 = I/O or file-format trouble.
struct error : std::runtime_error {
  int exit_code;
  error(const std::string& msg, int code) : std::runtime_error(msg), exit_code(code) {}
};

struct invalid_argument_error : error {
  explicit invalid_argument_error(const std::string& msg) : error(msg, 2) {}
};

struct config_error : error {
  explicit config_error(const std::string& msg) : error(msg, 2) {}
};

struct unsupported_operation_error : error {
  explicit unsupported_operation_error(const std::string& msg) : error(msg, 2) {}
};

struct training_diverged_error : error {
  int epoch;
  training_diverged_error(const std::string& msg, int ep) : error(msg, 3), epoch(ep) {}
};

struct budget_exceeded_error : error {
  explicit budget_exceeded_error(const std::string& msg) : error(msg, 3) {}
};

struct degenerate_input_error : error {
  explicit degenerate_input_error(const std::string& msg) : error(msg, 3) {}
};

struct format_error : error {
  explicit format_error(const std::string& msg) : error(msg, 4) {}
};

struct io_error : error {
  explicit io_error(const std::string& msg) : error(msg, 4) {}
};

}  // namespace pialab
