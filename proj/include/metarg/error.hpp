#pragma once

#include <stdexcept>
#include <string>

namespace metarg {

enum class ErrorCode {
  invalid_argument,
  invalid_bounds,
  split_infeasible,
  out_of_range,
  bucket_too_small,
  resolved_game,
  illegal_action,
  not_done,
  vocab_too_small,
  codebook_mismatch,
  empty_input,
  malformed_trace,
  protocol_violation,
  io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace metarg
