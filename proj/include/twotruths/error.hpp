#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twotruths {

enum class Errc {
  io,
  parse,
  invalid_argument,
  count_mismatch,
  duplicate_id,
  missing_id,
  unknown_label,
  id_overflow,
  degenerate_block,
  isolated_vertex,
  not_converged,
  degenerate_scree,
  fit_failed,
  singular,
  dimension_mismatch,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception carrying a machine-readable code and the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string_view module, const std::string& what)
      : std::runtime_error(std::string(module) + ": " + what),
        code_(code),
        module_(module) {}

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  Errc code_;
  std::string module_;
};

}  // namespace twotruths
