#pragma once

#include <string>
#include <vector>

namespace segad {

// Collects non-fatal warnings raised by an operation. Operations take an
// optional pointer; passing nullptr discards warnings.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag) diag->warn(std::move(message));
}

}  // namespace segad
