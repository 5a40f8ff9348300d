#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

namespace lorentz::cli {

struct MissingBundle : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Prints the verdict table of a result bundle; returns 0 when every hard
/// verdict passed and 1 otherwise. Never recomputes anything.
int emit_report(const std::filesystem::path& bundle_dir, std::ostream& out);

}  // namespace lorentz::cli
