#pragma once

// Error taxonomy used across the library.  Callers (notably the CLI) map
// these onto distinct process exit codes, so the split matters:
//   ConfigError  - the request itself is malformed (bad flag values, bad grids)
//   DataError    - the inputs are malformed (unreadable files, bad cells)
//   ComputeError - inputs were fine but a computation cannot proceed
//                  (singular systems, empty regions, degenerate metrics)

#include <stdexcept>
#include <string>

namespace hetreg {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hetreg
