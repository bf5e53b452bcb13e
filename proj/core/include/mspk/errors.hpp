#pragma once

#include <stdexcept>
#include <string>

namespace mspk {

/// Invalid model/parameter input.  The message names the violated invariant.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// A configured resource cap (enumeration size, leaf count, ...) was exceeded.
class resource_error : public std::runtime_error {
 public:
  explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mspk
