#pragma once

#include <stdexcept>
#include <string>

namespace rdt {

// Arguments outside a function's mathematical domain.
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

// Structurally valid input that contradicts itself (elicited judgements,
// degenerate plans, empty conditioning sets).
class incoherence_error : public std::runtime_error {
 public:
  explicit incoherence_error(const std::string& what) : std::runtime_error(what) {}
};

// No solution exists within the search range.
class infeasible_error : public std::runtime_error {
 public:
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// A sampler could not be started from a finite log target.
class init_error : public std::runtime_error {
 public:
  explicit init_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rdt
