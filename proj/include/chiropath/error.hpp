#pragma once

#include <stdexcept>
#include <string>

namespace chiropath {

// Parameters outside an operation's domain (k < d, bad index, size mismatch).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A counting identity or structural invariant does not hold.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Zero determinant while building a uniform chirotope from points.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation applied to an object in the wrong lifecycle state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Corrupt or mismatched persisted data (ledger, manifest, digests, facts).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chiropath
