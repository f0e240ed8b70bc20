#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Non-fatal messages collected while fitting (tied knots, ill-conditioned
/// confusion matrices, degraded blocks, ...).
using Warnings = std::vector<std::string>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot support the requested computation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shared read counters for one domain. Copies of a DomainData share the same
/// counters so an audit survives value passing.
class AccessAudit {
 public:
  std::size_t feature_reads() const { return counters_->features.load(); }
  std::size_t outcome_reads() const { return counters_->outcomes.load(); }

 private:
  friend class DomainData;
  struct Counters {
    std::atomic<std::size_t> features{0};
    std::atomic<std::size_t> outcomes{0};
  };
  std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};

/// Feature matrix (rows are observations) plus an optional outcome vector.
/// Every call to features() or outcomes() is counted in audit(), including
/// failed outcome reads on an unlabeled domain.
class DomainData {
 public:
  DomainData() = default;
  explicit DomainData(Matrix features, std::optional<Vector> outcomes = std::nullopt,
                      std::string name = {});

  const Matrix& features() const;
  /// Throws DataError for an unlabeled domain.
  const Vector& outcomes() const;

  bool labeled() const { return outcomes_.has_value(); }
  Index size() const { return features_.rows(); }
  Index dim() const { return features_.cols(); }
  const std::string& name() const { return name_; }

  /// Copy with the outcomes removed and a fresh audit.
  DomainData without_outcomes() const;
  const AccessAudit& audit() const { return audit_; }

 private:
  Matrix features_;
  std::optional<Vector> outcomes_;
  std::string name_;
  AccessAudit audit_;
};

/// Row-wise concatenation of labeled domains (outcomes are read).
DomainData concatenate(const std::vector<DomainData>& domains, std::string name = "merged");

}  // namespace msda
