#include "msda/data.hpp"

namespace msda {

DomainData::DomainData(Matrix features, std::optional<Vector> outcomes, std::string name)
    : features_(std::move(features)), outcomes_(std::move(outcomes)), name_(std::move(name)) {
  if (outcomes_ && outcomes_->size() != features_.rows()) {
    throw DimensionError("domain '" + name_ + "': " + std::to_string(features_.rows()) +
                         " feature rows but " + std::to_string(outcomes_->size()) + " outcomes");
  }
}

const Matrix& DomainData::features() const {
  audit_.counters_->features.fetch_add(1);
  return features_;
}

const Vector& DomainData::outcomes() const {
  audit_.counters_->outcomes.fetch_add(1);
  if (!outcomes_) throw DataError("domain '" + name_ + "' has no outcomes");
  return *outcomes_;
}

DomainData DomainData::without_outcomes() const { return DomainData(features_, std::nullopt, name_); }

DomainData concatenate(const std::vector<DomainData>& domains, std::string name) {
  if (domains.empty()) throw DataError("concatenate: no domains");
  Index rows = 0;
  const Index p = domains.front().dim();
  for (const auto& d : domains) {
    if (d.dim() != p) throw DimensionError("concatenate: feature dimensions differ");
    rows += d.size();
  }
  Matrix x(rows, p);
  Vector y(rows);
  Index at = 0;
  for (const auto& d : domains) {
    x.middleRows(at, d.size()) = d.features();
    y.segment(at, d.size()) = d.outcomes();
    at += d.size();
  }
  return DomainData(std::move(x), std::move(y), std::move(name));
}

}  // namespace msda
