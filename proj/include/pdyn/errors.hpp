#pragma once

#include <stdexcept>
#include <string>

namespace pdyn {

// Every domain error the library can raise. Callers that need to branch on
// the kind (the CLI, mostly) use name() rather than RTTI.
struct Error : std::runtime_error {
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }
 private:
  std::string name_;
};

#define PDYN_ERROR(Name)                                        \
  struct Name : Error {                                         \
    explicit Name(const std::string& what = "")                 \
        : Error(#Name, what.empty() ? #Name : what) {}          \
  }

PDYN_ERROR(DivisionByZero);
PDYN_ERROR(UnsupportedExtension);
PDYN_ERROR(IndeterminateValuation);
PDYN_ERROR(NoConvergence);
PDYN_ERROR(NotALevelNPoint);
PDYN_ERROR(DepthBudgetExceeded);
PDYN_ERROR(PrecisionInsufficient);
PDYN_ERROR(OutsideStrip);
PDYN_ERROR(MaxIterationsWithoutEscape);
PDYN_ERROR(ResolutionInsufficient);
PDYN_ERROR(ProductDiverged);

#undef PDYN_ERROR

// Rule violations carry the offending rule and position.
struct Violation : Error {
  Violation(std::string rule, int l, int k)
      : Error("Violation", "Violation(" + rule + ") at l=" + std::to_string(l) +
                               ", k=" + std::to_string(k)),
        rule(std::move(rule)), l(l), k(k) {}
  std::string rule;
  int l, k;
};

}  // namespace pdyn
