#pragma once

#include <stdexcept>
#include <string>

namespace covctrl {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// geometry
class DegenerateFacet : public Error { public: using Error::Error; };
class OffPlane : public Error { public: using Error::Error; };
class DegenerateHull : public Error { public: using Error::Error; };
class InvalidRadius : public Error { public: using Error::Error; };
class MeshError : public Error { public: using Error::Error; };

// agent model
class InputOutOfRange : public Error { public: using Error::Error; };

// visibility
class OutOfEnvironment : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class StaleTable : public Error { public: using Error::Error; };

// milp
class ModelError : public Error { public: using Error::Error; };
class SolverNumericalError : public Error { public: using Error::Error; };

// planner / mission
class NoTargetRemaining : public Error { public: using Error::Error; };
class PlanInfeasible : public Error { public: using Error::Error; };
class DecodeError : public Error { public: using Error::Error; };
class MissionError : public Error { public: using Error::Error; };

// scenario parsing; carries a 1-based line number when known (0 = whole file)
class ScenarioError : public Error {
 public:
  ScenarioError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

}  // namespace covctrl
