#ifndef ETFC_ERRORS_HPP
#define ETFC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace etfc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// graph
struct DisconnectedGraph : Error { using Error::Error; };

// lpv
struct OutOfPolytope : Error { using Error::Error; };
struct UnsupportedPolytope : Error { using Error::Error; };
struct InvalidPhysicalParameter : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// synthesis
struct Infeasible : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct BackendFailure : Error { using Error::Error; };
struct StabilityViolation : Error { using Error::Error; };
struct EquivalenceFailure : Error { using Error::Error; };
struct DissipationViolation : Error { using Error::Error; };

// estimators / sim
struct UnknownSender : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };
struct NumericOverflow : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };

// cli / config
struct ConfigError : Error { using Error::Error; };

}  // namespace etfc

#endif
