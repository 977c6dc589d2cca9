#include "percheck/error.h"

namespace percheck {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::ColumnNotStochastic: return "ColumnNotStochastic";
        case Errc::NegativeEntry: return "NegativeEntry";
        case Errc::InvalidLabel: return "InvalidLabel";
        case Errc::IndexOutOfRange: return "IndexOutOfRange";
        case Errc::EmptyOffClassPartition: return "EmptyOffClassPartition";
        case Errc::WeightsNotNormalized: return "WeightsNotNormalized";
        case Errc::InfeasiblePair: return "InfeasiblePair";
        case Errc::InfeasibleScenario: return "InfeasibleScenario";
        case Errc::InvalidState: return "InvalidState";
        case Errc::NoSafeSuccessor: return "NoSafeSuccessor";
        case Errc::EnvMismatch: return "EnvMismatch";
        case Errc::StochasticityViolation: return "StochasticityViolation";
        case Errc::ParseError: return "ParseError";
        case Errc::NonConvergence: return "NonConvergence";
        case Errc::SingularSystem: return "SingularSystem";
        case Errc::NumericalError: return "NumericalError";
        case Errc::UnsupportedFragment: return "UnsupportedFragment";
        case Errc::DistributionNotNormalized: return "DistributionNotNormalized";
        case Errc::BudgetExceeded: return "BudgetExceeded";
        case Errc::HorizonRequired: return "HorizonRequired";
        case Errc::ConfigError: return "ConfigError";
        case Errc::FormatError: return "FormatError";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

const char* errc_module(Errc code) noexcept {
    switch (code) {
        case Errc::DimensionMismatch:
        case Errc::ColumnNotStochastic:
        case Errc::NegativeEntry:
        case Errc::InvalidLabel:
        case Errc::IndexOutOfRange:
        case Errc::EmptyOffClassPartition:
        case Errc::WeightsNotNormalized:
        case Errc::InfeasiblePair:
            return "confusion";
        case Errc::InfeasibleScenario:
        case Errc::InvalidState:
        case Errc::NoSafeSuccessor:
            return "scenario";
        case Errc::EnvMismatch:
        case Errc::StochasticityViolation:
            return "chain";
        case Errc::ParseError:
            return "logic";
        case Errc::NonConvergence:
        case Errc::SingularSystem:
        case Errc::NumericalError:
        case Errc::UnsupportedFragment:
        case Errc::DistributionNotNormalized:
        case Errc::BudgetExceeded:
        case Errc::HorizonRequired:
            return "engine";
        case Errc::ConfigError:
        case Errc::FormatError:
        case Errc::IoError:
            return "io";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message)
    : Error(Errc::ParseError, message), offset_(offset), expected_(std::move(expected)) {}

}  // namespace percheck
