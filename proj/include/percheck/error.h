#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace percheck {

enum class Errc {
    // confusion
    DimensionMismatch,
    ColumnNotStochastic,
    NegativeEntry,
    InvalidLabel,
    IndexOutOfRange,
    EmptyOffClassPartition,
    WeightsNotNormalized,
    InfeasiblePair,
    // scenario
    InfeasibleScenario,
    InvalidState,
    NoSafeSuccessor,
    // chain
    EnvMismatch,
    StochasticityViolation,
    // logic
    ParseError,
    // engine
    NonConvergence,
    SingularSystem,
    NumericalError,
    UnsupportedFragment,
    DistributionNotNormalized,
    BudgetExceeded,
    HorizonRequired,
    // io / cli
    ConfigError,
    FormatError,
    IoError,
};

/// Short identifier such as "ColumnNotStochastic".
const char* errc_name(Errc code) noexcept;

/// Module that owns the error code, e.g. "confusion" or "engine".
const char* errc_module(Errc code) noexcept;

class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

   private:
    Errc code_;
};

/// Formula syntax error. The offset is a byte position into the parsed text.
class ParseError : public Error {
   public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message);

    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

   private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

}  // namespace percheck
