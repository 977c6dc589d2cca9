#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace percheck::confusion {

using Rational = boost::rational<std::int64_t>;

inline constexpr double kStochasticTolerance = 1e-9;

struct ClassLabel {
    std::string name;
    std::size_t index = 0;
};

/// One matrix cell. `exact` is set when the value came from a fraction such as "10/15".
struct Entry {
    double value = 0.0;
    std::optional<Rational> exact;

    Entry() = default;
    Entry(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
    Entry(Rational r) : value(boost::rational_cast<double>(r)), exact(r) {}  // NOLINT
};

/// Column-stochastic confusion matrix: entry(i, j) = P(predicted = c_i | true = c_j).
///
/// Instances only come out of validate(), so every column is a distribution.
/// The type is immutable and can be shared freely.
class ConfusionMatrix {
   public:
    /// Checks shape, sign and column sums. Rows index the predicted class, columns the true class.
    static ConfusionMatrix validate(std::vector<std::vector<Entry>> entries, std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<ClassLabel>& labels() const noexcept { return labels_; }

    double operator()(std::size_t predicted, std::size_t truth) const { return entry(predicted, truth).value; }
    const Entry& entry(std::size_t predicted, std::size_t truth) const;

    /// Throws IndexOutOfRange for unknown names.
    std::size_t index_of(std::string_view name) const;

    double column_sum(std::size_t truth) const;

    bool operator==(const ConfusionMatrix& other) const;

   private:
    ConfusionMatrix() = default;

    std::vector<ClassLabel> labels_;
    std::vector<Entry> entries_;  // row-major, predicted x truth
};

/// Per-class dataset sizes |D_j|. Negative or non-finite sizes are rejected.
class ClassSizes {
   public:
    explicit ClassSizes(std::vector<double> sizes);
    static ClassSizes equal(std::size_t n);

    const std::vector<double>& sizes() const noexcept { return sizes_; }

   private:
    std::vector<double> sizes_;
};

/// C(i,i) / (C(i,i) + sum_{j != i} C(j,i)).
double recall(const ConfusionMatrix& cm, std::size_t i);

/// Precision with the size-weighted mean false-positive rate in the denominator:
/// C(i,i) / (C(i,i) + sum_{j != i} C(i,j)|D_j| / sum_{j != i} |D_j|).
double precision_size_weighted(const ConfusionMatrix& cm, std::size_t i, const ClassSizes& sizes);

/// Standard TP / (TP + FP) precision under class priors `weights` (uniform when empty).
double precision_standard(const ConfusionMatrix& cm, std::size_t i, const std::vector<double>& weights = {});

/// 3x3 (ped, obj, empty) matrix with ped precision p and recall r:
/// TP = r, FP = r(1/p - 1), TN = 2 - FP, FN = 1 - r.
ConfusionMatrix from_precision_recall(double p, double r);

/// Feasibility of (p, r) for from_precision_recall.
bool feasible_pair(double p, double r) noexcept;

/// The fixed (ped, obj, empty) matrix used in the car/pedestrian experiments, in fifteenths.
ConfusionMatrix cm1();

/// Perfect classifier over the given labels.
ConfusionMatrix identity(std::vector<std::string> labels);

/// ped, obj, empty.
const std::vector<std::string>& env_labels();

/// Parses "10/15" or a decimal literal.
Entry parse_entry(std::string_view text);

}  // namespace percheck::confusion
