#include "percheck/confusion.h"

#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "percheck/error.h"

namespace percheck::confusion {

namespace {

void check_index(const ConfusionMatrix& cm, std::size_t i) {
    if (i >= cm.size()) {
        throw Error(Errc::IndexOutOfRange,
                    "class index " + std::to_string(i) + " out of range for " + std::to_string(cm.size()) + " classes");
    }
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

ConfusionMatrix ConfusionMatrix::validate(std::vector<std::vector<Entry>> entries, std::vector<std::string> labels) {
    const std::size_t n = entries.size();
    if (n < 2) {
        throw Error(Errc::DimensionMismatch, "confusion matrix needs at least 2 classes, got " + std::to_string(n));
    }
    if (labels.size() != n) {
        throw Error(Errc::DimensionMismatch, "expected " + std::to_string(n) + " labels, got " + std::to_string(labels.size()));
    }
    std::set<std::string> seen;
    for (const auto& name : labels) {
        if (name.empty() || !seen.insert(name).second) {
            throw Error(Errc::InvalidLabel, "class labels must be unique and non-empty ('" + name + "')");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (entries[i].size() != n) {
            throw Error(Errc::DimensionMismatch, "row " + std::to_string(i) + " has " + std::to_string(entries[i].size()) +
                                                     " entries, expected " + std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = entries[i][j].value;
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(Errc::NegativeEntry,
                            "entry (" + std::to_string(i) + "," + std::to_string(j) + ") = " + format_double(v) + " is not a probability");
            }
        }
    }

    ConfusionMatrix cm;
    cm.labels_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) cm.labels_.push_back({std::move(labels[i]), i});
    cm.entries_.reserve(n * n);
    for (auto& row : entries) {
        for (auto& e : row) cm.entries_.push_back(std::move(e));
    }

    for (std::size_t j = 0; j < n; ++j) {
        bool all_exact = true;
        Rational exact_sum{0};
        for (std::size_t i = 0; i < n; ++i) {
            const auto& e = cm.entry(i, j);
            if (e.exact) {
                exact_sum += *e.exact;
            } else {
                all_exact = false;
            }
        }
        const double sum = cm.column_sum(j);
        const bool ok = all_exact ? exact_sum == Rational{1} : std::abs(sum - 1.0) <= kStochasticTolerance;
        if (!ok) {
            throw Error(Errc::ColumnNotStochastic,
                        "column " + std::to_string(j) + " ('" + cm.labels_[j].name + "') sums to " + format_double(sum));
        }
    }
    return cm;
}

const Entry& ConfusionMatrix::entry(std::size_t predicted, std::size_t truth) const {
    if (predicted >= size() || truth >= size()) {
        throw Error(Errc::IndexOutOfRange, "entry (" + std::to_string(predicted) + "," + std::to_string(truth) + ") out of range");
    }
    return entries_[predicted * size() + truth];
}

std::size_t ConfusionMatrix::index_of(std::string_view name) const {
    for (const auto& l : labels_) {
        if (l.name == name) return l.index;
    }
    throw Error(Errc::IndexOutOfRange, "no class named '" + std::string(name) + "'");
}

double ConfusionMatrix::column_sum(std::size_t truth) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += (*this)(i, truth);
    return sum;
}

bool ConfusionMatrix::operator==(const ConfusionMatrix& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels_[i].name != other.labels_[i].name) return false;
    }
    for (std::size_t k = 0; k < entries_.size(); ++k) {
        if (entries_[k].value != other.entries_[k].value) return false;
    }
    return true;
}

ClassSizes::ClassSizes(std::vector<double> sizes) : sizes_(std::move(sizes)) {
    for (double s : sizes_) {
        if (!std::isfinite(s) || s < 0.0) {
            throw Error(Errc::NegativeEntry, "class size " + format_double(s) + " must be a non-negative count");
        }
    }
}

ClassSizes ClassSizes::equal(std::size_t n) { return ClassSizes(std::vector<double>(n, 1.0)); }

double recall(const ConfusionMatrix& cm, std::size_t i) {
    check_index(cm, i);
    double missed = 0.0;
    for (std::size_t j = 0; j < cm.size(); ++j) {
        if (j != i) missed += cm(j, i);
    }
    const double tp = cm(i, i);
    if (tp + missed == 0.0) return 0.0;
    return tp / (tp + missed);
}

double precision_size_weighted(const ConfusionMatrix& cm, std::size_t i, const ClassSizes& sizes) {
    check_index(cm, i);
    if (sizes.sizes().size() != cm.size()) {
        throw Error(Errc::DimensionMismatch, "expected " + std::to_string(cm.size()) + " class sizes, got " +
                                                 std::to_string(sizes.sizes().size()));
    }
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < cm.size(); ++j) {
        if (j == i) continue;
        weighted += cm(i, j) * sizes.sizes()[j];
        total += sizes.sizes()[j];
    }
    if (total == 0.0) {
        throw Error(Errc::EmptyOffClassPartition, "all off-class sizes are zero for class '" + cm.labels()[i].name + "'");
    }
    const double tp = cm(i, i);
    const double denom = tp + weighted / total;
    if (denom == 0.0) return 0.0;
    return tp / denom;
}

double precision_standard(const ConfusionMatrix& cm, std::size_t i, const std::vector<double>& weights) {
    check_index(cm, i);
    std::vector<double> w = weights;
    if (w.empty()) w.assign(cm.size(), 1.0 / static_cast<double>(cm.size()));
    if (w.size() != cm.size()) {
        throw Error(Errc::DimensionMismatch, "expected " + std::to_string(cm.size()) + " class weights, got " + std::to_string(w.size()));
    }
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0) throw Error(Errc::WeightsNotNormalized, "class weight " + format_double(x) + " is negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
        throw Error(Errc::WeightsNotNormalized, "class weights sum to " + format_double(sum));
    }
    double predicted_i = 0.0;
    for (std::size_t j = 0; j < cm.size(); ++j) predicted_i += w[j] * cm(i, j);
    if (predicted_i == 0.0) return 0.0;
    return w[i] * cm(i, i) / predicted_i;
}

bool feasible_pair(double p, double r) noexcept {
    if (!(p > 0.0 && p <= 1.0 && r > 0.0 && r <= 1.0)) return false;
    return r * (1.0 / p - 1.0) <= 2.0;
}

ConfusionMatrix from_precision_recall(double p, double r) {
    if (!(p > 0.0 && p <= 1.0) || !(r > 0.0 && r <= 1.0)) {
        throw Error(Errc::InfeasiblePair, "precision and recall must lie in (0, 1], got p=" + format_double(p) + ", r=" + format_double(r));
    }
    const double tp = r;
    const double fp = tp * (1.0 / p - 1.0);
    if (fp > 2.0) {
        throw Error(Errc::InfeasiblePair, "p=" + format_double(p) + ", r=" + format_double(r) + " needs FP=" + format_double(fp) +
                                              " > 2, leaving no true negatives");
    }
    const double tn = 2.0 - fp;
    const double fn = 1.0 - tp;
    std::vector<std::vector<Entry>> rows = {
        {tp, fp / 2.0, fp / 2.0},
        {fn / 2.0, 4.0 * tn / 10.0, tn / 10.0},
        {fn / 2.0, tn / 10.0, 4.0 * tn / 10.0},
    };
    return ConfusionMatrix::validate(std::move(rows), env_labels());
}

ConfusionMatrix cm1() {
    auto q = [](std::int64_t num) { return Entry(Rational(num, 15)); };
    std::vector<std::vector<Entry>> rows = {
        {q(10), q(2), q(3)},
        {q(2), q(11), q(2)},
        {q(3), q(2), q(10)},
    };
    return ConfusionMatrix::validate(std::move(rows), env_labels());
}

ConfusionMatrix identity(std::vector<std::string> labels) {
    const std::size_t n = labels.size();
    std::vector<std::vector<Entry>> rows(n, std::vector<Entry>(n, Entry(Rational(0))));
    for (std::size_t i = 0; i < n; ++i) rows[i][i] = Entry(Rational(1));
    return ConfusionMatrix::validate(std::move(rows), std::move(labels));
}

const std::vector<std::string>& env_labels() {
    static const std::vector<std::string> labels = {"ped", "obj", "empty"};
    return labels;
}

Entry parse_entry(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    const auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        auto num_text = trim(text.substr(0, slash));
        auto den_text = trim(text.substr(slash + 1));
        std::int64_t num = 0;
        std::int64_t den = 0;
        auto r1 = std::from_chars(num_text.data(), num_text.data() + num_text.size(), num);
        auto r2 = std::from_chars(den_text.data(), den_text.data() + den_text.size(), den);
        if (r1.ec != std::errc{} || r1.ptr != num_text.data() + num_text.size() || r2.ec != std::errc{} ||
            r2.ptr != den_text.data() + den_text.size() || den == 0) {
            throw Error(Errc::FormatError, "malformed fraction '" + std::string(text) + "'");
        }
        return Entry(Rational(num, den));
    }
    std::string owned(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(owned, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (owned.empty() || used != owned.size()) throw Error(Errc::FormatError, "malformed probability '" + owned + "'");
    return Entry(v);
}

}  // namespace percheck::confusion
