#pragma once

#include <functional>
#include <string>
#include <vector>

#include "amlab/dataset.hpp"
#include "amlab/defense.hpp"
#include "amlab/net.hpp"

namespace amlab {

using PredictFn = std::function<Tensor(const Tensor&)>;

/// Fraction of argmax-correct predictions on the test set.
double accuracy(const PredictFn& predict, const LabeledDataset& test);
double accuracy(Classifier& model, const LabeledDataset& test);
/// Measured through the full defended query path.
double accuracy(DefendedModel& defended, const LabeledDataset& test,
                const std::string& user_id = "benign");

/// Hellinger distance (1/sqrt(2)) * ||sqrt(p) - sqrt(q)||_2, in [0,1].
double hellinger(const Tensor& p, const Tensor& q);

struct CdfSeries {
    std::vector<double> values;         // sorted ascending
    std::vector<double> cum_fractions;  // non-decreasing, ends at 1
    std::string label;

    static CdfSeries from_samples(std::vector<double> samples, std::string label);
};

/// Empirical CDF of the raw defender MSP over the query set — the
/// detector-side view, independent of any defense applied on top.
CdfSeries msp_cdf(Classifier& model, const LabeledDataset& queries, std::string label);

/// Per-query Hellinger distance between the reference model's prediction
/// and the defended response, assembled into a CDF.
CdfSeries hellinger_cdf(DefendedModel& defended, Classifier& reference,
                        const LabeledDataset& queries, std::string label);

/// Kolmogorov-Smirnov statistic between two empirical sample sets.
double ks_statistic(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> values);

}  // namespace amlab
