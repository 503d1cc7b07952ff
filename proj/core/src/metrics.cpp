#include "amlab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace amlab {

namespace {

std::size_t argmax_of(const Tensor& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

}  // namespace

double accuracy(const PredictFn& predict, const LabeledDataset& test) {
    if (test.empty()) throw ConfigError("accuracy: empty test set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (argmax_of(predict(test.input(i))) == test.label(i)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

double accuracy(Classifier& model, const LabeledDataset& test) {
    return accuracy([&](const Tensor& x) { return model.forward(x); }, test);
}

double accuracy(DefendedModel& defended, const LabeledDataset& test,
                const std::string& user_id) {
    return accuracy([&](const Tensor& x) { return defended.query(x, user_id); }, test);
}

double hellinger(const Tensor& p, const Tensor& q) {
    if (!p.same_shape(q)) throw DimensionError("hellinger: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        acc += d * d;
    }
    return std::sqrt(acc) / std::sqrt(2.0);
}

CdfSeries CdfSeries::from_samples(std::vector<double> samples, std::string label) {
    if (samples.empty()) throw ConfigError("cdf: empty sample set");
    std::sort(samples.begin(), samples.end());
    CdfSeries s;
    s.label = std::move(label);
    s.values = std::move(samples);
    s.cum_fractions.resize(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.cum_fractions[i] = static_cast<double>(i + 1) / static_cast<double>(s.values.size());
    return s;
}

CdfSeries msp_cdf(Classifier& model, const LabeledDataset& queries, std::string label) {
    std::vector<double> vals;
    vals.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
        vals.push_back(msp(model.forward(queries.input(i))));
    return CdfSeries::from_samples(std::move(vals), std::move(label));
}

CdfSeries hellinger_cdf(DefendedModel& defended, Classifier& reference,
                        const LabeledDataset& queries, std::string label) {
    std::vector<double> vals;
    vals.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        Tensor truth = reference.forward(queries.input(i));
        Tensor served = defended.query(queries.input(i), "eval");
        vals.push_back(hellinger(truth, served));
    }
    return CdfSeries::from_samples(std::move(vals), std::move(label));
}

double ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::size_t i = 0, j = 0;
    double worst = 0.0;
    while (i < sa.size() && j < sb.size()) {
        // Consume every sample tied at the current value on both sides
        // before comparing the empirical CDFs, so ties never inflate the
        // statistic.
        double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        double fa = static_cast<double>(i) / static_cast<double>(sa.size());
        double fb = static_cast<double>(j) / static_cast<double>(sb.size());
        worst = std::max(worst, std::abs(fa - fb));
    }
    return worst;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of empty set");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace amlab
