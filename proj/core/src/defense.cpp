#include "amlab/defense.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace amlab {

std::string defense_kind_name(DefenseKind k) {
    switch (k) {
        case DefenseKind::none: return "none";
        case DefenseKind::am: return "am";
        case DefenseKind::dp: return "dp";
        case DefenseKind::pp: return "pp";
    }
    return "?";
}

DefenseKind defense_kind_from_name(const std::string& name) {
    if (name == "none") return DefenseKind::none;
    if (name == "am") return DefenseKind::am;
    if (name == "dp") return DefenseKind::dp;
    if (name == "pp") return DefenseKind::pp;
    throw ConfigError("unknown defense kind: " + name);
}

void DefenseConfig::validate() const {
    if (kind == DefenseKind::am) {
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
        if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
    }
    if (kind == DefenseKind::pp && !(alpha_pp >= 0.0 && alpha_pp <= 1.0))
        throw ConfigError("alpha_pp must lie in [0,1]");
    if (kind == DefenseKind::dp && dp_magnitude < 0.0)
        throw ConfigError("dp_magnitude must be >= 0");
}

double msp(const Tensor& pred) {
    double mx = pred[0];
    for (std::size_t i = 1; i < pred.size(); ++i) mx = std::max(mx, pred[i]);
    return mx;
}

Detection ood_detect(const Tensor& pred, double tau) {
    return msp(pred) > tau ? Detection::ID : Detection::OOD;
}

double blend_coefficient(double y_max, double tau, double nu) {
    double z = nu * (y_max - tau);
    if (z > 700.0) return 0.0;
    if (z < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(z));
}

Tensor compute_poison_distribution(const Tensor& pred) {
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < pred.size(); ++i)
        if (pred[i] < pred[argmin]) argmin = i;
    Tensor eta(pred.shape());
    eta[argmin] = 1.0;
    return eta;
}

Tensor sharpen(const Tensor& pred, double temperature) {
    Tensor out(pred.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out[i] = std::pow(std::max(pred[i], 1e-300), 1.0 / temperature);
        sum += out[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sum;
    return out;
}

DefendedModel::DefendedModel(Classifier defender, std::optional<Classifier> misinformer,
                             DefenseConfig config)
    : defender_(std::move(defender)), misinformer_(std::move(misinformer)),
      config_(config) {
    config_.validate();
    if (config_.kind == DefenseKind::am && !misinformer_)
        throw ConfigError("am defense requires a misinformation model");
}

Tensor DefendedModel::misinformer_output(const Tensor& x) {
    Tensor p = misinformer_->forward(x);
    if (config_.match_msp_distributions && match_temperature_ != 1.0)
        p = sharpen(p, match_temperature_);
    return p;
}

Tensor DefendedModel::query(const Tensor& x, const std::string& user_id) {
    std::lock_guard<std::mutex> lock(mu_);
    Tensor pred = defender_.forward(x);
    double y_max = msp(pred);
    bool flagged = ood_detect(pred, config_.tau) == Detection::OOD;
    double alpha = 0.0;

    Tensor served = pred;
    switch (config_.kind) {
        case DefenseKind::none:
            break;
        case DefenseKind::am: {
            alpha = blend_coefficient(y_max, config_.tau, config_.nu);
            Tensor mis = misinformer_output(x);
            for (std::size_t i = 0; i < served.size(); ++i)
                served[i] = (1.0 - alpha) * pred[i] + alpha * mis[i];
            break;
        }
        case DefenseKind::dp: {
            // Flatten the non-argmax mass toward uniform among itself;
            // the top-1 entry is untouched so argmax is preserved.
            std::size_t top = 0;
            for (std::size_t i = 1; i < pred.size(); ++i)
                if (pred[i] > pred[top]) top = i;
            double rest = 1.0 - pred[top];
            double uniform_rest = rest / static_cast<double>(pred.size() - 1);
            double m = std::min(config_.dp_magnitude, 1.0);
            for (std::size_t i = 0; i < served.size(); ++i)
                if (i != top) served[i] = (1.0 - m) * pred[i] + m * uniform_rest;
            break;
        }
        case DefenseKind::pp: {
            Tensor eta = compute_poison_distribution(pred);
            for (std::size_t i = 0; i < served.size(); ++i)
                served[i] = (1.0 - config_.alpha_pp) * pred[i] + config_.alpha_pp * eta[i];
            break;
        }
    }

    auto& counters = users_[user_id];
    counters.total += 1;
    if (flagged) counters.flagged += 1;
    audit_log_.push_back({user_id, total_queries_, y_max, alpha, flagged});
    total_queries_ += 1;
    return served;
}

std::size_t DefendedModel::query_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return total_queries_;
}

double DefendedModel::audit_user(const std::string& user_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = users_.find(user_id);
    if (it == users_.end()) throw std::out_of_range("no queries recorded for user " + user_id);
    return static_cast<double>(it->second.flagged) / static_cast<double>(it->second.total);
}

void DefendedModel::write_audit_csv(const std::string& path) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open audit log for write: " + path);
    out << "user_id,query_index,msp,alpha,flagged\n";
    for (const auto& r : audit_log_) {
        std::ostringstream line;
        line.precision(9);
        line << r.user_id << "," << r.query_index << "," << r.msp << "," << r.alpha << ","
             << (r.flagged ? 1 : 0) << "\n";
        out << line.str();
    }
}

void DefendedModel::fit_msp_match(const LabeledDataset& calibration) {
    if (!misinformer_) throw ConfigError("msp matching needs a misinformation model");
    if (calibration.empty()) throw ConfigError("msp matching needs a calibration set");
    std::lock_guard<std::mutex> lock(mu_);

    auto median_msp = [&](auto&& eval) {
        std::vector<double> vals;
        vals.reserve(calibration.size());
        for (std::size_t i = 0; i < calibration.size(); ++i)
            vals.push_back(eval(calibration.input(i)));
        std::sort(vals.begin(), vals.end());
        return vals[vals.size() / 2];
    };

    double target = median_msp([&](const Tensor& x) { return msp(defender_.forward(x)); });
    // Sharpening monotonically raises MSP as temperature falls; bisect.
    double lo = 1e-3, hi = 1.0;
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        double got = median_msp(
            [&](const Tensor& x) { return msp(sharpen(misinformer_->forward(x), mid)); });
        if (got > target)
            lo = mid;  // too sharp, raise temperature
        else
            hi = mid;
        if (lo > hi) std::swap(lo, hi);
    }
    match_temperature_ = 0.5 * (lo + hi);
    config_.match_msp_distributions = true;
}

Classifier train_misinformer(const LabeledDataset& defender_data,
                             const std::vector<LayerSpec>& arch, const TrainConfig& cfg) {
    Classifier model(arch, defender_data.num_classes(), cfg.rng_seed);
    train(model, defender_data, nullptr, cfg, LossKind::reverse);
    return model;
}

}  // namespace amlab
