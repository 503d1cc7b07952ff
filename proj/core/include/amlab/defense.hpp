#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "amlab/dataset.hpp"
#include "amlab/net.hpp"
#include "amlab/train.hpp"

namespace amlab {

/// Black-box victim surface. Attacks see nothing but this.
class QueryInterface {
public:
    virtual ~QueryInterface() = default;
    virtual Tensor query(const Tensor& x, const std::string& user_id = "attacker") = 0;
    virtual std::size_t query_count() const = 0;
};

enum class DefenseKind { none, am, dp, pp };

std::string defense_kind_name(DefenseKind k);
DefenseKind defense_kind_from_name(const std::string& name);

struct DefenseConfig {
    DefenseKind kind = DefenseKind::none;
    double tau = 0.9;           // OOD threshold (am)
    double nu = 1000.0;         // sigmoid growth rate (am)
    double alpha_pp = 0.5;      // poison blend weight (pp)
    double dp_magnitude = 0.5;  // non-argmax flattening strength (dp)
    bool match_msp_distributions = false;

    void validate() const;
};

enum class Detection { ID, OOD };

/// Maximum softmax probability of a prediction vector.
double msp(const Tensor& pred);

/// ID iff msp > tau, strictly; msp == tau counts as OOD.
Detection ood_detect(const Tensor& pred, double tau);

/// alpha = 1 / (1 + exp(nu * (y_max - tau))). Saturates to exact 0/1 when
/// |nu * z| > 700 to avoid exp overflow.
double blend_coefficient(double y_max, double tau, double nu);

/// Simplified poison distribution: one-hot on the least likely class,
/// ties broken toward the lowest index.
Tensor compute_poison_distribution(const Tensor& pred);

/// Sharpen p by exponent 1/temperature and renormalize.
Tensor sharpen(const Tensor& pred, double temperature);

struct AuditRecord {
    std::string user_id;
    std::size_t query_index;
    double msp;
    double alpha;
    bool flagged;
};

/// A classifier behind one defense policy. query() is the only public
/// prediction path and always returns a valid probability vector. The
/// per-user audit counters are the only mutable state; a mutex keeps them
/// (and the layer activation caches) consistent under concurrent callers.
class DefendedModel final : public QueryInterface {
public:
    DefendedModel(Classifier defender, std::optional<Classifier> misinformer,
                  DefenseConfig config);

    Tensor query(const Tensor& x, const std::string& user_id = "attacker") override;
    std::size_t query_count() const override;

    const DefenseConfig& config() const { return config_; }
    const Classifier& defender() const { return defender_; }

    /// Fraction of the user's queries flagged OOD. Unknown user throws.
    double audit_user(const std::string& user_id) const;
    const std::vector<AuditRecord>& audit_log() const { return audit_log_; }
    /// Append-only CSV: user_id,query_index,msp,alpha,flagged
    void write_audit_csv(const std::string& path) const;

    /// Fits the temperature used to sharpen misinformation outputs so
    /// their MSP range matches the defender's on ID data. Enables the
    /// match_msp_distributions behaviour fitted here.
    void fit_msp_match(const LabeledDataset& calibration);
    double msp_match_temperature() const { return match_temperature_; }

private:
    Classifier defender_;
    std::optional<Classifier> misinformer_;
    DefenseConfig config_;
    double match_temperature_ = 1.0;

    mutable std::mutex mu_;
    std::size_t total_queries_ = 0;
    struct UserCounters {
        std::size_t total = 0;
        std::size_t flagged = 0;
    };
    std::map<std::string, UserCounters> users_;
    std::vector<AuditRecord> audit_log_;

    Tensor misinformer_output(const Tensor& x);
};

/// Trains the misinformation model f-hat with reverse cross entropy; its
/// argmax ends up systematically wrong on the task.
Classifier train_misinformer(const LabeledDataset& defender_data,
                             const std::vector<LayerSpec>& arch, const TrainConfig& cfg);

}  // namespace amlab
