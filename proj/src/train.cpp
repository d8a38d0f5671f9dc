#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "osca/errors.hpp"
#include "osca/eval.hpp"
#include "osca/model.hpp"
#include "osca/random.hpp"

namespace osca {

namespace {

struct Evaluation {
    double loss = 0;
    MetricsReport metrics;
};

Evaluation evaluate_samples(const AnticipationModel& model, std::span<const DecisionSample> samples) {
    Evaluation e;
    const auto preds = predict_all(model, samples);
    std::vector<StateChange> targets;
    targets.reserve(samples.size());
    for (const auto& s : samples) targets.push_back(s.target);
    e.loss = loss(preds, targets);
    e.metrics = evaluate(preds, targets);
    return e;
}

// Bias-corrected Adam over the flat parameter vector.
class Adam {
public:
    Adam(Eigen::Index size, const TrainConfig& cfg)
        : cfg_(cfg), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        ++t_;
        m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
        v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.adam_epsilon);
    }

private:
    TrainConfig cfg_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    long t_ = 0;
};

}  // namespace

TrainResult train(std::span<const DecisionSample> train_samples, std::span<const DecisionSample> val_samples,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg, std::uint64_t vocabulary_fingerprint,
                  const EpochCallback& on_epoch) {
    if (auto problems = train_cfg.validate(); !problems.empty()) {
        std::ostringstream msg;
        msg << "invalid training config:";
        for (const auto& p : problems) msg << "\n  " << p;
        throw ConfigError(msg.str());
    }
    if (train_samples.empty()) throw ValidationError("training set is empty");

    TrainResult result{AnticipationModel(model_cfg, vocabulary_fingerprint, train_cfg.seed), {}, 0};
    AnticipationModel& model = result.model;
    Eigen::VectorXd& params = model.parameters().values();
    Eigen::VectorXd grad(params.size());
    Adam adam(params.size(), train_cfg);

    const bool have_val = !val_samples.empty();
    Eigen::VectorXd best = params;
    double best_loss = std::numeric_limits<double>::infinity();

    auto record = [&](int epoch, double train_loss) {
        EpochRecord r;
        r.epoch = epoch;
        r.train_loss = train_loss;
        if (have_val) {
            const Evaluation e = evaluate_samples(model, val_samples);
            r.val_loss = e.loss;
            r.val_top1 = e.metrics.top1_macc;
            r.val_top5 = e.metrics.top5_macc;
            r.val_f1 = e.metrics.macro_f1;
            if (r.val_loss < best_loss) {
                best_loss = r.val_loss;
                best = params;
                result.best_epoch = epoch;
            }
        }
        result.history.push_back(r);
        if (on_epoch) on_epoch(r);
    };

    record(0, evaluate_samples(model, train_samples).loss);

    std::vector<std::size_t> order(train_samples.size());
    const auto batch = static_cast<std::size_t>(train_cfg.batch_size);
    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = derive_rng(train_cfg.seed, 0xE90C0000ULL + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            grad.setZero();
            for (std::size_t i = start; i < end; ++i) {
                const DecisionSample& s = train_samples[order[i]];
                const double l = model.accumulate_gradient(s, grad);
                if (!std::isfinite(l)) {
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(start / batch) + ", sample " + s.video_id + "@" +
                                        std::to_string(s.decision_index));
                }
                epoch_loss += l;
            }
            grad /= static_cast<double>(end - start);
            if (!grad.allFinite()) {
                throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(start / batch));
            }
            adam.step(params, grad);
        }
        record(epoch, epoch_loss / static_cast<double>(order.size()));
    }
    if (have_val) {
        params = best;
    } else {
        result.best_epoch = train_cfg.epochs;
    }
    return result;
}

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,val_top1,val_top5,val_f1\n";
    out << std::setprecision(9);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_top1 << ',' << r.val_top5 << ','
            << r.val_f1 << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace osca
