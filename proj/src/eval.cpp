#include "osca/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "osca/errors.hpp"
#include "osca/recognizers.hpp"

namespace osca {

namespace {

void check_inputs(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets,
                  const char* what) {
    if (preds.size() != targets.size()) {
        throw ShapeError(std::string(what) + ": " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(targets.size()) + " targets");
    }
    if (preds.empty()) throw ValidationError(std::string(what) + ": empty input");
}

std::size_t idx(StateChange s) { return static_cast<std::size_t>(index_of(s)); }

}  // namespace

ConfusionMatrix confusion(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets) {
    if (preds.size() != targets.size()) throw ShapeError("confusion: prediction/target count mismatch");
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < preds.size(); ++i) ++m[idx(targets[i])][idx(preds[i].argmax())];
    return m;
}

double topk_mean_accuracy(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets, int k) {
    check_inputs(preds, targets, "top-k accuracy");
    if (k < 1 || k > kNumStateClasses) throw DomainError("k must lie in [1, 9]");
    std::array<long, kNumStateClasses> hits{};
    std::array<long, kNumStateClasses> support{};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int t = index_of(targets[i]);
        const auto rank = preds[i].ranking();
        ++support[static_cast<std::size_t>(t)];
        if (std::find(rank.begin(), rank.begin() + k, t) != rank.begin() + k) ++hits[static_cast<std::size_t>(t)];
    }
    double sum = 0;
    int classes = 0;
    for (std::size_t c = 0; c < support.size(); ++c) {
        if (support[c] == 0) continue;
        sum += static_cast<double>(hits[c]) / static_cast<double>(support[c]);
        ++classes;
    }
    return 100.0 * sum / classes;
}

double macro_f1(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets) {
    check_inputs(preds, targets, "macro F1");
    const ConfusionMatrix m = confusion(preds, targets);
    double sum = 0;
    int classes = 0;
    for (std::size_t c = 0; c < kNumStateClasses; ++c) {
        long tp = m[c][c];
        long support = 0;
        long predicted = 0;
        for (std::size_t j = 0; j < kNumStateClasses; ++j) {
            support += m[c][j];
            predicted += m[j][c];
        }
        if (support == 0 && predicted == 0) continue;
        ++classes;
        const double p = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        const double r = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
        sum += (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return 100.0 * sum / classes;
}

double micro_accuracy(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets) {
    check_inputs(preds, targets, "accuracy");
    long hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i].argmax() == targets[i];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

MetricsReport evaluate(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets) {
    MetricsReport r;
    r.top1_macc = topk_mean_accuracy(preds, targets, 1);
    r.top5_macc = topk_mean_accuracy(preds, targets, 5);
    r.macro_f1 = macro_f1(preds, targets);
    r.micro_top1 = micro_accuracy(preds, targets);
    r.n_samples = static_cast<long>(preds.size());
    const ConfusionMatrix m = confusion(preds, targets);
    for (std::size_t c = 0; c < kNumStateClasses; ++c) {
        ClassMetrics& cm = r.per_class[c];
        for (std::size_t j = 0; j < kNumStateClasses; ++j) {
            cm.support += m[c][j];
            cm.predicted += m[j][c];
        }
        cm.present = cm.support > 0;
        const double tp = static_cast<double>(m[c][c]);
        const double p = cm.predicted ? tp / static_cast<double>(cm.predicted) : 0.0;
        const double rc = cm.support ? tp / static_cast<double>(cm.support) : 0.0;
        cm.precision = 100.0 * p;
        cm.recall = 100.0 * rc;
        cm.f1 = (p + rc) > 0 ? 100.0 * 2.0 * p * rc / (p + rc) : 0.0;
        if (!cm.present) r.absent_classes.push_back(static_cast<StateChange>(c));
    }
    return r;
}

std::string metrics_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["n_samples"] = r.n_samples;
    j["top1_macc"] = r.top1_macc;
    j["top5_macc"] = r.top5_macc;
    j["macro_f1"] = r.macro_f1;
    j["micro_top1_accuracy"] = r.micro_top1;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kNumStateClasses; ++c) {
        const ClassMetrics& cm = r.per_class[c];
        per[std::string(to_string(static_cast<StateChange>(c)))] = {
            {"support", cm.support}, {"predicted", cm.predicted}, {"recall", cm.recall},
            {"precision", cm.precision}, {"f1", cm.f1}, {"present", cm.present}};
    }
    j["per_class"] = std::move(per);
    nlohmann::ordered_json absent = nlohmann::ordered_json::array();
    for (StateChange s : r.absent_classes) absent.push_back(to_string(s));
    j["absent_classes"] = std::move(absent);
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

long TransitionMatrix::total() const noexcept {
    long t = 0;
    for (const auto& row : counts) {
        for (long c : row) t += c;
    }
    return t;
}

TransitionMatrix transition_matrix(const Corpus& corpus, std::optional<Split> split) {
    TransitionMatrix tm;
    for (const auto& v : corpus.videos) {
        if (split) {
            auto it = corpus.split_assignment.find(v.video_id);
            if (it == corpus.split_assignment.end() || it->second != *split) continue;
        }
        for (std::size_t i = 1; i < v.segments.size(); ++i) {
            ++tm.counts[idx(v.segments[i - 1].state_change)][idx(v.segments[i].state_change)];
        }
    }
    for (std::size_t r = 0; r < kNumStateClasses; ++r) {
        long row = 0;
        for (long c : tm.counts[r]) row += c;
        tm.empty_row[r] = row == 0;
        for (std::size_t c = 0; c < kNumStateClasses; ++c) {
            tm.normalized[r][c] = row ? static_cast<double>(tm.counts[r][c]) / static_cast<double>(row) : 0.0;
        }
    }
    return tm;
}

StateHistograms state_histograms(const Corpus& corpus) {
    StateHistograms h;
    std::vector<LabelStateRow> verbs(static_cast<std::size_t>(corpus.vocabulary.num_verbs()));
    std::vector<LabelStateRow> nouns(static_cast<std::size_t>(corpus.vocabulary.num_nouns()));
    for (std::size_t i = 0; i < verbs.size(); ++i) verbs[i].label = static_cast<int>(i);
    for (std::size_t i = 0; i < nouns.size(); ++i) nouns[i].label = static_cast<int>(i);
    for (const auto& v : corpus.videos) {
        for (const auto& s : v.segments) {
            const std::size_t c = idx(s.state_change);
            ++verbs[static_cast<std::size_t>(s.action.verb)].counts[c];
            ++nouns[static_cast<std::size_t>(s.action.noun)].counts[c];
            ++h.segments_per_state[c];
        }
    }
    auto finish = [](std::vector<LabelStateRow>& rows, std::array<long, kNumStateClasses + 1>& per) {
        for (auto& r : rows) {
            for (long c : r.counts) {
                r.total += c;
                r.distinct_states += c > 0;
            }
        }
        std::erase_if(rows, [](const LabelStateRow& r) { return r.total == 0; });
        std::stable_sort(rows.begin(), rows.end(), [](const LabelStateRow& a, const LabelStateRow& b) {
            return a.total > b.total;
        });
        for (const auto& r : rows) ++per[static_cast<std::size_t>(r.distinct_states)];
    };
    finish(verbs, h.states_per_verb);
    finish(nouns, h.states_per_noun);
    h.verb_by_state = std::move(verbs);
    h.noun_by_state = std::move(nouns);
    return h;
}

// ---------------------------------------------------------------------------
// Noise sweep
// ---------------------------------------------------------------------------

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    // Sample standard deviation; zero for a single seed.
    const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    return {mean, sd};
}

}  // namespace

std::vector<SweepRow> noise_sweep(const Corpus& corpus, std::optional<Split> split, const AnticipationModel& model,
                                  std::span<const NoiseLevel> levels, std::span<const std::uint64_t> seeds,
                                  const SampleOptions& options) {
    if (levels.empty()) throw ConfigError("noise sweep needs at least one level");
    if (seeds.empty()) throw ConfigError("noise sweep needs at least one seed");
    const auto samples = build_decision_samples(corpus, split, options);
    if (samples.empty()) throw ValidationError("noise sweep: no decision samples");
    std::vector<StateChange> targets;
    targets.reserve(samples.size());
    for (const auto& s : samples) targets.push_back(s.target);

    std::vector<SweepRow> rows;
    for (const NoiseLevel& level : levels) {
        SweepRow row;
        row.level = level;
        std::vector<double> top1, top5, f1;
        for (std::uint64_t seed : seeds) {
            const RecognizerSpec spec = NoisyRecognizer{{level.action_rate, level.state_rate, seed}};
            const auto histories = recognized_sample_histories(corpus, split, spec, options);
            const auto preds = predict_all(model, samples, histories);
            row.per_seed.push_back(evaluate(preds, targets));
            top1.push_back(row.per_seed.back().top1_macc);
            top5.push_back(row.per_seed.back().top5_macc);
            f1.push_back(row.per_seed.back().macro_f1);
        }
        std::tie(row.top1_mean, row.top1_std) = mean_std(top1);
        std::tie(row.top5_mean, row.top5_std) = mean_std(top5);
        std::tie(row.f1_mean, row.f1_std) = mean_std(f1);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "action_noise,state_noise,top1,top5,f1,stddev\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        out << r.level.action_rate << ',' << r.level.state_rate << ',' << r.top1_mean << ',' << r.top5_mean << ','
            << r.f1_mean << ',' << r.top1_std << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace osca
