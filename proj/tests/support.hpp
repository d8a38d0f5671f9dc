#pragma once

// Fixtures and brute-force reference implementations shared by the unit tests
// and the acceptance binary. The references work from strings and plain loops.

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "osca/annotation.hpp"
#include "osca/corpus.hpp"
#include "osca/labels.hpp"
#include "osca/model.hpp"
#include "osca/random.hpp"

namespace osca::testing {

inline const std::vector<std::string> kClassNames = {"activate",    "deactivate", "deposit", "remove", "construct",
                                                     "deconstruct", "deform",     "other",   "no_osc"};

// Hand-written pair table.
inline const std::set<std::pair<std::string, std::string>> kInversePairs = {
    {"activate", "deactivate"}, {"deactivate", "activate"},   {"deposit", "remove"},
    {"remove", "deposit"},      {"construct", "deconstruct"}, {"deconstruct", "construct"},
};

inline std::string oracle_compose(const std::string& first, const std::string& second) {
    const bool first_pre = first.rfind("pre_", 0) == 0;
    const bool second_post = second.rfind("post_", 0) == 0;
    const std::string second_base = second.substr(second_post ? 5 : 4);
    if (first_pre && second_post) {
        const std::string first_base = first.substr(4);
        if (first_base == second_base) return first_base;
        if (kInversePairs.count({first_base, second_base})) return "no_osc";
    }
    return second_base;
}

// The 16 frame label strings, pre_* then post_*.
inline std::vector<std::string> frame_label_names() {
    std::vector<std::string> out;
    for (const char* phase : {"pre_", "post_"}) {
        for (int c = 0; c < 8; ++c) out.push_back(phase + kClassNames[static_cast<std::size_t>(c)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline int oracle_argmax(const PredictionDistribution& p) {
    int best = 0;
    for (int c = 1; c < kNumStateClasses; ++c) {
        if (p.probs[static_cast<std::size_t>(c)] > p.probs[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

// Position of class t when classes are ordered by descending probability,
// ties by ascending index.
inline int oracle_rank(const PredictionDistribution& p, int t) {
    int ahead = 0;
    const double pt = p.probs[static_cast<std::size_t>(t)];
    for (int c = 0; c < kNumStateClasses; ++c) {
        const double pc = p.probs[static_cast<std::size_t>(c)];
        if (pc > pt || (pc == pt && c < t)) ++ahead;
    }
    return ahead;
}

inline double oracle_topk(const std::vector<PredictionDistribution>& preds, const std::vector<StateChange>& targets,
                          int k) {
    double sum = 0;
    int present = 0;
    for (int c = 0; c < kNumStateClasses; ++c) {
        long n = 0, hit = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (index_of(targets[i]) != c) continue;
            ++n;
            if (oracle_rank(preds[i], c) < k) ++hit;
        }
        if (n == 0) continue;
        sum += static_cast<double>(hit) / static_cast<double>(n);
        ++present;
    }
    return 100.0 * sum / present;
}

inline double oracle_macro_f1(const std::vector<PredictionDistribution>& preds,
                              const std::vector<StateChange>& targets) {
    double sum = 0;
    int used = 0;
    for (int c = 0; c < kNumStateClasses; ++c) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const bool is_t = index_of(targets[i]) == c;
            const bool is_p = oracle_argmax(preds[i]) == c;
            tp += is_t && is_p;
            fp += !is_t && is_p;
            fn += is_t && !is_p;
        }
        if (tp + fp + fn == 0) continue;
        ++used;
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return 100.0 * sum / used;
}

inline std::vector<std::vector<long>> oracle_confusion(const std::vector<PredictionDistribution>& preds,
                                                       const std::vector<StateChange>& targets) {
    std::vector<std::vector<long>> m(kNumStateClasses, std::vector<long>(kNumStateClasses, 0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        m[static_cast<std::size_t>(index_of(targets[i]))][static_cast<std::size_t>(oracle_argmax(preds[i]))] += 1;
    }
    return m;
}

// Random instance with frequent ties: probabilities are drawn from a few
// levels and normalized.
struct MetricInstance {
    std::vector<PredictionDistribution> preds;
    std::vector<StateChange> targets;
};

inline MetricInstance random_metric_instance(Rng& rng) {
    MetricInstance inst;
    const int n = 1 + static_cast<int>(uniform_below(rng, 20));
    const int classes_used = 1 + static_cast<int>(uniform_below(rng, kNumStateClasses));
    for (int i = 0; i < n; ++i) {
        PredictionDistribution p;
        double total = 0;
        for (auto& v : p.probs) {
            v = static_cast<double>(uniform_below(rng, 4));
            total += v;
        }
        if (total == 0) {
            p.probs.fill(1.0 / kNumStateClasses);
        } else {
            for (auto& v : p.probs) v /= total;
        }
        inst.preds.push_back(p);
        inst.targets.push_back(static_cast<StateChange>(uniform_below(rng, static_cast<std::uint64_t>(classes_used))));
    }
    return inst;
}

// ---------------------------------------------------------------------------
// Annotation fixture
// ---------------------------------------------------------------------------

inline CriticalFrame frame(long idx, double w, double h, bool occluded = false) {
    return CriticalFrame{idx, 0, BoundingBox{10, 10, w, h}, occluded};
}

inline Segment segment(std::string id, long start, long end, long pnr, StateChange s) {
    Segment seg;
    seg.segment_id = std::move(id);
    seg.start_frame = start;
    seg.end_frame = end;
    seg.pnr_frame = pnr;
    seg.state_change = s;
    if (s != StateChange::no_osc) {
        seg.pre_frame = frame(start, 40, 40);
        seg.post_frame = frame(end, 40, 40);
    }
    return seg;
}

// Eight segments, one video:
//   s1 clean                                   annotated (reference pnr 80)
//   s2 pnr 70 < 80                             rejected_pnr_order
//   s3 pnr 80 == 80                            annotated
//   s4 pre box 9x11 (area 99)                  rejected_area
//   s5 pnr 285 < s4's 290, boxes of area 100   annotated (s4 never became the reference)
//   s6 no_osc                                  skipped
//   s7 post frame occluded                     rejected_occlusion
//   s8 pre occluded and tiny, post tiny        rejected_occlusion
inline std::vector<Segment> eight_segment_fixture() {
    std::vector<Segment> s;
    s.push_back(segment("s1", 0, 100, 80, StateChange::activate));
    s.push_back(segment("s2", 60, 140, 70, StateChange::deposit));
    s.push_back(segment("s3", 80, 200, 80, StateChange::remove));
    s.push_back(segment("s4", 200, 300, 290, StateChange::construct));
    s.back().pre_frame = frame(200, 9, 11);
    s.push_back(segment("s5", 280, 400, 285, StateChange::deconstruct));
    s.back().pre_frame = frame(280, 10, 10);
    s.back().post_frame = frame(400, 20, 5);
    s.push_back(segment("s6", 400, 500, 450, StateChange::no_osc));
    s.push_back(segment("s7", 500, 600, 550, StateChange::deform));
    s.back().post_frame = frame(600, 50, 50, true);
    s.push_back(segment("s8", 600, 700, 650, StateChange::other));
    s.back().pre_frame = frame(600, 5, 5, true);
    s.back().post_frame = frame(700, 5, 5);
    return s;
}

inline const std::vector<AnnotationStatus> kEightSegmentExpected = {
    AnnotationStatus::annotated,          AnnotationStatus::rejected_pnr_order, AnnotationStatus::annotated,
    AnnotationStatus::rejected_area,      AnnotationStatus::annotated,          AnnotationStatus::rejected_occlusion,
    AnnotationStatus::rejected_occlusion,
};

// ---------------------------------------------------------------------------
// Model helpers
// ---------------------------------------------------------------------------

inline ModelConfig small_model_config(int feature_dim, int verbs, int nouns, StreamSet streams, int width = 8) {
    ModelConfig cfg;
    cfg.streams = streams;
    cfg.feature_dim = feature_dim;
    cfg.num_verbs = verbs;
    cfg.num_nouns = nouns;
    cfg.visual = {width, {width}, 4};
    cfg.action = {width, {width}, 4};
    cfg.state = {width, {width}, 4};
    cfg.fusion_sizes = {2 * width, kNumStateClasses};
    return cfg;
}

// Random decision sample with T x D window and history length n.
inline DecisionSample random_sample(Rng& rng, int steps, int dim, int verbs, int nouns, int n) {
    DecisionSample s;
    s.video_id = "r";
    s.decision_index = n;
    s.visual_window.resize(steps, dim);
    for (Eigen::Index r = 0; r < s.visual_window.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.visual_window.cols(); ++c) {
            s.visual_window(r, c) = static_cast<float>(standard_normal(rng));
        }
    }
    for (int i = 0; i < n; ++i) {
        s.action_history.push_back({static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(verbs))),
                                    static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(nouns)))});
        s.state_history.push_back(static_cast<StateChange>(uniform_below(rng, kNumStateClasses)));
    }
    s.target = static_cast<StateChange>(uniform_below(rng, kNumStateClasses));
    return s;
}

inline double sample_loss(const AnticipationModel& m, const DecisionSample& s) {
    const PredictionDistribution p = m.predict(s);
    const StateChange t = s.target;
    return loss(std::span<const PredictionDistribution>(&p, 1), std::span<const StateChange>(&t, 1));
}

// ||a - n|| / (||a|| + ||n||) between the analytic gradient and central
// differences over the given parameter slots.
inline double gradient_check(AnticipationModel& model, const DecisionSample& s, const std::vector<int>& slots,
                             double h = 1e-5) {
    Eigen::VectorXd& values = model.parameters().values();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(values.size());
    model.accumulate_gradient(s, grad);
    double diff = 0, na = 0, nn = 0;
    for (int id : slots) {
        const TensorSlot& slot = model.parameters().slot(id);
        for (Eigen::Index i = slot.offset; i < slot.offset + slot.size(); ++i) {
            const double keep = values[i];
            values[i] = keep + h;
            const double up = sample_loss(model, s);
            values[i] = keep - h;
            const double down = sample_loss(model, s);
            values[i] = keep;
            const double numeric = (up - down) / (2 * h);
            diff += (grad[i] - numeric) * (grad[i] - numeric);
            na += grad[i] * grad[i];
            nn += numeric * numeric;
        }
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    return denom == 0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace osca::testing
