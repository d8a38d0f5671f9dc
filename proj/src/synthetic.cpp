#include <cmath>
#include <sstream>

#include "osca/corpus.hpp"
#include "osca/errors.hpp"
#include "osca/random.hpp"

namespace osca {

namespace {

// Dominant successor of each class for state_predictive_transitions: a single
// 9-cycle, so every class is the favoured successor of exactly one class.
constexpr std::array<StateChange, kNumStateClasses> kSuccessor = {
    StateChange::deposit,      // activate ->
    StateChange::other,        // deactivate ->
    StateChange::construct,    // deposit ->
    StateChange::deactivate,   // remove ->
    StateChange::deform,       // construct ->
    StateChange::no_osc,       // deconstruct ->
    StateChange::remove,       // deform ->
    StateChange::deconstruct,  // other ->
    StateChange::activate,     // no_osc ->
};

bool sums_to_one(const ClassVector& v) {
    double s = 0;
    for (double x : v) s += x;
    return std::abs(s - 1.0) <= 1e-9;
}

std::string padded(int value, int width) {
    std::string s = std::to_string(value);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

}  // namespace

std::vector<std::string> SynthConfig::validate() const {
    std::vector<std::string> v;
    if (num_videos < 1) v.emplace_back("num_videos must be >= 1");
    if (min_segments < 1) v.emplace_back("min_segments must be >= 1");
    if (max_segments < min_segments) v.emplace_back("max_segments must be >= min_segments");
    if (verbs_per_state < 1) v.emplace_back("verbs_per_state must be >= 1");
    if (nouns_per_state < 1) v.emplace_back("nouns_per_state must be >= 1");
    if (feature_dim < 0) v.emplace_back("feature_dim must be >= 0");
    if (feature_dim > 0 && feature_steps < 1) v.emplace_back("feature_steps must be >= 1");
    auto in_unit = [&v](double x, const char* name) {
        if (!(x >= 0.0 && x <= 1.0)) v.push_back(std::string(name) + " must lie in [0, 1]");
    };
    in_unit(feature_informativeness, "feature_informativeness");
    in_unit(action_informativeness, "action_informativeness");
    in_unit(occlusion_rate, "occlusion_rate");
    in_unit(small_box_rate, "small_box_rate");
    for (double p : class_priors) {
        if (!(p >= 0.0)) {
            v.emplace_back("class_priors entries must be nonnegative");
            break;
        }
    }
    if (!sums_to_one(class_priors)) v.emplace_back("class_priors must sum to 1");
    for (int r = 0; r < kNumStateClasses; ++r) {
        const auto& row = transition_matrix[static_cast<std::size_t>(r)];
        const std::string name = "transition_matrix row '" + std::string(to_string(static_cast<StateChange>(r))) + "'";
        bool negative = false;
        bool all_zero = true;
        for (double p : row) {
            negative |= !(p >= 0.0);
            all_zero &= p == 0.0;
        }
        if (negative) v.push_back(name + " has negative entries");
        if (all_zero) {
            v.push_back(name + " is all zero");
        } else if (!sums_to_one(row)) {
            v.push_back(name + " must sum to 1");
        }
    }
    return v;
}

ClassVector reference_class_priors() {
    ClassVector p{};
    double total = 0;
    for (double c : kReferenceTrainCounts) total += c;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = kReferenceTrainCounts[i] / total;
    return p;
}

ClassMatrix state_predictive_transitions(double peak, const ClassVector& background) {
    if (!(peak >= 0.0 && peak <= 1.0)) throw ConfigError("transition peak must lie in [0, 1]");
    ClassMatrix m{};
    for (int r = 0; r < kNumStateClasses; ++r) {
        auto& row = m[static_cast<std::size_t>(r)];
        for (int c = 0; c < kNumStateClasses; ++c) row[static_cast<std::size_t>(c)] = (1.0 - peak) * background[static_cast<std::size_t>(c)];
        row[static_cast<std::size_t>(index_of(kSuccessor[static_cast<std::size_t>(r)]))] += peak;
    }
    return m;
}

ClassMatrix uniform_transitions() {
    ClassMatrix m{};
    for (auto& row : m) row.fill(1.0 / kNumStateClasses);
    return m;
}

SynthConfig default_synth_config() {
    SynthConfig cfg;
    cfg.class_priors = reference_class_priors();
    cfg.transition_matrix = state_predictive_transitions(0.6, cfg.class_priors);
    return cfg;
}

Corpus generate_synthetic(const SynthConfig& cfg) {
    if (auto problems = cfg.validate(); !problems.empty()) {
        std::ostringstream msg;
        msg << "invalid synthetic config:";
        for (const auto& p : problems) msg << "\n  " << p;
        throw ConfigError(msg.str());
    }

    std::vector<std::string> verbs;
    std::vector<std::string> nouns;
    for (StateChange s : kAllStateChanges) {
        for (int k = 0; k < cfg.verbs_per_state; ++k) verbs.push_back(std::string(to_string(s)) + "_verb" + std::to_string(k));
        for (int k = 0; k < cfg.nouns_per_state; ++k) nouns.push_back(std::string(to_string(s)) + "_noun" + std::to_string(k));
    }

    Corpus corpus;
    corpus.vocabulary = LabelVocabulary(std::move(verbs), std::move(nouns));
    const int num_verbs = corpus.vocabulary.num_verbs();
    const int num_nouns = corpus.vocabulary.num_nouns();

    // Unit-norm class centres, shared by all videos.
    const int dim = cfg.feature_dim;
    std::vector<Eigen::VectorXf> centres;
    if (dim > 0) {
        Rng centre_rng = derive_rng(cfg.seed, 0);
        for (int c = 0; c < kNumStateClasses; ++c) {
            Eigen::VectorXf mu(dim);
            for (int d = 0; d < dim; ++d) mu[d] = static_cast<float>(standard_normal(centre_rng));
            mu /= mu.norm();
            centres.push_back(std::move(mu));
        }
    }
    const float signal = static_cast<float>(cfg.feature_informativeness);
    const float noise = 1.0f - signal;

    const int id_width = std::max(4, static_cast<int>(std::to_string(cfg.num_videos).size()));
    corpus.videos.resize(static_cast<std::size_t>(cfg.num_videos));
    for (int vi = 0; vi < cfg.num_videos; ++vi) {
        // Per-video stream: generation order across videos does not matter.
        Rng rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(vi) + 1);
        ActivityVideo& video = corpus.videos[static_cast<std::size_t>(vi)];
        video.video_id = "vid_" + padded(vi, id_width);
        const int num_segments =
            cfg.min_segments + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.max_segments - cfg.min_segments + 1)));

        long frame = static_cast<long>(uniform_below(rng, 30));
        int state = sample_categorical(rng, cfg.class_priors);
        for (int k = 0; k < num_segments; ++k) {
            if (k > 0) state = sample_categorical(rng, cfg.transition_matrix[static_cast<std::size_t>(state)]);
            Segment seg;
            seg.segment_id = video.video_id + "_s" + padded(k, 3);
            seg.state_change = static_cast<StateChange>(state);
            const long length = 30 + static_cast<long>(uniform_below(rng, 91));
            seg.start_frame = frame;
            seg.end_frame = frame + length;
            seg.pnr_frame = seg.start_frame + static_cast<long>(std::lround(static_cast<double>(length) * (0.3 + 0.4 * uniform01(rng))));
            frame = seg.end_frame + static_cast<long>(uniform_below(rng, 21));

            if (uniform01(rng) < cfg.action_informativeness) {
                seg.action.verb = state * cfg.verbs_per_state + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.verbs_per_state)));
                seg.action.noun = state * cfg.nouns_per_state + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.nouns_per_state)));
            } else {
                seg.action.verb = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(num_verbs)));
                seg.action.noun = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(num_nouns)));
            }

            if (seg.state_change != StateChange::no_osc) {
                auto make_frame = [&](long idx) {
                    CriticalFrame f;
                    f.frame_index = idx;
                    f.object_class = seg.action.noun;
                    const bool small = uniform01(rng) < cfg.small_box_rate;
                    const double lo = small ? 2.0 : 20.0;
                    const double span = small ? 7.0 : 180.0;
                    f.box = {std::floor(uniform01(rng) * 1000.0), std::floor(uniform01(rng) * 600.0),
                             std::floor(lo + uniform01(rng) * span), std::floor(lo + uniform01(rng) * span)};
                    f.occluded = uniform01(rng) < cfg.occlusion_rate;
                    return f;
                };
                seg.pre_frame = make_frame(seg.start_frame);
                seg.post_frame = make_frame(seg.end_frame);
            }

            if (dim > 0) {
                FeatureSequence fs;
                fs.source = FeatureSource::synthetic;
                fs.values.resize(cfg.feature_steps, dim);
                const auto& mu = centres[static_cast<std::size_t>(state)];
                for (int t = 0; t < cfg.feature_steps; ++t) {
                    for (int d = 0; d < dim; ++d) {
                        fs.values(t, d) = signal * mu[d] + noise * static_cast<float>(standard_normal(rng));
                    }
                }
                video.features.push_back(std::move(fs));
            }
            video.segments.push_back(std::move(seg));
        }
    }
    return corpus;
}

}  // namespace osca
