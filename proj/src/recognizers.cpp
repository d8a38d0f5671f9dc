#include "osca/recognizers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "osca/errors.hpp"

namespace osca {

Histories oracle_histories(const DecisionSample& sample) {
    return {sample.action_history, sample.state_history};
}

std::vector<int> corrupt_history(std::span<const int> tokens, double p, int vocab_size, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("corruption rate must lie in [0, 1]");
    if (vocab_size < 2 && p > 0.0) throw DomainError("cannot corrupt tokens of a vocabulary with fewer than 2 labels");
    std::vector<int> out(tokens.begin(), tokens.end());
    if (p == 0.0) return out;
    for (int& tok : out) {
        if (tok < 0 || tok >= vocab_size) {
            throw DomainError("token " + std::to_string(tok) + " outside vocabulary of size " + std::to_string(vocab_size));
        }
        if (uniform01(rng) < p) {
            const int r = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(vocab_size - 1)));
            tok = r >= tok ? r + 1 : r;
        }
    }
    return out;
}

std::vector<StateChange> corrupt_states(std::span<const StateChange> states, double p, Rng& rng) {
    std::vector<int> tokens;
    tokens.reserve(states.size());
    for (StateChange s : states) tokens.push_back(index_of(s));
    std::vector<StateChange> out;
    out.reserve(states.size());
    for (int t : corrupt_history(tokens, p, kNumStateClasses, rng)) out.push_back(static_cast<StateChange>(t));
    return out;
}

std::vector<ActionLabel> corrupt_actions(std::span<const ActionLabel> actions, double p, const LabelVocabulary& vocab,
                                         Rng& rng) {
    std::vector<int> tokens;
    tokens.reserve(actions.size());
    for (const ActionLabel& a : actions) {
        if (!vocab.contains(a)) throw DomainError("action token outside vocabulary");
        tokens.push_back(vocab.flatten(a));
    }
    std::vector<ActionLabel> out;
    out.reserve(actions.size());
    for (int t : corrupt_history(tokens, p, vocab.num_actions(), rng)) out.push_back(vocab.unflatten(t));
    return out;
}

StateChange compose_state_change(FrameStateLabel pre_pred, FrameStateLabel post_pred) noexcept {
    if (pre_pred.phase() == Phase::pre && post_pred.phase() == Phase::post) {
        const StateChange x = pre_pred.base();
        const StateChange y = post_pred.base();
        if (x == y) return x;
        if (inverse_of(x) == y) return StateChange::no_osc;
    }
    return post_pred.base();
}

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_rate(std::string_view text, const std::string& what) {
    text = trim(text);
    const bool percent = text.ends_with('%');
    const std::string number(trim(percent ? text.substr(0, text.size() - 1) : text));
    double v = 0;
    std::istringstream in{number};
    in >> v;
    if (number.empty() || !in || !in.eof()) {
        throw ConfigError("recognizer: cannot parse " + what + " '" + std::string(text) + "'");
    }
    if (percent) v /= 100.0;
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("recognizer: " + what + " must lie in [0, 1]");
    return v;
}

std::uint64_t parse_seed(std::string_view text) {
    text = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("recognizer: cannot parse seed '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

RecognizerSpec parse_recognizer(std::string_view text) {
    text = trim(text);
    const auto open = text.find('(');
    const std::string_view name = trim(text.substr(0, open));
    std::vector<std::string_view> args;
    if (open != std::string_view::npos) {
        if (!text.ends_with(')')) throw ConfigError("recognizer: missing ')' in '" + std::string(text) + "'");
        std::string_view inner = text.substr(open + 1, text.size() - open - 2);
        std::size_t pos = 0;
        while (pos <= inner.size() && !trim(inner).empty()) {
            const std::size_t comma = std::min(inner.find(',', pos), inner.size());
            args.push_back(inner.substr(pos, comma - pos));
            pos = comma + 1;
        }
    }
    if (name == "oracle") {
        if (!args.empty()) throw ConfigError("recognizer: oracle takes no arguments");
        return OracleRecognizer{};
    }
    if (name == "noisy") {
        if (args.size() < 2 || args.size() > 3) throw ConfigError("recognizer: noisy(action_rate, state_rate[, seed])");
        NoisyRecognizer r;
        r.noise.action_rate = parse_rate(args[0], "action_rate");
        r.noise.state_rate = parse_rate(args[1], "state_rate");
        if (args.size() == 3) r.noise.seed = parse_seed(args[2]);
        return r;
    }
    if (name == "composed") {
        if (args.size() < 2 || args.size() > 3) throw ConfigError("recognizer: composed(accuracy_pre, accuracy_post[, seed])");
        ComposedRecognizer r;
        r.accuracy_pre = parse_rate(args[0], "accuracy_pre");
        r.accuracy_post = parse_rate(args[1], "accuracy_post");
        if (args.size() == 3) r.seed = parse_seed(args[2]);
        return r;
    }
    throw ConfigError("unknown recognizer '" + std::string(name) + "' (expected oracle, noisy(...), composed(...))");
}

std::string to_string(const RecognizerSpec& spec) {
    std::ostringstream out;
    if (std::holds_alternative<OracleRecognizer>(spec)) {
        out << "oracle";
    } else if (const auto* n = std::get_if<NoisyRecognizer>(&spec)) {
        out << "noisy(" << n->noise.action_rate << ", " << n->noise.state_rate << ", " << n->noise.seed << ")";
    } else {
        const auto& c = std::get<ComposedRecognizer>(spec);
        out << "composed(" << c.accuracy_pre << ", " << c.accuracy_post << ", " << c.seed << ")";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Per-video recognition
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<StateChange, 6> kPairedClasses = {
    StateChange::activate,  StateChange::deactivate,  StateChange::deposit,
    StateChange::remove,    StateChange::construct,   StateChange::deconstruct,
};

FrameStateLabel noisy_frame(FrameStateLabel truth, double accuracy, Rng& rng) {
    if (uniform01(rng) < accuracy) return truth;
    const int r = static_cast<int>(uniform_below(rng, kNumFrameLabels - 1));
    const int t = truth.index();
    return FrameStateLabel::from_index(r >= t ? r + 1 : r);
}

enum StreamTag : std::uint64_t { kActionStream = 1, kStateStream = 2, kFrameStream = 3 };

}  // namespace

std::pair<FrameStateLabel, FrameStateLabel> true_frame_labels(const Segment& segment, Rng& rng) {
    if (segment.state_change != StateChange::no_osc) {
        return {frame_label(Phase::pre, segment.state_change), frame_label(Phase::post, segment.state_change)};
    }
    const StateChange x = kPairedClasses[uniform_below(rng, kPairedClasses.size())];
    return {frame_label(Phase::pre, x), frame_label(Phase::post, *inverse_of(x))};
}

Histories RecognizedVideo::at(int decision_index, std::optional<int> max_history) const {
    if (decision_index < 1 || decision_index > static_cast<int>(states.size())) {
        throw DomainError("decision index " + std::to_string(decision_index) + " outside the video");
    }
    const int first = max_history ? std::max(0, decision_index - *max_history) : 0;
    Histories h;
    h.actions.assign(actions.begin() + first, actions.begin() + decision_index);
    h.states.assign(states.begin() + first, states.begin() + decision_index);
    return h;
}

RecognizedVideo recognized_histories(const ActivityVideo& video, const RecognizerSpec& spec,
                                     const LabelVocabulary& vocab,
                                     std::span<const std::pair<FramePrediction, FramePrediction>> frame_predictions) {
    RecognizedVideo out;
    out.actions.reserve(video.segments.size());
    out.states.reserve(video.segments.size());
    for (const Segment& s : video.segments) {
        out.actions.push_back(s.action);
        out.states.push_back(s.state_change);
    }
    const std::uint64_t video_key = hash_string(video.video_id);

    if (const auto* noisy = std::get_if<NoisyRecognizer>(&spec)) {
        Rng action_rng = derive_rng(noisy->noise.seed ^ video_key, kActionStream);
        Rng state_rng = derive_rng(noisy->noise.seed ^ video_key, kStateStream);
        out.actions = corrupt_actions(out.actions, noisy->noise.action_rate, vocab, action_rng);
        out.states = corrupt_states(out.states, noisy->noise.state_rate, state_rng);
    } else if (const auto* composed = std::get_if<ComposedRecognizer>(&spec)) {
        if (!frame_predictions.empty() && frame_predictions.size() != video.segments.size()) {
            throw ShapeError("composed recognizer: need one frame-prediction pair per segment");
        }
        Rng rng = derive_rng(composed->seed ^ video_key, kFrameStream);
        for (std::size_t i = 0; i < video.segments.size(); ++i) {
            if (!frame_predictions.empty()) {
                out.states[i] = compose_state_change(frame_predictions[i].first.label, frame_predictions[i].second.label);
                continue;
            }
            const auto [pre, post] = true_frame_labels(video.segments[i], rng);
            out.states[i] = compose_state_change(noisy_frame(pre, composed->accuracy_pre, rng),
                                                 noisy_frame(post, composed->accuracy_post, rng));
        }
    }
    return out;
}

std::vector<Histories> recognized_sample_histories(const Corpus& corpus, std::optional<Split> split,
                                                   const RecognizerSpec& spec, const SampleOptions& options) {
    std::vector<Histories> out;
    for (const auto& v : corpus.videos) {
        if (split) {
            auto it = corpus.split_assignment.find(v.video_id);
            if (it == corpus.split_assignment.end() || it->second != *split) continue;
        }
        if (v.segments.size() < 2) continue;
        const RecognizedVideo rec = recognized_histories(v, spec, corpus.vocabulary);
        for (int n = 1; n < static_cast<int>(v.segments.size()); ++n) out.push_back(rec.at(n, options.max_history));
    }
    return out;
}

}  // namespace osca
