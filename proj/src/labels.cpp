#include "osca/labels.hpp"

#include "osca/errors.hpp"

#include <utility>

namespace osca {

namespace {

constexpr std::array<std::string_view, kNumStateClasses> kStateNames = {
    "activate", "deactivate", "deposit", "remove", "construct",
    "deconstruct", "deform", "other", "no_osc",
};

std::unordered_map<std::string, int> build_lookup(const std::vector<std::string>& items,
                                                  const char* what) {
    std::unordered_map<std::string, int> lookup;
    lookup.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!lookup.emplace(items[i], static_cast<int>(i)).second) {
            throw ValidationError(std::string("duplicate ") + what + " '" + items[i] + "'");
        }
    }
    return lookup;
}

}  // namespace

StateChange state_change_from_index(int index) {
    if (index < 0 || index >= kNumStateClasses) {
        throw DomainError("state class index out of range: " + std::to_string(index));
    }
    return static_cast<StateChange>(index);
}

std::string_view to_string(StateChange s) noexcept {
    return kStateNames[static_cast<std::size_t>(index_of(s))];
}

StateChange parse_state_change(std::string_view text) {
    for (int i = 0; i < kNumStateClasses; ++i) {
        if (kStateNames[static_cast<std::size_t>(i)] == text) return static_cast<StateChange>(i);
    }
    throw DomainError("unknown state change '" + std::string(text) + "'");
}

FrameStateLabel frame_label(Phase phase, StateChange base) {
    if (base == StateChange::no_osc) {
        throw DomainError("no_osc cannot be the base of a frame state label");
    }
    return FrameStateLabel(phase, base);
}

FrameStateLabel FrameStateLabel::from_index(int index) {
    if (index < 0 || index >= kNumFrameLabels) {
        throw DomainError("frame label index out of range: " + std::to_string(index));
    }
    return frame_label(index < 8 ? Phase::pre : Phase::post, static_cast<StateChange>(index % 8));
}

std::string to_string(FrameStateLabel label) {
    std::string out = label.phase() == Phase::pre ? "pre_" : "post_";
    out += to_string(label.base());
    return out;
}

FrameStateLabel parse_frame_label(std::string_view text) {
    Phase phase;
    if (text.starts_with("pre_")) {
        phase = Phase::pre;
        text.remove_prefix(4);
    } else if (text.starts_with("post_")) {
        phase = Phase::post;
        text.remove_prefix(5);
    } else {
        throw DomainError("frame label must start with pre_ or post_: '" + std::string(text) + "'");
    }
    return frame_label(phase, parse_state_change(text));
}

std::array<FrameStateLabel, kNumFrameLabels> all_frame_labels() {
    return []<std::size_t... I>(std::index_sequence<I...>) {
        return std::array<FrameStateLabel, kNumFrameLabels>{
            FrameStateLabel::from_index(static_cast<int>(I))...};
    }(std::make_index_sequence<kNumFrameLabels>{});
}

bool same_state(FrameStateLabel a, FrameStateLabel b) noexcept {
    if (a == b) return true;
    if (a.phase() == b.phase()) return false;
    const auto inv = inverse_of(a.base());
    return inv.has_value() && *inv == b.base();
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> verbs, std::vector<std::string> nouns)
    : verbs_(std::move(verbs)),
      nouns_(std::move(nouns)),
      verb_lookup_(build_lookup(verbs_, "verb")),
      noun_lookup_(build_lookup(nouns_, "noun")) {}

std::optional<int> LabelVocabulary::find_verb(std::string_view verb) const {
    auto it = verb_lookup_.find(std::string(verb));
    if (it == verb_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> LabelVocabulary::find_noun(std::string_view noun) const {
    auto it = noun_lookup_.find(std::string(noun));
    if (it == noun_lookup_.end()) return std::nullopt;
    return it->second;
}

int LabelVocabulary::verb_index(std::string_view verb) const {
    if (auto i = find_verb(verb)) return *i;
    throw ValidationError("verb '" + std::string(verb) + "' not in vocabulary");
}

int LabelVocabulary::noun_index(std::string_view noun) const {
    if (auto i = find_noun(noun)) return *i;
    throw ValidationError("noun '" + std::string(noun) + "' not in vocabulary");
}

std::uint64_t LabelVocabulary::fingerprint() const noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xffU;  // separator so ("ab","c") != ("a","bc")
        h *= 1099511628211ULL;
    };
    for (const auto& v : verbs_) mix(v);
    mix("|nouns|");
    for (const auto& n : nouns_) mix(n);
    return h;
}

}  // namespace osca
