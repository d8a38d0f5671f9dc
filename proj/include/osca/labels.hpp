#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace osca {

// The nine anticipation targets. The enumerator order is the canonical class
// order used by every vector, matrix and file in the toolkit.
enum class StateChange : std::uint8_t {
    activate,
    deactivate,
    deposit,
    remove,
    construct,
    deconstruct,
    deform,
    other,
    no_osc,
};

inline constexpr int kNumStateClasses = 9;
inline constexpr int kNumFrameLabels = 16;

inline constexpr std::array<StateChange, kNumStateClasses> kAllStateChanges = {
    StateChange::activate,  StateChange::deactivate,  StateChange::deposit,
    StateChange::remove,    StateChange::construct,   StateChange::deconstruct,
    StateChange::deform,    StateChange::other,       StateChange::no_osc,
};

constexpr int index_of(StateChange s) noexcept { return static_cast<int>(s); }
StateChange state_change_from_index(int index);

std::string_view to_string(StateChange s) noexcept;
StateChange parse_state_change(std::string_view text);

// Partner in the three inverse pairs (activate/deactivate, deposit/remove,
// construct/deconstruct). deform, other and no_osc have none.
constexpr std::optional<StateChange> inverse_of(StateChange s) noexcept {
    switch (s) {
        case StateChange::activate: return StateChange::deactivate;
        case StateChange::deactivate: return StateChange::activate;
        case StateChange::deposit: return StateChange::remove;
        case StateChange::remove: return StateChange::deposit;
        case StateChange::construct: return StateChange::deconstruct;
        case StateChange::deconstruct: return StateChange::construct;
        default: return std::nullopt;
    }
}

enum class Phase : std::uint8_t { pre, post };

// pre_X / post_X label of a critical frame. Construct through frame_label(),
// which rejects no_osc as a base.
class FrameStateLabel {
public:
    constexpr Phase phase() const noexcept { return phase_; }
    constexpr StateChange base() const noexcept { return base_; }

    // 0..15: pre labels first, then post labels, each in canonical base order.
    constexpr int index() const noexcept {
        return (phase_ == Phase::pre ? 0 : 8) + index_of(base_);
    }
    static FrameStateLabel from_index(int index);

    friend constexpr bool operator==(FrameStateLabel, FrameStateLabel) = default;

private:
    friend FrameStateLabel frame_label(Phase, StateChange);
    constexpr FrameStateLabel(Phase p, StateChange b) : phase_(p), base_(b) {}

    Phase phase_;
    StateChange base_;
};

FrameStateLabel frame_label(Phase phase, StateChange base);

std::string to_string(FrameStateLabel label);
FrameStateLabel parse_frame_label(std::string_view text);

// All sixteen frame labels in index order.
std::array<FrameStateLabel, kNumFrameLabels> all_frame_labels();

// pre_X and post_inverse(X) describe the same physical object state.
bool same_state(FrameStateLabel a, FrameStateLabel b) noexcept;

struct ActionLabel {
    int verb = 0;
    int noun = 0;

    friend bool operator==(const ActionLabel&, const ActionLabel&) = default;
};

// Frozen verb/noun vocabularies of a corpus. The state classes are fixed and
// not stored.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    LabelVocabulary(std::vector<std::string> verbs, std::vector<std::string> nouns);

    const std::vector<std::string>& verbs() const noexcept { return verbs_; }
    const std::vector<std::string>& nouns() const noexcept { return nouns_; }
    int num_verbs() const noexcept { return static_cast<int>(verbs_.size()); }
    int num_nouns() const noexcept { return static_cast<int>(nouns_.size()); }
    // Size of the flattened (verb, noun) action space.
    int num_actions() const noexcept { return num_verbs() * num_nouns(); }

    std::optional<int> find_verb(std::string_view verb) const;
    std::optional<int> find_noun(std::string_view noun) const;
    int verb_index(std::string_view verb) const;
    int noun_index(std::string_view noun) const;

    bool contains(const ActionLabel& a) const noexcept {
        return a.verb >= 0 && a.verb < num_verbs() && a.noun >= 0 && a.noun < num_nouns();
    }
    int flatten(const ActionLabel& a) const noexcept { return a.verb * num_nouns() + a.noun; }
    ActionLabel unflatten(int flat) const noexcept {
        return {flat / num_nouns(), flat % num_nouns()};
    }

    // FNV-1a over both ordered lists; stored in checkpoints.
    std::uint64_t fingerprint() const noexcept;

    friend bool operator==(const LabelVocabulary& a, const LabelVocabulary& b) {
        return a.verbs_ == b.verbs_ && a.nouns_ == b.nouns_;
    }

private:
    std::vector<std::string> verbs_;
    std::vector<std::string> nouns_;
    std::unordered_map<std::string, int> verb_lookup_;
    std::unordered_map<std::string, int> noun_lookup_;
};

}  // namespace osca
