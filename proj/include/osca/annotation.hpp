#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osca/labels.hpp"

namespace osca {

struct BoundingBox {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double area() const noexcept { return w * h; }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct CriticalFrame {
    long frame_index = 0;
    int object_class = 0;  // noun index
    BoundingBox box;
    bool occluded = false;

    friend bool operator==(const CriticalFrame&, const CriticalFrame&) = default;
};

struct Segment {
    std::string segment_id;
    long start_frame = 0;
    long end_frame = 0;
    long pnr_frame = 0;
    ActionLabel action;
    StateChange state_change = StateChange::no_osc;
    std::optional<CriticalFrame> pre_frame;
    std::optional<CriticalFrame> post_frame;

    friend bool operator==(const Segment&, const Segment&) = default;
};

// Throws ValidationError naming the segment when frame bounds or critical
// frames are inconsistent.
void validate_segment(const Segment& segment);

enum class AnnotationStatus { annotated, rejected_pnr_order, rejected_occlusion, rejected_area };
enum class FrameCheck { accept, rejected_occlusion, rejected_area };

std::string_view to_string(AnnotationStatus status) noexcept;
std::string_view to_string(FrameCheck check) noexcept;

struct RejectedFrame {
    long frame_index = 0;
    FrameCheck reason = FrameCheck::accept;

    friend bool operator==(const RejectedFrame&, const RejectedFrame&) = default;
};

struct SegmentAnnotation {
    std::string segment_id;
    AnnotationStatus status = AnnotationStatus::annotated;
    std::optional<FrameStateLabel> pre_label;
    std::optional<FrameStateLabel> post_label;
    std::vector<RejectedFrame> rejected_frames;

    friend bool operator==(const SegmentAnnotation&, const SegmentAnnotation&) = default;
};

struct AuditReport {
    int total = 0;  // segments that entered the pipeline (no_osc excluded)
    int annotated = 0;
    int rejected_pnr_order = 0;
    int rejected_occlusion = 0;
    int rejected_area = 0;
    int skipped_no_osc = 0;

    AuditReport& operator+=(const AuditReport& other) noexcept;
    friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

inline constexpr double kDefaultAreaThreshold = 100.0;  // px², strict "below"

// False iff a previously accepted segment exists whose PNR lies strictly
// after the current one. Equal PNRs pass.
bool check_pnr_order(const Segment* prev_annotated, const Segment& current) noexcept;

// Occlusion is checked before area.
FrameCheck check_frame_eligibility(const CriticalFrame& frame,
                                   double area_threshold = kDefaultAreaThreshold) noexcept;

// Runs PNR order, occlusion, area and labeling in that order. The whole
// segment is rejected if either critical frame fails; a missing critical
// frame is a validation error. Throws DomainError for no_osc segments.
SegmentAnnotation annotate_segment(const Segment& segment, const Segment* prev_annotated,
                                   double area_threshold = kDefaultAreaThreshold);

struct ActivityVideo;

struct VideoAnnotation {
    std::vector<SegmentAnnotation> annotations;
    AuditReport audit;
};

// Sequential driver over one video. The PNR reference is the most recently
// accepted segment of this video; rejected segments never replace it.
VideoAnnotation annotate_video(const ActivityVideo& video,
                               double area_threshold = kDefaultAreaThreshold);
VideoAnnotation annotate_segments(std::span<const Segment> segments,
                                  double area_threshold = kDefaultAreaThreshold);

// One JSON object per line: each annotation, then {"audit": {...}}.
std::string annotation_to_jsonl(const VideoAnnotation& annotation, std::string_view video_id);

}  // namespace osca
