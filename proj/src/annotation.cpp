#include "osca/annotation.hpp"

#include <json.hpp>

#include "osca/corpus.hpp"
#include "osca/errors.hpp"

namespace osca {

std::string_view to_string(AnnotationStatus status) noexcept {
    switch (status) {
        case AnnotationStatus::annotated: return "annotated";
        case AnnotationStatus::rejected_pnr_order: return "rejected_pnr_order";
        case AnnotationStatus::rejected_occlusion: return "rejected_occlusion";
        case AnnotationStatus::rejected_area: return "rejected_area";
    }
    return "?";
}

std::string_view to_string(FrameCheck check) noexcept {
    switch (check) {
        case FrameCheck::accept: return "accept";
        case FrameCheck::rejected_occlusion: return "rejected_occlusion";
        case FrameCheck::rejected_area: return "rejected_area";
    }
    return "?";
}

void validate_segment(const Segment& s) {
    auto fail = [&s](const std::string& msg) {
        throw ValidationError("segment '" + s.segment_id + "': " + msg);
    };
    if (s.start_frame > s.end_frame) fail("start frame after end frame");
    if (s.state_change != StateChange::no_osc &&
        (s.pnr_frame < s.start_frame || s.pnr_frame > s.end_frame)) {
        fail("PNR frame outside [start, end]");
    }
    for (const auto* frame : {&s.pre_frame, &s.post_frame}) {
        if (!frame->has_value()) continue;
        const CriticalFrame& f = **frame;
        if (f.frame_index < s.start_frame || f.frame_index > s.end_frame) {
            fail("critical frame " + std::to_string(f.frame_index) + " outside [start, end]");
        }
        if (f.box.w < 0 || f.box.h < 0) fail("negative bounding box extent");
    }
}

AuditReport& AuditReport::operator+=(const AuditReport& o) noexcept {
    total += o.total;
    annotated += o.annotated;
    rejected_pnr_order += o.rejected_pnr_order;
    rejected_occlusion += o.rejected_occlusion;
    rejected_area += o.rejected_area;
    skipped_no_osc += o.skipped_no_osc;
    return *this;
}

bool check_pnr_order(const Segment* prev_annotated, const Segment& current) noexcept {
    return prev_annotated == nullptr || prev_annotated->pnr_frame <= current.pnr_frame;
}

FrameCheck check_frame_eligibility(const CriticalFrame& frame, double area_threshold) noexcept {
    if (frame.occluded) return FrameCheck::rejected_occlusion;
    if (frame.box.area() < area_threshold) return FrameCheck::rejected_area;
    return FrameCheck::accept;
}

SegmentAnnotation annotate_segment(const Segment& segment, const Segment* prev_annotated,
                                   double area_threshold) {
    if (segment.state_change == StateChange::no_osc) {
        throw DomainError("segment '" + segment.segment_id +
                          "' has no state change and is not annotated");
    }
    if (!segment.pre_frame || !segment.post_frame) {
        throw ValidationError("segment '" + segment.segment_id +
                              "' lacks a pre or post critical frame");
    }

    SegmentAnnotation out;
    out.segment_id = segment.segment_id;

    if (!check_pnr_order(prev_annotated, segment)) {
        out.status = AnnotationStatus::rejected_pnr_order;
        return out;
    }

    const FrameCheck pre = check_frame_eligibility(*segment.pre_frame, area_threshold);
    const FrameCheck post = check_frame_eligibility(*segment.post_frame, area_threshold);
    if (pre != FrameCheck::accept) out.rejected_frames.push_back({segment.pre_frame->frame_index, pre});
    if (post != FrameCheck::accept) out.rejected_frames.push_back({segment.post_frame->frame_index, post});

    // Occlusion wins over area across both frames, mirroring the per-frame order.
    if (pre == FrameCheck::rejected_occlusion || post == FrameCheck::rejected_occlusion) {
        out.status = AnnotationStatus::rejected_occlusion;
        return out;
    }
    if (pre == FrameCheck::rejected_area || post == FrameCheck::rejected_area) {
        out.status = AnnotationStatus::rejected_area;
        return out;
    }

    out.status = AnnotationStatus::annotated;
    out.pre_label = frame_label(Phase::pre, segment.state_change);
    out.post_label = frame_label(Phase::post, segment.state_change);
    return out;
}

VideoAnnotation annotate_segments(std::span<const Segment> segments, double area_threshold) {
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].start_frame < segments[i - 1].start_frame) {
            throw ValidationError("segment '" + segments[i].segment_id +
                                  "' starts before its predecessor; segments must be ordered by start frame");
        }
    }

    VideoAnnotation result;
    const Segment* prev = nullptr;
    for (const Segment& seg : segments) {
        if (seg.state_change == StateChange::no_osc) {
            ++result.audit.skipped_no_osc;
            continue;
        }
        SegmentAnnotation ann = annotate_segment(seg, prev, area_threshold);
        ++result.audit.total;
        switch (ann.status) {
            case AnnotationStatus::annotated:
                ++result.audit.annotated;
                prev = &seg;
                break;
            case AnnotationStatus::rejected_pnr_order: ++result.audit.rejected_pnr_order; break;
            case AnnotationStatus::rejected_occlusion: ++result.audit.rejected_occlusion; break;
            case AnnotationStatus::rejected_area: ++result.audit.rejected_area; break;
        }
        result.annotations.push_back(std::move(ann));
    }
    return result;
}

VideoAnnotation annotate_video(const ActivityVideo& video, double area_threshold) {
    return annotate_segments(video.segments, area_threshold);
}

std::string annotation_to_jsonl(const VideoAnnotation& annotation, std::string_view video_id) {
    using ojson = nlohmann::ordered_json;
    std::string out;
    for (const auto& a : annotation.annotations) {
        ojson j;
        j["video_id"] = video_id;
        j["segment_id"] = a.segment_id;
        j["status"] = to_string(a.status);
        j["pre_label"] = a.pre_label ? ojson(to_string(*a.pre_label)) : ojson(nullptr);
        j["post_label"] = a.post_label ? ojson(to_string(*a.post_label)) : ojson(nullptr);
        ojson rejected = ojson::array();
        for (const auto& r : a.rejected_frames) {
            rejected.push_back({{"frame", r.frame_index}, {"reason", to_string(r.reason)}});
        }
        j["rejected_frames"] = std::move(rejected);
        out += j.dump() + "\n";
    }
    const AuditReport& r = annotation.audit;
    ojson audit = {{"total", r.total},
                   {"annotated", r.annotated},
                   {"rejected_pnr_order", r.rejected_pnr_order},
                   {"rejected_occlusion", r.rejected_occlusion},
                   {"rejected_area", r.rejected_area},
                   {"skipped_no_osc", r.skipped_no_osc}};
    ojson j;
    j["video_id"] = video_id;
    j["audit"] = std::move(audit);
    out += j.dump() + "\n";
    return out;
}

}  // namespace osca
