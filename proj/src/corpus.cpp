#include "osca/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "osca/errors.hpp"
#include "osca/random.hpp"

namespace osca {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "val") return Split::val;
    if (text == "test") return Split::test;
    throw ValidationError("unknown split '" + std::string(text) + "'");
}

Eigen::Index Corpus::feature_dim() const noexcept {
    for (const auto& v : videos) {
        if (!v.features.empty()) return v.features.front().dim();
    }
    return 0;
}

std::vector<const ActivityVideo*> Corpus::videos_in(Split s) const {
    std::vector<const ActivityVideo*> out;
    for (const auto& v : videos) {
        auto it = split_assignment.find(v.video_id);
        if (it != split_assignment.end() && it->second == s) out.push_back(&v);
    }
    return out;
}

std::size_t Corpus::num_segments() const noexcept {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.segments.size();
    return n;
}

void validate_corpus(const Corpus& corpus) {
    std::vector<std::string> problems;
    std::set<std::string> ids;
    const Eigen::Index dim = corpus.feature_dim();
    for (const auto& v : corpus.videos) {
        if (!ids.insert(v.video_id).second) problems.push_back("duplicate video id '" + v.video_id + "'");
        if (!v.features.empty() && v.features.size() != v.segments.size()) {
            problems.push_back("video '" + v.video_id + "': " + std::to_string(v.features.size()) +
                               " feature sequences for " + std::to_string(v.segments.size()) + " segments");
        }
        for (std::size_t i = 0; i < v.segments.size(); ++i) {
            const Segment& s = v.segments[i];
            try {
                validate_segment(s);
            } catch (const ValidationError& e) {
                problems.emplace_back(e.what());
            }
            if (i > 0 && s.start_frame < v.segments[i - 1].start_frame) {
                problems.push_back("segment '" + s.segment_id + "' not ordered by start frame");
            }
            if (!corpus.vocabulary.contains(s.action)) {
                problems.push_back("segment '" + s.segment_id + "': action index outside vocabulary");
            }
        }
        for (const auto& f : v.features) {
            if (f.steps() < 1) problems.push_back("video '" + v.video_id + "': feature sequence with T = 0");
            if (f.dim() != dim) problems.push_back("video '" + v.video_id + "': feature dimension mismatch");
            if (!f.values.allFinite()) problems.push_back("video '" + v.video_id + "': non-finite feature");
        }
    }
    for (const auto& [id, s] : corpus.split_assignment) {
        if (!ids.contains(id)) problems.push_back("split assignment for unknown video '" + id + "'");
    }
    if (!corpus.split_assignment.empty()) {
        for (const auto& id : ids) {
            if (!corpus.split_assignment.contains(id)) problems.push_back("video '" + id + "' has no split");
        }
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << problems.size() << " corpus problem(s):";
        for (const auto& p : problems) msg << "\n  " << p;
        throw ValidationError(msg.str());
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace {

class RecordError {
public:
    RecordError(std::size_t line, const std::filesystem::path& path) : line_(line), path_(path) {}

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ValidationError(path_.string() + ":" + std::to_string(line_) + ": field '" + field +
                              "': " + msg);
    }

    const json& require(const json& obj, const std::string& field) const {
        auto it = obj.find(field);
        if (it == obj.end()) fail(field, "missing");
        return *it;
    }

    template <typename T>
    T get(const json& obj, const std::string& field) const {
        const json& v = require(obj, field);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            fail(field, "wrong type");
        }
    }

private:
    std::size_t line_;
    std::filesystem::path path_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p.replace_extension(".features.bin");
    return p;
}

int resolve_label(const json& v, const RecordError& err, const std::string& field, int size,
                  const std::function<std::optional<int>(std::string_view)>& find) {
    if (v.is_string()) {
        if (auto i = find(v.get<std::string>())) return *i;
        err.fail(field, "'" + v.get<std::string>() + "' not in vocabulary");
    }
    if (v.is_number_integer()) {
        const int i = v.get<int>();
        if (i < 0 || i >= size) err.fail(field, "index " + std::to_string(i) + " outside vocabulary");
        return i;
    }
    err.fail(field, "expected string or integer");
}

CriticalFrame parse_frame(const json& obj, const RecordError& err, const std::string& field,
                          int noun) {
    if (!obj.is_object()) err.fail(field, "expected object");
    CriticalFrame f;
    f.frame_index = err.get<long>(obj, "idx");
    const json& box = err.require(obj, "box");
    if (!box.is_array() || box.size() != 4) err.fail(field + ".box", "expected [x, y, w, h]");
    try {
        f.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    } catch (const json::exception&) {
        err.fail(field + ".box", "non-numeric entry");
    }
    if (f.box.w < 0 || f.box.h < 0) err.fail(field + ".box", "negative width or height");
    f.occluded = obj.contains("occluded") ? err.get<bool>(obj, "occluded") : false;
    f.object_class = obj.contains("object") ? err.get<int>(obj, "object") : noun;
    return f;
}

ojson frame_to_json(const CriticalFrame& f, int noun) {
    ojson o;
    o["idx"] = f.frame_index;
    o["box"] = {f.box.x, f.box.y, f.box.w, f.box.h};
    o["occluded"] = f.occluded;
    if (f.object_class != noun) o["object"] = f.object_class;
    return o;
}

void write_floats_le(std::ostream& os, const float* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, data + i, 4);
            bits = __builtin_bswap32(bits);
            os.write(reinterpret_cast<const char*>(&bits), 4);
        }
    }
}

void read_floats_le(const std::vector<char>& blob, std::size_t offset, float* out, std::size_t count) {
    std::memcpy(out, blob.data() + offset, count * sizeof(float));
    if constexpr (std::endian::native != std::endian::little) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, out + i, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(out + i, &bits, 4);
        }
    }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file " + path.string());

    Corpus corpus;
    bool have_vocab = false;
    std::optional<std::filesystem::path> feature_file;
    struct PendingFeature {
        std::size_t line;
        std::size_t video;
        std::size_t segment;
        std::uint64_t offset;
        long steps;
        long dim;
    };
    std::vector<PendingFeature> pending;
    std::map<std::string, std::size_t> video_index;
    std::optional<long> corpus_dim;

    std::string text;
    std::size_t line_no = 0;
    std::size_t records = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        RecordError err(line_no, path);
        json rec;
        try {
            rec = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed record: " + e.what());
        }
        if (!rec.is_object()) err.fail("kind", "record is not an object");
        ++records;
        const auto kind = err.get<std::string>(rec, "kind");

        if (kind == "vocab") {
            if (have_vocab) err.fail("kind", "second vocab record");
            try {
                corpus.vocabulary = LabelVocabulary(err.get<std::vector<std::string>>(rec, "verbs"),
                                                    err.get<std::vector<std::string>>(rec, "nouns"));
            } catch (const ValidationError& e) {
                err.fail("verbs/nouns", e.what());
            }
            if (rec.contains("feature_file") && !rec["feature_file"].is_null()) {
                feature_file = path.parent_path() / err.get<std::string>(rec, "feature_file");
            }
            have_vocab = true;
            continue;
        }
        if (!have_vocab) err.fail("kind", "the vocab record must come first");

        if (kind == "video") {
            ActivityVideo video;
            video.video_id = err.get<std::string>(rec, "video_id");
            if (video_index.contains(video.video_id)) err.fail("video_id", "duplicate '" + video.video_id + "'");
            const json& segs = err.require(rec, "segments");
            if (!segs.is_array()) err.fail("segments", "expected array");
            const auto& vocab = corpus.vocabulary;
            for (std::size_t i = 0; i < segs.size(); ++i) {
                const json& s = segs[i];
                const std::string where = "segments[" + std::to_string(i) + "]";
                if (!s.is_object()) err.fail(where, "expected object");
                Segment seg;
                seg.segment_id = err.get<std::string>(s, "segment_id");
                seg.start_frame = err.get<long>(s, "start");
                seg.end_frame = err.get<long>(s, "end");
                seg.pnr_frame = s.contains("pnr") && !s["pnr"].is_null() ? err.get<long>(s, "pnr") : seg.start_frame;
                seg.action.verb = resolve_label(err.require(s, "verb"), err, where + ".verb", vocab.num_verbs(),
                                                [&](std::string_view t) { return vocab.find_verb(t); });
                seg.action.noun = resolve_label(err.require(s, "noun"), err, where + ".noun", vocab.num_nouns(),
                                                [&](std::string_view t) { return vocab.find_noun(t); });
                try {
                    seg.state_change = parse_state_change(err.get<std::string>(s, "state_change"));
                } catch (const DomainError& e) {
                    err.fail(where + ".state_change", e.what());
                }
                if (s.contains("pre_frame") && !s["pre_frame"].is_null()) {
                    seg.pre_frame = parse_frame(s["pre_frame"], err, where + ".pre_frame", seg.action.noun);
                }
                if (s.contains("post_frame") && !s["post_frame"].is_null()) {
                    seg.post_frame = parse_frame(s["post_frame"], err, where + ".post_frame", seg.action.noun);
                }
                try {
                    validate_segment(seg);
                } catch (const ValidationError& e) {
                    err.fail(where, e.what());
                }
                video.segments.push_back(std::move(seg));
            }
            if (rec.contains("split") && !rec["split"].is_null()) {
                try {
                    corpus.split_assignment[video.video_id] = parse_split(err.get<std::string>(rec, "split"));
                } catch (const ValidationError& e) {
                    err.fail("split", e.what());
                }
            }
            video_index[video.video_id] = corpus.videos.size();
            corpus.videos.push_back(std::move(video));
            continue;
        }

        if (kind == "features") {
            const auto vid = err.get<std::string>(rec, "video_id");
            auto vit = video_index.find(vid);
            if (vit == video_index.end()) err.fail("video_id", "features for unknown video '" + vid + "'");
            const auto sid = err.get<std::string>(rec, "segment_id");
            const auto& segs = corpus.videos[vit->second].segments;
            auto sit = std::find_if(segs.begin(), segs.end(), [&](const Segment& s) { return s.segment_id == sid; });
            if (sit == segs.end()) err.fail("segment_id", "unknown segment '" + sid + "'");
            PendingFeature pf{line_no, vit->second, static_cast<std::size_t>(sit - segs.begin()),
                              err.get<std::uint64_t>(rec, "offset"), err.get<long>(rec, "T"), err.get<long>(rec, "D")};
            if (pf.steps < 1) err.fail("T", "must be >= 1");
            if (pf.dim < 1) err.fail("D", "must be >= 1");
            if (corpus_dim && *corpus_dim != pf.dim) {
                err.fail("D", "dimension mismatch: " + std::to_string(pf.dim) + " vs " + std::to_string(*corpus_dim));
            }
            corpus_dim = pf.dim;
            pending.push_back(pf);
            continue;
        }
        err.fail("kind", "unknown record kind '" + kind + "'");
    }
    if (records == 0) throw ValidationError(path.string() + ": no records");

    if (!pending.empty()) {
        if (!feature_file) throw ValidationError(path.string() + ": feature index records without a feature_file");
        std::ifstream bin(*feature_file, std::ios::binary);
        if (!bin) throw IoError("cannot open feature file " + feature_file->string());
        std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
        for (auto& v : corpus.videos) v.features.resize(v.segments.size());
        std::vector<std::vector<bool>> seen(corpus.videos.size());
        for (std::size_t i = 0; i < corpus.videos.size(); ++i) seen[i].assign(corpus.videos[i].segments.size(), false);
        for (const auto& pf : pending) {
            RecordError err(pf.line, path);
            const std::size_t count = static_cast<std::size_t>(pf.steps * pf.dim);
            if (pf.offset + count * sizeof(float) > blob.size()) err.fail("offset", "payload extends past end of feature file");
            if (seen[pf.video][pf.segment]) err.fail("segment_id", "duplicate feature record");
            seen[pf.video][pf.segment] = true;
            FeatureSequence fs;
            fs.source = FeatureSource::precomputed_file;
            fs.values.resize(pf.steps, pf.dim);
            read_floats_le(blob, pf.offset, fs.values.data(), count);
            if (!fs.values.allFinite()) err.fail("offset", "non-finite feature value");
            corpus.videos[pf.video].features[pf.segment] = std::move(fs);
        }
        for (std::size_t i = 0; i < corpus.videos.size(); ++i) {
            for (std::size_t j = 0; j < seen[i].size(); ++j) {
                if (!seen[i][j]) {
                    throw ValidationError(path.string() + ": segment '" + corpus.videos[i].segments[j].segment_id +
                                          "' has no feature record");
                }
            }
        }
    }
    validate_corpus(corpus);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    validate_corpus(corpus);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write corpus file " + path.string());

    const bool has_features = corpus.feature_dim() > 0;
    const auto bin_path = sidecar_path(path);
    std::ofstream bin;
    if (has_features) {
        bin.open(bin_path, std::ios::binary | std::ios::trunc);
        if (!bin) throw IoError("cannot write feature file " + bin_path.string());
    }

    const auto& vocab = corpus.vocabulary;
    ojson header;
    header["kind"] = "vocab";
    header["verbs"] = vocab.verbs();
    header["nouns"] = vocab.nouns();
    header["feature_file"] = has_features ? ojson(bin_path.filename().string()) : ojson(nullptr);
    out << header.dump() << '\n';

    std::uint64_t offset = 0;
    for (const auto& v : corpus.videos) {
        ojson rec;
        rec["kind"] = "video";
        rec["video_id"] = v.video_id;
        if (auto it = corpus.split_assignment.find(v.video_id); it != corpus.split_assignment.end()) {
            rec["split"] = to_string(it->second);
        }
        ojson segs = ojson::array();
        for (const auto& s : v.segments) {
            ojson o;
            o["segment_id"] = s.segment_id;
            o["start"] = s.start_frame;
            o["end"] = s.end_frame;
            o["pnr"] = s.pnr_frame;
            o["verb"] = vocab.verbs()[static_cast<std::size_t>(s.action.verb)];
            o["noun"] = vocab.nouns()[static_cast<std::size_t>(s.action.noun)];
            o["state_change"] = to_string(s.state_change);
            o["pre_frame"] = s.pre_frame ? frame_to_json(*s.pre_frame, s.action.noun) : ojson(nullptr);
            o["post_frame"] = s.post_frame ? frame_to_json(*s.post_frame, s.action.noun) : ojson(nullptr);
            segs.push_back(std::move(o));
        }
        rec["segments"] = std::move(segs);
        out << rec.dump() << '\n';

        for (std::size_t i = 0; i < v.features.size(); ++i) {
            const auto& f = v.features[i];
            ojson idx;
            idx["kind"] = "features";
            idx["video_id"] = v.video_id;
            idx["segment_id"] = v.segments[i].segment_id;
            idx["offset"] = offset;
            idx["T"] = f.steps();
            idx["D"] = f.dim();
            out << idx.dump() << '\n';
            const auto count = static_cast<std::size_t>(f.values.size());
            write_floats_le(bin, f.values.data(), count);
            offset += count * sizeof(float);
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
    if (has_features && !bin) throw IoError("failed writing " + bin_path.string());
}

// ---------------------------------------------------------------------------
// Decision samples
// ---------------------------------------------------------------------------

std::vector<DecisionSample> build_decision_samples(const ActivityVideo& video, const SampleOptions& options) {
    if (options.window < 1) throw ConfigError("visual window must be >= 1");
    if (options.max_history && *options.max_history < 1) throw ConfigError("max history must be >= 1");
    std::vector<DecisionSample> out;
    const int num = static_cast<int>(video.segments.size());
    if (num < 2) return out;
    const bool has_features = !video.features.empty();
    out.reserve(static_cast<std::size_t>(num - 1));

    for (int n = 1; n < num; ++n) {
        DecisionSample s;
        s.video_id = video.video_id;
        s.decision_index = n;
        // Segments are 1-based in the description; vector index k-1 holds segment k.
        const int first_hist = options.max_history ? std::max(1, n - *options.max_history + 1) : 1;
        for (int k = first_hist; k <= n; ++k) {
            const Segment& seg = video.segments[static_cast<std::size_t>(k - 1)];
            s.action_history.push_back(seg.action);
            s.state_history.push_back(seg.state_change);
        }
        if (has_features) {
            const int first = std::max(1, n - options.window + 1);
            Eigen::Index rows = 0;
            for (int k = first; k <= n; ++k) rows += video.features[static_cast<std::size_t>(k - 1)].steps();
            s.visual_window.resize(rows, video.features.front().dim());
            Eigen::Index r = 0;
            for (int k = first; k <= n; ++k) {
                const auto& f = video.features[static_cast<std::size_t>(k - 1)].values;
                s.visual_window.middleRows(r, f.rows()) = f;
                r += f.rows();
            }
        }
        s.target = video.segments[static_cast<std::size_t>(n)].state_change;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DecisionSample> build_decision_samples(const Corpus& corpus, std::optional<Split> which,
                                                   const SampleOptions& options) {
    std::vector<DecisionSample> out;
    for (const auto& v : corpus.videos) {
        if (which) {
            auto it = corpus.split_assignment.find(v.video_id);
            if (it == corpus.split_assignment.end() || it->second != *which) continue;
        }
        auto samples = build_decision_samples(v, options);
        std::move(samples.begin(), samples.end(), std::back_inserter(out));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting and priors
// ---------------------------------------------------------------------------

Corpus split(Corpus corpus, std::array<double, 3> ratios, std::uint64_t seed) {
    double total = 0;
    for (double r : ratios) {
        if (!(r > 0)) throw ConfigError("split ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ConfigError("split ratios must sum to 1");
    const std::size_t n = corpus.videos.size();
    if (n < ratios.size()) {
        throw ConfigError("cannot split " + std::to_string(n) + " videos into " + std::to_string(ratios.size()) +
                          " non-empty sets");
    }

    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& v : corpus.videos) ids.push_back(v.video_id);
    std::sort(ids.begin(), ids.end());
    Rng rng = derive_rng(seed, 0x5b117);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(ids[i - 1], ids[uniform_below(rng, i)]);
    }

    // Largest remainder, ties broken by split order; every split gets >= 1.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = ratios[k] * static_cast<double>(n);
        counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainder[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
    for (std::size_t k = 0; k < 3; ++k) {
        while (counts[k] == 0) {
            auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            --counts[donor];
            ++counts[k];
        }
    }

    corpus.split_assignment.clear();
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i) {
            corpus.split_assignment[ids[pos++]] = static_cast<Split>(k);
        }
    }
    return corpus;
}

std::array<double, kNumStateClasses> class_priors(const Corpus& corpus, std::optional<Split> which) {
    std::array<double, kNumStateClasses> counts{};
    double total = 0;
    for (const auto& v : corpus.videos) {
        if (which) {
            auto it = corpus.split_assignment.find(v.video_id);
            if (it == corpus.split_assignment.end() || it->second != *which) continue;
        }
        for (std::size_t i = 1; i < v.segments.size(); ++i) {
            counts[static_cast<std::size_t>(index_of(v.segments[i].state_change))] += 1;
            total += 1;
        }
    }
    if (total == 0) throw ValidationError("no decision samples in the requested split");
    for (auto& c : counts) c /= total;
    return counts;
}

}  // namespace osca
