#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "osca/errors.hpp"
#include "osca/model.hpp"

namespace osca {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr char kMagic[8] = {'O', 'S', 'C', 'A', 'C', 'K', 'P', 'T'};

ojson encoder_to_json(const EncoderConfig& e) {
    return {{"hidden_size", e.hidden_size}, {"mlp_sizes", e.mlp_sizes}, {"embedding_dim", e.embedding_dim}};
}

EncoderConfig encoder_from_json(const json& j) {
    EncoderConfig e;
    e.hidden_size = j.at("hidden_size").get<int>();
    e.mlp_sizes = j.at("mlp_sizes").get<std::vector<int>>();
    e.embedding_dim = j.at("embedding_dim").get<int>();
    return e;
}

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& os, float f) {
    put_u32(os, std::bit_cast<std::uint32_t>(f));
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setfill('0') << std::setw(16) << v;
    return s.str();
}

}  // namespace

void save_checkpoint(const AnticipationModel& model, const std::filesystem::path& path) {
    const ModelConfig& cfg = model.config();
    const ParameterSet& params = model.parameters();

    ojson header;
    header["format_version"] = kCheckpointVersion;
    header["model_config"] = {
        {"streams", cfg.streams.to_string()},
        {"feature_dim", cfg.feature_dim},
        {"num_verbs", cfg.num_verbs},
        {"num_nouns", cfg.num_nouns},
        {"visual", encoder_to_json(cfg.visual)},
        {"action", encoder_to_json(cfg.action)},
        {"state", encoder_to_json(cfg.state)},
        {"fusion_sizes", cfg.fusion_sizes},
    };
    header["vocabulary_fingerprint"] = hex64(model.vocabulary_fingerprint());
    header["seed"] = model.seed();
    ojson tensors = ojson::array();
    std::uint64_t offset = 0;
    for (const TensorSlot& s : params.slots()) {
        tensors.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(s.size()) * 4;
    }
    header["tensors"] = std::move(tensors);
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (int id = 0; id < static_cast<int>(params.slots().size()); ++id) {
        const auto m = params.view(id);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out, static_cast<float>(m(r, c)));
        }
    }
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

AnticipationModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw ValidationError(path.string() + ": not a checkpoint file");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) {
        throw ValidationError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t header_len = get_u32(in);
    std::string text(header_len, '\0');
    in.read(text.data(), header_len);
    if (!in) throw ValidationError(path.string() + ": truncated header");
    const std::streampos data_start = in.tellg();

    json header;
    ModelConfig cfg;
    std::uint64_t fingerprint = 0;
    std::uint64_t seed = 0;
    try {
        header = json::parse(text);
        const json& mc = header.at("model_config");
        cfg.streams = StreamSet::parse(mc.at("streams").get<std::string>());
        cfg.feature_dim = mc.at("feature_dim").get<int>();
        cfg.num_verbs = mc.at("num_verbs").get<int>();
        cfg.num_nouns = mc.at("num_nouns").get<int>();
        cfg.visual = encoder_from_json(mc.at("visual"));
        cfg.action = encoder_from_json(mc.at("action"));
        cfg.state = encoder_from_json(mc.at("state"));
        cfg.fusion_sizes = mc.at("fusion_sizes").get<std::vector<int>>();
        fingerprint = std::stoull(header.at("vocabulary_fingerprint").get<std::string>(), nullptr, 16);
        seed = header.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": bad checkpoint header: " + e.what());
    }

    AnticipationModel model(cfg, fingerprint, seed);
    ParameterSet& params = model.parameters();
    const json& tensors = header.at("tensors");
    if (!tensors.is_array() || tensors.size() != params.slots().size()) {
        throw ValidationError(path.string() + ": tensor index does not match the model layout");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const TensorSlot& slot = params.slots()[i];
        const json& t = tensors[i];
        if (t.at("name").get<std::string>() != slot.name || t.at("rows").get<Eigen::Index>() != slot.rows ||
            t.at("cols").get<Eigen::Index>() != slot.cols) {
            throw ValidationError(path.string() + ": tensor '" + t.at("name").get<std::string>() +
                                  "' does not match the model layout");
        }
        in.seekg(data_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
        auto m = params.view(static_cast<int>(i));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = std::bit_cast<float>(get_u32(in));
        }
        if (!in) throw ValidationError(path.string() + ": truncated tensor data for '" + slot.name + "'");
    }
    if (!params.values().allFinite()) throw ValidationError(path.string() + ": non-finite parameters");
    return model;
}

}  // namespace osca
