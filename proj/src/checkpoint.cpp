#include "swarmplan/checkpoint.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace swarmplan {
namespace {

using nlohmann::json;

json config_to_json(const GnnConfig& c) {
    return json{{"num_layers", c.num_layers},
                {"taps", c.taps},
                {"features", c.features},
                {"mlp_hidden", c.mlp_hidden},
                {"mlp_depth", c.mlp_depth},
                {"input_dim", c.input_dim},
                {"output_dim", c.output_dim},
                {"nonlinearity", to_string(c.nonlinearity)},
                {"action_squash", c.action_squash},
                {"max_speed", c.max_speed},
                {"use_bias", c.use_bias},
                {"normalize_adjacency", c.normalize_adjacency}};
}

GnnConfig config_from_json(const json& j) {
    GnnConfig c;
    c.num_layers = j.at("num_layers").get<int>();
    c.taps = j.at("taps").get<int>();
    c.features = j.at("features").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.mlp_depth = j.at("mlp_depth").get<int>();
    c.input_dim = j.at("input_dim").get<int>();
    c.output_dim = j.at("output_dim").get<int>();
    c.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
    c.action_squash = j.at("action_squash").get<bool>();
    c.max_speed = j.at("max_speed").get<double>();
    c.use_bias = j.at("use_bias").get<bool>();
    c.normalize_adjacency = j.value("normalize_adjacency", false);
    return c;
}

void put_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.append(buf, 8);
}

double get_le(const char* p) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, p, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const GnnParams& params, const std::filesystem::path& path) {
    const auto tensors = params.tensors();
    const auto names = params.tensor_names();
    json manifest;
    manifest["format"] = kCheckpointFormat;
    manifest["config"] = config_to_json(params.config);
    json entries = json::array();
    std::string payload;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const Tensor2& t = *tensors[i];
        entries.push_back({{"name", names[i]},
                           {"shape", {t.rows(), t.cols()}},
                           {"offset", payload.size()}});
        for (Eigen::Index e = 0; e < t.size(); ++e) put_le(payload, t.data()[e]);
    }
    manifest["tensors"] = std::move(entries);
    manifest["payload_bytes"] = payload.size();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
    out << manifest.dump() << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError("failed writing " + path.string());
}

GnnParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint not found: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw CheckpointError("empty checkpoint: " + path.string());

    json manifest;
    try {
        manifest = json::parse(header);
    } catch (const json::exception& e) {
        throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    const std::string format = manifest.value("format", "");
    if (format != kCheckpointFormat) {
        throw CheckpointError("unsupported checkpoint format '" + format + "', expected " + kCheckpointFormat);
    }

    GnnParams params;
    std::size_t payload_bytes = 0;
    try {
        params = GnnParams::zeros(config_from_json(manifest.at("config")));
        payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    } catch (const json::exception& e) {
        throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
    }

    std::string payload(payload_bytes, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
    if (static_cast<std::size_t>(in.gcount()) != payload_bytes) {
        throw CheckpointError("truncated checkpoint payload: expected " + std::to_string(payload_bytes) +
                              " bytes, got " + std::to_string(in.gcount()));
    }

    const auto tensors = params.tensors();
    const auto names = params.tensor_names();
    const json& entries = manifest.at("tensors");
    if (entries.size() != tensors.size()) {
        throw CheckpointError("shape mismatch: checkpoint has " + std::to_string(entries.size()) +
                              " tensors, config implies " + std::to_string(tensors.size()));
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const json& e = entries[i];
        Tensor2& t = *tensors[i];
        const auto shape = e.at("shape").get<std::vector<long long>>();
        if (e.at("name").get<std::string>() != names[i] || shape.size() != 2 || shape[0] != t.rows() ||
            shape[1] != t.cols()) {
            throw CheckpointError("shape mismatch for tensor " + names[i] + ": file has " +
                                  e.at("name").get<std::string>() + " " + e.at("shape").dump() +
                                  ", expected [" + std::to_string(t.rows()) + "," + std::to_string(t.cols()) + "]");
        }
        const std::size_t offset = e.at("offset").get<std::size_t>();
        const std::size_t bytes = static_cast<std::size_t>(t.size()) * 8;
        if (offset + bytes > payload.size()) {
            throw CheckpointError("truncated checkpoint payload for tensor " + names[i]);
        }
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            t.data()[k] = get_le(payload.data() + offset + static_cast<std::size_t>(k) * 8);
        }
    }
    return params;
}

GnnParams load_checkpoint(const std::filesystem::path& path, const GnnConfig& expected) {
    GnnParams params = load_checkpoint(path);
    if (!(params.config == expected)) {
        throw CheckpointError("checkpoint config does not match the requested network: file has " +
                              config_to_json(params.config).dump() + ", expected " +
                              config_to_json(expected).dump());
    }
    return params;
}

}  // namespace swarmplan
