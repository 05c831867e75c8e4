#include "sentiment/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sentiment/config_io.hpp"

namespace sentiment {

namespace {

constexpr char kMagic[4] = {'S', 'N', 'T', '1'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xFF);
    out += static_cast<char>((v >> 8) & 0xFF);
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_u16(const std::string& s, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[off]) |
                                      (static_cast<unsigned char>(s[off + 1]) << 8));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::string dims_str(const std::vector<std::size_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

}  // namespace

void save_checkpoint(const ClassifierModel& model, const Vocabulary& vocab, const TrainConfig& cfg,
                     const std::vector<std::string>& stopwords, const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw std::runtime_error("checkpoint exists, refusing to overwrite without force: " + path);

    NamedParams<float> params = model_parameters(model);

    nlohmann::json meta;
    meta["format_version"] = kVersion;
    meta["config"] = config_to_json(cfg);
    meta["vocabulary"] = vocab.tokens();
    meta["stopwords"] = stopwords;
    meta["tensors"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, p] : params) {
        std::vector<std::size_t> dims(p.shape().begin(), p.shape().end());
        meta["tensors"].push_back(
            {{"name", name}, {"rank", dims.size()}, {"dims", dims}, {"offset", offset}});
        offset += p.numel() * sizeof(float);
    }
    std::string meta_str = meta.dump();

    std::string header;
    header.append(kMagic, 4);
    put_u16(header, kVersion);
    put_u32(header, static_cast<std::uint32_t>(meta_str.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& [name, p] : params) {
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(p.values().data()),
                  static_cast<std::streamsize>(p.numel() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("write failed for checkpoint: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (content.size() < 10 || std::memcmp(content.data(), kMagic, 4) != 0)
        throw std::runtime_error("bad magic: not a SNT1 checkpoint: " + path);
    const std::uint16_t version = get_u16(content, 4);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 ", this build reads version " + std::to_string(kVersion));
    const std::uint32_t meta_len = get_u32(content, 6);
    if (content.size() < 10 + static_cast<std::size_t>(meta_len))
        throw std::runtime_error("checkpoint size mismatch: metadata claims " + std::to_string(meta_len) +
                                 " bytes but only " + std::to_string(content.size() - 10) + " remain");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(content.substr(10, meta_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint metadata is not valid JSON: ") + e.what());
    }

    CheckpointData data;
    data.config = config_from_json(meta.at("config"));
    data.vocab = Vocabulary::from_id_order(meta.at("vocabulary").get<std::vector<std::string>>());
    data.stopwords = meta.at("stopwords").get<std::vector<std::string>>();

    EmbeddingInit blank;
    blank.rows = data.vocab.size() + 1;
    blank.dim = data.config.embedding_dim;
    blank.matrix.assign(blank.rows * blank.dim, 0.0f);
    data.model = build_model(data.config, blank);

    NamedParams<float> params = model_parameters(data.model);
    const auto& tensors = meta.at("tensors");
    if (tensors.size() != params.size())
        throw std::runtime_error("checkpoint tensor count " + std::to_string(tensors.size()) +
                                 " does not match config-derived model with " +
                                 std::to_string(params.size()) + " tensors");

    const std::size_t payload_off = 10 + meta_len;
    const std::size_t payload_size = content.size() - payload_off;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& [name, p] = params[i];
        const auto& entry = tensors.at(i);
        if (entry.at("name").get<std::string>() != name)
            throw std::runtime_error("checkpoint tensor " + std::to_string(i) + " is named `" +
                                     entry.at("name").get<std::string>() + "`, expected `" + name + "`");
        std::vector<std::size_t> dims = entry.at("dims").get<std::vector<std::size_t>>();
        std::vector<std::size_t> want(p.shape().begin(), p.shape().end());
        if (dims != want || entry.at("rank").get<std::size_t>() != want.size())
            throw std::runtime_error("checkpoint shape mismatch for " + name + ": declared " +
                                     dims_str(dims) + ", config implies " + dims_str(want));
        const std::size_t offset = entry.at("offset").get<std::size_t>();
        const std::size_t bytes = p.numel() * sizeof(float);
        if (offset + bytes > payload_size)
            throw std::runtime_error("checkpoint size mismatch: tensor " + name + " needs " +
                                     std::to_string(bytes) + " bytes at payload offset " +
                                     std::to_string(offset) + ", payload has " +
                                     std::to_string(payload_size));
        std::memcpy(p.values().data(), content.data() + payload_off + offset, bytes);
    }
    return data;
}

}  // namespace sentiment
