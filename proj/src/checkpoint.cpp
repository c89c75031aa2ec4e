#include "unlearn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "unlearn/error.hpp"

namespace unlearn {

namespace {

constexpr char kMagic[8] = {'U', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_le(std::string& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
    return v;
}

}  // namespace

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
    nlohmann::json j{{"kind", std::string(to_string(spec.kind))},
                     {"input_dim", spec.input_dim},
                     {"layer_widths", spec.layer_widths},
                     {"num_classes", spec.num_classes},
                     {"activation", "relu"},
                     {"output", "softmax"}};
    if (spec.kind == ModelKind::small_cnn) {
        j["image"] = {spec.image.channels, spec.image.height, spec.image.width};
        j["conv_channels"] = spec.conv_channels;
    }
    return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    try {
        ModelSpec s;
        s.kind = model_kind_from_string(j.value("kind", std::string("mlp")));
        s.input_dim = j.at("input_dim").get<std::size_t>();
        s.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
        s.num_classes = j.contains("num_classes") ? j.at("num_classes").get<std::size_t>()
                                                  : (s.layer_widths.empty() ? 0 : s.layer_widths.back());
        if (j.value("activation", std::string("relu")) != "relu") throw ConfigError("only relu activation is supported");
        if (s.kind == ModelKind::small_cnn) {
            auto img = j.at("image").get<std::vector<std::size_t>>();
            if (img.size() != 3) throw ConfigError("image must be [channels, height, width]");
            s.image = {img[0], img[1], img[2]};
            s.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid model spec: ") + e.what());
    }
}

nlohmann::json train_meta_to_json(const TrainMeta& meta) {
    nlohmann::json j{{"train_accuracy", meta.train_accuracy}, {"epochs_run", meta.epochs_run}, {"seed", meta.seed}};
    j["test_accuracy"] = meta.test_accuracy ? nlohmann::json(*meta.test_accuracy) : nlohmann::json(nullptr);
    return j;
}

TrainMeta train_meta_from_json(const nlohmann::json& j) {
    TrainMeta m;
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.epochs_run = j.at("epochs_run").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("test_accuracy") && !j["test_accuracy"].is_null()) m.test_accuracy = j["test_accuracy"].get<double>();
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
    const nlohmann::json header{{"spec", model_spec_to_json(model.spec)},
                                {"parameter_count", model.parameters.size()},
                                {"dtype", "f64"},
                                {"fingerprint", param_fingerprint(model).hex()},
                                {"train_meta", train_meta_to_json(model.meta)}};
    const std::string h = header.dump();
    std::string out(kMagic, sizeof kMagic);
    put_le(out, kVersion, 4);
    put_le(out, h.size(), 8);
    out += h;
    out.reserve(out.size() + model.parameters.size() * 8);
    for (double v : model.parameters) put_le(out, std::bit_cast<std::uint64_t>(v), 8);

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path.string());
    const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < 20 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
        throw ParseError("not a checkpoint file: " + path.string(), 0);
    if (get_le(in, 8, 4) != kVersion) throw ParseError("unsupported checkpoint version", 0);
    const std::uint64_t hlen = get_le(in, 12, 8);
    if (20 + hlen > in.size()) throw ParseError("truncated checkpoint header", 0);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(in.substr(20, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
    }
    if (header.value("dtype", std::string()) != "f64") throw ParseError("unsupported parameter dtype", 0);

    TrainedModel m;
    m.spec = model_spec_from_json(header.at("spec"));
    m.meta = train_meta_from_json(header.at("train_meta"));
    const auto count = header.at("parameter_count").get<std::size_t>();
    if (count != Network(m.spec).parameter_count()) throw ParseError("parameter count does not match spec", 0);
    const std::size_t base = 20 + hlen;
    if (in.size() != base + count * 8) throw ParseError("checkpoint parameter block has the wrong size", 0);
    m.parameters.resize(count);
    for (std::size_t i = 0; i < count; ++i) m.parameters[i] = std::bit_cast<double>(get_le(in, base + i * 8, 8));

    refresh_fingerprint(m);
    if (m.fingerprint.hex() != header.at("fingerprint").get<std::string>())
        throw ParseError("checkpoint fingerprint does not match its parameters", 0);
    return m;
}

}  // namespace unlearn
