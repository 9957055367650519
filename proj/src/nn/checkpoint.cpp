#include "trafficast/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trafficast/error.hpp"

namespace trafficast::nn {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'F', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw DataError("checkpoint is truncated");
        }
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Network& net) {
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_shape().size()));
    for (auto e : net.input_shape()) {
        put<std::uint64_t>(out, e);
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& l = net.layers()[i];
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.kind));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.activation));
        put<std::uint32_t>(out, l.return_sequences ? 1U : 0U);
        put<std::uint64_t>(out, l.units);
        put<std::uint64_t>(out, l.kernel_h);
        put<std::uint64_t>(out, l.kernel_w);
        put<std::uint64_t>(out, l.stride);
        put<std::uint64_t>(out, net.layer_parameters(i).size());
    }
    put<std::uint64_t>(out, net.parameter_count());
    for (double p : net.parameters()) {
        put<double>(out, p);
    }
    return out;
}

Network deserialize(const std::string& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("not a checkpoint (bad magic bytes)");
    }
    const std::string body = bytes.substr(sizeof(kMagic));
    Reader r(body);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    Shape input(r.get<std::uint32_t>());
    for (auto& e : input) {
        e = r.get<std::uint64_t>();
    }
    std::vector<LayerSpec> layers(r.get<std::uint32_t>());
    std::vector<std::uint64_t> counts;
    for (auto& l : layers) {
        const auto kind = r.get<std::uint32_t>();
        if (kind < 1 || kind > 7) {
            throw DataError("checkpoint has an unknown layer kind " + std::to_string(kind));
        }
        const auto act = r.get<std::uint32_t>();
        if (act > 3) {
            throw DataError("checkpoint has an unknown activation " + std::to_string(act));
        }
        l.kind = static_cast<LayerKind>(kind);
        l.activation = static_cast<Activation>(act);
        l.return_sequences = r.get<std::uint32_t>() != 0;
        l.units = r.get<std::uint64_t>();
        l.kernel_h = r.get<std::uint64_t>();
        l.kernel_w = r.get<std::uint64_t>();
        l.stride = r.get<std::uint64_t>();
        counts.push_back(r.get<std::uint64_t>());
    }
    Network net;
    try {
        net = Network(input, layers);
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint manifest is inconsistent: ") + e.what());
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (net.layer_parameters(i).size() != counts[i]) {
            throw DataError("checkpoint parameter count mismatch in layer " + std::to_string(i));
        }
    }
    if (r.get<std::uint64_t>() != net.parameter_count()) {
        throw DataError("checkpoint total parameter count mismatch");
    }
    for (auto& p : net.parameters()) {
        p = r.get<double>();
    }
    if (!r.done()) {
        throw DataError("checkpoint has trailing bytes");
    }
    return net;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    const std::string bytes = serialize(net);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace trafficast::nn
