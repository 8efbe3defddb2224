#include "mcg/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "mcg/error.hpp"

namespace mcg {
namespace {

constexpr std::array<char, 4> kMagic{'M', 'C', 'G', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMaxRank = 8;

constexpr std::uint8_t kLittle = 1;
constexpr std::uint8_t kBig = 2;

std::uint8_t native_order() { return std::endian::native == std::endian::little ? kLittle : kBig; }

template <typename T>
void put_le(std::vector<char>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::vector<char>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw FormatError("tensor file truncated in header");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
}

std::size_t element_size(DType d) { return d == DType::kFloat64 ? 8 : 4; }

const char* dtype_name(DType d) { return d == DType::kFloat64 ? "float64" : "float32"; }

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

void write_container(const Tensor& tensor, const std::filesystem::path& path, const Metadata& metadata, DType dtype) {
    if (tensor.rank() == 0 || tensor.rank() > kMaxRank) throw ValidationError("container supports rank 1..8");
    std::vector<char> buf(kMagic.begin(), kMagic.end());
    put_le<std::uint16_t>(buf, kVersion);
    buf.push_back(static_cast<char>(dtype));
    buf.push_back(static_cast<char>(native_order()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put_le<std::uint64_t>(buf, d);
    const std::size_t payload = tensor.size() * element_size(dtype);
    put_le<std::uint64_t>(buf, payload);

    const std::size_t header = buf.size();
    buf.resize(header + payload);
    if (dtype == DType::kFloat64) {
        std::memcpy(buf.data() + header, tensor.data(), payload);
    } else {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const auto f = static_cast<float>(tensor[i]);
            std::memcpy(buf.data() + header + 4 * i, &f, 4);
        }
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + path.string() + " for writing");
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!os) throw Error("failed writing " + path.string());
    }

    nlohmann::json side{{"format", "mcg-tensor"},
                        {"version", kVersion},
                        {"dtype", dtype_name(dtype)},
                        {"shape", tensor.shape()},
                        {"metadata", metadata}};
    std::ofstream ms(sidecar_path(path), std::ios::trunc);
    if (!ms) throw Error("cannot open sidecar for " + path.string());
    ms << side.dump(2) << '\n';
}

LoadedTensor read_container_full(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    if (buf.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), buf.begin())) {
        throw FormatError(path.string() + ": not an mcg tensor file (bad magic)");
    }
    std::size_t pos = 4;
    const auto version = get_le<std::uint16_t>(buf, pos);
    if (version != kVersion) throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    const auto dtype_raw = static_cast<std::uint8_t>(buf[pos++]);
    const auto order = static_cast<std::uint8_t>(buf[pos++]);
    if (dtype_raw != 1 && dtype_raw != 2) throw FormatError(path.string() + ": unknown element type");
    if (order != kLittle && order != kBig) throw FormatError(path.string() + ": unknown byte order");
    const auto dtype = static_cast<DType>(dtype_raw);
    const auto rank = get_le<std::uint32_t>(buf, pos);
    if (rank == 0 || rank > kMaxRank) throw FormatError(path.string() + ": invalid rank " + std::to_string(rank));
    Shape shape;
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const auto d = get_le<std::uint64_t>(buf, pos);
        if (d == 0 || d > (std::uint64_t{1} << 40) || numel > (std::uint64_t{1} << 40) / d) {
            throw FormatError(path.string() + ": implausible dimension");
        }
        shape.push_back(static_cast<std::size_t>(d));
        numel *= static_cast<std::size_t>(d);
    }
    const auto payload = get_le<std::uint64_t>(buf, pos);
    const std::size_t esz = element_size(dtype);
    if (payload != numel * esz) throw FormatError(path.string() + ": payload size disagrees with shape");
    if (buf.size() - pos != payload) throw FormatError(path.string() + ": truncated or oversized payload");

    std::vector<char> raw(buf.begin() + static_cast<long>(pos), buf.end());
    if (order != native_order()) {
        for (std::size_t i = 0; i < numel; ++i) std::reverse(raw.begin() + static_cast<long>(i * esz), raw.begin() + static_cast<long>((i + 1) * esz));
    }
    std::vector<double> values(numel);
    if (dtype == DType::kFloat64) {
        std::memcpy(values.data(), raw.data(), payload);
    } else {
        for (std::size_t i = 0; i < numel; ++i) {
            float f;
            std::memcpy(&f, raw.data() + 4 * i, 4);
            values[i] = f;
        }
    }

    LoadedTensor out{Tensor(shape, std::move(values)), {}, dtype};
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream ms(side);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(ms);
            const auto side_shape = j.at("shape").get<Shape>();
            if (side_shape != shape) {
                throw FormatError(path.string() + ": sidecar shape " + shape_to_string(side_shape) +
                                  " does not match header shape " + shape_to_string(shape));
            }
            if (j.contains("metadata")) out.metadata = j.at("metadata").get<Metadata>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(side.string() + ": malformed sidecar: " + e.what());
        }
    }
    return out;
}

Tensor read_container(const std::filesystem::path& path) { return read_container_full(path).tensor; }

}  // namespace mcg
