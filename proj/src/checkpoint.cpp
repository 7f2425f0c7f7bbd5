#include <cstring>
#include <fstream>

#include "pm/nn/model.hpp"

namespace pm::nn {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4] = {};
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u32(os, static_cast<std::uint32_t>(bits & 0xFFFFFFFFULL));
    put_u32(os, static_cast<std::uint32_t>(bits >> 32));
}

double get_f64(std::istream& is) {
    const std::uint64_t lo = get_u32(is);
    const std::uint64_t hi = get_u32(is);
    const std::uint64_t bits = lo | (hi << 32);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const std::uint32_t n = get_u32(is);
    if (n > 1 << 20) throw FormatError("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}

}  // namespace

void save_checkpoint(Model& model, int k_lle, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInputError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_string(os, augmentation_name(model.aug));
    const ArchitectureSpec& s = model.spec;
    put_u32(os, static_cast<std::uint32_t>(s.t));
    put_u32(os, static_cast<std::uint32_t>(s.edgeconv_widths.size()));
    for (int w : s.edgeconv_widths) put_u32(os, static_cast<std::uint32_t>(w));
    put_u32(os, static_cast<std::uint32_t>(s.embedding_width));
    put_u32(os, static_cast<std::uint32_t>(s.head_widths.size()));
    for (int w : s.head_widths) put_u32(os, static_cast<std::uint32_t>(w));
    put_u32(os, static_cast<std::uint32_t>(s.k));
    put_u32(os, static_cast<std::uint32_t>(s.num_classes));
    put_f64(os, s.dropout_rate);
    put_u32(os, static_cast<std::uint32_t>(s.mp_planes));
    put_u32(os, s.dynamic_graph ? 1 : 0);
    put_u32(os, static_cast<std::uint32_t>(k_lle));

    const auto params = model.params();
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_string(os, p.name);
        put_u32(os, static_cast<std::uint32_t>(p.rows));
        put_u32(os, static_cast<std::uint32_t>(p.cols));
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const float f = static_cast<float>(p.value[i]);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(os, bits);
        }
    }
    if (!os) throw InvalidInputError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInputError("cannot open checkpoint '" + path.string() + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path.string() + "' is not a checkpoint file");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw FormatError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kVersion) + ")");

    Checkpoint ck;
    ck.aug = augmentation_from_name(get_string(is));
    ArchitectureSpec& s = ck.spec;
    s.t = static_cast<int>(get_u32(is));
    s.edgeconv_widths.resize(get_u32(is));
    for (auto& w : s.edgeconv_widths) w = static_cast<int>(get_u32(is));
    s.embedding_width = static_cast<int>(get_u32(is));
    s.head_widths.resize(get_u32(is));
    for (auto& w : s.head_widths) w = static_cast<int>(get_u32(is));
    s.k = static_cast<int>(get_u32(is));
    s.num_classes = static_cast<int>(get_u32(is));
    s.dropout_rate = get_f64(is);
    s.mp_planes = static_cast<int>(get_u32(is));
    s.dynamic_graph = get_u32(is) != 0;
    ck.k_lle = static_cast<int>(get_u32(is));
    if (!is) throw FormatError("checkpoint '" + path.string() + "': truncated header");

    Rng rng(0);
    ck.model = Model(s, ck.aug, rng);
    auto params = ck.model.params();
    const std::uint32_t count = get_u32(is);
    if (count != params.size())
        throw FormatError("checkpoint '" + path.string() + "': expected " +
                          std::to_string(params.size()) + " tensors, found " +
                          std::to_string(count));
    for (auto& p : params) {
        const std::string name = get_string(is);
        const std::uint32_t rows = get_u32(is);
        const std::uint32_t cols = get_u32(is);
        if (name != p.name || rows != static_cast<std::uint32_t>(p.rows) ||
            cols != static_cast<std::uint32_t>(p.cols))
            throw FormatError("checkpoint '" + path.string() + "': tensor '" + name + "' (" +
                              std::to_string(rows) + "x" + std::to_string(cols) +
                              ") does not match model tensor '" + p.name + "' (" +
                              std::to_string(p.rows) + "x" + std::to_string(p.cols) + ")");
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const std::uint32_t bits = get_u32(is);
            float f;
            std::memcpy(&f, &bits, 4);
            p.value[i] = static_cast<double>(f);
        }
    }
    if (!is) throw FormatError("checkpoint '" + path.string() + "': truncated payload");
    return ck;
}

}  // namespace pm::nn
