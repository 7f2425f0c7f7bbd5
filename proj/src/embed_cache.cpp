#include <cstdio>
#include <filesystem>

#include "pm/lle.hpp"

namespace pm {

std::string embed_method_name(EmbedMethod m) { return m == EmbedMethod::Lle ? "lle" : "pca"; }

EmbedMethod embed_method_from_name(const std::string& name) {
    if (name == "lle") return EmbedMethod::Lle;
    if (name == "pca") return EmbedMethod::Pca;
    throw InvalidInputError("unknown embedding method '" + name + "' (expected lle or pca)");
}

std::uint64_t embed_cache_key(const Points& standardized_points, EmbedMethod method, int K, int D,
                              double eps) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const unsigned char tag = method == EmbedMethod::Lle ? 1 : 2;
    h = fnv1a64(&tag, 1, h);
    for (Eigen::Index i = 0; i < standardized_points.rows(); ++i) {
        const double row[3] = {standardized_points(i, 0), standardized_points(i, 1),
                               standardized_points(i, 2)};
        h = fnv1a64(row, sizeof(row), h);
    }
    const std::int32_t k32 = method == EmbedMethod::Lle ? K : 0;
    const std::int32_t d32 = D;
    h = fnv1a64(&k32, sizeof(k32), h);
    h = fnv1a64(&d32, sizeof(d32), h);
    h = fnv1a64(&eps, sizeof(eps), h);
    return h;
}

std::filesystem::path embed_cache_path(const std::filesystem::path& dir, std::uint64_t key) {
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.pmc", static_cast<unsigned long long>(key));
    return dir / name;
}

bool embed_cache_load(const std::filesystem::path& dir, std::uint64_t key,
                      Eigen::MatrixXd& coords) {
    const auto path = embed_cache_path(dir, key);
    if (!std::filesystem::exists(path)) return false;
    coords = load_packed_matrix(path);
    return true;
}

void embed_cache_store(const std::filesystem::path& dir, std::uint64_t key,
                       const Eigen::MatrixXd& coords) {
    std::filesystem::create_directories(dir);
    save_packed_matrix(coords, embed_cache_path(dir, key));
}

}  // namespace pm
