#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pm/pointcloud.hpp"

namespace pm {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'C', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xFF),
                                   static_cast<unsigned char>((v >> 8) & 0xFF),
                                   static_cast<unsigned char>((v >> 16) & 0xFF),
                                   static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t read_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_name(const std::string& s, long line) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw ParseError("manifest: unknown split '" + s + "'", line);
}

}  // namespace

void save_packed_matrix(const Eigen::MatrixXd& values, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInputError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(values.rows()));
    write_u32(os, static_cast<std::uint32_t>(values.cols()));
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            write_f32(os, static_cast<float>(values(i, j)));
    if (!os) throw InvalidInputError("write failed for '" + path.string() + "'");
}

Eigen::MatrixXd load_packed_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInputError("cannot open '" + path.string() + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path.string() + "' is not a packed-binary container");
    const std::uint32_t n = read_u32(is);
    const std::uint32_t dim = read_u32(is);
    if (!is) throw FormatError("truncated header in '" + path.string() + "'");
    Eigen::MatrixXd values(n, dim);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < dim; ++j) values(i, j) = read_f32(is);
    if (!is)
        throw FormatError("point count mismatch in '" + path.string() + "': header says " +
                          std::to_string(n) + "x" + std::to_string(dim) +
                          " but the payload is shorter");
    is.peek();
    if (!is.eof())
        throw FormatError("point count mismatch in '" + path.string() +
                          "': trailing bytes after declared payload");
    return values;
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
    if (format == CloudFormat::PackedBinary) {
        save_packed_matrix(cloud.points, path);
        return;
    }
    std::ofstream os(path);
    if (!os) throw InvalidInputError("cannot open '" + path.string() + "' for writing");
    os << "# " << cloud.points.rows() << " points\n";
    char buf[96];
    for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", cloud.points(i, 0), cloud.points(i, 1),
                      cloud.points(i, 2));
        os << buf;
    }
    if (!os) throw InvalidInputError("write failed for '" + path.string() + "'");
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    PointCloud cloud;
    cloud.id = path.stem().string();
    if (format == CloudFormat::PackedBinary) {
        const Eigen::MatrixXd m = load_packed_matrix(path);
        if (m.cols() != 3)
            throw FormatError("'" + path.string() + "': expected 3 columns, found " +
                              std::to_string(m.cols()));
        cloud.points = m;
        return cloud;
    }

    std::ifstream is(path);
    if (!is) throw InvalidInputError("cannot open '" + path.string() + "'");
    std::vector<Eigen::RowVector3d> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x)) continue;  // blank or comment-only line
        if (!(ls >> y >> z))
            throw ParseError("'" + path.string() + "': expected three coordinates", line_no);
        double extra;
        if (ls >> extra)
            throw ParseError("'" + path.string() + "': more than three values on a line", line_no);
        rows.emplace_back(x, y, z);
    }
    if (rows.empty()) throw ParseError("'" + path.string() + "': no points");
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) cloud.points.row(static_cast<Eigen::Index>(i)) = rows[i];
    return cloud;
}

void save_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path,
                   const std::vector<std::filesystem::path>& relative_cloud_paths) {
    if (dataset.entries.size() != relative_cloud_paths.size())
        throw ContractError("save_manifest: entry/path count mismatch");
    std::ofstream os(manifest_path);
    if (!os) throw InvalidInputError("cannot open '" + manifest_path.string() + "' for writing");
    for (std::size_t i = 0; i < dataset.entries.size(); ++i)
        os << relative_cloud_paths[i].generic_string() << "," << dataset.entries[i].cloud.label
           << "," << split_name(dataset.entries[i].split) << "\n";
    if (!dataset.class_names.empty()) {
        std::ofstream cs(manifest_path.parent_path() / "classes.txt");
        for (const auto& name : dataset.class_names) cs << name << "\n";
    }
}

Dataset load_manifest(const std::filesystem::path& manifest_path, CloudFormat format) {
    std::ifstream is(manifest_path);
    if (!is) throw InvalidInputError("cannot open manifest '" + manifest_path.string() + "'");
    Dataset ds;
    const auto base = manifest_path.parent_path();
    std::string line;
    long line_no = 0;
    int max_label = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("manifest: expected '<path>,<label>,<split>'", line_no);
        const std::string rel = line.substr(0, c1);
        const std::string label_str = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string split_str = line.substr(c2 + 1);
        int label;
        try {
            label = std::stoi(label_str);
        } catch (const std::exception&) {
            throw ParseError("manifest: bad label '" + label_str + "'", line_no);
        }
        DatasetEntry entry;
        entry.cloud = load_cloud(base / rel, format);
        entry.cloud.label = label;
        entry.split = split_from_name(split_str, line_no);
        max_label = std::max(max_label, label);
        ds.entries.push_back(std::move(entry));
    }
    if (ds.entries.empty()) throw ParseError("manifest '" + manifest_path.string() + "' is empty");

    std::ifstream cs(base / "classes.txt");
    if (cs) {
        std::string name;
        while (std::getline(cs, name))
            if (!name.empty()) ds.class_names.push_back(name);
    }
    for (int c = static_cast<int>(ds.class_names.size()); c <= max_label; ++c)
        ds.class_names.push_back("class_" + std::to_string(c));
    return ds;
}

}  // namespace pm
