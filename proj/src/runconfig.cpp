#include <charconv>
#include <fstream>
#include <sstream>

#include "pm/runconfig.hpp"

namespace pm {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    const auto end = s.find_last_not_of(" \t\r");
    return begin == std::string::npos ? "" : s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& v, int lo, int hi) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || out < lo || out > hi)
        throw UsageError("config key '" + key + "': bad integer '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': bad number '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw UsageError("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item), 1, 1 << 20));
    if (out.empty()) throw UsageError("config key '" + key + "': empty list");
    return out;
}

std::string render_int_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = {
        "epochs",       "batch_size",      "lr0",        "momentum",
        "dropout",      "seed",            "k_edgeconv", "k_lle",
        "t",            "profile",         "edgeconv_widths",
        "embedding_width", "head_widths",  "mp_planes",  "dynamic_graph"};
    return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "epochs")
        epochs = parse_int(key, value, 0, 1 << 20);
    else if (key == "batch_size")
        batch_size = parse_int(key, value, 2, 1 << 20);
    else if (key == "lr0")
        lr0 = parse_double(key, value);
    else if (key == "momentum")
        momentum = parse_double(key, value);
    else if (key == "dropout")
        dropout = parse_double(key, value);
    else if (key == "seed")
        seed = static_cast<std::uint64_t>(parse_int(key, value, 0, 1 << 30));
    else if (key == "k_edgeconv")
        k_edgeconv = parse_int(key, value, 1, 1 << 20);
    else if (key == "k_lle")
        k_lle = parse_int(key, value, 1, 1 << 20);
    else if (key == "t")
        t = parse_int(key, value, 1, 64);
    else if (key == "profile") {
        if (value != "full" && value != "toy")
            throw UsageError("config key 'profile': expected full or toy, got '" + value + "'");
        profile = value;
    } else if (key == "edgeconv_widths")
        edgeconv_widths = parse_int_list(key, value);
    else if (key == "embedding_width")
        embedding_width = parse_int(key, value, 1, 1 << 20);
    else if (key == "head_widths")
        head_widths = parse_int_list(key, value);
    else if (key == "mp_planes")
        mp_planes = parse_int(key, value, 1, 3);
    else if (key == "dynamic_graph") {
        dynamic_graph = parse_bool(key, value);
        dynamic_graph_set = true;
    } else
        throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInputError("cannot open config file '" + path.string() + "'");
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t_line = trim(line);
        if (t_line.empty()) continue;
        const auto eq = t_line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config file '" + path.string() + "' line " +
                             std::to_string(line_no) + ": expected key=value");
        set(trim(t_line.substr(0, eq)), trim(t_line.substr(eq + 1)));
    }
}

TrainConfig RunConfig::train_config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.lr0 = lr0;
    c.momentum = momentum;
    c.dropout = dropout;
    c.seed = seed;
    c.k_edgeconv = k_edgeconv;
    c.k_lle = k_lle;
    c.t = t;
    return c;
}

nn::ArchitectureSpec RunConfig::architecture(int num_classes) const {
    nn::ArchitectureSpec arch = profile == "toy" ? nn::ArchitectureSpec::toy(num_classes)
                                                 : nn::ArchitectureSpec();
    arch.num_classes = num_classes;
    if (!edgeconv_widths.empty()) arch.edgeconv_widths = edgeconv_widths;
    if (embedding_width > 0) arch.embedding_width = embedding_width;
    if (!head_widths.empty()) arch.head_widths = head_widths;
    arch.mp_planes = mp_planes;
    if (dynamic_graph_set) arch.dynamic_graph = dynamic_graph;
    arch.t = t;
    arch.k = k_edgeconv;
    arch.dropout_rate = dropout;
    return arch;
}

std::string RunConfig::echo(nn::Augmentation aug) const {
    const nn::ArchitectureSpec arch = architecture(2);  // class count resolved at run time
    const TrainConfig tc = train_config();
    std::string out;
    out += "augmentation=" + nn::augmentation_name(aug) + "\n";
    out += "epochs=" + std::to_string(tc.resolved_epochs(aug)) + "\n";
    out += "batch_size=" + std::to_string(batch_size) + "\n";
    out += "lr0=" + fmt_double(lr0) + "\n";
    out += "momentum=" + fmt_double(momentum) + "\n";
    out += "dropout=" + fmt_double(dropout) + "\n";
    out += "seed=" + std::to_string(seed) + "\n";
    out += "k_edgeconv=" + std::to_string(k_edgeconv) + "\n";
    out += "k_lle=" + std::to_string(k_lle) + "\n";
    out += "t=" + std::to_string(t) + "\n";
    out += "profile=" + profile + "\n";
    out += "edgeconv_widths=" + render_int_list(arch.edgeconv_widths) + "\n";
    out += "embedding_width=" + std::to_string(arch.embedding_width) + "\n";
    out += "head_widths=" + render_int_list(arch.head_widths) + "\n";
    out += "mp_planes=" + std::to_string(mp_planes) + "\n";
    out += std::string("dynamic_graph=") + (arch.dynamic_graph ? "true" : "false") + "\n";
    return out;
}

}  // namespace pm
