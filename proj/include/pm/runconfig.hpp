#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pm/nn/model.hpp"
#include "pm/train/trainer.hpp"

namespace pm {

/// Plain-text key=value run configuration. '#' starts a comment; unknown
/// keys are hard errors; command-line flags override file values. The fully
/// resolved configuration is echoed into every output directory.
struct RunConfig {
    // optimization
    int epochs = 0;  // 0 = augmentation default (250, 300 with mp)
    int batch_size = 32;
    double lr0 = 0.1;
    double momentum = 0.9;
    double dropout = 0.5;
    std::uint64_t seed = 1;
    int k_edgeconv = 20;
    int k_lle = 12;
    int t = 1;
    // architecture
    std::string profile = "full";        // full | toy
    std::vector<int> edgeconv_widths;    // empty = profile default
    int embedding_width = 0;             // 0 = profile default
    std::vector<int> head_widths;        // empty = profile default
    int mp_planes = 3;
    bool dynamic_graph = true;
    bool dynamic_graph_set = false;      // whether the key was given explicitly

    static const std::vector<std::string>& known_keys();

    void set(const std::string& key, const std::string& value);  // UsageError on problems
    void load_file(const std::filesystem::path& path);

    TrainConfig train_config() const;
    nn::ArchitectureSpec architecture(int num_classes) const;
    // Canonical key=value rendering of the resolved configuration.
    std::string echo(nn::Augmentation aug) const;
};

}  // namespace pm
