#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "csrda/backbone.hpp"
#include "csrda/stage_a.hpp"
#include "csrda/stage_b.hpp"
#include "csrda/synthgen.hpp"

namespace csrda {

enum class Profile { s2c, c2c, toy };
enum class WarmStart { teacher, student, fresh };

struct ExperimentPaths {
    std::filesystem::path source_dir;
    std::filesystem::path target_train_dir;
    std::filesystem::path target_test_dir;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> source_test_dir;  // held-out labeled source, evaluated when set
};

struct ExperimentConfig {
    Profile profile = Profile::toy;
    int cycles = 2;
    std::uint64_t seed = 0;
    WarmStart warm_start = WarmStart::teacher;
    bool eval_every_cycle = true;
    bool keep_last_checkpoint_only = false;
    ExperimentPaths paths;
    StageAConfig stage_a;
    CLSConfig cls;
    UNetConfig backbone;

    // Defaults of a profile before any file overrides.
    static ExperimentConfig defaults(Profile profile);
    void validate() const;
    nlohmann::json to_json() const;
};

// Reads a YAML file: `profile` selects the defaults, every other key
// overrides them. Unknown keys are rejected. Relative paths resolve against
// the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& yaml_text,
                                         const std::filesystem::path& base_dir = ".");

// Sets one dotted key (e.g. "loss.alpha", "cls.mu") from its string form.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// `csrda gen` input: seed, size, gap, texture_bank, output_dir and
// splits {source, source_test, target_train, target_test} counts.
struct GenJob {
    synth::SplitPlan plan;
    std::filesystem::path output_dir;
};
GenJob load_gen_job(const std::filesystem::path& path);

Profile parse_profile(const std::string& s);
std::string to_string(Profile p);
std::string to_string(WarmStart w);

}  // namespace csrda
