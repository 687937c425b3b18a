#include "csrda/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace csrda {

Profile parse_profile(const std::string& s) {
    if (s == "s2c") return Profile::s2c;
    if (s == "c2c") return Profile::c2c;
    if (s == "toy") return Profile::toy;
    throw ConfigError("unknown profile '" + s + "' (expected s2c, c2c or toy)");
}

std::string to_string(Profile p) {
    switch (p) {
        case Profile::s2c: return "s2c";
        case Profile::c2c: return "c2c";
        case Profile::toy: return "toy";
    }
    return "?";
}

std::string to_string(WarmStart w) {
    switch (w) {
        case WarmStart::teacher: return "teacher";
        case WarmStart::student: return "student";
        case WarmStart::fresh: return "fresh";
    }
    return "?";
}

namespace {

WarmStart parse_warm_start(const std::string& s) {
    if (s == "teacher") return WarmStart::teacher;
    if (s == "student") return WarmStart::student;
    if (s == "fresh") return WarmStart::fresh;
    throw ConfigError("unknown warm_start '" + s + "' (expected teacher, student or fresh)");
}

Consistency parse_consistency(const std::string& s) {
    if (s == "es") return Consistency::es;
    if (s == "bce") return Consistency::bce;
    throw ConfigError("unknown consistency '" + s + "' (expected es or bce)");
}

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError("config section '" + section + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
        }
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
    }
}

void read_pair(const YAML::Node& node, const char* key, int& a, int& b, const std::string& section) {
    if (!node[key]) return;
    const auto v = node[key];
    if (!v.IsSequence() || v.size() != 2) throw ConfigError("'" + section + "." + key + "' must be a 2-element list");
    a = v[0].as<int>();
    b = v[1].as<int>();
}

void read_pair(const YAML::Node& node, const char* key, double& a, double& b, const std::string& section) {
    if (!node[key]) return;
    const auto v = node[key];
    if (!v.IsSequence() || v.size() != 2) throw ConfigError("'" + section + "." + key + "' must be a 2-element list");
    a = v[0].as<double>();
    b = v[1].as<double>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(Profile profile) {
    ExperimentConfig c;
    c.profile = profile;
    auto& a = c.stage_a;
    switch (profile) {
        case Profile::s2c:
        case Profile::c2c: {
            const bool s2c = profile == Profile::s2c;
            a.lambda_ema = s2c ? 0.996 : 0.9996;
            a.es = s2c ? ESConfig::s2c() : ESConfig::c2c();
            c.cls = s2c ? CLSConfig::s2c() : CLSConfig::c2c();
            a.epochs = 40;
            a.lr_drop_epoch = 30;
            a.augment.output_height = a.augment.output_width = 352;
            break;
        }
        case Profile::toy:
            a.lambda_ema = 0.99;
            a.es = ESConfig::s2c();
            c.cls = CLSConfig::s2c();
            a.epochs = 36;
            a.lr_drop_epoch = 27;
            a.warmup_epochs = 10;
            a.lr = 3e-3;
            a.augment.output_height = a.augment.output_width = 64;
            c.backbone.channels = {8, 16, 32, 64, 64};
            c.backbone.groups = 4;
            break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (cycles < 1) throw ConfigError("cycles must be >= 1");
    stage_a.validate();
    cls.validate();
    if (backbone.channels.empty()) throw ConfigError("backbone.channels must not be empty");
    for (int ch : backbone.channels) {
        if (ch <= 0 || backbone.groups <= 0 || ch % backbone.groups != 0) {
            throw ConfigError("backbone.channels must be positive multiples of backbone.groups");
        }
    }
    const int multiple = 1 << (backbone.channels.size() - 1);
    if (stage_a.augment.output_height % multiple || stage_a.augment.output_width % multiple) {
        throw ConfigError("stage_a.size must be a multiple of " + std::to_string(multiple));
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    const auto& a = stage_a;
    const auto& g = a.augment;
    nlohmann::json j;
    j["profile"] = to_string(profile);
    j["cycles"] = cycles;
    j["seed"] = seed;
    j["warm_start"] = to_string(warm_start);
    j["eval_every_cycle"] = eval_every_cycle;
    j["paths"] = {{"source_dir", paths.source_dir.string()},
                  {"target_train_dir", paths.target_train_dir.string()},
                  {"target_test_dir", paths.target_test_dir.string()},
                  {"output_dir", paths.output_dir.string()}};
    if (paths.source_test_dir) j["paths"]["source_test_dir"] = paths.source_test_dir->string();
    j["stage_a"] = {{"lambda_ema", a.lambda_ema},       {"epochs", a.epochs},
                    {"batch_size", a.batch_size},       {"lr", a.lr},
                    {"lr_drop_epoch", a.lr_drop_epoch}, {"lr_drop_factor", a.lr_drop_factor},
                    {"warmup_epochs", a.warmup_epochs},
                    {"size", {g.output_height, g.output_width}},
                    {"consistency", a.consistency == Consistency::es ? "es" : "bce"}};
    j["loss"] = {{"alpha", a.es.alpha}, {"beta", a.es.beta}, {"delta", a.es.delta},
                 {"l1_eps", a.es.l1_eps}, {"prob_eps", a.es.prob_eps}};
    j["cls"] = {{"mu", cls.mu}, {"tau", cls.tau}};
    j["augment"] = {{"flip_p", g.flip_p},
                    {"min_crop_area", g.min_crop_area},
                    {"brightness", g.brightness},
                    {"contrast", g.contrast},
                    {"saturation", g.saturation},
                    {"blur_p", g.blur_p},
                    {"blur_sigma", {g.blur_sigma_min, g.blur_sigma_max}},
                    {"cutouts", {g.cutout_min, g.cutout_max}},
                    {"cutout_max_area", g.cutout_max_area}};
    j["backbone"] = {{"channels", backbone.channels}, {"groups", backbone.groups}};
    j["checkpoints"] = {{"keep", keep_last_checkpoint_only ? "last" : "all"}};
    return j;
}

ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("invalid YAML: ") + e.what());
    }
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    check_keys(root, "", {"profile", "cycles", "seed", "warm_start", "eval_every_cycle", "paths", "stage_a", "loss",
                          "cls", "augment", "backbone", "checkpoints"});

    ExperimentConfig c = ExperimentConfig::defaults(root["profile"] ? parse_profile(root["profile"].as<std::string>())
                                                                    : Profile::toy);
    read(root, "cycles", c.cycles, "");
    read(root, "seed", c.seed, "");
    read(root, "eval_every_cycle", c.eval_every_cycle, "");
    if (root["warm_start"]) c.warm_start = parse_warm_start(root["warm_start"].as<std::string>());

    if (const auto p = root["paths"]) {
        check_keys(p, "paths", {"source_dir", "target_train_dir", "target_test_dir", "output_dir", "source_test_dir"});
        if (p["source_dir"]) c.paths.source_dir = resolve(base_dir, p["source_dir"].as<std::string>());
        if (p["target_train_dir"]) c.paths.target_train_dir = resolve(base_dir, p["target_train_dir"].as<std::string>());
        if (p["target_test_dir"]) c.paths.target_test_dir = resolve(base_dir, p["target_test_dir"].as<std::string>());
        if (p["output_dir"]) c.paths.output_dir = resolve(base_dir, p["output_dir"].as<std::string>());
        if (p["source_test_dir"]) c.paths.source_test_dir = resolve(base_dir, p["source_test_dir"].as<std::string>());
    }
    auto& a = c.stage_a;
    if (const auto s = root["stage_a"]) {
        check_keys(s, "stage_a", {"lambda_ema", "epochs", "batch_size", "lr", "lr_drop_epoch", "lr_drop_factor", "size",
                                  "consistency", "warmup_epochs"});
        read(s, "lambda_ema", a.lambda_ema, "stage_a");
        read(s, "epochs", a.epochs, "stage_a");
        read(s, "batch_size", a.batch_size, "stage_a");
        read(s, "lr", a.lr, "stage_a");
        read(s, "lr_drop_epoch", a.lr_drop_epoch, "stage_a");
        read(s, "lr_drop_factor", a.lr_drop_factor, "stage_a");
        read(s, "warmup_epochs", a.warmup_epochs, "stage_a");
        read_pair(s, "size", a.augment.output_height, a.augment.output_width, "stage_a");
        if (s["consistency"]) a.consistency = parse_consistency(s["consistency"].as<std::string>());
    }
    if (const auto s = root["loss"]) {
        check_keys(s, "loss", {"alpha", "beta", "delta", "l1_eps", "prob_eps"});
        read(s, "alpha", a.es.alpha, "loss");
        read(s, "beta", a.es.beta, "loss");
        read(s, "delta", a.es.delta, "loss");
        read(s, "l1_eps", a.es.l1_eps, "loss");
        read(s, "prob_eps", a.es.prob_eps, "loss");
    }
    if (const auto s = root["cls"]) {
        check_keys(s, "cls", {"mu", "tau"});
        read(s, "mu", c.cls.mu, "cls");
        read(s, "tau", c.cls.tau, "cls");
    }
    if (const auto s = root["augment"]) {
        auto& g = a.augment;
        check_keys(s, "augment", {"flip_p", "min_crop_area", "brightness", "contrast", "saturation", "blur_p",
                                  "blur_sigma", "cutouts", "cutout_max_area"});
        read(s, "flip_p", g.flip_p, "augment");
        read(s, "min_crop_area", g.min_crop_area, "augment");
        read(s, "brightness", g.brightness, "augment");
        read(s, "contrast", g.contrast, "augment");
        read(s, "saturation", g.saturation, "augment");
        read(s, "blur_p", g.blur_p, "augment");
        read_pair(s, "blur_sigma", g.blur_sigma_min, g.blur_sigma_max, "augment");
        read_pair(s, "cutouts", g.cutout_min, g.cutout_max, "augment");
        read(s, "cutout_max_area", g.cutout_max_area, "augment");
    }
    if (const auto s = root["backbone"]) {
        check_keys(s, "backbone", {"channels", "groups"});
        read(s, "channels", c.backbone.channels, "backbone");
        read(s, "groups", c.backbone.groups, "backbone");
    }
    if (const auto s = root["checkpoints"]) {
        check_keys(s, "checkpoints", {"keep"});
        if (s["keep"]) {
            const auto keep = s["keep"].as<std::string>();
            if (keep != "all" && keep != "last") throw ConfigError("checkpoints.keep must be 'all' or 'last'");
            c.keep_last_checkpoint_only = keep == "last";
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

GenJob load_gen_job(const std::filesystem::path& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot read generator config " + path.string() + ": " + e.what());
    }
    check_keys(root, "", {"seed", "size", "gap", "texture_bank", "output_dir", "splits"});
    GenJob job;
    auto& b = job.plan.base;
    read(root, "seed", b.seed, "");
    read_pair(root, "size", b.height, b.width, "");
    read(root, "gap", b.gap, "");
    read(root, "texture_bank", b.texture_bank, "");
    if (!root["output_dir"]) throw ConfigError("generator config needs output_dir");
    const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    job.output_dir = resolve(base, root["output_dir"].as<std::string>());
    if (const auto s = root["splits"]) {
        check_keys(s, "splits", {"source", "source_test", "target_train", "target_test"});
        read(s, "source", job.plan.source, "splits");
        read(s, "source_test", job.plan.source_test, "splits");
        read(s, "target_train", job.plan.target_train, "splits");
        read(s, "target_test", job.plan.target_test, "splits");
    }
    b.count = 1;
    try {
        b.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return job;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        if (key == "cycles") {
            cfg.cycles = std::stoi(value);
        } else if (key == "seed") {
            cfg.seed = std::stoull(value);
        } else {
            throw ConfigError("unsupported config key '" + key + "'");
        }
        return;
    }
    const std::string section = key.substr(0, dot), leaf = key.substr(dot + 1);
    const double v = std::stod(value);
    auto& a = cfg.stage_a;
    if (section == "loss" && leaf == "alpha") a.es.alpha = v;
    else if (section == "loss" && leaf == "beta") a.es.beta = v;
    else if (section == "loss" && leaf == "delta") a.es.delta = v;
    else if (section == "cls" && leaf == "mu") cfg.cls.mu = v;
    else if (section == "cls" && leaf == "tau") cfg.cls.tau = v;
    else if (section == "stage_a" && leaf == "lambda_ema") a.lambda_ema = v;
    else if (section == "stage_a" && leaf == "lr") a.lr = v;
    else if (section == "stage_a" && leaf == "epochs") a.epochs = static_cast<int>(v);
    else if (section == "stage_a" && leaf == "warmup_epochs") a.warmup_epochs = static_cast<int>(v);
    else throw ConfigError("unsupported config key '" + key + "'");
}

}  // namespace csrda
