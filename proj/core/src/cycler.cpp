#include "csrda/cycler.hpp"

#include <tbb/parallel_for.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "csrda/checkpoint.hpp"
#include "csrda/evaluate.hpp"
#include "csrda/rng.hpp"

namespace csrda {

namespace fs = std::filesystem;

void PathAudit::record(std::string phase, fs::path path) {
    accesses_.push_back({std::move(phase), fs::weakly_canonical(path)});
}

bool PathAudit::read_during(const fs::path& path, const std::string& phase) const {
    const auto p = fs::weakly_canonical(path);
    for (const auto& a : accesses_) {
        if (a.phase == phase && a.path == p) return true;
    }
    return false;
}

void PathAudit::require_untouched_in_training(const fs::path& path) const {
    if (read_during(path, "train")) throw Error("evaluation data was read during training: " + path.string());
}

BaselineMode parse_baseline_mode(const std::string& s) {
    if (s == "source_only") return BaselineMode::source_only;
    if (s == "mean_teacher") return BaselineMode::mean_teacher;
    throw ConfigError("unknown baseline mode '" + s + "' (expected source_only or mean_teacher)");
}

namespace {

enum : std::uint64_t { kInitStream = 11, kStageAStream = 12, kFreshStream = 13 };

void write_json(const fs::path& path, const nlohmann::json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw DataError("cannot write " + path.string(), {path.string()});
        os << j.dump(2) << "\n";
    }
    fs::rename(tmp, path);
}

std::vector<SoftMask> predict(const Backbone<float>& backbone, const ModelState& state, const DomainDataset& set) {
    std::vector<SoftMask> out(set.size());
    tbb::parallel_for(std::size_t{0}, set.size(), [&](std::size_t i) {
        out[i] = SoftMask(sigmoid(backbone.forward(state, set[i].image.pixels())));
    });
    return out;
}

metrics::MetricsReport evaluate_state(const Backbone<float>& backbone, const ModelState& state,
                                      const DomainDataset& test, const fs::path* save_dir) {
    if (!test.fully_labeled()) throw DataError("evaluation set " + test.name() + " has unlabeled samples");
    const auto preds = predict(backbone, state, test);
    std::vector<SoftMask> gts;
    for (const auto& s : test) gts.push_back(*s.label);
    if (save_dir) {
        fs::create_directories(*save_dir);
        for (std::size_t i = 0; i < preds.size(); ++i) save_mask(preds[i], *save_dir / (test[i].id + ".png"));
    }
    return evaluate_masks(preds, gts);
}

struct Context {
    const ExperimentConfig& cfg;
    std::unique_ptr<Backbone<float>> backbone;
    PathAudit audit;
    fs::path out;

    explicit Context(const ExperimentConfig& c) : cfg(c), backbone(make_unet<float>(c.backbone)), out(c.paths.output_dir) {
        c.validate();
        if (out.empty()) throw ConfigError("paths.output_dir is required");
        fs::create_directories(out);
        write_json(out / "config.json", c.to_json());
    }

    DomainDataset load(const fs::path& dir, bool labels, const char* phase) {
        if (dir.empty()) throw ConfigError("a required dataset path is not configured");
        audit.record(phase, dir);
        return load_dataset(dir, labels);
    }

    StageAResult stage_a(int cycle, ModelState student, ModelState teacher, const DomainDataset& labeled,
                         const DomainDataset& target, Consistency consistency) {
        StageAConfig a = cfg.stage_a;
        a.seed = derive_seed(cfg.seed, {kStageAStream, static_cast<std::uint64_t>(cycle)});
        a.consistency = consistency;
        StageAOptions opt;
        opt.cycle = cycle;
        opt.checkpoint_dir = out / "checkpoints";
        opt.keep_last_checkpoint_only = cfg.keep_last_checkpoint_only;
        opt.log_csv = out / "train_log.csv";
        return run_stage_a(*backbone, std::move(student), std::move(teacher), labeled, target, a, opt);
    }

    void finish(RunResult& r) {
        const DomainDataset test = load(cfg.paths.target_test_dir, true, "eval");
        const fs::path pred_dir = out / "predictions";
        r.final_test = evaluate_state(*backbone, r.teacher, test, &pred_dir);
        if (!r.cycles.empty() && !r.cycles.back().test) r.cycles.back().test = r.final_test;
        if (cfg.paths.source_test_dir) {
            const DomainDataset held = load(*cfg.paths.source_test_dir, true, "eval");
            r.source_heldout = evaluate_state(*backbone, r.teacher, held, nullptr);
        }
        audit.require_untouched_in_training(cfg.paths.target_test_dir);
        r.audit = audit;

        save_checkpoint(out / "final.ckpt", {0, static_cast<std::int64_t>(r.cycles.size()), 0, r.student, r.teacher,
                                             AdamMoments<float>::fresh(r.student)});
        nlohmann::json j;
        j["final_test"] = r.final_test.to_json();
        if (r.source_heldout) j["source_heldout"] = r.source_heldout->to_json();
        nlohmann::json cycles = nlohmann::json::array();
        for (const auto& c : r.cycles) {
            nlohmann::json cj{{"cycle", c.cycle}, {"labeled_size", c.labeled_size}};
            if (c.test) cj["test"] = c.test->to_json();
            cycles.push_back(cj);
        }
        j["cycles"] = cycles;
        j["timestamp"] = utc_timestamp();
        write_json(out / "metrics.json", j);
        spdlog::info("final teacher on {}:\n{}", test.name(), r.final_test.table("teacher"));
    }
};

}  // namespace

RunResult run_csrda(const ExperimentConfig& cfg) {
    Context ctx(cfg);
    const DomainDataset source = ctx.load(cfg.paths.source_dir, true, "train");
    const DomainDataset target = ctx.load(cfg.paths.target_train_dir, false, "train");
    if (target.empty()) throw DataError("target training set is empty: " + cfg.paths.target_train_dir.string());

    const auto& bb = *ctx.backbone;
    RunResult r;
    r.student = bb.init(derive_seed(cfg.seed, {kInitStream}));
    r.teacher = r.student;
    std::optional<DomainDataset> test;

    DomainDataset labeled = source;
    for (int cycle = 1; cycle <= cfg.cycles; ++cycle) {
        if (cycle > 1) {
            const int sel_cycle = cycle - 1;
            const auto scores = score_target_set(bb, r.student, r.teacher, target, cfg.stage_a.es);
            Selection sel = select_confident(bb, scores, r.teacher, target, cfg.cls, sel_cycle);
            spdlog::info("cycle {}: {} of {} target samples selected (threshold {:.4f})", sel_cycle,
                         sel.report.selected_ids.size(), target.size(), sel.report.threshold);
            write_json(ctx.out / ("selection_cycle" + std::to_string(sel_cycle) + ".json"), sel.report.to_json());
            if (!sel.d_cl.empty()) save_dataset(sel.d_cl, ctx.out / ("d_cl_cycle" + std::to_string(sel_cycle)));
            labeled = build_evolving_domain(source, sel.d_cl);
            r.selections.push_back(std::move(sel.report));

            switch (cfg.warm_start) {
                case WarmStart::teacher: r.student = r.teacher; break;
                case WarmStart::student: break;
                case WarmStart::fresh:
                    r.student = bb.init(derive_seed(cfg.seed, {kFreshStream, static_cast<std::uint64_t>(cycle)}));
                    r.teacher = r.student;
                    break;
            }
        }

        auto res = ctx.stage_a(cycle, std::move(r.student), std::move(r.teacher), labeled, target, Consistency::es);
        r.student = std::move(res.student);
        r.teacher = std::move(res.teacher);
        CycleOutcome outcome{cycle, labeled.size(), std::nullopt};
        if (cfg.eval_every_cycle && cycle < cfg.cycles) {
            if (!test) test = ctx.load(cfg.paths.target_test_dir, true, "eval");
            outcome.test = evaluate_state(bb, r.teacher, *test, nullptr);
            spdlog::info("cycle {} teacher:\n{}", cycle, outcome.test->table("cycle " + std::to_string(cycle)));
        }
        r.cycles.push_back(std::move(outcome));
    }
    ctx.finish(r);
    return r;
}

RunResult run_baseline(const ExperimentConfig& cfg, BaselineMode mode) {
    Context ctx(cfg);
    const DomainDataset source = ctx.load(cfg.paths.source_dir, true, "train");
    DomainDataset target;
    if (mode == BaselineMode::mean_teacher) {
        target = ctx.load(cfg.paths.target_train_dir, false, "train");
        if (target.empty()) throw DataError("target training set is empty: " + cfg.paths.target_train_dir.string());
    }
    const auto& bb = *ctx.backbone;
    RunResult r;
    r.student = bb.init(derive_seed(cfg.seed, {kInitStream}));
    r.teacher = r.student;
    auto res = ctx.stage_a(1, std::move(r.student), std::move(r.teacher), source, target,
                           mode == BaselineMode::mean_teacher ? Consistency::bce : Consistency::es);
    r.student = std::move(res.student);
    r.teacher = std::move(res.teacher);
    r.cycles.push_back({1, source.size(), std::nullopt});
    ctx.finish(r);
    return r;
}

std::vector<double> parse_sweep_values(const std::string& spec) {
    std::vector<double> out;
    try {
        if (spec.find(':') != std::string::npos) {
            const auto a = spec.find(':'), b = spec.find(':', a + 1);
            if (b == std::string::npos) throw ConfigError("sweep range must be lo:hi:step");
            const double lo = std::stod(spec.substr(0, a));
            const double hi = std::stod(spec.substr(a + 1, b - a - 1));
            const double step = std::stod(spec.substr(b + 1));
            if (!(step > 0) || hi < lo) throw ConfigError("sweep range needs lo <= hi and step > 0");
            const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
            for (int i = 0; i <= n; ++i) out.push_back(lo + i * step);
        } else {
            std::size_t pos = 0;
            while (pos <= spec.size()) {
                const auto comma = spec.find(',', pos);
                out.push_back(std::stod(spec.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse sweep values '" + spec + "'");
    }
    if (out.empty()) throw ConfigError("no sweep values in '" + spec + "'");
    return out;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& param,
                                  const std::vector<double>& values) {
    static const std::pair<const char*, const char*> kAliases[] = {
        {"alpha", "loss.alpha"}, {"beta", "loss.beta"}, {"delta", "loss.delta"},
        {"mu", "cls.mu"},        {"tau", "cls.tau"},    {"lambda", "stage_a.lambda_ema"}};
    std::string key = param;
    for (const auto& [alias, full] : kAliases) {
        if (param == alias) key = full;
    }
    std::vector<SweepPoint> points;
    nlohmann::json summary = nlohmann::json::array();
    for (double v : values) {
        ExperimentConfig c = cfg;
        char value[32];
        std::snprintf(value, sizeof value, "%g", v);
        set_config_value(c, key, value);
        c.paths.output_dir = cfg.paths.output_dir / (param + "=" + value);
        spdlog::info("sweep {} = {}", key, value);
        const RunResult r = run_csrda(c);
        points.push_back({v, r.final_test});
        nlohmann::json row = r.final_test.to_json();
        row[param] = v;
        summary.push_back(row);
    }
    fs::create_directories(cfg.paths.output_dir);
    write_json(cfg.paths.output_dir / ("sweep_" + param + ".json"), summary);
    return points;
}

}  // namespace csrda
