#include "csrda/stage_a.hpp"

#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "csrda/checkpoint.hpp"
#include "csrda/rng.hpp"

namespace csrda {

void StageAConfig::validate() const {
    if (!(lambda_ema >= 0.0 && lambda_ema < 1.0)) throw ConfigError("stage_a: lambda_ema must lie in [0,1)");
    if (epochs < 0) throw ConfigError("stage_a: epochs must be >= 0");
    if (warmup_epochs < 0) throw ConfigError("stage_a: warmup_epochs must be >= 0");
    if (batch_size < 2 || batch_size % 2 != 0) throw ConfigError("stage_a: batch_size must be even and >= 2");
    if (!(lr >= 0.0)) throw ConfigError("stage_a: lr must be >= 0");
    if (!(lr_drop_factor > 0.0)) throw ConfigError("stage_a: lr_drop_factor must be > 0");
    es.validate();
    augment.validate();
}

template <typename T>
ParamSet<T> ema_update(const ParamSet<T>& teacher, const ParamSet<T>& student, double lambda_ema) {
    require_compatible(teacher, student, "ema_update");
    if (!(lambda_ema >= 0.0 && lambda_ema <= 1.0)) throw Error("ema_update: lambda must lie in [0,1]");
    ParamSet<T> out = teacher;
    const double keep = 1.0 - lambda_ema;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = static_cast<T>(lambda_ema * teacher.values[i] + keep * student.values[i]);
    }
    return out;
}

template ParamSet<float> ema_update(const ParamSet<float>&, const ParamSet<float>&, double);
template ParamSet<double> ema_update(const ParamSet<double>&, const ParamSet<double>&, double);

namespace {

enum : std::uint64_t { kSourceStream = 1, kTargetStream = 2, kAugStream = 3 };

struct SlotOut {
    Gradients grads;
    double ce = 0, ea = 0, sw = 0, es = 0;
};

Plane<float> probs(const Plane<float>& logits) { return sigmoid(logits); }

// Cycles through a dataset in freshly shuffled passes.
class IndexStream {
public:
    IndexStream(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}
    std::size_t next() {
        if (pos_ == order_.size()) {
            order_.resize(n_);
            std::iota(order_.begin(), order_.end(), std::size_t{0});
            std::shuffle(order_.begin(), order_.end(), rng_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    std::size_t n_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t augmentation_seed(std::uint64_t stage_seed, std::int64_t iteration, std::size_t slot) {
    return derive_seed(stage_seed, {kAugStream, static_cast<std::uint64_t>(iteration), slot});
}

StepResult train_step(const Backbone<float>& backbone, const ModelState& student, const ModelState& teacher,
                      AdamMoments<float>& moments, const std::vector<const Sample*>& source_batch,
                      const std::vector<const Sample*>& target_batch, const StageAConfig& cfg,
                      std::int64_t iteration, double lr) {
    if (source_batch.empty()) throw Error("train_step: empty source batch");
    require_compatible(student, teacher, "train_step");

    const std::size_t ns = source_batch.size(), nt = target_batch.size();
    std::vector<SlotOut> slots(ns + nt);

    tbb::parallel_for(std::size_t{0}, ns + nt, [&](std::size_t k) {
        SlotOut& out = slots[k];
        out.grads = student.zeros_like();
        const auto pair = augment::sample_paired_specs(augmentation_seed(cfg.seed, iteration, k), cfg.augment);
        std::unique_ptr<ForwardTape> tape;
        if (k < ns) {
            const Sample& s = *source_batch[k];
            if (!s.label) throw DataError("train_step: unlabeled sample in labeled batch: " + s.id, {s.id});
            const auto a = augment::apply(pair.weak, s.image, s.label);
            const auto logits = backbone.forward(student, a.image.pixels(), &tape);
            auto loss = bce_loss(probs(logits), a.mask->values(), cfg.es.prob_eps);
            for (auto& g : loss.grad.data) g /= static_cast<float>(ns);
            backbone.backward(student, *tape, loss.grad, out.grads);
            out.ce = loss.value;
        } else {
            const Sample& s = *target_batch[k - ns];
            const auto weak = augment::apply(pair.weak, s.image);
            const auto strong = augment::apply(pair.strong, s.image);
            const auto teacher_p = probs(backbone.forward(teacher, weak.image.pixels()));
            const auto student_p = probs(backbone.forward(student, strong.image.pixels(), &tape));
            Plane<float> grad;
            if (cfg.consistency == Consistency::es) {
                auto r = es_loss(student_p, teacher_p, cfg.es);
                out.ea = r.ea;
                out.sw = r.sw;
                out.es = r.es;
                grad = std::move(r.grad);
            } else {
                auto r = bce_loss(student_p, teacher_p, cfg.es.prob_eps);
                out.es = r.value;
                grad = std::move(r.grad);
            }
            for (auto& g : grad.data) g /= static_cast<float>(nt);
            backbone.backward(student, *tape, grad, out.grads);
        }
    });

    StepResult res;
    LossReport& rep = res.report;
    Gradients grads = student.zeros_like();
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const SlotOut& s = slots[k];
        for (std::size_t i = 0; i < grads.values.size(); ++i) grads.values[i] += s.grads.values[i];
        if (k < ns) {
            rep.ce += s.ce / static_cast<double>(ns);
        } else {
            rep.ea += s.ea / static_cast<double>(nt);
            rep.sw += s.sw / static_cast<double>(nt);
            rep.es += s.es / static_cast<double>(nt);
            rep.per_sample_es.push_back(s.es);
        }
    }
    rep.total = rep.ce + rep.es;

    if (!std::isfinite(rep.total)) {
        std::string ids;
        for (const auto* s : source_batch) ids += s->id + " ";
        for (const auto* s : target_batch) ids += s->id + " ";
        char buf[256];
        std::snprintf(buf, sizeof buf, "non-finite loss at iteration %lld (ce=%g ea=%g sw=%g es=%g); samples: ",
                      static_cast<long long>(iteration), rep.ce, rep.ea, rep.sw, rep.es);
        throw NumericError(buf + ids);
    }

    AdamStep step;
    step.learning_rate = lr;
    step.iteration = iteration;
    res.student = optimizer_step(student, grads, moments, step);
    res.teacher = ema_update(teacher, res.student, cfg.lambda_ema);
    return res;
}

StageAResult run_stage_a(const Backbone<float>& backbone, ModelState student, ModelState teacher,
                         const DomainDataset& labeled, const DomainDataset& target, const StageAConfig& cfg,
                         const StageAOptions& options) {
    cfg.validate();
    if (labeled.empty()) throw DataError("run_stage_a: labeled set is empty");
    if (!labeled.fully_labeled()) throw DataError("run_stage_a: labeled set contains unlabeled samples");
    for (const auto& s : target) {
        if (s.label) throw DataError("run_stage_a: target sample carries a label: " + s.id, {s.id});
    }

    StageAResult result{std::move(student), std::move(teacher), {}};
    if (cfg.epochs == 0) return result;

    const bool joint = !target.empty();
    const std::size_t half = joint ? static_cast<std::size_t>(cfg.batch_size / 2) : cfg.batch_size;

    IndexStream src_stream(labeled.size(), derive_seed(cfg.seed, {kSourceStream}));
    IndexStream tgt_stream(std::max<std::size_t>(target.size(), 1), derive_seed(cfg.seed, {kTargetStream}));
    AdamMoments<float> moments = AdamMoments<float>::fresh(result.student);

    std::ofstream log;
    if (options.log_csv) {
        const bool fresh = !std::filesystem::exists(*options.log_csv);
        log.open(*options.log_csv, std::ios::app);
        if (!log) throw DataError("cannot open training log: " + options.log_csv->string());
        if (fresh) log << "iteration,epoch,ce,ea,sw,es,total,lr\n";
    }

    std::int64_t iteration = 0;
    std::optional<std::filesystem::path> previous_ckpt;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at(epoch);
        const bool with_target = joint && epoch >= cfg.warmup_epochs;
        const std::size_t longest = with_target ? std::max(labeled.size(), target.size()) : labeled.size();
        const std::size_t steps = (longest + half - 1) / half;
        double epoch_ce = 0.0, epoch_es = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<const Sample*> src, tgt;
            for (std::size_t i = 0; i < half; ++i) src.push_back(&labeled[src_stream.next()]);
            if (with_target) {
                for (std::size_t i = 0; i < half; ++i) tgt.push_back(&target[tgt_stream.next()]);
            }
            ++iteration;
            auto step = train_step(backbone, result.student, result.teacher, moments, src, tgt, cfg, iteration, lr);
            result.student = std::move(step.student);
            result.teacher = std::move(step.teacher);
            const LossReport& r = step.report;
            LogRow row{iteration, epoch + 1, r.ce, r.ea, r.sw, r.es, r.total, lr};
            result.log.push_back(row);
            epoch_ce += r.ce;
            epoch_es += r.es;
            if (log) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "%lld,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                              static_cast<long long>(row.iteration), row.epoch, row.ce, row.ea, row.sw, row.es,
                              row.total, row.lr);
                log << buf;
            }
        }
        log.flush();
        spdlog::info("cycle {} epoch {}/{}: ce {:.4f} es {:.4f} lr {:.2e}", options.cycle, epoch + 1, cfg.epochs,
                     epoch_ce / steps, epoch_es / steps, lr);

        if (options.checkpoint_dir) {
            std::filesystem::create_directories(*options.checkpoint_dir);
            const auto path = *options.checkpoint_dir / ("ckpt_cycle" + std::to_string(options.cycle) + "_epoch" +
                                                         std::to_string(epoch + 1) + ".bin");
            save_checkpoint(path, {iteration, options.cycle, epoch + 1, result.student, result.teacher, moments});
            if (options.keep_last_checkpoint_only && previous_ckpt) std::filesystem::remove(*previous_ckpt);
            previous_ckpt = path;
        }
        if (options.on_epoch) options.on_epoch(epoch + 1, result.log.back());
    }
    return result;
}

}  // namespace csrda
