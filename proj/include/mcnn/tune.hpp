#ifndef MCNN_TUNE_HPP
#define MCNN_TUNE_HPP

#include <cmath>
#include <limits>
#include <tuple>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcnn/benchmark.hpp"
#include "mcnn/day_matrix.hpp"
#include "mcnn/error.hpp"
#include "mcnn/quantizer.hpp"
#include "mcnn/train.hpp"
#include "mcnn/windows.hpp"

namespace mcnn {

struct TuneGrid {
    std::vector<int> filters = {3, 5, 7};        // used for both F and L
    std::vector<int> mask_variants = {1, 2, 3};
    std::vector<int> class_counts = {128, 256, 512};
    double t_max = 1024.0;
};

struct TuneEntry {
    int filter = 0;
    int mask_variant = 0;
    int classes = 0;
    double val_mape = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string note;
};

struct TuneResult {
    std::vector<TuneEntry> table;
    ModelConfig best;
    bool has_best = false;
};

/// Trains every grid configuration identically and scores one-step MAPE on
/// the validation days. Ties break toward the cheaper model: smaller C, then
/// smaller F, then lower mask variant. Failing configurations are excluded
/// and reported in the table.
inline TuneResult tune_grid(const TuneGrid& grid, std::span<const DayMatrix> train_days,
                            std::span<const DayMatrix> val_days, const ModelConfig& base,
                            const TrainConfig& train_config, std::ostream* log = nullptr) {
    if (grid.filters.empty() || grid.mask_variants.empty() || grid.class_counts.empty()) {
        throw ConfigError("tune: empty grid");
    }
    if (train_days.empty() || val_days.empty()) {
        throw ConfigError("tune: need both training and validation days");
    }

    TuneResult result;
    double best_mape = std::numeric_limits<double>::infinity();
    auto better = [&](const TuneEntry& e, const ModelConfig& cfg) {
        if (e.val_mape < best_mape) return true;
        if (e.val_mape > best_mape) return false;
        const auto& b = result.best;
        return std::tie(cfg.classes, cfg.first_filter, cfg.mask_variant) <
               std::tie(b.classes, b.first_filter, b.mask_variant);
    };

    for (int filter : grid.filters) {
        for (int variant : grid.mask_variants) {
            for (int classes : grid.class_counts) {
                TuneEntry entry;
                entry.filter = filter;
                entry.mask_variant = variant;
                entry.classes = classes;

                ModelConfig cfg = base;
                cfg.first_filter = filter;
                cfg.inner_filter = filter;
                cfg.mask_variant = variant;
                cfg.classes = classes;
                cfg.segments = train_days.front().segments;
                try {
                    const Quantizer quantizer = Quantizer::from_classes(grid.t_max, classes);
                    const auto windows = make_windows(
                        std::vector<DayMatrix>(train_days.begin(), train_days.end()),
                        cfg.window, quantizer);
                    TrainResult tr = train(windows, cfg, train_config, quantizer);
                    if (tr.diverged) {
                        entry.failed = true;
                        entry.note = "diverged";
                    } else {
                        const ModelBundle bundle(tr.checkpoint);
                        entry.val_mape = evaluate_one_step(bundle, val_days).mape;
                        if (!std::isfinite(entry.val_mape)) {
                            entry.failed = true;
                            entry.note = "non-finite validation MAPE";
                        }
                    }
                } catch (const std::exception& e) {
                    entry.failed = true;
                    entry.note = e.what();
                }

                if (log) {
                    (*log) << "tune F=" << filter << " mask=" << variant << " C=" << classes
                           << (entry.failed ? "  failed: " + entry.note
                                            : "  val MAPE " + std::to_string(entry.val_mape) +
                                                  "%")
                           << '\n';
                }
                if (!entry.failed && (!result.has_best || better(entry, cfg))) {
                    best_mape = entry.val_mape;
                    result.best = cfg;
                    result.has_best = true;
                }
                result.table.push_back(entry);
            }
        }
    }
    return result;
}

/// Table-I-style report: one row per configuration.
inline void write_tune_csv(std::ostream& out, const TuneResult& result) {
    out << "filter,inner_filter,mask,classes,val_mape_pct,status\n";
    for (const auto& e : result.table) {
        out << e.filter << ',' << e.filter << ',' << e.mask_variant << ',' << e.classes << ',';
        if (e.failed) {
            std::string note = e.note;
            for (char& ch : note) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            out << ",failed: " << note << '\n';
        } else {
            out << e.val_mape << ",ok\n";
        }
    }
}

}  // namespace mcnn

#endif  // MCNN_TUNE_HPP
