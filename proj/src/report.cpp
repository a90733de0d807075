#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "critmem/errors.hpp"
#include "critmem/harness.hpp"
#include "critmem/store.hpp"

namespace critmem {

namespace {

std::string percent(double fraction_value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", fraction_value * 100.0);
    return buffer;
}

std::string format_count(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.0f", value);
    return buffer;
}

std::vector<std::string> dataset_names(const Json& report) {
    std::vector<std::string> names;
    for (const auto& [name, _] : report.at("datasets").items()) names.push_back(name);
    return names;
}

// mean accuracy for (dataset, strategy, fraction), if that cell row exists
std::optional<double> mean_accuracy(const Json& report, const std::string& dataset,
                                    const std::string& strategy, const std::string& fraction_key) {
    const Json& datasets = report.at("datasets");
    if (!datasets.contains(dataset)) return std::nullopt;
    const Json& accuracy = datasets.at(dataset).at("accuracy");
    if (!accuracy.contains(strategy)) return std::nullopt;
    const Json& per_fraction = accuracy.at(strategy);
    if (!per_fraction.contains(fraction_key)) return std::nullopt;
    return per_fraction.at(fraction_key).at("mean").get<double>();
}

class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) : rows_{std::move(header)} {}

    void add_row(std::vector<std::string> row) {
        row.resize(rows_.front().size());
        rows_.push_back(std::move(row));
    }

    void add_separator() { separators_.push_back(rows_.size()); }

    std::string render() const {
        std::vector<std::size_t> widths(rows_.front().size(), 0);
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                widths[c] = std::max(widths[c], row[c].size());
            }
        }
        std::string out;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (std::find(separators_.begin(), separators_.end(), r) != separators_.end()) {
                for (std::size_t c = 0; c < widths.size(); ++c) {
                    out += std::string(widths[c], '-');
                    out += (c + 1 < widths.size()) ? "-+-" : "";
                }
                out.push_back('\n');
            }
            const auto& row = rows_[r];
            for (std::size_t c = 0; c < row.size(); ++c) {
                out += row[c];
                out += std::string(widths[c] - row[c].size(), ' ');
                out += (c + 1 < row.size()) ? " | " : "";
            }
            out.push_back('\n');
            if (r == 0) {
                for (std::size_t c = 0; c < widths.size(); ++c) {
                    out += std::string(widths[c], '=');
                    out += (c + 1 < widths.size()) ? "=+=" : "";
                }
                out.push_back('\n');
            }
        }
        return out;
    }

private:
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> separators_;
};

} // namespace

GainTable aggregate_gains(const Json& report, double fraction) {
    const std::string fraction_key = format_fraction(fraction);
    const std::string baseline_key = format_fraction(1.0); // zero_shot canonical cell
    GainTable table;
    for (const auto& dataset : dataset_names(report)) {
        auto cell = [&](const char* strategy, const std::string& key) {
            auto value = mean_accuracy(report, dataset, strategy, key);
            if (!value) {
                throw AggregationError("gains: dataset '" + dataset + "' missing " + strategy +
                                       " at fraction " + key);
            }
            return *value;
        };
        const double zero_shot = cell("zero_shot", baseline_key);
        const double ep_label = cell("ep_label", fraction_key);
        const double ep_crit = cell("ep_crit", fraction_key);
        const double sem_crit = cell("sem_crit", fraction_key);
        const double ep_sem_crit = cell("ep_sem_crit", fraction_key);
        GainRow row;
        row.dataset = dataset;
        row.best_critique = std::max({ep_crit, sem_crit, ep_sem_crit});
        row.best_baseline = std::max(zero_shot, ep_label);
        row.gain = row.best_critique - row.best_baseline;
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw AggregationError("gains: no datasets in report");
    double sum = 0.0;
    for (const auto& row : table.rows) sum += row.gain;
    table.mean = sum / static_cast<double>(table.rows.size());
    double spread = 0.0;
    for (const auto& row : table.rows) {
        // gains are reported in percentage points, so the variance is too
        const double delta = (row.gain - table.mean) * 100.0;
        spread += delta * delta;
    }
    table.variance = spread / static_cast<double>(table.rows.size());
    return table;
}

std::string render_accuracy_table(const Json& report, double fraction) {
    const std::vector<std::string> names = dataset_names(report);
    std::vector<std::string> header{"strategy"};
    header.insert(header.end(), names.begin(), names.end());
    TextTable table(std::move(header));

    for (StrategyKind strategy : kAllStrategies) {
        const std::string strategy_name = to_string(strategy);
        const std::string fraction_key =
            strategy == StrategyKind::zero_shot ? format_fraction(1.0) : format_fraction(fraction);
        std::vector<std::string> row{strategy_name};
        bool any = false;
        for (const auto& dataset : names) {
            auto value = mean_accuracy(report, dataset, strategy_name, fraction_key);
            row.push_back(value ? percent(*value) : "-");
            any = any || value.has_value();
        }
        if (any) table.add_row(std::move(row));
    }
    return table.render();
}

std::string render_fraction_grid(const Json& report) {
    const std::vector<std::string> names = dataset_names(report);
    std::vector<std::string> fraction_keys;
    for (const auto& dataset : names) {
        const Json& sizes = report.at("datasets").at(dataset).at("memory_sizes");
        for (const auto& [key, _] : sizes.items()) {
            if (std::find(fraction_keys.begin(), fraction_keys.end(), key) ==
                fraction_keys.end()) {
                fraction_keys.push_back(key);
            }
        }
    }
    std::sort(fraction_keys.begin(), fraction_keys.end(),
              [](const std::string& a, const std::string& b) {
                  return std::stod(a) < std::stod(b);
              });

    std::vector<std::string> header{"experiment"};
    header.insert(header.end(), names.begin(), names.end());
    TextTable table(std::move(header));

    auto add_strategy_row = [&](const std::string& strategy, const std::string& fraction_key,
                                const std::string& label) {
        std::vector<std::string> row{label};
        bool any = false;
        for (const auto& dataset : names) {
            auto value = mean_accuracy(report, dataset, strategy, fraction_key);
            row.push_back(value ? percent(*value) : "-");
            any = any || value.has_value();
        }
        if (any) table.add_row(std::move(row));
    };

    add_strategy_row("zero_shot", format_fraction(1.0), "zero_shot");
    add_strategy_row("ep_label", format_fraction(1.0), "ep_label");
    for (const char* strategy : {"ep_crit", "ep_sem_crit"}) {
        table.add_separator();
        for (const auto& fraction_key : fraction_keys) {
            add_strategy_row(strategy, fraction_key,
                             std::string(strategy) + " " +
                                 format_count(std::stod(fraction_key) * 100.0) + "%");
        }
    }
    return table.render();
}

std::string render_probe_table(const Json& report) {
    const std::vector<std::string> names = dataset_names(report);
    std::vector<std::string> header{"condition"};
    header.insert(header.end(), names.begin(), names.end());
    TextTable table(std::move(header));
    for (ProbeCondition condition : kAllProbeConditions) {
        std::vector<std::string> row{to_string(condition)};
        bool any = false;
        for (const auto& dataset : names) {
            const Json& entry = report.at("datasets").at(dataset);
            if (entry.contains("probes") && entry.at("probes").contains(to_string(condition))) {
                row.push_back(
                    percent(entry.at("probes").at(to_string(condition)).at("mean_s").get<double>()));
                any = true;
            } else {
                row.push_back("-");
            }
        }
        if (any) table.add_row(std::move(row));
    }
    return table.render();
}

std::string render_token_table(const Json& report, double fraction) {
    const std::string fraction_key = format_fraction(fraction);
    const std::vector<std::string> names = dataset_names(report);
    TextTable table({"experiment", "avg training tokens", "avg utilization tokens"});

    for (StrategyKind strategy :
         {StrategyKind::ep_crit, StrategyKind::sem_crit, StrategyKind::ep_sem_crit}) {
        double training_sum = 0.0;
        double utilization_sum = 0.0;
        std::size_t counted = 0;
        for (const auto& dataset : names) {
            const Json& entry = report.at("datasets").at(dataset);
            const Json& training = entry.at("training_tokens");
            const Json& utilization = entry.at("utilization_tokens");
            if (!training.contains(fraction_key) ||
                !utilization.contains(to_string(strategy)) ||
                !utilization.at(to_string(strategy)).contains(fraction_key)) {
                continue;
            }
            const Json& slice = training.at(fraction_key);
            double train_tokens = slice.value("critiques", 0.0);
            if (strategy_uses_semantic(strategy)) train_tokens += slice.value("semantic", 0.0);
            const Json& used = utilization.at(to_string(strategy)).at(fraction_key);
            training_sum += train_tokens;
            utilization_sum += used.at("prompt_tokens").get<double>() +
                               used.at("completion_tokens").get<double>();
            ++counted;
        }
        if (counted == 0) continue;
        table.add_row({to_string(strategy), format_count(training_sum / counted),
                       format_count(utilization_sum / counted)});
    }
    return table.render();
}

std::string render_gain_table(const GainTable& gains) {
    TextTable table({"dataset", "best critique", "best baseline", "gain"});
    for (const auto& row : gains.rows) {
        table.add_row({row.dataset, percent(row.best_critique), percent(row.best_baseline),
                       percent(row.gain)});
    }
    table.add_separator();
    char mean_buffer[64];
    std::snprintf(mean_buffer, sizeof(mean_buffer), "mean %.1f", gains.mean * 100.0);
    char variance_buffer[64];
    std::snprintf(variance_buffer, sizeof(variance_buffer), "variance %.1f", gains.variance);
    table.add_row({"(all)", "", mean_buffer, variance_buffer});
    return table.render();
}

} // namespace critmem
