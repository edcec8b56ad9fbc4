#pragma once

#include "herd/loceval.hpp"
#include "herd/reideval.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace herd {

/** Fixed-precision numeric formatting so reruns emit identical bytes. */
std::string format_value(double v);

std::uint64_t fnv64(const std::string& data);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const CsvTable& table, const std::string& path);
CsvTable read_csv(const std::string& path);

/** loc_metrics.csv: metric,name,value rows for one geometry mode. */
CsvTable localisation_csv(const LocalisationReport& report, const std::string& geometry);
/** per-frame series CSV: frame_id, mean_iou, usage_rate (blank when undefined). */
CsvTable per_frame_csv(const LocalisationReport& report);

/** reid_report.csv: per-fold metric rows plus aggregate mean/std rows. */
CsvTable reid_report_csv(const ProtocolReport& report);
CsvTable embeddings_csv(const ProtocolReport& report);
CsvTable losses_csv(const std::vector<double>& epoch_losses);

struct SeriesPlot {
    std::string title;
    std::string y_label;
    std::vector<std::string> x_labels;
    std::vector<std::pair<std::string, std::vector<std::optional<double>>>> series;
};

void write_line_svg(const SeriesPlot& plot, const std::string& path);

struct ScatterPlot {
    std::string title;
    std::vector<std::array<double, 2>> points;
    std::vector<std::string> labels; // one per point; color assignment by first occurrence
};

void write_scatter_svg(const ScatterPlot& plot, const std::string& path);

void write_run_meta(const std::string& path, const std::string& command,
                    const std::string& config_text, std::uint64_t seed);

} // namespace herd
