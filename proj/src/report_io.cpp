#include "herd/report_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace herd {

namespace {

constexpr const char* kVersion = "0.1.0";

const char* kPalette[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#eeca3b",
                          "#b279a2", "#ff9da6", "#9d755d", "#bab0ac", "#2f4b7c", "#a05195",
                          "#d45087", "#f95d6a", "#ff7c43", "#ffa600", "#488f31", "#de425b",
                          "#69b3a2", "#404080", "#bb5566", "#004488", "#ddaa33", "#000000"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string format_value(double v) {
    char buf[64];
    if (v == 0.0) v = 0.0; // normalize negative zero
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::uint64_t fnv64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_csv(const CsvTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(table.header[i]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(row[i]);
        }
        out << '\n';
    }
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::string cell;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cell += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                cells.push_back(std::move(cell));
                cell.clear();
            } else {
                cell += c;
            }
        }
        cells.push_back(std::move(cell));
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

CsvTable localisation_csv(const LocalisationReport& report, const std::string& geometry) {
    CsvTable t;
    t.header = {"geometry", "metric", "value"};
    t.rows.push_back({geometry, "mean_iou", format_value(report.mean_iou)});
    t.rows.push_back({geometry, "tp_accuracy", format_value(report.tp_accuracy)});
    t.rows.push_back({geometry, "usage_rate",
                      report.usage_rate ? format_value(*report.usage_rate) : std::string()});
    t.rows.push_back({geometry, "matching_rate", format_value(report.matching_rate)});
    for (const auto& [identity, iou] : report.per_individual) {
        t.rows.push_back({geometry, "individual_iou:" + identity, format_value(iou)});
    }
    return t;
}

CsvTable per_frame_csv(const LocalisationReport& report) {
    CsvTable t;
    t.header = {"frame_id", "mean_iou", "usage_rate"};
    for (const FrameStats& fs : report.per_frame) {
        t.rows.push_back({fs.frame_id, fs.mean_iou ? format_value(*fs.mean_iou) : std::string(),
                          fs.usage_rate ? format_value(*fs.usage_rate) : std::string()});
    }
    return t;
}

CsvTable reid_report_csv(const ProtocolReport& report) {
    CsvTable t;
    t.header = {"fold", "metric", "value"};
    for (const FoldReport& f : report.folds) {
        t.rows.push_back({f.fold, "knn_accuracy", format_value(f.knn_accuracy)});
        t.rows.push_back({f.fold, "ari", format_value(f.ari)});
        t.rows.push_back({f.fold, "ami", format_value(f.ami)});
        t.rows.push_back({f.fold, "nmi", format_value(f.nmi)});
        t.rows.push_back({f.fold, "ha_accuracy", format_value(f.ha_accuracy)});
        t.rows.push_back({f.fold, "best_epoch", std::to_string(f.best_epoch)});
    }
    const auto agg = [&](const char* name, const Aggregate& a) {
        t.rows.push_back({"aggregate", std::string(name) + "_mean", format_value(a.mean)});
        t.rows.push_back({"aggregate", std::string(name) + "_std", format_value(a.stddev)});
    };
    agg("knn_accuracy", report.knn);
    agg("ari", report.ari);
    agg("ami", report.ami);
    agg("nmi", report.nmi);
    agg("ha_accuracy", report.ha);
    return t;
}

CsvTable embeddings_csv(const ProtocolReport& report) {
    CsvTable t;
    std::size_t dim = 0;
    for (const FoldReport& f : report.folds) {
        if (!f.test_embeddings.empty()) {
            dim = f.test_embeddings.front().size();
            break;
        }
    }
    t.header = {"fold", "sample_id", "label", "kmeans"};
    for (std::size_t d = 0; d < dim; ++d) t.header.push_back("e" + std::to_string(d));
    for (const FoldReport& f : report.folds) {
        for (std::size_t i = 0; i < f.test_embeddings.size(); ++i) {
            std::vector<std::string> row{f.fold, f.test_sample_ids[i], f.test_labels[i],
                                         std::to_string(f.kmeans_labels[i])};
            for (double v : f.test_embeddings[i]) row.push_back(format_value(v));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

CsvTable losses_csv(const std::vector<double>& epoch_losses) {
    CsvTable t;
    t.header = {"epoch", "loss"};
    for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
        t.rows.push_back({std::to_string(i + 1), format_value(epoch_losses[i])});
    }
    return t;
}

namespace {

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

void write_line_svg(const SeriesPlot& plot, const std::string& path) {
    constexpr double kW = 960, kH = 420, kL = 70, kR = 30, kT = 48, kB = 58;
    const double plot_w = kW - kL - kR;
    const double plot_h = kH - kT - kB;

    double lo = 0.0, hi = 1.0;
    bool any = false;
    for (const auto& [name, values] : plot.series) {
        for (const auto& v : values) {
            if (!v) continue;
            if (!any) {
                lo = hi = *v;
                any = true;
            } else {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
    }
    if (!any) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        hi += 0.5;
        lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const std::size_t n = plot.x_labels.size();
    const auto x_of = [&](std::size_t i) {
        return n <= 1 ? kL + plot_w / 2 : kL + plot_w * static_cast<double>(i) / (n - 1);
    };
    const auto y_of = [&](double v) { return kT + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("svg: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << svg_escape(plot.title) << "</text>\n";

    // axes and horizontal gridlines
    for (int g = 0; g <= 4; ++g) {
        const double v = lo + (hi - lo) * g / 4.0;
        const double y = y_of(v);
        out << "<line x1=\"" << kL << "\" y1=\"" << fmt_coord(y) << "\" x2=\"" << kW - kR
            << "\" y2=\"" << fmt_coord(y) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << kL - 8 << "\" y=\"" << fmt_coord(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_value(std::round(v * 1000.0) / 1000.0) << "</text>\n";
    }
    out << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
        << kH - kB << "\" stroke=\"black\"/>\n";
    out << "<text x=\"16\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 16 " << kH / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << svg_escape(plot.y_label) << "</text>\n";

    // sparse x tick labels
    const std::size_t step = std::max<std::size_t>(1, n / 8);
    for (std::size_t i = 0; i < n; i += step) {
        out << "<text x=\"" << fmt_coord(x_of(i)) << "\" y=\"" << kH - kB + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << svg_escape(plot.x_labels[i]) << "</text>\n";
    }

    std::size_t color = 0;
    double legend_x = kL;
    for (const auto& [name, values] : plot.series) {
        const char* stroke = kPalette[color % kPaletteSize];
        std::string points;
        bool open = false;
        for (std::size_t i = 0; i < values.size() && i < n; ++i) {
            if (!values[i]) {
                if (open && !points.empty()) {
                    out << "<polyline fill=\"none\" stroke=\"" << stroke
                        << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
                    points.clear();
                }
                open = false;
                continue;
            }
            points += fmt_coord(x_of(i)) + "," + fmt_coord(y_of(*values[i])) + " ";
            open = true;
        }
        if (!points.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << stroke
                << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
        }
        out << "<rect x=\"" << fmt_coord(legend_x) << "\" y=\"" << kH - 22
            << "\" width=\"12\" height=\"3\" fill=\"" << stroke << "\"/>\n";
        out << "<text x=\"" << fmt_coord(legend_x + 16) << "\" y=\"" << kH - 16
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_escape(name)
            << "</text>\n";
        legend_x += 18.0 + 7.0 * static_cast<double>(name.size()) + 14.0;
        ++color;
    }
    out << "</svg>\n";
}

void write_scatter_svg(const ScatterPlot& plot, const std::string& path) {
    if (plot.points.size() != plot.labels.size()) {
        throw std::invalid_argument("scatter: point/label count mismatch");
    }
    constexpr double kW = 640, kH = 640, kM = 56;

    double lox = 0, hix = 1, loy = 0, hiy = 1;
    if (!plot.points.empty()) {
        lox = hix = plot.points.front()[0];
        loy = hiy = plot.points.front()[1];
        for (const auto& p : plot.points) {
            lox = std::min(lox, p[0]);
            hix = std::max(hix, p[0]);
            loy = std::min(loy, p[1]);
            hiy = std::max(hiy, p[1]);
        }
    }
    if (hix - lox < 1e-12) {
        hix += 0.5;
        lox -= 0.5;
    }
    if (hiy - loy < 1e-12) {
        hiy += 0.5;
        loy -= 0.5;
    }

    std::map<std::string, std::size_t> color_of;
    for (const std::string& lab : plot.labels) color_of.emplace(lab, color_of.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("svg: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << svg_escape(plot.title) << "</text>\n";
    out << "<rect x=\"" << kM << "\" y=\"" << kM << "\" width=\"" << kW - 2 * kM << "\" height=\""
        << kH - 2 * kM << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (std::size_t i = 0; i < plot.points.size(); ++i) {
        const double x = kM + (kW - 2 * kM) * (plot.points[i][0] - lox) / (hix - lox);
        const double y = kM + (kH - 2 * kM) * (1.0 - (plot.points[i][1] - loy) / (hiy - loy));
        out << "<circle cx=\"" << fmt_coord(x) << "\" cy=\"" << fmt_coord(y) << "\" r=\"3.5\""
            << " fill=\"" << kPalette[color_of[plot.labels[i]] % kPaletteSize]
            << "\" fill-opacity=\"0.8\"/>\n";
    }
    out << "</svg>\n";
}

void write_run_meta(const std::string& path, const std::string& command,
                    const std::string& config_text, std::uint64_t seed) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv64(config_text)));
    nlohmann::json j{{"tool", "herdkit"},
                     {"version", kVersion},
                     {"command", command},
                     {"seed", seed},
                     {"config_hash", hash}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("run_meta: cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace herd
