/*
 Copyright 2026 the anisodrc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <filesystem>

#include "anisodrc/experiment.hpp"

namespace anisodrc {

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw Error("write failed: " + path.string());
}

struct BoxStats {
    double q1, median, q3, lo_whisker, hi_whisker;
    std::vector<double> outliers;
};

/// Quartiles by linear interpolation; whiskers at the most extreme data
/// within 1.5 IQR of the box.
inline BoxStats box_stats(std::vector<double> data) {
    std::sort(data.begin(), data.end());
    const auto quantile = [&](double q) {
        const double pos = q * (data.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= data.size()) return data.back();
        const double frac = pos - i;
        return data[i] * (1 - frac) + data[i + 1] * frac;
    };
    BoxStats b{};
    b.q1 = quantile(0.25);
    b.median = quantile(0.5);
    b.q3 = quantile(0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
    b.lo_whisker = data.front();
    b.hi_whisker = data.back();
    for (double v : data) {
        if (v >= lo_fence) {
            b.lo_whisker = v;
            break;
        }
    }
    for (auto it = data.rbegin(); it != data.rend(); ++it) {
        if (*it <= hi_fence) {
            b.hi_whisker = *it;
            break;
        }
    }
    for (double v : data)
        if (v < lo_fence || v > hi_fence) b.outliers.push_back(v);
    return b;
}

}  // namespace detail

/// Box plot of per-state cost distributions, one box per (state, arm),
/// emitted as plain SVG 1.1 primitives.
inline std::string boxplot_svg(const std::vector<EvaluationReport>& reports) {
    require(!reports.empty(), "boxplot: no reports");
    const int S = static_cast<int>(reports[0].boxplot_states.size());
    const int A = static_cast<int>(reports.size());
    const char* palette[] = {"#4878a8", "#e08840", "#5ba053", "#b04a4a"};

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<std::vector<detail::BoxStats>> stats(A);
    for (int a = 0; a < A; ++a) {
        for (int s = 0; s < S; ++s) {
            const auto& M = reports[a].boxplot_costs;
            std::vector<double> col(M.cols());
            for (int r = 0; r < M.cols(); ++r) col[r] = M(s, r);
            auto b = detail::box_stats(col);
            lo = std::min({lo, b.lo_whisker, b.outliers.empty() ? b.lo_whisker
                                                                : *std::min_element(b.outliers.begin(),
                                                                                    b.outliers.end())});
            hi = std::max({hi, b.hi_whisker, b.outliers.empty() ? b.hi_whisker
                                                                : *std::max_element(b.outliers.begin(),
                                                                                    b.outliers.end())});
            stats[a].push_back(b);
        }
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const double W = 720, H = 420, ml = 70, mr = 20, mt = 30, mb = 50;
    const double plot_w = W - ml - mr, plot_h = H - mt - mb;
    auto ypix = [&](double v) { return mt + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string svg;
    auto add = [&](const std::string& s) { svg += s; };
    char buf[512];
    add("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%g\" "
                  "height=\"%g\" viewBox=\"0 0 %g %g\">\n",
                  W, H, W, H);
    add(buf);
    add("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                  mt + plot_h, ml + plot_w, mt + plot_h);
    add(buf);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt, ml,
                  mt + plot_h);
    add(buf);
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%s</text>\n",
                      ml - 6, ypix(v) + 4, format_double(v).c_str());
        add(buf);
    }
    // Boxes grouped by state.
    const double group_w = plot_w / S;
    const double box_w = std::min(28.0, group_w / (A + 1));
    for (int s = 0; s < S; ++s) {
        const double gx = ml + group_w * (s + 0.5);
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">state %d"
                      "</text>\n",
                      gx, mt + plot_h + 18, s + 1);
        add(buf);
        for (int a = 0; a < A; ++a) {
            const auto& b = stats[a][s];
            const double cx = gx + (a - (A - 1) / 2.0) * (box_w + 6);
            const double x0 = cx - box_w / 2;
            const char* color = palette[a % 4];
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\"/>\n", cx,
                          ypix(b.lo_whisker), cx, ypix(b.q1), color);
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\"/>\n", cx,
                          ypix(b.q3), cx, ypix(b.hi_whisker), color);
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<rect class=\"box\" x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" "
                          "fill=\"%s\" fill-opacity=\"0.35\" stroke=\"%s\"/>\n",
                          x0, ypix(b.q3), box_w, std::max(1.0, ypix(b.q1) - ypix(b.q3)), color,
                          color);
            add(buf);
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" "
                          "stroke-width=\"2\"/>\n",
                          x0, ypix(b.median), x0 + box_w, ypix(b.median), color);
            add(buf);
            for (double o : b.outliers) {
                std::snprintf(buf, sizeof(buf),
                              "<circle cx=\"%g\" cy=\"%g\" r=\"2\" fill=\"none\" stroke=\"%s\"/>\n",
                              cx, ypix(o), color);
                add(buf);
            }
        }
    }
    // Legend.
    for (int a = 0; a < A; ++a) {
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"12\" fill=\"%s\"/>"
                      "<text x=\"%g\" y=\"%g\" font-size=\"12\">%s</text>\n",
                      ml + 10 + a * 130.0, 8.0, palette[a % 4], ml + 26 + a * 130.0, 18.0,
                      reports[a].arm.c_str());
        add(buf);
    }
    add("</svg>\n");
    return svg;
}

inline std::string results_csv(const EvaluationReport& r) {
    std::string out = "scenario_id";
    const int nx = r.x0s.empty() ? 0 : static_cast<int>(r.x0s[0].size());
    for (int i = 0; i < nx; ++i) out += ",x0_" + std::to_string(i);
    out += ",cost,violated\n";
    for (std::size_t i = 0; i < r.costs.size(); ++i) {
        out += std::to_string(i);
        for (int k = 0; k < nx; ++k) out += "," + format_double(r.x0s[i][k]);
        out += "," + format_double(r.costs[i]);
        out += r.violated_flags[i] ? ",1\n" : ",0\n";
    }
    return out;
}

inline std::string history_csv(const EvaluationReport& r) {
    const int d = r.history.empty() ? 0 : static_cast<int>(r.history[0].eigenvalues.size());
    std::string out = "k,F,G,feasibility,mu,nu";
    for (int i = 0; i < d; ++i) out += ",eig_" + std::to_string(i);
    out += "\n";
    for (const auto& row : r.history) {
        out += std::to_string(row.k) + "," + format_double(row.F) + "," + format_double(row.G) +
               "," + format_double(row.feasibility) + "," + format_double(row.mu) + "," +
               format_double(row.nu);
        for (int i = 0; i < row.eigenvalues.size(); ++i)
            out += "," + format_double(row.eigenvalues[i]);
        out += "\n";
    }
    return out;
}

inline nlohmann::json summary_json(const EvaluationReport& r, const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["arm"] = r.arm;
    j["seed"] = r.seed;
    j["average_cost"] = r.average_cost;
    j["violation_rate"] = r.violation_rate;
    j["n_cost_scenarios"] = static_cast<int>(r.costs.size());
    j["trained"] = r.trained;
    j["train_converged"] = r.train_converged;
    std::vector<std::vector<double>> lam;
    for (int i = 0; i < r.learned_lambda.rows(); ++i) {
        std::vector<double> row(r.learned_lambda.cols());
        for (int k = 0; k < r.learned_lambda.cols(); ++k) row[k] = r.learned_lambda(i, k);
        lam.push_back(row);
    }
    j["learned_lambda"] = lam;
    j["config"] = cfg.echo.is_null() ? nlohmann::json::object() : cfg.echo;
    return j;
}

/// Writes results.csv, summary.json, history.csv for one arm into outdir and
/// a combined boxplot.svg over all passed arms.
inline void emit_report(const std::vector<EvaluationReport>& reports,
                        const std::vector<ScenarioConfig>& cfgs, const std::string& outdir) {
    require(!reports.empty() && reports.size() == cfgs.size(),
            "emit_report: reports/configs mismatch");
    namespace fs = std::filesystem;
    fs::path root(outdir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw Error("cannot create output directory " + root.string() + ": " + ec.message());

    const bool single = reports.size() == 1;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        fs::path dir = single ? root : root / reports[i].arm;
        fs::create_directories(dir, ec);
        if (ec) throw Error("cannot create output directory " + dir.string());
        detail::write_file(dir / "results.csv", results_csv(reports[i]));
        detail::write_file(dir / "history.csv", history_csv(reports[i]));
        detail::write_file(dir / "summary.json", summary_json(reports[i], cfgs[i]).dump(2) + "\n");
    }
    detail::write_file(root / "boxplot.svg", boxplot_svg(reports));
}

}  // namespace anisodrc
