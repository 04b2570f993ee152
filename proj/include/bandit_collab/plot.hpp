#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "io.hpp"

namespace bandit_collab {

enum class PlotKind { Speedup, Errors };

inline PlotKind parse_plot_kind(const std::string& name) {
    if (name == "speedup") return PlotKind::Speedup;
    if (name == "errors") return PlotKind::Errors;
    throw usage_error("unknown plot kind '" + name + "' (expected speedup or errors)");
}

namespace detail {

inline std::string python_string(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

/// Builds a standalone matplotlib script that plots the given CSV text. The
/// data is embedded, so the script does not need the CSV at run time.
/// A header-only or empty CSV yields a script that reports "no data" and exits.
inline std::string plot_script(std::string_view csv_text, PlotKind kind, std::string_view title = "") {
    const auto rows = parse_csv(csv_text);
    const std::string_view header = kind == PlotKind::Speedup ? kSpeedupHeader : kErrorsHeader;
    std::vector<std::vector<std::string>> data;
    if (!rows.empty()) {
        std::string got;
        for (std::size_t i = 0; i < rows[0].size(); ++i) got += (i ? "," : "") + rows[0][i];
        if (got != header)
            throw structural_error("CSV header '" + got + "' does not match expected '" + std::string(header) + "'");
        data.assign(rows.begin() + 1, rows.end());
    }

    std::ostringstream py;
    py << "#!/usr/bin/env python3\n"
       << "import sys\n\n"
       << "COLUMNS = " << detail::python_string(header) << ".split(\",\")\n"
       << "ROWS = [\n";
    for (const auto& row : data) {
        py << "    [";
        for (std::size_t i = 0; i < row.size(); ++i) py << (i ? ", " : "") << detail::python_string(row[i]);
        py << "],\n";
    }
    py << "]\n\n"
       << "if not ROWS:\n"
       << "    print(\"no data to plot\")\n"
       << "    sys.exit(0)\n\n"
       << "import matplotlib\n"
       << "matplotlib.use(\"Agg\")\n"
       << "import matplotlib.pyplot as plt\n\n"
       << "col = {name: i for i, name in enumerate(COLUMNS)}\n"
       << "out = sys.argv[1] if len(sys.argv) > 1 else "
       << (kind == PlotKind::Speedup ? "\"speedup.png\"" : "\"errors.png\"") << "\n"
       << "fig, ax = plt.subplots(figsize=(6, 4))\n";
    if (kind == PlotKind::Speedup) {
        py << "pts = sorted((int(r[col[\"R\"]]), float(r[col[\"speedup\"]])) for r in ROWS)\n"
           << "ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=\"o\")\n"
           << "ax.axhline(1.0, color=\"grey\", linestyle=\":\")\n"
           << "ax.set_xlabel(\"rounds R\")\n"
           << "ax.set_ylabel(\"empirical speedup\")\n";
    } else {
        py << "groups = {}\n"
           << "for r in ROWS:\n"
           << "    key = (r[col[\"variant\"]], r[col[\"K\"]], r[col[\"R\"]])\n"
           << "    groups.setdefault(key, []).append((int(r[col[\"T\"]]), float(r[col[\"rate\"]]),\n"
           << "                                       float(r[col[\"ci_low\"]]), float(r[col[\"ci_high\"]])))\n"
           << "for (variant, K, R), pts in sorted(groups.items()):\n"
           << "    pts.sort()\n"
           << "    T = [p[0] for p in pts]\n"
           << "    rate = [p[1] for p in pts]\n"
           << "    err = [[p[1] - p[2] for p in pts], [p[3] - p[1] for p in pts]]\n"
           << "    ax.errorbar(T, rate, yerr=err, marker=\"o\", capsize=3, label=f\"{variant} K={K} R={R}\")\n"
           << "ax.set_xscale(\"log\")\n"
           << "ax.set_xlabel(\"horizon T\")\n"
           << "ax.set_ylabel(\"error rate\")\n"
           << "ax.legend()\n";
    }
    if (!title.empty()) py << "ax.set_title(" << detail::python_string(title) << ")\n";
    py << "fig.tight_layout()\n"
       << "fig.savefig(out, dpi=150)\n"
       << "print(out)\n";
    return py.str();
}

/// Reads `csv_path` and writes the plotting script to `script_path`.
inline void emit_plot_script(const std::string& csv_path, PlotKind kind, const std::string& script_path) {
    write_file(script_path, plot_script(read_file(csv_path), kind, csv_path));
}

}  // namespace bandit_collab
