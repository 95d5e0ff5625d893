#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cgqg::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Renders line series to a standalone SVG. log-log axes for spectra,
// linear for score curves.
void write_svg(const std::filesystem::path& path, const std::vector<Series>& series,
               const std::string& title, const std::string& xlabel,
               const std::string& ylabel, bool loglog);

// Convenience: render a CSV produced by the evaluate/theory commands.
// kind is "spectrum" (kappa,E columns, log-log) or "curve" (lead_hours vs
// mean_energy_score).
void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& out_svg,
              const std::string& kind);

}  // namespace cgqg::plot
