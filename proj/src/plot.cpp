#include "cgqg/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "cgqg/io.hpp"

namespace cgqg::plot {

namespace {

constexpr int kW = 720, kH = 480;
constexpr int kMargin = 64;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

double tr(double v, double lo, double hi, double out_lo, double out_hi) {
    if (hi == lo) return 0.5 * (out_lo + out_hi);
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
}

}  // namespace

void write_svg(const std::filesystem::path& path, const std::vector<Series>& series,
               const std::string& title, const std::string& xlabel,
               const std::string& ylabel, bool loglog) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto t = [&](double v) { return loglog ? std::log10(v) : v; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (loglog && (!(s.x[i] > 0) || !(s.y[i] > 0))) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, t(s.x[i]));
            xmax = std::max(xmax, t(s.x[i]));
            ymin = std::min(ymin, t(s.y[i]));
            ymax = std::max(ymax, t(s.y[i]));
        }
    }
    if (!(xmin <= xmax)) throw std::invalid_argument("write_svg: no finite data");

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << kH / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << kH / 2
       << ")\">" << ylabel << "</text>\n";
    os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kW - 2 * kMargin
       << "\" height=\"" << kH - 2 * kMargin
       << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

    // axis extremes as plain labels
    char buf[64];
    auto label = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.3g", loglog ? std::pow(10.0, v) : v);
        return std::string(buf);
    };
    os << "<text x=\"" << kMargin << "\" y=\"" << kH - kMargin + 16
       << "\" font-size=\"11\">" << label(xmin) << "</text>\n";
    os << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - kMargin + 16
       << "\" text-anchor=\"end\" font-size=\"11\">" << label(xmax) << "</text>\n";
    os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kH - kMargin
       << "\" text-anchor=\"end\" font-size=\"11\">" << label(ymin) << "</text>\n";
    os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << label(ymax) << "</text>\n";

    int ci = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << kColors[ci % 6]
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (loglog && (!(s.x[i] > 0) || !(s.y[i] > 0))) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            const double px = tr(t(s.x[i]), xmin, xmax, kMargin, kW - kMargin);
            const double py = tr(t(s.y[i]), ymin, ymax, kH - kMargin, kMargin);
            os << px << "," << py << " ";
        }
        os << "\"/>\n";
        os << "<text x=\"" << kW - kMargin - 8 << "\" y=\"" << kMargin + 18 + 16 * ci
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kColors[ci % 6] << "\">"
           << s.label << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& out_svg,
              const std::string& kind) {
    const auto cols = io::read_csv(csv);
    auto find = [&](const std::string& name) -> const io::CsvColumn* {
        for (const auto& c : cols)
            if (c.name == name) return &c;
        return nullptr;
    };
    if (kind == "spectrum") {
        const auto* k = find("kappa");
        const auto* e = find("E");
        if (!k || !e) throw std::invalid_argument("spectrum csv needs kappa,E columns");
        write_svg(out_svg, {{csv.stem().string(), k->values, e->values}},
                  "kinetic energy spectrum", "kappa (rad/m)", "E(kappa)", true);
    } else if (kind == "curve") {
        const auto* x = find("lead_hours");
        const auto* y = find("mean_energy_score");
        if (!x || !y) throw std::invalid_argument("curve csv needs lead_hours,mean_energy_score");
        write_svg(out_svg, {{csv.stem().string(), x->values, y->values}},
                  "mean energy score vs lead time", "lead (hours)", "energy score", false);
    } else {
        throw std::invalid_argument("plot kind must be 'spectrum' or 'curve'");
    }
}

}  // namespace cgqg::plot
