#include "amlab/report.hpp"

#include "amlab/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace amlab {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& path) {
    if (points.empty()) throw ConfigError("report: no trade-off points");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "knob_name,knob_value,defender_acc,clone_acc,attack,strategy,seed\n";
    for (const auto& p : points)
        out << p.knob_name << "," << format_double(p.knob_value) << ","
            << format_double(p.defender_accuracy) << "," << format_double(p.clone_accuracy)
            << "," << attack_kind_name(p.attack) << "," << label_strategy_name(p.strategy)
            << "," << p.seed << "\n";
}

std::vector<TradeoffPoint> read_tradeoff_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "knob_name,knob_value,defender_acc,clone_acc,attack,strategy,seed")
        throw FormatError(path + ": unexpected trade-off CSV header");
    std::vector<TradeoffPoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        TradeoffPoint p;
        std::getline(ss, p.knob_name, ',');
        std::getline(ss, field, ',');
        p.knob_value = std::stod(field);
        std::getline(ss, field, ',');
        p.defender_accuracy = std::stod(field);
        std::getline(ss, field, ',');
        p.clone_accuracy = std::stod(field);
        std::getline(ss, field, ',');
        p.attack = attack_kind_from_name(field);
        std::getline(ss, field, ',');
        p.strategy = label_strategy_from_name(field);
        std::getline(ss, field, ',');
        p.seed = std::stoull(field);
        points.push_back(std::move(p));
    }
    return points;
}

void write_cdf_csv(const std::vector<CdfSeries>& series, const std::string& path) {
    if (series.empty()) throw ConfigError("report: no CDF series");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "value,cum_fraction,label\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.values.size(); ++i)
            out << format_double(s.values[i]) << "," << format_double(s.cum_fractions[i]) << ","
                << s.label << "\n";
}

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
    double lo, hi;
    double to_px(double v, int pixels, bool flip) const {
        double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        if (flip) t = 1.0 - t;
        return kMargin + t * pixels;
    }
};

void svg_header(std::ostream& out) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
        << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
}

void polyline(std::ostream& out, const std::vector<std::pair<double, double>>& pts,
              const Range& xr, const Range& yr, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts)
        out << format_double(xr.to_px(x, kWidth - 2 * kMargin, false)) << ","
            << format_double(yr.to_px(y, kHeight - 2 * kMargin, true)) << " ";
    out << "\"/>\n";
}

}  // namespace

void write_tradeoff_svg(const std::vector<TradeoffPoint>& points, const std::string& path) {
    if (points.empty()) throw ConfigError("report: no trade-off points");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    svg_header(out);
    Range xr{0.0, 1.0}, yr{0.0, 1.0};
    // One curve per (attack, strategy) pair, ordered by knob value.
    std::vector<std::pair<AttackKind, LabelStrategy>> groups;
    for (const auto& p : points) {
        std::pair<AttackKind, LabelStrategy> g{p.attack, p.strategy};
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    int color = 0;
    for (const auto& g : groups) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : points)
            if (p.attack == g.first && p.strategy == g.second)
                pts.emplace_back(p.defender_accuracy, p.clone_accuracy);
        std::sort(pts.begin(), pts.end());
        polyline(out, pts, xr, yr, kPalette[color % 6]);
        ++color;
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">defender accuracy</text>\n"
        << "<text x=\"14\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
        << kHeight / 2 << ")\">clone accuracy</text>\n</svg>\n";
}

void write_cdf_svg(const std::vector<CdfSeries>& series, const std::string& path) {
    if (series.empty()) throw ConfigError("report: no CDF series");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    svg_header(out);
    double lo = series[0].values.front(), hi = series[0].values.back();
    for (const auto& s : series) {
        lo = std::min(lo, s.values.front());
        hi = std::max(hi, s.values.back());
    }
    Range xr{lo, hi}, yr{0.0, 1.0};
    int color = 0;
    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < s.values.size(); ++i)
            pts.emplace_back(s.values[i], s.cum_fractions[i]);
        polyline(out, pts, xr, yr, kPalette[color % 6]);
        out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 16 + 16 * color
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kPalette[color % 6] << "\">"
            << s.label << "</text>\n";
        ++color;
    }
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">value</text>\n</svg>\n";
}

}  // namespace amlab
