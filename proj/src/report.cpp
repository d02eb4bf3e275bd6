#include "distscale/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "distscale/dataset.hpp"

namespace distscale {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish(bool include_zero = false) {
        if (!std::isfinite(lo)) lo = hi = 0.0;
        if (include_zero) lo = std::min(lo, 0.0);
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        if (!(include_zero && lo == 0.0)) lo -= pad;
        hi += pad;
    }
};

class Canvas {
public:
    Canvas(Range x, Range y) : x_(x), y_(y) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }

    double sx(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
    double sy(double v) const { return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

    void axes(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
        const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
        out_ << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
             << "</text>\n";
        out_ << "<rect x=\"" << px(x0) << "\" y=\"" << px(y1) << "\" width=\"" << px(x1 - x0) << "\" height=\""
             << px(y0 - y1) << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int i = 0; i <= 5; ++i) {
            const double xv = x_.lo + (x_.hi - x_.lo) * i / 5.0;
            const double yv = y_.lo + (y_.hi - y_.lo) * i / 5.0;
            out_ << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(y0 + 16) << "\" text-anchor=\"middle\">" << fmt(xv)
                 << "</text>\n";
            out_ << "<text x=\"" << px(x0 - 6) << "\" y=\"" << px(sy(yv) + 4) << "\" text-anchor=\"end\">" << fmt(yv)
                 << "</text>\n";
            out_ << "<line x1=\"" << px(x0) << "\" y1=\"" << px(sy(yv)) << "\" x2=\"" << px(x1) << "\" y2=\""
                 << px(sy(yv)) << "\" stroke=\"#eee\"/>\n";
        }
        out_ << "<text x=\"" << px((x0 + x1) / 2) << "\" y=\"" << px(kHeight - 12)
             << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
        out_ << "<text transform=\"translate(16," << px((y0 + y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
             << ylabel << "</text>\n";
    }

    void polyline(std::span<const double> xs, std::span<const double> ys, const std::string& color,
                  bool dashed = false) {
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\""
             << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            out_ << px(sx(xs[i])) << ',' << px(sy(ys[i])) << ' ';
        }
        out_ << "\"/>\n";
    }

    void dots(std::span<const double> xs, std::span<const double> ys, const std::string& color, double r = 2.5) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            out_ << "<circle cx=\"" << px(sx(xs[i])) << "\" cy=\"" << px(sy(ys[i])) << "\" r=\"" << px(r)
                 << "\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
        }
    }

    void legend(int row, const std::string& color, const std::string& label, bool dashed = false) {
        const double x = kLeft + 12, y = kTop + 16 + 18 * row;
        out_ << "<line x1=\"" << px(x) << "\" y1=\"" << px(y - 4) << "\" x2=\"" << px(x + 24) << "\" y2=\""
             << px(y - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
             << (dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
        out_ << "<text x=\"" << px(x + 30) << "\" y=\"" << px(y) << "\">" << label << "</text>\n";
    }

    std::ostringstream& raw() { return out_; }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    Range x_, y_;
    std::ostringstream out_;
};

// Mean error per distinct load, in increasing load order.
std::pair<std::vector<double>, std::vector<double>> per_load(const ErrorCurve& c) {
    std::map<double, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < c.loads.size(); ++i) {
        auto& a = acc[c.loads[i]];
        a.first += c.errors[i];
        ++a.second;
    }
    std::vector<double> xs, ys;
    for (const auto& [x, a] : acc) {
        xs.push_back(x);
        ys.push_back(a.first / a.second);
    }
    return {xs, ys};
}

}  // namespace

std::string error_vs_load_svg(const ErrorCurve& learned, const ErrorCurve& baseline) {
    Range x, y;
    for (const auto* c : {&learned, &baseline}) {
        for (double v : c->loads) x.add(v);
        for (double v : c->errors) y.add(v);
        y.add(c->mean);
    }
    x.finish();
    y.finish(true);
    Canvas cv(x, y);
    cv.axes("Scaling error against load", "load", "error (%)");
    const std::string learned_color = "#1f77b4", baseline_color = "#d62728";
    for (const auto& [c, color] : {std::pair{&learned, learned_color}, std::pair{&baseline, baseline_color}}) {
        cv.dots(c->loads, c->errors, color, 1.8);
        const auto [xs, ys] = per_load(*c);
        cv.polyline(xs, ys, color);
        const double xm[2] = {x.lo, x.hi};
        const double ym[2] = {c->mean, c->mean};
        cv.polyline(xm, ym, color, true);
    }
    cv.legend(0, learned_color, "learned delta, mean " + fmt(learned.mean) + "%");
    cv.legend(1, baseline_color, "baseline (delta = 1), mean " + fmt(baseline.mean) + "%");
    cv.legend(2, "#555", "dashed: mean error", true);
    return cv.finish();
}

std::string delta_scatter_svg(std::span<const double> truth, std::span<const double> pred, double r2) {
    Range r;
    for (double v : truth) r.add(v);
    for (double v : pred) r.add(v);
    r.finish();
    Canvas cv(r, r);
    cv.axes("Predicted against true prediction factor", "true delta_1", "predicted delta_1");
    const double diag[2] = {r.lo, r.hi};
    cv.polyline(diag, diag, "#333", true);
    cv.dots(truth, pred, "#1f77b4");
    cv.legend(0, "#333", "y = x", true);
    cv.raw() << "<text x=\"" << px(kWidth - kRight - 10) << "\" y=\"" << px(kHeight - kBottom - 12)
             << "\" text-anchor=\"end\" font-size=\"14\">R² = " << fmt(r2) << "</text>\n";
    return cv.finish();
}

std::string grid_heatmap_svg(const GridSearchResult& result) {
    std::vector<int> units;
    std::vector<double> dropouts;
    const auto table = result.pivot(units, dropouts);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : table) {
        for (double v : row) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const double span = hi - lo > 0.0 ? hi - lo : 1.0;

    std::ostringstream out;
    const double cell_w = (kWidth - kLeft - kRight) / std::max<std::size_t>(1, dropouts.size());
    const double cell_h = (kHeight - kTop - kBottom) / std::max<std::size_t>(1, units.size());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << "Mean validation R²: units x dropout</text>\n";
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t j = 0; j < dropouts.size(); ++j) {
            const double v = table[i][j];
            const double t = std::isfinite(v) ? (v - lo) / span : 0.0;
            const int red = static_cast<int>(std::lround(255 * (1.0 - t)));
            const int green = static_cast<int>(std::lround(80 + 150 * t));
            const int blue = static_cast<int>(std::lround(255 * t));
            const double x = kLeft + cell_w * static_cast<double>(j);
            const double y = kTop + cell_h * static_cast<double>(i);
            out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(cell_w) << "\" height=\""
                << px(cell_h) << "\" fill=\"rgb(" << red << ',' << green << ',' << blue << ")\" stroke=\"white\"/>\n";
            out << "<text x=\"" << px(x + cell_w / 2) << "\" y=\"" << px(y + cell_h / 2 + 4)
                << "\" text-anchor=\"middle\">" << (std::isfinite(v) ? fmt(v) : "diverged") << "</text>\n";
        }
        out << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(kTop + cell_h * (static_cast<double>(i) + 0.5) + 4)
            << "\" text-anchor=\"end\">" << units[i] << "</text>\n";
    }
    for (std::size_t j = 0; j < dropouts.size(); ++j) {
        out << "<text x=\"" << px(kLeft + cell_w * (static_cast<double>(j) + 0.5)) << "\" y=\""
            << px(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">" << fmt(dropouts[j]) << "</text>\n";
    }
    out << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"" << px(kHeight - 12)
        << "\" text-anchor=\"middle\">dropout rate</text>\n"
        << "<text transform=\"translate(16," << px((kTop + kHeight - kBottom) / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">units per layer</text>\n"
        << "</svg>\n";
    return out.str();
}

std::string grid_marginal_svg(const GridSearchResult& result) {
    const auto marginal = result.marginal_units();
    std::vector<double> xs, ys;
    Range x, y;
    for (const auto& [u, r2] : marginal) {
        xs.push_back(u);
        ys.push_back(r2);
        x.add(u);
        y.add(r2);
    }
    x.finish();
    y.finish();
    Canvas cv(x, y);
    cv.axes("Mean validation R² against units per layer", "units per layer", "R²");
    cv.polyline(xs, ys, "#1f77b4");
    cv.dots(xs, ys, "#1f77b4", 3.5);
    return cv.finish();
}

}  // namespace distscale
