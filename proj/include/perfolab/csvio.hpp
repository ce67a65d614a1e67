#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "perfolab/classify.hpp"
#include "perfolab/gammademo.hpp"
#include "perfolab/slln.hpp"

namespace perfolab {

// RFC-4180 field quoting
inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& schema,
              const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path);
        out_ << "# schema=" << schema << "\n";
        write_row_strings(header);
    }

    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_escape(cells[i]);
        }
        out_ << "\n";
    }

    void write_row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(cells[i]);
        }
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

inline void write_realization_csv(const std::string& path, const ProcessRealization& r) {
    const int n = r.dim();
    std::vector<std::string> header;
    for (int d = 0; d < n; ++d) header.push_back("x" + std::to_string(d + 1));
    header.push_back("rho");
    CsvWriter w(path, "perfolab.realization.v1", header);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        std::vector<double> row;
        for (int d = 0; d < n; ++d) row.push_back(r.points[i][d]);
        row.push_back(r.marks.empty() ? 0.0 : r.marks[i]);
        w.write_row(row);
    }
}

inline void write_holes_csv(const std::string& path, const PerforatedDomain& pd) {
    std::vector<std::string> header;
    for (int d = 0; d < pd.n; ++d) header.push_back("c" + std::to_string(d + 1));
    header.push_back("radius");
    header.push_back("source");
    CsvWriter w(path, "perfolab.holes.v1", header);
    for (const auto& h : pd.holes) {
        std::vector<double> row;
        for (int d = 0; d < pd.n; ++d) row.push_back(h.centre[d]);
        row.push_back(h.radius);
        row.push_back(static_cast<double>(h.source));
        w.write_row(row);
    }
}

inline void write_classification_csv(const std::string& path, const PerforatedDomain& pd,
                                     const ProcessRealization& realization,
                                     const HoleClassification& cls) {
    std::vector<std::string> labels(pd.holes.size(), "good");
    for (int i : cls.GM) labels[i] = "GM";
    for (int i : cls.MG) labels[i] = "MG";
    for (int i : cls.VG) labels[i] = "VG";
    for (int i : cls.bad) labels[i] = "bad";
    CsvWriter w(path, "perfolab.classification.v1", {"index", "class", "rho", "d_eps"});
    for (std::size_t i = 0; i < pd.holes.size(); ++i) {
        w.write_row_strings({std::to_string(i), labels[i],
                             format_double(realization.marks[pd.holes[i].source]),
                             format_double(cls.d_eps.empty() ? 0.0 : cls.d_eps[i])});
    }
}

inline void write_study_csv(const std::string& path, const StudyReport& rep) {
    std::vector<std::string> header = {"eps",    "replicas", "mean",
                                       "stddev", "target",   "rel_err"};
    for (const auto& c : rep.extra_columns) header.push_back(c);
    CsvWriter w(path, "perfolab.study." + rep.kind + ".v1", header);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        std::vector<double> row = {r.eps,    static_cast<double>(r.replicas),
                                   r.mean,   r.stddev,
                                   r.target, r.rel_err};
        if (i < rep.extra_values.size())
            for (double v : rep.extra_values[i]) row.push_back(v);
        w.write_row(row);
    }
}

inline void write_grid_csv(const std::string& path, const HomogenizedSolution& sol) {
    const int dim = sol.grid.dim;
    const int m = sol.grid.cells;
    std::vector<std::string> header;
    for (int d = 0; d < dim; ++d) header.push_back("x" + std::to_string(d + 1));
    header.push_back("u");
    CsvWriter w(path, "perfolab.grid.v1", header);
    std::array<int, kMaxDim> c{};
    std::size_t flat = 0;
    while (true) {
        std::vector<double> row;
        for (int d = 0; d < dim; ++d)
            row.push_back(-sol.grid.half_widths[d] +
                          c[d] * 2.0 * sol.grid.half_widths[d] / m);
        row.push_back(sol.values[flat]);
        w.write_row(row);
        ++flat;
        int d = 0;
        for (; d < dim; ++d) {
            if (++c[d] <= m) break;
            c[d] = 0;
        }
        if (d == dim) break;
    }
}

}  // namespace perfolab
