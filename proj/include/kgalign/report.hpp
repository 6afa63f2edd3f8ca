#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "kgalign/clusterability.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_clusterability_row(std::ostream& out, const SpatialHistogramReport& r) {
  out << csv_field(r.method) << ',' << fixed(r.kl_mean) << ',' << fixed(r.kl_std) << ',' << r.bins_per_axis << ','
      << r.reference_sets << '\n';
}

inline void write_clusterability_csv(std::ostream& out, const std::vector<SpatialHistogramReport>& rows) {
  out << "method,kl_mean,kl_std,bins,reference_sets\n";
  for (const auto& r : rows) write_clusterability_row(out, r);
}

inline void write_alignment_csv(std::ostream& out, const std::vector<EvalReport>& rows) {
  out << "method,dim,hits_at_5,hits_at_10,avg_similarity,n_test\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << r.embedding_dim << ',' << fixed(r.hits_at_5) << ',' << fixed(r.hits_at_10)
        << ',' << fixed(r.avg_similarity) << ',' << r.n_test << '\n';
}

namespace detail {

inline void write_text_table(std::ostream& out, const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << "  ";
      out << cells[c];
      if (c + 1 < cells.size()) out << std::string(width[c] - cells[c].size(), ' ');
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
}

}  // namespace detail

inline void write_clusterability_table(std::ostream& out, const std::vector<SpatialHistogramReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) cells.push_back({r.method, fixed(r.kl_mean, 4), fixed(r.kl_std, 4)});
  detail::write_text_table(out, {"Model", "Spatial mu", "Spatial sigma"}, cells);
}

inline void write_alignment_table(std::ostream& out, const std::vector<EvalReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.method, std::to_string(r.embedding_dim), fixed(r.hits_at_5, 4), fixed(r.hits_at_10, 4),
                     fixed(r.avg_similarity, 4)});
  detail::write_text_table(out, {"Model", "Dim.", "Hits@5", "Hits@10", "Avg. Sim."}, cells);
}

struct CorrelationRow {
  std::string x;
  std::string y;
  double rho = 0.0;
};

/// Correlations across methods between clusterability, dimension, average
/// similarity and Hits@k. Methods missing from either table are skipped;
/// pairs with zero variance are omitted.
inline std::vector<CorrelationRow> correlate_reports(const std::vector<SpatialHistogramReport>& clusters,
                                                     const std::vector<EvalReport>& evals) {
  std::vector<double> kl, dim, sim, h5, h10;
  for (const auto& e : evals) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const auto& c) { return c.method == e.method; });
    if (it == clusters.end()) continue;
    kl.push_back(it->kl_mean);
    dim.push_back(static_cast<double>(e.embedding_dim));
    sim.push_back(e.avg_similarity);
    h5.push_back(e.hits_at_5);
    h10.push_back(e.hits_at_10);
  }
  std::vector<CorrelationRow> out;
  auto add = [&](const char* xn, const std::vector<double>& x, const char* yn, const std::vector<double>& y) {
    try {
      out.push_back({xn, yn, pearson_correlation(x, y)});
    } catch (const ValidationError&) {
    }
  };
  add("kl_mean", kl, "hits_at_5", h5);
  add("kl_mean", kl, "hits_at_10", h10);
  add("avg_similarity", sim, "hits_at_5", h5);
  add("avg_similarity", sim, "hits_at_10", h10);
  add("dim", dim, "hits_at_5", h5);
  add("dim", dim, "hits_at_10", h10);
  return out;
}

inline void write_correlation_csv(std::ostream& out, const std::vector<CorrelationRow>& rows) {
  out << "x,y,pearson\n";
  for (const auto& r : rows) out << r.x << ',' << r.y << ',' << fixed(r.rho) << '\n';
}

/// Scatter plot of a 2-D projection as a standalone SVG document.
inline void write_scatter_svg(std::ostream& out, const EmbeddingMatrix& points, const std::string& title,
                              int size = 480) {
  if (points.dim() != 2) throw DimensionMismatchError("scatter plot needs 2-D points");
  const double pad = 24.0;
  double lo[2] = {0, 0}, hi[2] = {1, 1};
  if (points.rows() > 0) {
    auto m = points.as_eigen();
    for (int a = 0; a < 2; ++a) {
      lo[a] = m.col(a).minCoeff();
      hi[a] = m.col(a).maxCoeff();
      if (hi[a] <= lo[a]) hi[a] = lo[a] + 1.0;
    }
  }
  const double span = size - 2 * pad;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << pad << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(title) << "</text>\n";
  out << "<g fill=\"steelblue\" fill-opacity=\"0.4\">\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto p = points.row(i);
    double x = pad + (p[0] - lo[0]) / (hi[0] - lo[0]) * span;
    double y = size - pad - (p[1] - lo[1]) / (hi[1] - lo[1]) * span;
    out << "<circle cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"1.5\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace kgalign
