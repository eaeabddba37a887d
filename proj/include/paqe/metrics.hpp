#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "paqe/common.hpp"
#include "paqe/frame.hpp"

namespace paqe {

inline double mse_plane(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height)
    throw contract_error("mse: plane dimensions differ");
  if (a.samples.empty()) throw contract_error("mse: empty plane");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - b.samples[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.samples.size());
}

// Peak is the 10-bit maximum. Identical planes yield +infinity.
inline double psnr_from_mse(double mse) {
  if (mse < 0.0) throw contract_error("psnr: negative mse");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = static_cast<double>(kMaxSample);
  return 10.0 * std::log10(peak * peak / mse);
}

inline double psnr_plane(const Plane& a, const Plane& b) {
  return psnr_from_mse(mse_plane(a, b));
}

inline double psnr_luma(const std::vector<Frame420>& a,
                        const std::vector<Frame420>& b) {
  if (a.size() != b.size() || a.empty())
    throw contract_error("psnr_luma: sequence length mismatch or empty");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (a[f].width() != b[f].width() || a[f].height() != b[f].height())
      throw contract_error("psnr_luma: frame dimensions differ");
    for (std::size_t i = 0; i < a[f].y.samples.size(); ++i) {
      const double d =
          static_cast<double>(a[f].y.samples[i]) - b[f].y.samples[i];
      sum += d * d;
    }
    n += a[f].y.samples.size();
  }
  return psnr_from_mse(sum / static_cast<double>(n));
}

// Mean gain over a sequences x qps grid of (enhanced, baseline) PSNR pairs.
struct PsnrPair {
  double baseline = 0.0;
  double enhanced = 0.0;
};

inline double delta_psnr(const std::vector<std::vector<PsnrPair>>& grid) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : grid)
    for (const auto& cell : row) {
      sum += cell.enhanced - cell.baseline;
      ++n;
    }
  if (n == 0) throw contract_error("delta_psnr: empty grid");
  return sum / static_cast<double>(n);
}

// Mean of per-cell runtime ratios (not a ratio of totals).
inline double runtime_ratio(const std::vector<double>& test_times,
                            const std::vector<double>& ref_times) {
  if (test_times.size() != ref_times.size() || test_times.empty())
    throw contract_error("runtime_ratio: size mismatch or empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < test_times.size(); ++i) {
    if (ref_times[i] <= 0.0)
      throw contract_error("runtime_ratio: non-positive reference time");
    sum += test_times[i] / ref_times[i];
  }
  return sum / static_cast<double>(test_times.size());
}

struct RDPoint {
  double rate = 0.0;     // bits (any positive unit; only ratios matter)
  double quality = 0.0;  // PSNR in dB
};

namespace detail {

// Interpolating cubic through exactly four points: returns coefficients
// c[0] + c[1]x + c[2]x^2 + c[3]x^3, solved by Gaussian elimination with
// partial pivoting on the Vandermonde system.
inline std::array<double, 4> cubic_fit(const std::array<double, 4>& x,
                                       const std::array<double, 4>& y) {
  double a[4][5];
  for (int r = 0; r < 4; ++r) {
    double p = 1.0;
    for (int c = 0; c < 4; ++c) {
      a[r][c] = p;
      p *= x[static_cast<std::size_t>(r)];
    }
    a[r][4] = y[static_cast<std::size_t>(r)];
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12)
      throw contract_error("bd_rate: degenerate quality values (duplicates?)");
    if (piv != col)
      for (int c = 0; c < 5; ++c) std::swap(a[piv][c], a[col][c]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return {a[0][4] / a[0][0], a[1][4] / a[1][1], a[2][4] / a[2][2],
          a[3][4] / a[3][3]};
}

inline double cubic_integral(const std::array<double, 4>& c, double lo,
                             double hi) {
  auto antiderivative = [&c](double x) {
    return c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 +
           c[3] * x * x * x * x / 4.0;
  };
  return antiderivative(hi) - antiderivative(lo);
}

}  // namespace detail

// Average bitrate difference (%) between two four-point RD curves: fits
// log10(rate) as a cubic in quality for each curve, averages the difference
// over the overlapping quality interval, and maps back from log domain.
// Negative values mean `test` needs fewer bits than `ref` at equal quality.
inline double bd_rate(const std::vector<RDPoint>& ref,
                      const std::vector<RDPoint>& test) {
  if (ref.size() != 4 || test.size() != 4)
    throw contract_error("bd_rate: exactly four points per curve required");
  std::array<double, 4> qr{}, lr{}, qt{}, lt{};
  for (int i = 0; i < 4; ++i) {
    if (ref[static_cast<std::size_t>(i)].rate <= 0.0 ||
        test[static_cast<std::size_t>(i)].rate <= 0.0)
      throw contract_error("bd_rate: rates must be positive");
    qr[static_cast<std::size_t>(i)] = ref[static_cast<std::size_t>(i)].quality;
    lr[static_cast<std::size_t>(i)] = std::log10(ref[static_cast<std::size_t>(i)].rate);
    qt[static_cast<std::size_t>(i)] = test[static_cast<std::size_t>(i)].quality;
    lt[static_cast<std::size_t>(i)] = std::log10(test[static_cast<std::size_t>(i)].rate);
  }
  const auto cr = detail::cubic_fit(qr, lr);
  const auto ct = detail::cubic_fit(qt, lt);
  const double lo = std::max(*std::min_element(qr.begin(), qr.end()),
                             *std::min_element(qt.begin(), qt.end()));
  const double hi = std::min(*std::max_element(qr.begin(), qr.end()),
                             *std::max_element(qt.begin(), qt.end()));
  if (hi <= lo)
    throw contract_error("bd_rate: quality ranges do not overlap");
  const double avg_diff = (detail::cubic_integral(ct, lo, hi) -
                           detail::cubic_integral(cr, lo, hi)) /
                          (hi - lo);
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

// ---- RD curve CSV (label,qp,rate_bits,quality) ----

struct RDCurveRow {
  std::string label;
  int qp = 0;
  double rate_bits = 0.0;
  double quality = 0.0;
};

inline void write_rd_csv(const std::vector<RDCurveRow>& rows,
                         const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path);
  out << "label,qp,rate_bits,quality\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.label << "," << r.qp << "," << r.rate_bits << "," << r.quality
        << "\n";
  if (!out) throw io_error("write failed on " + path);
}

inline std::vector<RDCurveRow> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "label,qp,rate_bits,quality")
    throw format_error("bad rd csv header in " + path);
  std::vector<RDCurveRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    RDCurveRow r;
    std::string field;
    try {
      if (!std::getline(ss, r.label, ',')) throw format_error("short row");
      if (!std::getline(ss, field, ',')) throw format_error("short row");
      r.qp = std::stoi(field);
      if (!std::getline(ss, field, ',')) throw format_error("short row");
      r.rate_bits = std::stod(field);
      if (!std::getline(ss, field)) throw format_error("short row");
      r.quality = std::stod(field);
    } catch (const std::exception&) {
      throw format_error("bad rd csv row at line " + std::to_string(line_no) +
                         " in " + path);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace paqe
