#include "dynpanel/panel_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dynpanel/errors.hpp"

namespace dynpanel {

PanelDataset::PanelDataset(std::int64_t n, int t_max, int k)
    : n_(n),
      t_max_(t_max),
      k_(k),
      y_(static_cast<std::size_t>(n) * (t_max + 1), 0),
      x_(static_cast<std::size_t>(n) * t_max * k, 0.0) {
  if (n < 1) throw Error::data("EmptyPanel", "need at least one individual");
  if (t_max < 3) throw Error::data("PanelTooShort", "t_max must be >= 3");
  if (k < 1) throw Error::data("BadDimension", "regressor dimension must be >= 1");
}

double PanelDataset::index_diff(std::int64_t i, int t, int s,
                                std::span<const double> b) const {
  const auto xt = x(i, t);
  const auto xs = x(i, s);
  double acc = 0.0;
  for (int j = 0; j < k_; ++j) acc += (xt[j] - xs[j]) * b[j];
  return acc;
}

void PanelDataset::validate() const {
  for (std::uint8_t v : y_) {
    if (v != 0 && v != 1)
      throw Error::data("NonBinaryOutcome", "outcome value " + std::to_string(v));
  }
  for (double v : x_) {
    if (!std::isfinite(v))
      throw Error::data("ParseError", "non-finite regressor value");
  }
}

PanelDataset PanelDataset::permuted(std::span<const std::int64_t> order) const {
  PanelDataset out(n_, t_max_, k_);
  for (std::int64_t pos = 0; pos < n_; ++pos) {
    const std::int64_t i = order[pos];
    for (int t = 0; t <= t_max_; ++t) out.set_y(pos, t, y(i, t));
    for (int t = 1; t <= t_max_; ++t) {
      auto dst = out.x_mut(pos, t);
      auto src = x(i, t);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

SwitcherCounts switcher_counts(const PanelDataset& data) {
  if (data.t_max() < 4)
    throw Error::data("PanelTooShort", "switcher counts need t_max >= 4");
  SwitcherCounts out;
  for (std::int64_t i = 0; i < data.n(); ++i) {
    const int y0 = data.y(i, 0), y1 = data.y(i, 1), y2 = data.y(i, 2);
    const int y3 = data.y(i, 3), y4 = data.y(i, 4);
    if (y0 == y2 && y2 == y4 && y1 != y3) ++out.beta_effective;
    if ((y1 != y2 && y0 != y3) || (y2 != y3 && y1 != y4)) ++out.gamma_effective;
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, std::int64_t line_no) {
  const std::string s = trimmed(raw);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw Error::data("ParseError", "trailing characters in '" + s + "' at line " +
                                          std::to_string(line_no));
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error::data("ParseError",
                      "cannot parse number '" + s + "' at line " + std::to_string(line_no));
  }
}

std::int64_t parse_int(const std::string& raw, std::int64_t line_no) {
  const std::string s = trimmed(raw);
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(s, &used);
    if (used != s.size())
      throw Error::data("ParseError", "trailing characters in '" + s + "' at line " +
                                          std::to_string(line_no));
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error::data("ParseError",
                      "cannot parse integer '" + s + "' at line " + std::to_string(line_no));
  }
}

struct RawRow {
  int t;
  int y;
  std::vector<double> x;  // empty when all regressor cells are blank (t=0)
};

}  // namespace

PanelDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("ParseError", "cannot open file " + path);

  std::string line;
  if (!std::getline(in, line))
    throw Error::data("ParseError", "empty file " + path);
  const auto header = split_fields(line);
  if (header.size() < 4 || trimmed(header[0]) != "id" || trimmed(header[1]) != "t" ||
      trimmed(header[2]) != "y")
    throw Error::data("ParseError", "header must be id,t,y,x1,...,xK");
  const int k = static_cast<int>(header.size()) - 3;
  for (int j = 0; j < k; ++j) {
    if (trimmed(header[3 + j]) != "x" + std::to_string(j + 1))
      throw Error::data("ParseError", "regressor columns must be named x1..xK in order");
  }

  std::vector<std::int64_t> id_order;
  std::map<std::int64_t, std::vector<RawRow>> rows;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw Error::data("ParseError", "expected " + std::to_string(header.size()) +
                                          " fields at line " + std::to_string(line_no));
    const std::int64_t id = parse_int(fields[0], line_no);
    RawRow row;
    const std::int64_t t_raw = parse_int(fields[1], line_no);
    if (t_raw < 0)
      throw Error::data("ParseError", "negative period at line " + std::to_string(line_no));
    row.t = static_cast<int>(t_raw);
    const double y_val = parse_double(fields[2], line_no);
    if (y_val != 0.0 && y_val != 1.0)
      throw Error::data("NonBinaryOutcome", "id " + std::to_string(id) + " has y=" +
                                                trimmed(fields[2]) + " at t=" +
                                                std::to_string(row.t));
    row.y = static_cast<int>(y_val);

    bool any_blank = false, all_blank = true;
    for (int j = 0; j < k; ++j) {
      if (trimmed(fields[3 + j]).empty()) any_blank = true;
      else all_blank = false;
    }
    if (row.t == 0) {
      // initial-period regressors are never used; accept present or blank
      if (!all_blank && any_blank)
        throw Error::data("ParseError",
                          "partially blank regressors at line " + std::to_string(line_no));
    } else {
      if (any_blank)
        throw Error::data("ParseError",
                          "blank regressor cell at line " + std::to_string(line_no));
      row.x.resize(k);
      for (int j = 0; j < k; ++j) {
        row.x[j] = parse_double(fields[3 + j], line_no);
        if (!std::isfinite(row.x[j]))
          throw Error::data("ParseError",
                            "non-finite regressor at line " + std::to_string(line_no));
      }
    }
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) id_order.push_back(id);
    it->second.push_back(std::move(row));
  }
  if (id_order.empty()) throw Error::data("ParseError", "no data rows in " + path);

  // All individuals must cover t = 0..T for a common T.
  int t_max = -1;
  for (const auto& id : id_order) {
    auto& rs = rows[id];
    std::sort(rs.begin(), rs.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
    for (std::size_t j = 1; j < rs.size(); ++j) {
      if (rs[j].t == rs[j - 1].t)
        throw Error::data("ParseError", "duplicate period t=" + std::to_string(rs[j].t) +
                                            " for id " + std::to_string(id));
    }
    const int local_t = rs.back().t;
    for (int t = 0; t <= local_t; ++t) {
      if (static_cast<std::size_t>(t) >= rs.size() || rs[t].t != t)
        throw Error::data("MissingPeriod", "id " + std::to_string(id) + " lacks period " +
                                               std::to_string(t));
    }
    if (t_max == -1) t_max = local_t;
    else if (local_t != t_max)
      throw Error::data("RaggedPanel", "id " + std::to_string(id) + " has T=" +
                                           std::to_string(local_t) + ", expected " +
                                           std::to_string(t_max));
  }
  if (t_max < 3)
    throw Error::data("PanelTooShort",
                      "panel has T=" + std::to_string(t_max) + "; need T >= 3");

  PanelDataset data(static_cast<std::int64_t>(id_order.size()), t_max, k);
  for (std::int64_t i = 0; i < data.n(); ++i) {
    const auto& rs = rows[id_order[i]];
    for (int t = 0; t <= t_max; ++t) data.set_y(i, t, rs[t].y);
    for (int t = 1; t <= t_max; ++t) {
      auto dst = data.x_mut(i, t);
      std::copy(rs[t].x.begin(), rs[t].x.end(), dst.begin());
    }
  }
  data.validate();
  return data;
}

void save_csv(const PanelDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error::data("ParseError", "cannot open file for writing: " + path);
  out << "id,t,y";
  for (int j = 1; j <= data.k(); ++j) out << ",x" << j;
  out << "\n";
  char buf[64];
  for (std::int64_t i = 0; i < data.n(); ++i) {
    out << i << ",0," << data.y(i, 0);
    for (int j = 0; j < data.k(); ++j) out << ",";
    out << "\n";
    for (int t = 1; t <= data.t_max(); ++t) {
      out << i << "," << t << "," << data.y(i, t);
      for (double v : data.x(i, t)) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

void ModelParams::validate(double gamma_lo, double gamma_hi) const {
  double norm2 = 0.0;
  for (double b : beta) norm2 += b * b;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
    throw Error::data("BetaNotUnitNorm", "||beta|| deviates from 1 by more than 1e-12");
  if (!(gamma >= gamma_lo && gamma <= gamma_hi))
    throw Error::data("GammaOutOfBounds", "gamma outside [" + std::to_string(gamma_lo) +
                                              ", " + std::to_string(gamma_hi) + "]");
}

}  // namespace dynpanel
