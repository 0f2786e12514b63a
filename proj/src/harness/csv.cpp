#include "dmd/harness/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dmd/error.hpp"

namespace dmd::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    const auto line = trim(text.substr(start, pos - start));
    if (!line.empty()) out.push_back(line);
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ValidationError(std::string(what) + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

long parse_long(std::string_view text, std::string_view what) {
  text = trim(text);
  long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ValidationError(std::string(what) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "step", "t", "loss_mean", "loss_best", "loss_worst", "consensus_spread", "kkt_primal",
      "kkt_consensus", "V", "V1", "V2", "V3", "bregman_to_opt"};
  return cols;
}

std::string metrics_header(bool with_label) {
  std::string h = with_label ? "label," : "";
  const auto& cols = metrics_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (k > 0) h += ',';
    h += cols[k];
  }
  return h;
}

std::string metrics_row(const diagnostics::MetricsRecord& r, std::string_view label) {
  std::string row;
  if (!label.empty()) {
    row += label;
    row += ',';
  }
  row += std::to_string(r.step);
  for (double v : {r.t, r.loss_mean, r.loss_best, r.loss_worst, r.consensus_spread, r.kkt_primal,
                   r.kkt_consensus, r.V, r.V1, r.V2, r.V3, r.bregman_to_opt}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

std::string metrics_csv(const std::vector<diagnostics::MetricsRecord>& records) {
  std::string out = metrics_header() + '\n';
  for (const auto& r : records) out += metrics_row(r) + '\n';
  return out;
}

std::vector<diagnostics::MetricsRecord> parse_metrics_csv(const std::string& text) {
  const auto ls = lines(text);
  if (ls.empty() || ls.front() != metrics_header()) throw ValidationError("metrics csv: unexpected header");
  std::vector<diagnostics::MetricsRecord> out;
  for (std::size_t k = 1; k < ls.size(); ++k) {
    const auto f = split(ls[k], ',');
    if (f.size() != metrics_columns().size()) throw ValidationError("metrics csv: wrong column count");
    diagnostics::MetricsRecord r;
    r.step = parse_long(f[0], "step");
    double* fields[] = {&r.t, &r.loss_mean, &r.loss_best, &r.loss_worst, &r.consensus_spread,
                        &r.kkt_primal, &r.kkt_consensus, &r.V, &r.V1, &r.V2, &r.V3,
                        &r.bregman_to_opt};
    for (std::size_t j = 0; j < std::size(fields); ++j) {
      *fields[j] = parse_double(f[j + 1], metrics_columns()[j + 1]);
    }
    out.push_back(r);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text, std::string_view what) {
  const auto ls = lines(text);
  if (ls.empty()) throw ValidationError(std::string(what) + ": empty matrix file");
  const std::size_t cols = split(ls.front(), ',').size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ls.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto f = split(ls[i], ',');
    if (f.size() != cols) throw ValidationError(std::string(what) + ": ragged row " + std::to_string(i + 1));
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(f[j], what);
    }
  }
  return m;
}

}  // namespace dmd::harness
