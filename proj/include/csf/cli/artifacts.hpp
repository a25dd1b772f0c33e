#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <openssl/evp.h>

namespace csf::cli {

/// 17 significant digits, enough to round-trip a double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

struct Column {
  std::string name;
  std::string unit;
};

class CsvTable {
 public:
  CsvTable(std::string file, std::vector<Column> columns)
      : file_(std::move(file)), columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      text_ += (i ? "," : "") + columns_[i].name;
    }
    text_ += '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    std::string line;
    ((line += cell(cells) + ','), ...);
    line.back() = '\n';
    text_ += line;
    ++rows_;
  }

  const std::string& file() const { return file_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::string file_;
  std::vector<Column> columns_;
  std::string text_;
  std::size_t rows_ = 0;
};

/// Object id git assigns to a blob with these bytes.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

using Polyline = std::vector<std::pair<double, double>>;

/// One polyline per curve, viewport fitted to the data.
inline std::string svg_plot(const std::vector<Polyline>& curves, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel) {
  constexpr double W = 640, H = 400, M = 48;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (const auto& [x, y] : c) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  char buf[160];
  std::string s;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n",
                W, H, W, H);
  s += buf;
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"#888\"/>\n",
                M, M, W - 2 * M, H - 2 * M);
  s += buf;
  s += "<text x=\"" + fmt(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  s += "<text x=\"" + fmt(W / 2) + "\" y=\"" + fmt(H - 10) + "\" text-anchor=\"middle\" font-size=\"12\">" +
       xlabel + " [" + fmt(x0) + ", " + fmt(x1) + "]</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(H / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " + fmt(H / 2) +
       ")\" text-anchor=\"middle\">" + ylabel + " [" + fmt(y0) + ", " + fmt(y1) + "]</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const int shade = curves.size() > 1 ? static_cast<int>(200.0 * k / (curves.size() - 1)) : 0;
    std::snprintf(buf, sizeof buf, "<polyline fill=\"none\" stroke=\"rgb(%d,40,%d)\" stroke-width=\"1\" points=\"",
                  shade, 200 - shade);
    s += buf;
    for (const auto& [x, y] : curves[k]) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      s += buf;
    }
    s += "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace csf::cli
