#include "toporel/wkt.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <variant>

#include "toporel/error.hpp"

namespace toporel {

namespace {

class WktReader {
 public:
  explicit WktReader(std::string_view text) : text_(text) {}

  Geometry read() {
    Geometry g = geometry();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string keyword() {
    skip_ws();
    std::string word;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    return word;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  /// Consumes EMPTY if present; rejects dimension qualifiers.
  bool empty_tag() {
    const std::size_t save = pos_;
    const std::string word = keyword();
    if (word.empty()) return false;
    if (word == "EMPTY") return true;
    if (word == "Z" || word == "M" || word == "ZM") {
      pos_ = save;
      fail("Z/M coordinates are not supported");
    }
    pos_ = save;
    fail("unexpected keyword '" + word + "'");
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t p = pos_;
    if (p < text_.size() && text_[p] == '+') ++p;
    const char* first = text_.data() + p;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) {
      pos_ = start;
      fail("expected a numeric coordinate");
    }
    if (!std::isfinite(v)) {
      pos_ = start;
      fail("coordinate is not finite");
    }
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  Coordinate coordinate() {
    Coordinate c;
    c.x = number();
    c.y = number();
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+' || text_[pos_] == '.' ||
                                std::isdigit(static_cast<unsigned char>(text_[pos_])))) {
      fail("only 2D coordinates are supported");
    }
    return c;
  }

  CoordinateSeq coordinate_list() {
    CoordinateSeq seq;
    expect('(');
    seq.push_back(coordinate());
    while (peek(',')) {
      ++pos_;
      seq.push_back(coordinate());
    }
    expect(')');
    return seq;
  }

  LineString line_text() {
    const std::size_t start = pos_;
    LineString l{coordinate_list()};
    if (l.coords.size() < 2) {
      pos_ = start;
      fail("LineString needs at least 2 coordinates");
    }
    bool moves = false;
    for (const auto& c : l.coords) moves = moves || !(c == l.coords.front());
    if (!moves) {
      pos_ = start;
      fail("LineString has zero length");
    }
    return l;
  }

  CoordinateSeq ring_text() {
    skip_ws();
    const std::size_t start = pos_;
    CoordinateSeq ring = coordinate_list();
    if (ring.size() < 4) {
      pos_ = start;
      fail("ring needs at least 4 coordinates");
    }
    if (!(ring.front() == ring.back())) {
      pos_ = start;
      fail("ring is not closed");
    }
    return ring;
  }

  Polygon polygon_text() {
    Polygon p;
    expect('(');
    p.shell = ring_text();
    while (peek(',')) {
      ++pos_;
      p.holes.push_back(ring_text());
    }
    expect(')');
    return p;
  }

  Geometry geometry() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string kw = keyword();
    if (kw.empty()) fail("expected a geometry keyword");
    if (kw == "POINT") {
      if (!peek('(')) {
        if (empty_tag()) return Point{};
        fail("expected '(' or EMPTY");
      }
      expect('(');
      Coordinate c = coordinate();
      expect(')');
      return Point{c};
    }
    if (kw == "LINESTRING") {
      if (!peek('(')) {
        if (empty_tag()) return LineString{};
        fail("expected '(' or EMPTY");
      }
      return line_text();
    }
    if (kw == "POLYGON") {
      if (!peek('(')) {
        if (empty_tag()) return Polygon{};
        fail("expected '(' or EMPTY");
      }
      return polygon_text();
    }
    if (kw == "MULTIPOINT") {
      if (!peek('(')) {
        if (empty_tag()) return MultiPoint{};
        fail("expected '(' or EMPTY");
      }
      MultiPoint m;
      expect('(');
      do {
        if (peek('(')) {
          expect('(');
          m.points.push_back(coordinate());
          expect(')');
        } else {
          m.points.push_back(coordinate());
        }
      } while (peek(',') && (++pos_, true));
      expect(')');
      return m;
    }
    if (kw == "MULTILINESTRING") {
      if (!peek('(')) {
        if (empty_tag()) return MultiLineString{};
        fail("expected '(' or EMPTY");
      }
      MultiLineString m;
      expect('(');
      do {
        skip_ws();
        m.lines.push_back(line_text());
      } while (peek(',') && (++pos_, true));
      expect(')');
      return m;
    }
    if (kw == "MULTIPOLYGON") {
      if (!peek('(')) {
        if (empty_tag()) return MultiPolygon{};
        fail("expected '(' or EMPTY");
      }
      MultiPolygon m;
      expect('(');
      do {
        m.polygons.push_back(polygon_text());
      } while (peek(',') && (++pos_, true));
      expect(')');
      return m;
    }
    pos_ = start;
    fail("unknown geometry keyword '" + kw + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void write_coord(std::string& out, const Coordinate& c, int precision) {
  out += format_number(c.x, precision);
  out += ' ';
  out += format_number(c.y, precision);
}

void write_seq(std::string& out, const CoordinateSeq& seq, int precision) {
  out += '(';
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ", ";
    write_coord(out, seq[i], precision);
  }
  out += ')';
}

void write_polygon(std::string& out, const Polygon& p, int precision) {
  out += '(';
  write_seq(out, p.shell, precision);
  for (const auto& h : p.holes) {
    out += ", ";
    write_seq(out, h, precision);
  }
  out += ')';
}

double round_to(double v, int precision) {
  if (precision < 0) return v;
  const std::string s = format_number(v, precision);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

CoordinateSeq round_seq(const CoordinateSeq& seq, int precision) {
  CoordinateSeq out;
  out.reserve(seq.size());
  for (const auto& c : seq) out.push_back({round_to(c.x, precision), round_to(c.y, precision)});
  return out;
}

Polygon round_polygon(const Polygon& p, int precision) {
  Polygon out;
  out.shell = round_seq(p.shell, precision);
  for (const auto& h : p.holes) out.holes.push_back(round_seq(h, precision));
  return out;
}

}  // namespace

Geometry parse_wkt(std::string_view text) { return WktReader(text).read(); }

std::string format_number(double v, int precision) {
  if (v == 0.0) return "0";
  if (precision < 0) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string to_wkt(const Geometry& g, int precision) {
  std::string out;
  std::visit(Overloaded{
                 [&](const Point& p) {
                   if (!p.coord) {
                     out = "POINT EMPTY";
                     return;
                   }
                   out = "POINT (";
                   write_coord(out, *p.coord, precision);
                   out += ')';
                 },
                 [&](const LineString& l) {
                   if (l.coords.empty()) {
                     out = "LINESTRING EMPTY";
                     return;
                   }
                   out = "LINESTRING ";
                   write_seq(out, l.coords, precision);
                 },
                 [&](const Polygon& p) {
                   if (p.shell.empty()) {
                     out = "POLYGON EMPTY";
                     return;
                   }
                   out = "POLYGON ";
                   write_polygon(out, p, precision);
                 },
                 [&](const MultiPoint& m) {
                   if (m.points.empty()) {
                     out = "MULTIPOINT EMPTY";
                     return;
                   }
                   out = "MULTIPOINT (";
                   for (std::size_t i = 0; i < m.points.size(); ++i) {
                     if (i) out += ", ";
                     out += '(';
                     write_coord(out, m.points[i], precision);
                     out += ')';
                   }
                   out += ')';
                 },
                 [&](const MultiLineString& m) {
                   if (m.lines.empty()) {
                     out = "MULTILINESTRING EMPTY";
                     return;
                   }
                   out = "MULTILINESTRING (";
                   for (std::size_t i = 0; i < m.lines.size(); ++i) {
                     if (i) out += ", ";
                     write_seq(out, m.lines[i].coords, precision);
                   }
                   out += ')';
                 },
                 [&](const MultiPolygon& m) {
                   if (m.polygons.empty()) {
                     out = "MULTIPOLYGON EMPTY";
                     return;
                   }
                   out = "MULTIPOLYGON (";
                   for (std::size_t i = 0; i < m.polygons.size(); ++i) {
                     if (i) out += ", ";
                     write_polygon(out, m.polygons[i], precision);
                   }
                   out += ')';
                 },
             },
             g.value());
  return out;
}

Geometry round_coordinates(const Geometry& g, int precision) {
  return std::visit(
      Overloaded{
          [&](const Point& p) -> Geometry {
            if (!p.coord) return p;
            return Point{Coordinate{round_to(p.coord->x, precision), round_to(p.coord->y, precision)}};
          },
          [&](const LineString& l) -> Geometry { return LineString{round_seq(l.coords, precision)}; },
          [&](const Polygon& p) -> Geometry { return round_polygon(p, precision); },
          [&](const MultiPoint& m) -> Geometry { return MultiPoint{round_seq(m.points, precision)}; },
          [&](const MultiLineString& m) -> Geometry {
            MultiLineString out;
            for (const auto& l : m.lines) out.lines.push_back(LineString{round_seq(l.coords, precision)});
            return out;
          },
          [&](const MultiPolygon& m) -> Geometry {
            MultiPolygon out;
            for (const auto& p : m.polygons) out.polygons.push_back(round_polygon(p, precision));
            return out;
          },
      },
      g.value());
}

}  // namespace toporel

namespace toporel {

std::vector<WktSpan> find_wkt_spans(std::string_view text) {
  static constexpr std::string_view kKeywords[] = {"MULTIPOLYGON", "MULTILINESTRING", "MULTIPOINT",
                                                   "POLYGON",      "LINESTRING",      "POINT"};
  auto upper_at = [&](std::size_t pos, std::string_view kw) {
    if (pos + kw.size() > text.size()) return false;
    for (std::size_t k = 0; k < kw.size(); ++k) {
      if (std::toupper(static_cast<unsigned char>(text[pos + k])) != kw[k]) return false;
    }
    return true;
  };
  std::vector<WktSpan> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool word_start = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    std::string_view kw;
    if (word_start) {
      for (auto k : kKeywords) {
        if (upper_at(pos, k)) {
          kw = k;
          break;
        }
      }
    }
    if (kw.empty()) {
      ++pos;
      continue;
    }
    std::size_t p = pos + kw.size();
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    if (upper_at(p, "EMPTY")) {
      out.push_back({pos, p + 5});
      pos = p + 5;
      continue;
    }
    if (p >= text.size() || text[p] != '(') {
      pos += kw.size();
      continue;
    }
    int depth = 0;
    std::size_t q = p;
    for (; q < text.size(); ++q) {
      if (text[q] == '(') ++depth;
      if (text[q] == ')' && --depth == 0) break;
    }
    if (depth != 0) {
      // Unbalanced: report the rest so callers see an unparseable candidate.
      out.push_back({pos, text.size()});
      break;
    }
    out.push_back({pos, q + 1});
    pos = q + 1;
  }
  return out;
}

std::vector<Geometry> find_wkt_geometries(std::string_view text) {
  std::vector<Geometry> out;
  for (const auto& span : find_wkt_spans(text)) {
    try {
      out.push_back(parse_wkt(text.substr(span.begin, span.end - span.begin)));
    } catch (const ParseError&) {
    }
  }
  return out;
}

}  // namespace toporel
