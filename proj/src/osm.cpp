#include "roadrl/osm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "roadrl/network_io.hpp"

namespace roadrl {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' || u >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Pull tokenizer for the XML subset found in OSM files: prolog, doctype,
/// comments, processing instructions, CDATA, elements and attributes.
/// Character data is skipped. Self-closing elements yield Start then End.
class XmlReader {
 public:
  enum class Event { Start, End, Eof };

  struct Attribute {
    std::string_view name;
    std::string value;
  };

  explicit XmlReader(std::string_view s) : s_(s) {}

  Event next() {
    if (pending_end_) {
      pending_end_ = false;
      name_ = stack_.back();
      stack_.pop_back();
      if (stack_.empty()) root_closed_ = true;
      return Event::End;
    }
    for (;;) {
      if (stack_.empty()) skip_space();
      if (pos_ >= s_.size()) {
        if (!stack_.empty()) fail("unclosed element <" + std::string(stack_.back()) + ">");
        if (!root_closed_) fail("no root element");
        return Event::Eof;
      }
      if (s_[pos_] != '<') {
        if (stack_.empty()) fail("text outside the root element");
        const auto lt = s_.find('<', pos_);
        pos_ = lt == std::string_view::npos ? s_.size() : lt;
        continue;
      }
      element_offset_ = pos_;
      const std::string_view rest = s_.substr(pos_);
      if (rest.starts_with("<!--")) {
        skip_past("-->", pos_ + 4, "unterminated comment");
      } else if (rest.starts_with("<![CDATA[")) {
        if (stack_.empty()) fail("CDATA outside the root element");
        skip_past("]]>", pos_ + 9, "unterminated CDATA section");
      } else if (rest.starts_with("<?")) {
        skip_past("?>", pos_ + 2, "unterminated processing instruction");
      } else if (rest.starts_with("<!DOCTYPE")) {
        if (seen_root_) fail("DOCTYPE after the root element");
        skip_doctype();
      } else if (rest.starts_with("</")) {
        pos_ += 2;
        const auto name = read_name();
        skip_space();
        expect('>');
        if (stack_.empty() || stack_.back() != name) {
          pos_ = element_offset_;
          fail("unexpected closing tag </" + std::string(name) + ">");
        }
        name_ = name;
        stack_.pop_back();
        if (stack_.empty()) root_closed_ = true;
        return Event::End;
      } else {
        if (root_closed_) fail("second root element");
        ++pos_;
        read_start_tag();
        seen_root_ = true;
        return Event::Start;
      }
    }
  }

  std::string_view name() const { return name_; }
  const std::vector<Attribute>& attributes() const { return attrs_; }
  std::size_t element_offset() const { return element_offset_; }

  const std::string* attribute(std::string_view key) const {
    for (const auto& a : attrs_) {
      if (a.name == key) return &a.value;
    }
    return nullptr;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw OsmParseError(pos_, what); }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void expect(char c) {
    if (pos_ >= s_.size()) fail(std::string("unexpected end of input, expected '") + c + "'");
    if (s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_past(std::string_view terminator, std::size_t from, const char* what) {
    const auto at = s_.find(terminator, from);
    if (at == std::string_view::npos) fail(what);
    pos_ = at + terminator.size();
  }

  void skip_doctype() {
    int bracket = 0;
    for (pos_ += 9; pos_ < s_.size(); ++pos_) {
      const char c = s_[pos_];
      if (c == '[') ++bracket;
      if (c == ']') --bracket;
      if (c == '>' && bracket == 0) {
        ++pos_;
        return;
      }
    }
    fail("unterminated DOCTYPE");
  }

  std::string_view read_name() {
    const std::size_t start = pos_;
    if (pos_ >= s_.size()) fail("unexpected end of input, expected a name");
    if (!is_name_start(s_[pos_])) fail("invalid name character");
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  void decode_entity(std::string& out) {
    const auto semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 12) fail("malformed entity reference");
    const std::string_view ent = s_.substr(pos_ + 1, semi - pos_ - 1);
    if (ent == "amp") out += '&';
    else if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (ent.size() >= 2 && ent[0] == '#') {
      const bool hex = ent[1] == 'x' || ent[1] == 'X';
      const std::string_view digits = ent.substr(hex ? 2 : 1);
      std::uint32_t cp = 0;
      const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty() || cp == 0 ||
          cp > 0x10FFFF) {
        fail("invalid character reference");
      }
      append_utf8(out, cp);
    } else {
      fail("unknown entity &" + std::string(ent) + ";");
    }
    pos_ = semi + 1;
  }

  void read_start_tag() {
    name_ = read_name();
    attrs_.clear();
    for (;;) {
      const std::size_t before = pos_;
      skip_space();
      if (pos_ >= s_.size()) fail("unclosed tag <" + std::string(name_) + ">");
      const char c = s_[pos_];
      if (c == '>') {
        ++pos_;
        stack_.push_back(name_);
        return;
      }
      if (c == '/') {
        ++pos_;
        expect('>');
        stack_.push_back(name_);
        pending_end_ = true;
        return;
      }
      if (pos_ == before) fail("expected whitespace before attribute");
      Attribute a;
      a.name = read_name();
      skip_space();
      expect('=');
      skip_space();
      if (pos_ >= s_.size()) fail("unclosed tag <" + std::string(name_) + ">");
      const char quote = s_[pos_];
      if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
      ++pos_;
      for (;;) {
        if (pos_ >= s_.size()) fail("unterminated attribute value");
        const char v = s_[pos_];
        if (v == quote) break;
        if (v == '<') fail("'<' in attribute value");
        if (v == '&') {
          decode_entity(a.value);
        } else {
          a.value.push_back(v);
          ++pos_;
        }
      }
      ++pos_;
      attrs_.push_back(std::move(a));
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t element_offset_ = 0;
  std::vector<std::string_view> stack_;
  std::string_view name_;
  std::vector<Attribute> attrs_;
  bool pending_end_ = false;
  bool seen_root_ = false;
  bool root_closed_ = false;
};

template <typename T>
std::optional<T> parse_number(const std::string* s) {
  if (!s || s->empty()) return std::nullopt;
  T v{};
  const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc{} || end != s->data() + s->size()) return std::nullopt;
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

OsmDocument parse_osm_xml(std::string_view bytes) {
  OsmDocument doc;
  XmlReader xml(bytes);
  std::unordered_set<std::int64_t> node_ids, way_ids;
  std::optional<OsmWay> way;
  bool way_bad = false;
  int depth = 0;
  int way_depth = -1;

  for (;;) {
    const auto ev = xml.next();
    if (ev == XmlReader::Event::Eof) break;
    if (ev == XmlReader::Event::End) {
      --depth;
      if (way && depth == way_depth) {
        if (way_bad || way->refs.size() < 2 || !way_ids.insert(way->id).second) {
          ++doc.ways_skipped;
        } else {
          doc.ways.push_back(std::move(*way));
        }
        way.reset();
        way_depth = -1;
      }
      continue;
    }
    const auto name = xml.name();
    if (way && depth == way_depth + 1) {
      if (name == "nd") {
        const auto ref = parse_number<std::int64_t>(xml.attribute("ref"));
        if (ref) way->refs.push_back(*ref);
        else way_bad = true;
      } else if (name == "tag") {
        const auto* k = xml.attribute("k");
        const auto* v = xml.attribute("v");
        if (k && v) way->tags.emplace(*k, *v);
      }
    } else if (!way && name == "node") {
      const auto id = parse_number<std::int64_t>(xml.attribute("id"));
      const auto lat = parse_number<double>(xml.attribute("lat"));
      const auto lon = parse_number<double>(xml.attribute("lon"));
      if (!id || !lat || !lon || !std::isfinite(*lat) || !std::isfinite(*lon) || std::abs(*lat) > 90.0 ||
          std::abs(*lon) > 180.0 || !node_ids.insert(*id).second) {
        ++doc.nodes_skipped;
      } else {
        doc.nodes.push_back(OsmNode{*id, GeoPoint{*lat, *lon}});
      }
    } else if (!way && name == "way") {
      const auto id = parse_number<std::int64_t>(xml.attribute("id"));
      way.emplace();
      way->id = id.value_or(0);
      way_bad = !id;
      way_depth = depth;
    }
    ++depth;
  }
  return doc;
}

std::optional<double> parse_maxspeed(std::string_view value) {
  value = trim(value);
  double factor = 1.0 / 3.6;
  for (const std::string_view unit : {"mph"}) {
    if (value.ends_with(unit)) {
      value = trim(value.substr(0, value.size() - unit.size()));
      factor = 1.609344 / 3.6;
    }
  }
  for (const std::string_view unit : {"km/h", "kmh", "kph"}) {
    if (value.ends_with(unit)) value = trim(value.substr(0, value.size() - unit.size()));
  }
  if (value.empty()) return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || end != value.data() + value.size()) return std::nullopt;
  if (!std::isfinite(v) || v <= 0.0) return std::nullopt;
  return v * factor;
}

WayClass classify_way(const OsmTags& tags, const std::vector<std::string>& drivable) {
  const auto hw = tags.find("highway");
  if (hw == tags.end()) return Rejected{RejectReason::MissingHighway};
  if (std::find(drivable.begin(), drivable.end(), hw->second) == drivable.end()) {
    return Rejected{RejectReason::NotDrivable};
  }
  Drivable d;
  if (const auto ow = tags.find("oneway"); ow != tags.end()) {
    const auto v = trim(ow->second);
    if (v == "yes" || v == "true" || v == "1") {
      d.oneway = true;
    } else if (v == "-1") {
      d.oneway = true;
      d.reversed = true;
    }
  }
  if (const auto ms = tags.find("maxspeed"); ms != tags.end()) d.v_max = parse_maxspeed(ms->second);
  return d;
}

std::string format_report(const ImportReport& r) {
  std::ostringstream os;
  os << "nodes_extracted=" << r.nodes_extracted << '\n'
     << "nodes_skipped=" << r.nodes_skipped << '\n'
     << "ways_extracted=" << r.ways_extracted << '\n'
     << "ways_skipped_type=" << r.ways_skipped_type << '\n'
     << "ways_skipped_unknown_type=" << r.ways_skipped_unknown_type << '\n'
     << "edges_missing_vmax=" << r.edges_missing_vmax << '\n'
     << "edges_degenerate=" << r.edges_degenerate << '\n'
     << "refs_dangling=" << r.refs_dangling << '\n';
  return os.str();
}

AssembledGraph assemble_graph(const OsmDocument& doc, ImportReport& report,
                              const OsmImportOptions& options) {
  report = ImportReport{};
  report.nodes_extracted = doc.nodes.size();
  report.nodes_skipped = doc.nodes_skipped;

  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(doc.nodes.size());
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) index.emplace(doc.nodes[i].id, i);

  struct Pending {
    std::size_t from, to;
    std::optional<double> v_max;
    std::int64_t way;
  };
  std::vector<Pending> pending;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> by_pair;
  auto add = [&](std::size_t a, std::size_t b, std::optional<double> v, std::int64_t way) {
    const auto [it, fresh] = by_pair.emplace(std::pair{a, b}, pending.size());
    if (fresh) {
      pending.push_back({a, b, v, way});
      return;
    }
    auto& kept = pending[it->second];
    if (v && (!kept.v_max || *v > *kept.v_max)) {
      kept.v_max = v;
      kept.way = way;
    }
  };

  for (const auto& way : doc.ways) {
    const auto cls = classify_way(way.tags, options.drivable_types);
    if (const auto* r = std::get_if<Rejected>(&cls)) {
      if (r->reason == RejectReason::MissingHighway) ++report.ways_skipped_unknown_type;
      else ++report.ways_skipped_type;
      continue;
    }
    const auto& d = std::get<Drivable>(cls);
    ++report.ways_extracted;
    std::vector<std::optional<std::size_t>> refs;
    refs.reserve(way.refs.size());
    for (const auto ref : way.refs) {
      const auto it = index.find(ref);
      if (it == index.end()) {
        ++report.refs_dangling;
        refs.emplace_back();
      } else {
        refs.emplace_back(it->second);
      }
    }
    if (d.reversed) std::reverse(refs.begin(), refs.end());
    for (std::size_t i = 0; i + 1 < refs.size(); ++i) {
      if (!refs[i] || !refs[i + 1]) continue;
      const std::size_t a = *refs[i], b = *refs[i + 1];
      if (a == b || doc.nodes[a].pos == doc.nodes[b].pos) {
        ++report.edges_degenerate;
        continue;
      }
      add(a, b, d.v_max, way.id);
      if (!d.oneway) add(b, a, d.v_max, way.id);
    }
  }
  if (report.ways_extracted == 0) throw Error(Errc::EmptyNetwork, "no drivable ways");
  if (pending.empty()) throw Error(Errc::EmptyNetwork, "drivable ways yield no usable road segments");

  std::vector<std::size_t> used;
  used.reserve(2 * pending.size());
  for (const auto& p : pending) {
    used.push_back(p.from);
    used.push_back(p.to);
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  AssembledGraph out;
  std::unordered_map<std::size_t, NodeId> node_of;
  node_of.reserve(used.size());
  for (const auto i : used) node_of.emplace(i, out.graph.add_node(doc.nodes[i].pos));
  out.edge_way.reserve(pending.size());
  for (const auto& p : pending) {
    out.graph.add_edge(node_of.at(p.from), node_of.at(p.to), p.v_max);
    out.edge_way.push_back(p.way);
    if (!p.v_max) ++report.edges_missing_vmax;
  }
  return out;
}

RoadGraph build_graph(const OsmDocument& doc, ImportReport& report, const OsmImportOptions& options) {
  return clean_and_enhance(assemble_graph(doc, report, options).graph, options.enhance);
}

OsmImport import_osm(std::string_view bytes, const OsmImportOptions& options) {
  OsmImport out;
  out.graph = build_graph(parse_osm_xml(bytes), out.report, options);
  return out;
}

OsmImport import_osm_file(const std::filesystem::path& path, const OsmImportOptions& options) {
  return import_osm(read_file_bytes(path), options);
}

}  // namespace roadrl
