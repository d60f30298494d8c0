#include "snav/world_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "snav/error.hpp"

namespace snav {

using nlohmann::json;

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

const char* kind_name(NodeKind k) { return k == NodeKind::Intersection ? "intersection" : "block-interior"; }

NodeKind parse_kind(const std::string& s) {
  if (s == "intersection") return NodeKind::Intersection;
  if (s == "block-interior") return NodeKind::BlockInterior;
  throw FormatError("unknown node kind '" + s + "'");
}

}  // namespace

json gen_params_to_json(const CityGenParams& p) {
  return json{{"grid_cols", p.grid_cols},       {"grid_rows", p.grid_rows},
              {"block_length", p.block_length}, {"node_spacing", p.node_spacing},
              {"coord_jitter", p.coord_jitter}, {"edge_drop_prob", p.edge_drop_prob},
              {"lexicon", p.lexicon}};
}

CityGenParams gen_params_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("city parameters must be a JSON object");
  CityGenParams p;
  try {
    p.grid_cols = j.value("grid_cols", p.grid_cols);
    p.grid_rows = j.value("grid_rows", p.grid_rows);
    p.block_length = j.value("block_length", p.block_length);
    p.node_spacing = j.value("node_spacing", p.node_spacing);
    p.coord_jitter = j.value("coord_jitter", p.coord_jitter);
    p.edge_drop_prob = j.value("edge_drop_prob", p.edge_drop_prob);
    p.lexicon = j.value("lexicon", p.lexicon);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad city parameters: ") + e.what());
  }
  p.validate();
  return p;
}

std::string world_to_string(const CityGraph& g) {
  std::ostringstream out;
  out << "{\"version\":" << kWorldFileVersion << ",\"world_seed\":" << g.world_seed()
      << ",\"gen_params\":" << gen_params_to_json(g.gen_params()).dump() << ",\n\"nodes\":[";
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const Node& n = g.nodes()[i];
    out << (i ? ",\n" : "\n") << "{\"id\":" << n.id << ",\"x\":" << fixed3(n.coord.x) << ",\"y\":" << fixed3(n.coord.y)
        << ",\"percept_seed\":" << n.percept_seed << ",\"kind\":\"" << kind_name(n.kind) << "\"}";
  }
  out << "],\n\"edges\":[";
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    out << (i ? ",\n" : "\n") << "{\"a\":" << e.a << ",\"b\":" << e.b << ",\"street_id\":" << e.street_id
        << ",\"length\":" << json(e.length).dump() << "}";
  }
  out << "],\n\"streets\":[";
  for (std::size_t i = 0; i < g.streets().size(); ++i) {
    const Street& s = g.streets()[i];
    out << (i ? ",\n" : "\n") << "{\"id\":" << s.id << ",\"name\":" << json(s.name).dump()
        << ",\"axis_bearing\":" << json(s.axis_bearing).dump()
        << ",\"one_way\":" << (s.one_way ? json(*s.one_way).dump() : "null") << "}";
  }
  out << "]}\n";
  return out.str();
}

CityGraph world_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("world file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kWorldFileVersion)
      throw FormatError("unsupported world file version " + doc.at("version").dump());
    std::vector<Node> nodes;
    for (const json& jn : doc.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<NodeId>();
      n.coord = {jn.at("x").get<double>(), jn.at("y").get<double>()};
      n.percept_seed = jn.at("percept_seed").get<std::uint64_t>();
      n.kind = parse_kind(jn.at("kind").get<std::string>());
      nodes.push_back(n);
    }
    std::vector<Edge> edges;
    for (const json& je : doc.at("edges"))
      edges.push_back({je.at("a").get<NodeId>(), je.at("b").get<NodeId>(), je.at("street_id").get<std::int32_t>(),
                       je.at("length").get<double>()});
    std::vector<Street> streets;
    for (const json& js : doc.at("streets")) {
      Street s;
      s.id = js.at("id").get<std::int32_t>();
      s.name = js.at("name").get<std::string>();
      s.axis_bearing = js.at("axis_bearing").get<double>();
      if (!js.at("one_way").is_null()) s.one_way = js.at("one_way").get<double>();
      streets.push_back(std::move(s));
    }
    CityGraph g(std::move(nodes), std::move(edges), std::move(streets), doc.at("world_seed").get<std::uint64_t>(),
                gen_params_from_json(doc.at("gen_params")));
    if (!g.connected()) throw FormatError("world graph is not connected");
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed world file: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void save_world(const CityGraph& g, const std::filesystem::path& path) { write_text_file(path, world_to_string(g)); }

CityGraph load_world(const std::filesystem::path& path) { return world_from_string(read_text_file(path)); }

}  // namespace snav
