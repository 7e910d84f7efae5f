#include "nlaid/snapshot.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "nlaid/csv.hpp"

namespace nlaid {

namespace {

void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_real(v[i]);
}

Vector read_vector(std::istringstream& in, std::size_t dim, std::size_t line) {
  Vector v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    std::string tok;
    if (!(in >> tok)) throw InvalidInput("snapshot line " + std::to_string(line) + ": too few values");
    v[static_cast<Eigen::Index>(i)] = parse_real(tok);
  }
  return v;
}

}  // namespace

Snapshot Snapshot::from_solution(const ProblemGraph& graph, const NetworkSolution& solution) {
  Snapshot snap;
  snap.dim = graph.dim();
  for (std::size_t t = 0; t < graph.nodes().size(); ++t) {
    snap.nodes.push_back({graph.nodes()[t].id, solution.models.at(t)});
  }
  for (std::size_t e = 0; e < graph.edges().size(); ++e) {
    snap.edges.push_back({graph.edges()[e].j, graph.edges()[e].k, solution.edges.at(e)});
  }
  return snap;
}

const ModelParams& Snapshot::model(NodeId id) const {
  for (const auto& node : nodes) {
    if (node.id == id) return node.params;
  }
  throw InvalidInput("snapshot has no model for node " + std::to_string(id));
}

void write_snapshot(std::ostream& out, const Snapshot& snap) {
  out << "nlaid-snapshot 1\n";
  out << "dim " << snap.dim << '\n';
  for (const auto& node : snap.nodes) {
    out << "node " << node.id;
    write_vector(out, node.params.w);
    out << ' ' << format_real(node.params.b) << '\n';
  }
  for (const auto& edge : snap.edges) {
    out << "edge " << edge.j << ' ' << edge.k;
    write_vector(out, edge.state.z_jk);
    write_vector(out, edge.state.z_kj);
    write_vector(out, edge.state.u_jk);
    write_vector(out, edge.state.u_kj);
    out << '\n';
  }
}

Snapshot read_snapshot(std::istream& in) {
  Snapshot snap;
  std::string raw;
  std::size_t line_no = 0;
  bool have_magic = false;
  bool have_dim = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw.front() == '#') continue;
    std::istringstream line(raw);
    std::string tag;
    line >> tag;
    const auto where = "snapshot line " + std::to_string(line_no);
    if (!have_magic) {
      std::string version;
      line >> version;
      if (tag != "nlaid-snapshot" || version != "1") throw InvalidInput(where + ": not a v1 snapshot");
      have_magic = true;
      continue;
    }
    if (tag == "dim") {
      if (!(line >> snap.dim) || snap.dim == 0) throw InvalidInput(where + ": bad dimension");
      have_dim = true;
    } else if (tag == "node" || tag == "edge") {
      if (!have_dim) throw InvalidInput(where + ": record before dim");
      if (tag == "node") {
        Snapshot::Node node;
        if (!(line >> node.id)) throw InvalidInput(where + ": bad node id");
        node.params.w = read_vector(line, snap.dim, line_no);
        node.params.b = read_vector(line, 1, line_no)[0];
        snap.nodes.push_back(std::move(node));
      } else {
        Snapshot::Edge edge;
        if (!(line >> edge.j >> edge.k)) throw InvalidInput(where + ": bad edge endpoints");
        edge.state.z_jk = read_vector(line, snap.dim, line_no);
        edge.state.z_kj = read_vector(line, snap.dim, line_no);
        edge.state.u_jk = read_vector(line, snap.dim, line_no);
        edge.state.u_kj = read_vector(line, snap.dim, line_no);
        snap.edges.push_back(std::move(edge));
      }
      std::string extra;
      if (line >> extra) throw InvalidInput(where + ": trailing values");
    } else {
      throw InvalidInput(where + ": unknown record '" + tag + "'");
    }
  }
  if (!have_magic) throw InvalidInput("snapshot: empty input");
  return snap;
}

void save_snapshot(const std::string& path, const Snapshot& snap) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_snapshot(out, snap);
  if (!out) throw IoError("failed writing " + path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_snapshot(in);
}

}  // namespace nlaid
