#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "vsmrf/errors.hpp"
#include "vsmrf/io.hpp"
#include "vsmrf/numeric_format.hpp"

namespace vsmrf {

namespace {

constexpr int kFormatVersion = 1;

// nlohmann writes non-finite doubles as null, so they travel as strings.
Json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double get_num(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "-inf" || s == "nan") return parse_double(s);
    }
    throw ParseError(what + ": expected a number");
}

const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

std::string get_string(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    if (!v.is_string()) throw ParseError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

const Json& get_array(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    if (!v.is_array()) throw ParseError(where + ": field '" + key + "' must be an array");
    return v;
}

template <class T>
T get_scalar(const Json& j, const char* key, const std::string& where) {
    const Json& v = field(j, key, where);
    try {
        return v.get<T>();
    } catch (const Json::exception&) {
        throw ParseError(where + ": field '" + key + "' has the wrong type");
    }
}

void check_format(const Json& j, const std::string& expected) {
    const auto f = get_string(j, "format", "document");
    if (f != expected) throw ParseError("expected a '" + expected + "' document, found '" + f + "'");
    const int v = get_scalar<int>(j, "version", "document");
    if (v != kFormatVersion) throw ParseError("unsupported " + expected + " version " + std::to_string(v));
}

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

Vec vec_from_json(const Json& j, Eigen::Index n, const std::string& where) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw ValidationError(where + ": expected " + std::to_string(n) + " values");
    }
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = get_num(j[static_cast<std::size_t>(i)], where);
    return v;
}

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(a, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
    const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw ValidationError(where + ": expected a " + shape + " block");
    }
    Mat m(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a) {
        const Json& row = j[static_cast<std::size_t>(a)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ValidationError(where + ": expected a " + shape + " block");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(a, c) = get_num(row[static_cast<std::size_t>(c)], where);
    }
    return m;
}

std::size_t node_index(const GraphSchema& s, const std::string& name, const std::string& where) {
    auto r = s.index_of(name);
    if (!r) throw ValidationError(where + ": unknown node '" + name + "'");
    return *r;
}

std::vector<double> doubles_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(get_num(x, where));
    return out;
}

std::string effect_name(int sign) { return sign > 0 ? "positive" : (sign < 0 ? "negative" : "neutral"); }

int parse_effect(const std::string& s) {
    if (s == "positive") return 1;
    if (s == "negative") return -1;
    if (s == "neutral") return 0;
    throw ParseError("unknown edge effect '" + s + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

// ---------------------------------------------------------------------------
// schema

GraphSchema read_schema(std::istream& is) {
    std::vector<NodeSpec> nodes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::vector<std::pair<std::string, std::size_t>> tokens;  // text, 1-based column
        for (std::size_t i = 0; i < line.size();) {
            if (std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            tokens.emplace_back(line.substr(i, j - i), i + 1);
            i = j;
        }
        if (tokens.empty()) continue;
        if (tokens.size() == 1) throw ParseError("expected a family tag after '" + tokens[0].first + "'", lineno, tokens[0].second + tokens[0].first.size());
        if (tokens.size() > 2) throw ParseError("unexpected token '" + tokens[2].first + "'", lineno, tokens[2].second);
        const auto& [name, name_col] = tokens[0];
        if (name.find_first_of(",\"") != std::string::npos) {
            throw ParseError("node name '" + name + "' contains a comma or quote", lineno, name_col);
        }
        for (const auto& n : nodes) {
            if (n.name == name) throw ParseError("duplicate node name '" + name + "'", lineno, name_col);
        }
        try {
            nodes.push_back({name, FamilySpec::parse(tokens[1].first)});
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), lineno, tokens[1].second);
        }
    }
    if (nodes.empty()) throw ParseError("schema has no nodes", lineno, 0);
    return GraphSchema(std::move(nodes));
}

void write_schema(std::ostream& os, const GraphSchema& schema) {
    for (const auto& n : schema.nodes()) os << n.name << ' ' << n.family.tag() << '\n';
}

Json schema_to_json(const GraphSchema& schema) {
    Json a = Json::array();
    for (const auto& n : schema.nodes()) a.push_back({{"name", n.name}, {"family", n.family.tag()}});
    return a;
}

GraphSchema schema_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("nodes: expected an array");
    std::vector<NodeSpec> nodes;
    for (const auto& n : j) {
        const auto name = get_string(n, "name", "node");
        const auto tag = get_string(n, "family", "node '" + name + "'");
        try {
            nodes.push_back({name, FamilySpec::parse(tag)});
        } catch (const std::invalid_argument& e) {
            throw ParseError("node '" + name + "': " + e.what());
        }
    }
    try {
        return GraphSchema(std::move(nodes));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

// ---------------------------------------------------------------------------
// model

Json model_to_json(const JointModel& model) {
    const auto& s = model.schema();
    Json bias = Json::array();
    for (std::size_t r = 0; r < s.size(); ++r) bias.push_back(vec_to_json(model.bias(r)));
    Json edges = Json::array();
    for (const auto& [k, theta] : model.edges()) {
        edges.push_back({{"source", s.node(k.first).name}, {"target", s.node(k.second).name}, {"theta", mat_to_json(theta)}});
    }
    return {{"format", "vsmrf-model"}, {"version", kFormatVersion}, {"nodes", schema_to_json(s)},
            {"bias", std::move(bias)}, {"edges", std::move(edges)}};
}

JointModel model_from_json(const Json& j) {
    check_format(j, "vsmrf-model");
    JointModel model(schema_from_json(field(j, "nodes", "model")));
    const auto& s = model.schema();
    const Json& bias = get_array(j, "bias", "model");
    if (bias.size() != s.size()) throw ValidationError("model: expected one bias vector per node");
    for (std::size_t r = 0; r < s.size(); ++r) {
        model.set_bias(r, vec_from_json(bias[r], s.stat_dim(r), "bias of '" + s.node(r).name + "'"));
    }
    for (const auto& e : get_array(j, "edges", "model")) {
        const auto a = node_index(s, get_string(e, "source", "edge"), "edge");
        const auto b = node_index(s, get_string(e, "target", "edge"), "edge");
        if (a == b) throw ValidationError("edge: self loop on '" + s.node(a).name + "'");
        const std::string where = "edge " + s.node(a).name + " -- " + s.node(b).name;
        if (model.has_edge(a, b)) throw ValidationError(where + " listed twice");
        model.set_edge(a, b, mat_from_json(field(e, "theta", where), s.stat_dim(a), s.stat_dim(b), where));
    }
    return model;
}

// ---------------------------------------------------------------------------
// dataset

std::vector<std::string> dataset_columns(const GraphSchema& schema) {
    std::vector<std::string> cols;
    for (const auto& n : schema.nodes()) {
        const int d = n.family.value_dim();
        if (d == 1) {
            cols.push_back(n.name);
        } else {
            for (int k = 0; k < d; ++k) cols.push_back(n.name + "." + std::to_string(k));
        }
    }
    return cols;
}

void write_dataset(std::ostream& os, const Dataset& data) {
    const auto cols = dataset_columns(data.schema());
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.row(i);
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
}

Dataset read_dataset(std::istream& is, const GraphSchema& schema) {
    const auto expected = dataset_columns(schema);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<double> values;
    while (std::getline(is, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto cells = split_csv(line);
        if (!have_header) {
            std::size_t col = 1;
            for (std::size_t c = 0; c < std::max(cells.size(), expected.size()); ++c) {
                if (c >= cells.size()) throw ParseError("header is missing column '" + expected[c] + "'", lineno, line.size() + 1);
                if (c >= expected.size()) throw ParseError("unexpected column '" + cells[c] + "'", lineno, col);
                if (cells[c] != expected[c]) {
                    throw ParseError("column " + std::to_string(c + 1) + " is '" + cells[c] + "', expected '" + expected[c] + "'", lineno, col);
                }
                col += cells[c].size() + 1;
            }
            have_header = true;
            continue;
        }
        if (cells.size() != expected.size()) {
            throw ParseError("expected " + std::to_string(expected.size()) + " values, found " + std::to_string(cells.size()), lineno, 1);
        }
        std::size_t col = 1;
        for (const auto& cell : cells) {
            try {
                values.push_back(parse_double(cell));
            } catch (const std::invalid_argument&) {
                throw ParseError("not a number: '" + cell + "'", lineno, col);
            }
            col += cell.size() + 1;
        }
    }
    if (!have_header) throw ParseError("dataset is empty", lineno, 0);
    if (values.empty()) throw ValidationError("dataset has no samples");
    return Dataset(schema, std::move(values));
}

// ---------------------------------------------------------------------------
// fits

std::size_t FitCollection::index_of(double lambda1, double lambda2) const {
    for (std::size_t a = 0; a < lambda1_grid.size(); ++a) {
        for (std::size_t b = 0; b < lambda2_grid.size(); ++b) {
            if (lambda1_grid[a] == lambda1 && lambda2_grid[b] == lambda2) return a * lambda2_grid.size() + b;
        }
    }
    throw std::invalid_argument("(" + format_double(lambda1) + ", " + format_double(lambda2) + ") is not on the fit grid");
}

Json fits_to_json(const FitCollection& fits) {
    const auto& s = fits.schema;
    Json paths = Json::array();
    for (std::size_t r = 0; r < fits.paths.size(); ++r) {
        Json path = Json::array();
        for (const auto& f : fits.paths[r]) {
            Json blocks = Json::array();
            for (std::size_t t = 0; t < s.size(); ++t) {
                if (t == r || f.params.blocks[t].isZero(0.0)) continue;
                blocks.push_back({{"neighbor", s.node(t).name}, {"theta", mat_to_json(f.params.blocks[t])}});
            }
            path.push_back({{"lambda1", num(f.lambda1)},
                            {"lambda2", num(f.lambda2)},
                            {"converged", f.converged},
                            {"status", f.status},
                            {"iterations", f.iterations},
                            {"newton_steps", f.newton_steps},
                            {"primal_residual", num(f.primal_residual)},
                            {"dual_residual", num(f.dual_residual)},
                            {"objective", num(f.objective)},
                            {"bias", vec_to_json(f.params.bias)},
                            {"blocks", std::move(blocks)}});
        }
        paths.push_back({{"node", s.node(r).name}, {"fits", std::move(path)}});
    }
    Json g1 = Json::array(), g2 = Json::array();
    for (double x : fits.lambda1_grid) g1.push_back(num(x));
    for (double x : fits.lambda2_grid) g2.push_back(num(x));
    return {{"format", "vsmrf-fits"}, {"version", kFormatVersion}, {"nodes", schema_to_json(s)},
            {"lambda1_grid", std::move(g1)}, {"lambda2_grid", std::move(g2)}, {"warm_start", fits.warm_start},
            {"paths", std::move(paths)}};
}

FitCollection fits_from_json(const Json& j) {
    check_format(j, "vsmrf-fits");
    FitCollection out{schema_from_json(field(j, "nodes", "fits")), doubles_from_json(field(j, "lambda1_grid", "fits"), "lambda1_grid"),
                      doubles_from_json(field(j, "lambda2_grid", "fits"), "lambda2_grid"), get_scalar<bool>(j, "warm_start", "fits"), {}};
    const auto& s = out.schema;
    const Json& paths = get_array(j, "paths", "fits");
    if (paths.size() != s.size()) throw ValidationError("fits: expected one path per node");
    out.paths.resize(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) {
        const auto name = get_string(paths[r], "node", "path");
        if (name != s.node(r).name) throw ValidationError("fits: path " + std::to_string(r) + " is for '" + name + "', expected '" + s.node(r).name + "'");
        const Json& path = get_array(paths[r], "fits", "path of '" + name + "'");
        if (path.size() != out.grid_size()) throw ValidationError("fits: path of '" + name + "' does not cover the grid");
        for (std::size_t k = 0; k < path.size(); ++k) {
            const Json& e = path[k];
            const std::string where = "fit " + std::to_string(k) + " of '" + name + "'";
            NodeFit f;
            f.lambda1 = get_num(field(e, "lambda1", where), where);
            f.lambda2 = get_num(field(e, "lambda2", where), where);
            if (f.lambda1 != out.lambda1_grid[k / out.lambda2_grid.size()] || f.lambda2 != out.lambda2_grid[k % out.lambda2_grid.size()]) {
                throw ValidationError(where + ": penalty does not match the grid");
            }
            f.converged = get_scalar<bool>(e, "converged", where);
            f.status = get_string(e, "status", where);
            f.iterations = get_scalar<int>(e, "iterations", where);
            f.newton_steps = get_scalar<long>(e, "newton_steps", where);
            f.primal_residual = get_num(field(e, "primal_residual", where), where);
            f.dual_residual = get_num(field(e, "dual_residual", where), where);
            f.objective = get_num(field(e, "objective", where), where);
            f.params = zero_params(s, r);
            f.params.bias = vec_from_json(field(e, "bias", where), s.stat_dim(r), where);
            for (const auto& b : get_array(e, "blocks", where)) {
                const auto t = node_index(s, get_string(b, "neighbor", where), where);
                if (t == r) throw ValidationError(where + ": block on the node itself");
                f.params.blocks[t] = mat_from_json(field(b, "theta", where), s.stat_dim(r), s.stat_dim(t), where);
            }
            out.paths[r].push_back(std::move(f));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// graph

Json graph_to_json(const GraphFile& g) {
    const auto& s = g.graph.schema();
    Json edges = Json::array();
    for (const auto& [k, e] : g.graph.edges()) {
        edges.push_back({{"source", s.node(k.first).name},
                         {"target", s.node(k.second).name},
                         {"strength", num(e.strength)},
                         {"effect", effect_name(e.effect_sign)},
                         {"theta_st", mat_to_json(e.block_rt)},
                         {"theta_ts", mat_to_json(e.block_tr)}});
    }
    return {{"format", "vsmrf-graph"}, {"version", kFormatVersion}, {"rule", std::string(stitch_rule_name(g.graph.rule()))},
            {"lambda1", num(g.lambda1)}, {"lambda2", num(g.lambda2)}, {"nodes", schema_to_json(s)},
            {"edges", std::move(edges)}};
}

GraphFile graph_from_json(const Json& j) {
    check_format(j, "vsmrf-graph");
    StitchRule rule;
    try {
        rule = parse_stitch_rule(get_string(j, "rule", "graph"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    GraphFile out{StitchedGraph(schema_from_json(field(j, "nodes", "graph")), rule),
                  get_num(field(j, "lambda1", "graph"), "lambda1"), get_num(field(j, "lambda2", "graph"), "lambda2")};
    const auto& s = out.graph.schema();
    for (const auto& e : get_array(j, "edges", "graph")) {
        auto a = node_index(s, get_string(e, "source", "edge"), "edge");
        auto b = node_index(s, get_string(e, "target", "edge"), "edge");
        const std::string where = "edge " + s.node(a).name + " -- " + s.node(b).name;
        if (a == b) throw ValidationError(where + ": self loop");
        Mat st = mat_from_json(field(e, "theta_st", where), s.stat_dim(a), s.stat_dim(b), where);
        Mat ts = mat_from_json(field(e, "theta_ts", where), s.stat_dim(b), s.stat_dim(a), where);
        if (a > b) {
            std::swap(a, b);
            std::swap(st, ts);
        }
        StitchedEdge se{std::move(st), std::move(ts), get_num(field(e, "strength", where), where),
                        parse_effect(get_string(e, "effect", where))};
        if (!out.graph.edges().emplace(NodePair{a, b}, std::move(se)).second) throw ValidationError(where + " listed twice");
    }
    return out;
}

// ---------------------------------------------------------------------------
// roc

void write_roc_csv(std::ostream& os, const std::vector<RocPoint>& points) {
    os << "lambda1,lambda2,level,tp,fp,tn,fn,tpr,fpr\n";
    for (const auto& p : points) {
        os << format_double(p.lambda1) << ',' << format_double(p.lambda2) << ',' << roc_level_name(p.level) << ','
           << p.counts.tp << ',' << p.counts.fp << ',' << p.counts.tn << ',' << p.counts.fn << ','
           << (p.tpr_defined ? format_double(p.tpr) : "nan") << ',' << (p.fpr_defined ? format_double(p.fpr) : "nan") << '\n';
    }
}

std::vector<RocPoint> read_roc_csv(std::istream& is) {
    std::vector<RocPoint> out;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto cells = split_csv(line);
        if (!have_header) {
            if (line.substr(0, line.find_last_not_of('\r') + 1) != "lambda1,lambda2,level,tp,fp,tn,fn,tpr,fpr") {
                throw ParseError("unexpected ROC header", lineno, 1);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != 9) throw ParseError("expected 9 fields", lineno, 1);
        RocPoint p;
        std::size_t col = 1;
        try {
            p.lambda1 = parse_double(cells[0]);
            col += cells[0].size() + 1;
            p.lambda2 = parse_double(cells[1]);
            col += cells[1].size() + 1;
            p.level = parse_roc_level(cells[2]);
            col += cells[2].size() + 1;
            std::size_t* counts[] = {&p.counts.tp, &p.counts.fp, &p.counts.tn, &p.counts.fn};
            for (int c = 0; c < 4; ++c) {
                const double v = parse_double(cells[3 + c]);
                if (!(v >= 0) || v != std::floor(v)) throw std::invalid_argument("count");
                *counts[c] = static_cast<std::size_t>(v);
                col += cells[3 + c].size() + 1;
            }
            p.tpr = parse_double(cells[7]);
            col += cells[7].size() + 1;
            p.fpr = parse_double(cells[8]);
        } catch (const std::invalid_argument&) {
            throw ParseError("malformed ROC field", lineno, col);
        }
        p.tpr_defined = !std::isnan(p.tpr);
        p.fpr_defined = !std::isnan(p.fpr);
        if (!p.tpr_defined) p.tpr = 0.0;
        if (!p.fpr_defined) p.fpr = 0.0;
        out.push_back(p);
    }
    if (!have_header) throw ParseError("ROC file is empty", lineno, 0);
    return out;
}

Json sparsistency_to_json(const std::vector<SparsistencyReport>& reports, const GraphSchema& schema) {
    Json a = Json::array();
    for (const auto& r : reports) {
        a.push_back({{"node", schema.node(r.node).name},
                     {"degree", r.d_r},
                     {"degenerate", r.degenerate},
                     {"singular", r.singular},
                     {"c_min", num(r.c_min)},
                     {"incoherence", num(r.incoherence)},
                     {"m_ratio", num(r.m_ratio)},
                     {"nu_ratio", num(r.nu_ratio)},
                     {"alpha", r.alpha ? num(*r.alpha) : Json(nullptr)},
                     {"incoherence_bound", num(r.incoherence_bound)},
                     {"min_edge_norm", num(r.min_edge_norm)},
                     {"max_lambda_sum", num(r.max_lambda_sum)},
                     {"d_max_hat", num(r.d_max_hat)}});
    }
    return {{"format", "vsmrf-sparsistency"}, {"version", kFormatVersion}, {"nodes", std::move(a)}};
}

// ---------------------------------------------------------------------------
// files

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Json read_json_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("invalid JSON", line, col);
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace vsmrf
