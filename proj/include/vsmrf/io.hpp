#pragma once

// File formats of the command-line pipeline.
//
//   schema   text, one "name family-tag" pair per line, '#' starts a comment
//   model    JSON with the schema, biases and stored edge blocks
//   dataset  CSV with a header of flattened value columns
//   fits     JSON with the lambda grids and one path of node fits per node
//   graph    JSON with a stitched edge set
//   roc      CSV, one row per grid point and level
//
// Every double is written so that reading it back gives the same bits.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsmrf/dataset.hpp"
#include "vsmrf/diagnostics.hpp"
#include "vsmrf/solver.hpp"
#include "vsmrf/stitcher.hpp"

namespace vsmrf {

using Json = nlohmann::json;

/// Throws ParseError with the line and column of the first bad token.
GraphSchema read_schema(std::istream& is);
void write_schema(std::ostream& os, const GraphSchema& schema);

Json schema_to_json(const GraphSchema& schema);
GraphSchema schema_from_json(const Json& j);

Json model_to_json(const JointModel& model);
/// Throws ParseError on a malformed document and ValidationError when the
/// blocks do not match the schema.
JointModel model_from_json(const Json& j);

/// Column names: the node name for scalar nodes, name.k for the k-th
/// component of a vector-valued node.
std::vector<std::string> dataset_columns(const GraphSchema& schema);
void write_dataset(std::ostream& os, const Dataset& data);
/// The header must name the schema's columns in order. Values are checked
/// against each node's domain (DomainError names the sample and node).
Dataset read_dataset(std::istream& is, const GraphSchema& schema);

/// Regularization paths of every node on a shared grid.
struct FitCollection {
    GraphSchema schema;
    std::vector<double> lambda1_grid;
    std::vector<double> lambda2_grid;
    bool warm_start = true;
    std::vector<std::vector<NodeFit>> paths;  ///< [node][grid point], lambda1 outer

    std::size_t grid_size() const { return lambda1_grid.size() * lambda2_grid.size(); }
    /// Grid position whose (lambda1, lambda2) equals the given pair exactly.
    std::size_t index_of(double lambda1, double lambda2) const;
};

Json fits_to_json(const FitCollection& fits);
FitCollection fits_from_json(const Json& j);

/// Stitched graph together with the grid point it came from.
struct GraphFile {
    StitchedGraph graph;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

Json graph_to_json(const GraphFile& g);
GraphFile graph_from_json(const Json& j);

void write_roc_csv(std::ostream& os, const std::vector<RocPoint>& points);
std::vector<RocPoint> read_roc_csv(std::istream& is);

Json sparsistency_to_json(const std::vector<SparsistencyReport>& reports, const GraphSchema& schema);

/// Whole-file helpers. Reading throws std::runtime_error when the file cannot
/// be opened; JSON syntax errors become ParseError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);
Json read_json_file(const std::filesystem::path& path);
/// Two-space indented JSON followed by a newline.
std::string dump_json(const Json& j);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
    std::string path;
    std::string sha256;
};

/// Record of one command invocation. Replaying `args` from `working_directory`
/// on inputs with the recorded digests reproduces the recorded outputs.
struct RunManifest {
    std::string tool = "vsmrf";
    std::string tool_version;
    std::string command;
    std::vector<std::string> args;  ///< full argument vector after the program name
    std::string working_directory;
    std::uint64_t seed = 0;
    Json config = Json::object();  ///< effective option values
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string created;  ///< UTC timestamp; not part of any digest

    Json to_json() const;
    static RunManifest from_json(const Json& j);
};

/// Path of the manifest written next to an output file.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace vsmrf
