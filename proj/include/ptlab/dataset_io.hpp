#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptlab/graph.hpp"

namespace ptlab {

// Dataset bundle layout (one directory):
//   meta.json     {"num_nodes": n, "num_features": f, "num_classes": C}
//   edges.tsv     u <TAB> v [<TAB> weight]   each undirected edge once
//   features.tsv  node <TAB> feature <TAB> value   (omitted entries are 0)
//   labels.tsv    node <TAB> class   for every node

namespace detail {

inline std::ifstream open_or_throw(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("dataset bundle: missing or unreadable file " + p.string());
    return in;
}

inline void check_node(Index v, Index n, const std::string& file) {
    if (v < 0 || v >= n)
        throw std::runtime_error(file + ": node index " + std::to_string(v) + " out of range [0," +
                                 std::to_string(n) + ")");
}

} // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
    auto meta_in = detail::open_or_throw(dir / "meta.json");
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    Dataset ds;
    ds.n = meta.at("num_nodes").get<Index>();
    ds.f = meta.at("num_features").get<Index>();
    ds.num_classes = meta.at("num_classes").get<Index>();
    if (ds.n <= 0 || ds.f <= 0 || ds.num_classes <= 0)
        throw std::runtime_error("meta.json: counts must be positive");

    // edges: stored once in the file, both directions in the matrix
    {
        auto in = detail::open_or_throw(dir / "edges.tsv");
        std::set<std::pair<Index, Index>> seen;
        std::vector<std::tuple<Index, Index, Real>> trips;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            Index u, v;
            Real w = 1.0;
            if (!(ss >> u >> v)) throw std::runtime_error("edges.tsv: malformed line: " + line);
            ss >> w;  // optional weight column
            detail::check_node(u, ds.n, "edges.tsv");
            detail::check_node(v, ds.n, "edges.tsv");
            if (u == v) throw std::runtime_error("edges.tsv: self-loop at node " + std::to_string(u));
            auto key = std::minmax(u, v);
            if (!seen.insert(key).second)
                throw std::runtime_error("edges.tsv: duplicate edge (" + std::to_string(u) + "," +
                                         std::to_string(v) + ")");
            trips.emplace_back(u, v, w);
            trips.emplace_back(v, u, w);
        }
        ds.adjacency = SparseMatrix::from_triplets(ds.n, ds.n, std::move(trips));
    }

    // features: sparse triplets into a dense matrix
    {
        auto in = detail::open_or_throw(dir / "features.tsv");
        ds.features = Matrix(ds.n, ds.f);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            Index v, j;
            Real x;
            if (!(ss >> v >> j >> x)) throw std::runtime_error("features.tsv: malformed line: " + line);
            detail::check_node(v, ds.n, "features.tsv");
            if (j < 0 || j >= ds.f)
                throw std::runtime_error("features.tsv: feature index " + std::to_string(j) +
                                         " out of range [0," + std::to_string(ds.f) + ")");
            ds.features(v, j) = x;
        }
    }

    // labels: one class per node, all nodes covered
    {
        auto in = detail::open_or_throw(dir / "labels.tsv");
        ds.labels.assign(ds.n, -1);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            Index v, c;
            if (!(ss >> v >> c)) throw std::runtime_error("labels.tsv: malformed line: " + line);
            detail::check_node(v, ds.n, "labels.tsv");
            if (c < 0 || c >= ds.num_classes)
                throw std::runtime_error("labels.tsv: class " + std::to_string(c) +
                                         " out of range [0," + std::to_string(ds.num_classes) + ")");
            ds.labels[v] = c;
        }
        for (Index v = 0; v < ds.n; ++v)
            if (ds.labels[v] < 0)
                throw std::runtime_error("labels.tsv: node " + std::to_string(v) + " has no label");
    }
    return ds;
}

/// Serialize back to the bundle format (each undirected edge written once,
/// features as nonzero triplets).
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        nlohmann::ordered_json meta;
        meta["num_nodes"] = ds.n;
        meta["num_features"] = ds.f;
        meta["num_classes"] = ds.num_classes;
        std::ofstream out(dir / "meta.json");
        out << meta.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "edges.tsv");
        for (Index i = 0; i < ds.adjacency.n_rows; ++i)
            for (Index k = ds.adjacency.row_begin(i); k < ds.adjacency.row_end(i); ++k)
                if (ds.adjacency.col_indices[k] > i)
                    out << i << "\t" << ds.adjacency.col_indices[k] << "\n";
    }
    {
        std::ofstream out(dir / "features.tsv");
        out.precision(17);
        for (Index i = 0; i < ds.n; ++i)
            for (Index j = 0; j < ds.f; ++j)
                if (ds.features(i, j) != 0.0) out << i << "\t" << j << "\t" << ds.features(i, j) << "\n";
    }
    {
        std::ofstream out(dir / "labels.tsv");
        for (Index i = 0; i < ds.n; ++i) out << i << "\t" << ds.labels[i] << "\n";
    }
}

} // namespace ptlab
