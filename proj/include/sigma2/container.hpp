#pragma once

// Self-describing model container: a text header followed by raw
// little-endian float64 arrays.
//
//   SIGMA2-CONTAINER 1
//   <key> <value>                 (any number of lines)
//   field <name> <rank> <d0> ...  (one line per array, in payload order)
//   END_HEADER
//   <payload>
//
// Keys and field names contain no whitespace; values run to end of line.

#include "sigma2/conformal.hpp"
#include "sigma2/geometry.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sigma2 {

struct ContainerField {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

struct Container {
    std::vector<std::pair<std::string, std::string>> header;
    std::vector<ContainerField> fields;

    [[nodiscard]] const std::string* value(const std::string& key) const;
    [[nodiscard]] const ContainerField* field(const std::string& name) const;
    void set(const std::string& key, const std::string& value);
    void add(std::string name, std::vector<std::size_t> shape, std::vector<double> data);
};

void write_container(const std::filesystem::path& path, const Container& c);
[[nodiscard]] Container read_container(const std::filesystem::path& path);

/// Grid, ModelSpec and metric arrays; with a state also u, W and spectra.
[[nodiscard]] Container export_model(const Model& model, const ConformalState* state = nullptr);
/// Rebuilds a Model from exported arrays (curvature is recomputed).
[[nodiscard]] Model import_model(const Container& c);

}  // namespace sigma2
