#pragma once

// Minimal binary little-endian PLY support for single "vertex" element files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace panogs::ply {

enum class Type { f32, f64, u8, i32, u32 };

struct Property {
    std::string name;
    Type type;
};

struct VertexTable {
    std::vector<Property> properties;
    std::size_t count = 0;
    std::map<std::string, std::vector<double>> columns;

    [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
    [[nodiscard]] bool has(const std::string& name) const { return columns.count(name) != 0; }
};

/// Writes rows in property order; `row(i, values)` fills one row of doubles.
void write_vertices(const std::filesystem::path& path, const std::vector<Property>& properties, std::size_t count,
                    const std::function<void(std::size_t, std::vector<double>&)>& row);

VertexTable read_vertices(const std::filesystem::path& path);

}  // namespace panogs::ply
