#include "panogs/errors.hpp"
#include "panogs/gaussian_field.hpp"
#include "pointcloud/ply_io.hpp"

#include <cmath>
#include <string>

namespace panogs {

// Interchange layout shared with common splatting viewers: f_rest is channel-major.

void write_gaussian_ply(const std::filesystem::path& path, const GaussianField& field)
{
    using ply::Type;
    const int rest = sh_coefficient_count(field.sh_degree()) - 1;
    std::vector<ply::Property> props;
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        props.push_back({name, Type::f32});
    }
    for (int k = 0; k < 3 * rest; ++k) {
        props.push_back({"f_rest_" + std::to_string(k), Type::f32});
    }
    for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
        props.push_back({name, Type::f32});
    }
    const auto& p = field.params;
    const auto rw = static_cast<std::size_t>(field.sh_rest_width());
    ply::write_vertices(path, props, field.size(), [&](std::size_t i, std::vector<double>& row) {
        std::size_t c = 0;
        for (int k = 0; k < 3; ++k) {
            row[c++] = p.position[3 * i + k];
        }
        for (int k = 0; k < 3; ++k) {
            row[c++] = 0.0;
        }
        for (int k = 0; k < 3; ++k) {
            row[c++] = p.sh_dc[3 * i + k];
        }
        for (int ch = 0; ch < 3; ++ch) {
            for (int k = 0; k < rest; ++k) {
                row[c++] = p.sh_rest[i * rw + static_cast<std::size_t>(k * 3 + ch)];
            }
        }
        row[c++] = p.opacity_logit[i];
        for (int k = 0; k < 3; ++k) {
            row[c++] = p.log_scale[3 * i + k];
        }
        for (int k = 0; k < 4; ++k) {
            row[c++] = p.rotation[4 * i + k];
        }
    });
}

GaussianField read_gaussian_ply(const std::filesystem::path& path)
{
    const auto table = ply::read_vertices(path);
    int rest_props = 0;
    while (table.has("f_rest_" + std::to_string(rest_props))) {
        ++rest_props;
    }
    int degree = -1;
    for (int d = 0; d <= 3; ++d) {
        if (3 * (sh_coefficient_count(d) - 1) == rest_props) {
            degree = d;
        }
    }
    if (degree < 0) {
        throw IoError(path.string() + ": " + std::to_string(rest_props) + " f_rest properties match no SH degree");
    }
    GaussianField field(degree);
    const int rest = sh_coefficient_count(degree) - 1;
    const auto col = [&](const std::string& name) -> const std::vector<double>& { return table.column(name); };
    const auto& x = col("x");
    const auto& y = col("y");
    const auto& z = col("z");
    const auto& op = col("opacity");
    for (std::size_t i = 0; i < table.count; ++i) {
        const Vec3 pos(x[i], y[i], z[i]);
        const Vec3 ls(col("scale_0")[i], col("scale_1")[i], col("scale_2")[i]);
        const Quat q(col("rot_0")[i], col("rot_1")[i], col("rot_2")[i], col("rot_3")[i]);
        const Vec3 dc(col("f_dc_0")[i], col("f_dc_1")[i], col("f_dc_2")[i]);
        field.push_back(pos, ls, q, op[i], dc);
        const auto rw = static_cast<std::size_t>(field.sh_rest_width());
        for (int ch = 0; ch < 3; ++ch) {
            for (int k = 0; k < rest; ++k) {
                field.params.sh_rest[i * rw + static_cast<std::size_t>(k * 3 + ch)] =
                    col("f_rest_" + std::to_string(ch * rest + k))[i];
            }
        }
    }
    return field;
}

}  // namespace panogs
