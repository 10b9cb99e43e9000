#include "ply_io.hpp"

#include "panogs/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

namespace panogs::ply {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

const char* type_name(Type t)
{
    switch (t) {
    case Type::f32:
        return "float";
    case Type::f64:
        return "double";
    case Type::u8:
        return "uchar";
    case Type::i32:
        return "int";
    case Type::u32:
        return "uint";
    }
    return "float";
}

Type parse_type(const std::string& s)
{
    if (s == "float" || s == "float32") {
        return Type::f32;
    }
    if (s == "double" || s == "float64") {
        return Type::f64;
    }
    if (s == "uchar" || s == "uint8") {
        return Type::u8;
    }
    if (s == "int" || s == "int32") {
        return Type::i32;
    }
    if (s == "uint" || s == "uint32") {
        return Type::u32;
    }
    throw IoError("unsupported PLY property type '" + s + "'");
}

std::size_t type_size(Type t)
{
    switch (t) {
    case Type::f32:
    case Type::i32:
    case Type::u32:
        return 4;
    case Type::f64:
        return 8;
    case Type::u8:
        return 1;
    }
    return 4;
}

template <typename T>
void put(std::string& buf, T v)
{
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
double get(const char* p)
{
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
}

}  // namespace

const std::vector<double>& VertexTable::column(const std::string& name) const
{
    const auto it = columns.find(name);
    if (it == columns.end()) {
        throw IoError("PLY file has no vertex property '" + name + "'");
    }
    return it->second;
}

void write_vertices(const std::filesystem::path& path, const std::vector<Property>& properties, std::size_t count,
                    const std::function<void(std::size_t, std::vector<double>&)>& row)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << count << "\n";
    for (const auto& p : properties) {
        header << "property " << type_name(p.type) << " " << p.name << "\n";
    }
    header << "end_header\n";
    out << header.str();

    std::string buf;
    std::vector<double> values(properties.size());
    for (std::size_t i = 0; i < count; ++i) {
        row(i, values);
        buf.clear();
        for (std::size_t k = 0; k < properties.size(); ++k) {
            switch (properties[k].type) {
            case Type::f32:
                put(buf, static_cast<float>(values[k]));
                break;
            case Type::f64:
                put(buf, values[k]);
                break;
            case Type::u8:
                put(buf, static_cast<std::uint8_t>(values[k]));
                break;
            case Type::i32:
                put(buf, static_cast<std::int32_t>(values[k]));
                break;
            case Type::u32:
                put(buf, static_cast<std::uint32_t>(values[k]));
                break;
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

VertexTable read_vertices(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "ply") {
        throw IoError(path.string() + " is not a PLY file");
    }
    VertexTable table;
    bool in_vertex = false;
    bool binary_le = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            binary_le = fmt == "binary_little_endian";
        } else if (word == "element") {
            std::string name;
            std::size_t n = 0;
            ls >> name >> n;
            in_vertex = name == "vertex";
            if (in_vertex) {
                table.count = n;
            } else if (n != 0) {
                throw IoError("PLY element '" + name + "' is not supported");
            }
        } else if (word == "property" && in_vertex) {
            std::string type;
            std::string name;
            ls >> type;
            if (type == "list") {
                throw IoError("PLY list properties are not supported");
            }
            ls >> name;
            table.properties.push_back({name, parse_type(type)});
        } else if (word == "end_header") {
            break;
        }
    }
    if (!binary_le) {
        throw IoError("only binary_little_endian PLY is supported");
    }
    std::size_t stride = 0;
    for (const auto& p : table.properties) {
        stride += type_size(p.type);
        table.columns[p.name].reserve(table.count);
    }
    std::vector<char> buf(stride * table.count);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw IoError(path.string() + " is truncated");
    }
    const char* p = buf.data();
    for (std::size_t i = 0; i < table.count; ++i) {
        for (const auto& prop : table.properties) {
            double v = 0.0;
            switch (prop.type) {
            case Type::f32:
                v = get<float>(p);
                break;
            case Type::f64:
                v = get<double>(p);
                break;
            case Type::u8:
                v = get<std::uint8_t>(p);
                break;
            case Type::i32:
                v = get<std::int32_t>(p);
                break;
            case Type::u32:
                v = get<std::uint32_t>(p);
                break;
            }
            table.columns[prop.name].push_back(v);
            p += type_size(prop.type);
        }
    }
    return table;
}

}  // namespace panogs::ply
