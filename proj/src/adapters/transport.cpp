#include "panogs/transport.hpp"

#include "panogs/codecs.hpp"
#include "panogs/errors.hpp"

#include <fstream>

namespace panogs {

using nlohmann::json;

const char* to_string(AdapterKind kind)
{
    switch (kind) {
    case AdapterKind::generator:
        return "generator";
    case AdapterKind::depth:
        return "depth";
    case AdapterKind::metric_depth:
        return "metric_depth";
    case AdapterKind::inpaint:
        return "inpaint";
    }
    return "unknown";
}

const char* to_string(TransportKind kind)
{
    switch (kind) {
    case TransportKind::stub:
        return "stub";
    case TransportKind::http:
        return "http";
    case TransportKind::directory:
        return "directory";
    }
    return "unknown";
}

AdapterKind adapter_kind_from_string(const std::string& name)
{
    for (auto k : {AdapterKind::generator, AdapterKind::depth, AdapterKind::metric_depth, AdapterKind::inpaint}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown adapter kind '" + name + "'");
}

TransportKind transport_kind_from_string(const std::string& name)
{
    if (name == "dir") {
        return TransportKind::directory;
    }
    for (auto k : {TransportKind::stub, TransportKind::http, TransportKind::directory}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown transport '" + name + "' (expected stub, http or directory)");
}

void AdapterEndpoint::validate() const
{
    const std::string who = std::string(to_string(kind)) + " adapter: ";
    if (transport == TransportKind::http && uri.empty()) {
        throw ConfigError(who + "http transport needs a uri");
    }
    if (transport == TransportKind::directory && !std::filesystem::is_directory(path)) {
        throw ConfigError(who + "directory transport path '" + path.string() + "' does not exist");
    }
    if (!(timeout_s > 0.0) || retries < 0 || max_in_flight < 1 || max_in_flight > 64) {
        throw ConfigError(who + "timeout must be positive, retries >= 0, max_in_flight in [1, 64]");
    }
}

void to_json(json& j, const AdapterEndpoint& e)
{
    j = json{{"kind", to_string(e.kind)},
             {"transport", to_string(e.transport)},
             {"uri", e.uri},
             {"path", e.path.string()},
             {"timeout_s", e.timeout_s},
             {"retries", e.retries},
             {"max_in_flight", e.max_in_flight}};
}

void from_json(const json& j, AdapterEndpoint& e)
{
    e = AdapterEndpoint{};
    e.kind = adapter_kind_from_string(j.at("kind").get<std::string>());
    e.transport = transport_kind_from_string(j.value("transport", std::string("stub")));
    e.uri = j.value("uri", std::string());
    e.path = j.value("path", std::string());
    e.timeout_s = j.value("timeout_s", e.timeout_s);
    e.retries = j.value("retries", e.retries);
    e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
}

const char* wire_route(AdapterKind kind)
{
    switch (kind) {
    case AdapterKind::generator:
        return "/v1/generate";
    case AdapterKind::depth:
        return "/v1/disparity";
    case AdapterKind::metric_depth:
        return "/v1/metric_depth";
    case AdapterKind::inpaint:
        return "/v1/inpaint";
    }
    return "";
}

std::string request_key(const json& body)
{
    const std::string text = body.dump();
    return sha256_hex(Bytes(text.begin(), text.end()));
}

std::filesystem::path result_path(const std::filesystem::path& root, const std::string& route, const json& body)
{
    const auto slash = route.find_last_of('/');
    const std::string name = slash == std::string::npos ? route : route.substr(slash + 1);
    return root / name / (request_key(body) + ".json");
}

DirectoryTransport::DirectoryTransport(std::filesystem::path root) : root_(std::move(root))
{
    if (!std::filesystem::is_directory(root_)) {
        throw ConfigError("result directory '" + root_.string() + "' does not exist");
    }
}

json DirectoryTransport::post(const std::string& route, const json& body)
{
    const auto file = result_path(root_, route, body);
    std::ifstream in(file);
    if (!in) {
        throw AdapterError("no precomputed " + route + " result for this request (" + file.string() + ")");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw AdapterError("corrupt precomputed result " + file.string() + ": " + e.what());
    }
}

RecordingTransport::RecordingTransport(std::shared_ptr<WireTransport> inner, std::filesystem::path root)
    : inner_(std::move(inner)), root_(std::move(root))
{
}

json RecordingTransport::post(const std::string& route, const json& body)
{
    json response = inner_->post(route, body);
    const auto file = result_path(root_, route, body);
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    out << response.dump();
    if (!out) {
        throw IoError("cannot record " + file.string());
    }
    return response;
}

namespace {

const json& field(const json& body, const char* key)
{
    if (!body.is_object() || !body.contains(key)) {
        throw AdapterError(std::string("wire message lacks \"") + key + "\"");
    }
    return body.at(key);
}

Bytes decode_field(const json& body, const char* key)
{
    const auto& v = field(body, key);
    if (!v.is_string()) {
        throw AdapterError(std::string("wire field \"") + key + "\" is not a string");
    }
    try {
        return base64_decode(v.get<std::string>());
    } catch (const IoError& e) {
        throw AdapterError(std::string("wire field \"") + key + "\": " + e.what());
    }
}

Image decode_image_field(const json& body, const char* key)
{
    try {
        return decode_png(decode_field(body, key));
    } catch (const IoError& e) {
        throw AdapterError(std::string("wire field \"") + key + "\": " + e.what());
    }
}

Image decode_map_field(const json& body, const char* key)
{
    try {
        return decode_pfm(decode_field(body, key));
    } catch (const IoError& e) {
        throw AdapterError(std::string("wire field \"") + key + "\": " + e.what());
    }
}

std::string png_field(const Image& image)
{
    return base64_encode(encode_png(image));
}

Image quantized(const Image& image)
{
    return decode_png(encode_png(image));
}

}  // namespace

WireService::WireService(GeneratorClient* generator, DepthClient* depth, MetricDepthClient* metric,
                         InpaintClient* inpaint)
    : generator_(generator), depth_(depth), metric_(metric), inpaint_(inpaint)
{
}

json WireService::handle(const std::string& route, const json& body)
{
    if (route == "/v1/health") {
        return json{{"ok", true}};
    }
    if (route == "/v1/disparity" && depth_) {
        const auto img = decode_image_field(body, "image");
        return json{{"map", base64_encode(encode_pfm(checked_disparity(*depth_, img, {})))}};
    }
    if (route == "/v1/metric_depth" && metric_) {
        const auto img = decode_image_field(body, "image");
        return json{{"map", base64_encode(encode_pfm(checked_metric_depth(*metric_, img, {})))}};
    }
    if (route == "/v1/inpaint" && inpaint_) {
        const auto img = decode_image_field(body, "image");
        Mask mask;
        try {
            mask = decode_mask_png(decode_field(body, "mask"));
        } catch (const IoError& e) {
            throw AdapterError(std::string("wire field \"mask\": ") + e.what());
        }
        return json{{"image", png_field(checked_fill(*inpaint_, img, mask))}};
    }
    if (route == "/v1/generate" && generator_) {
        GenerationRequest req;
        try {
            req.stage = generation_stage_from_string(field(body, "stage").get<std::string>());
            req.prompt = body.value("prompt", std::string());
            req.width = field(body, "width").get<int>();
            req.height = field(body, "height").get<int>();
            req.seed = body.value("seed", std::uint64_t{0});
        } catch (const json::exception& e) {
            throw AdapterError(std::string("malformed generate request: ") + e.what());
        }
        if (body.contains("image") && !body.at("image").is_null()) {
            req.image = decode_image_field(body, "image");
        }
        return json{{"image", png_field(checked_stage(*generator_, req))}};
    }
    throw AdapterError("no handler for route " + route);
}

json LoopbackTransport::post(const std::string& route, const json& body)
{
    return service_->handle(route, body);
}

Image WireDepthClient::disparity(const Image& image, const ViewHint&)
{
    return decode_map_field(transport_->post("/v1/disparity", json{{"image", png_field(image)}}), "map");
}

Image WireMetricDepthClient::depth(const Image& image, const ViewHint&)
{
    return decode_map_field(transport_->post("/v1/metric_depth", json{{"image", png_field(image)}}), "map");
}

Image WireInpaintClient::fill(const Image& image, const Mask& missing)
{
    if (missing.width() != image.width() || missing.height() != image.height()) {
        throw ContractError("inpaint: mask dims differ from the image");
    }
    const Image sent = quantized(image);
    const json response = transport_->post(
        "/v1/inpaint", json{{"image", png_field(image)}, {"mask", base64_encode(encode_mask_png(missing))}});
    const Image filled = decode_image_field(response, "image");
    if (!filled.same_shape(sent)) {
        throw ContractError("inpaint: response dims differ from the request");
    }
    Image out = image;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < image.channels(); ++c) {
                if (!missing.at(x, y)) {
                    if (filled.at(x, y, c) != sent.at(x, y, c)) {
                        throw ContractError("inpaint: remote adapter modified unmasked pixel (" + std::to_string(x) +
                                            ", " + std::to_string(y) + ")");
                    }
                } else {
                    out.at(x, y, c) = filled.at(x, y, c);
                }
            }
        }
    }
    return out;
}

Image WireGeneratorClient::stage(const GenerationRequest& request)
{
    json body{{"stage", to_string(request.stage)},
              {"prompt", request.prompt},
              {"width", request.width},
              {"height", request.height},
              {"seed", request.seed}};
    if (request.image) {
        body["image"] = png_field(*request.image);
    }
    return decode_image_field(transport_->post("/v1/generate", body), "image");
}

std::shared_ptr<WireTransport> make_transport(const AdapterEndpoint& endpoint)
{
    endpoint.validate();
    switch (endpoint.transport) {
    case TransportKind::http:
        return std::make_shared<HttpTransport>(endpoint.uri, endpoint.timeout_s, endpoint.retries,
                                               endpoint.max_in_flight);
    case TransportKind::directory:
        return std::make_shared<DirectoryTransport>(endpoint.path);
    case TransportKind::stub:
        break;
    }
    throw ConfigError("stub endpoints have no wire transport");
}

}  // namespace panogs
