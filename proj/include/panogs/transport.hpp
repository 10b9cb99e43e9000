#pragma once

// Wire protocol for remote or precomputed model adapters. Requests and responses are JSON
// bodies; images travel as base64 PNG, float maps as base64 PFM.
//
//   POST /v1/disparity, /v1/metric_depth  {"image"}                 -> {"map"}
//   POST /v1/inpaint                      {"image", "mask"}         -> {"image"}
//   POST /v1/generate                     {"stage", "prompt", "image"?, "width", "height", "seed"} -> {"image"}
//   GET  /v1/health                                                  -> {"ok": true}
//
// Failures come back as status >= 400 with {"error": "<message>"}.

#include "panogs/adapters.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <semaphore>
#include <string>

namespace panogs {

enum class AdapterKind { generator, depth, metric_depth, inpaint };
enum class TransportKind { stub, http, directory };

const char* to_string(AdapterKind kind);
const char* to_string(TransportKind kind);
AdapterKind adapter_kind_from_string(const std::string& name);
TransportKind transport_kind_from_string(const std::string& name);

struct AdapterEndpoint {
    AdapterKind kind = AdapterKind::depth;
    TransportKind transport = TransportKind::stub;
    std::string uri;             // http: scheme://host:port
    std::filesystem::path path;  // directory: root of the precomputed results
    double timeout_s = 120.0;
    int retries = 2;
    int max_in_flight = 4;

    void validate() const;
};

void to_json(nlohmann::json& j, const AdapterEndpoint& e);
void from_json(const nlohmann::json& j, AdapterEndpoint& e);

/// Route served for each adapter kind, e.g. "/v1/disparity".
const char* wire_route(AdapterKind kind);

class WireTransport {
public:
    virtual ~WireTransport() = default;
    virtual nlohmann::json post(const std::string& route, const nlohmann::json& body) = 0;
};

class HttpTransport final : public WireTransport {
public:
    HttpTransport(std::string uri, double timeout_s, int retries, int max_in_flight);
    nlohmann::json post(const std::string& route, const nlohmann::json& body) override;
    /// GET /v1/health answered with {"ok": true}.
    bool healthy();

private:
    std::string uri_;
    double timeout_s_;
    int retries_;
    std::counting_semaphore<64> slots_;
};

/// Content-hash key of a request: SHA-256 of its compact JSON serialization.
std::string request_key(const nlohmann::json& body);

/// Responses stored as <root>/<route name>/<request key>.json.
std::filesystem::path result_path(const std::filesystem::path& root, const std::string& route,
                                  const nlohmann::json& body);

/// Serves previously captured responses; a request that was never captured is an adapter error.
class DirectoryTransport final : public WireTransport {
public:
    explicit DirectoryTransport(std::filesystem::path root);
    nlohmann::json post(const std::string& route, const nlohmann::json& body) override;

private:
    std::filesystem::path root_;
};

/// Forwards to another transport and stores every response for a later DirectoryTransport.
class RecordingTransport final : public WireTransport {
public:
    RecordingTransport(std::shared_ptr<WireTransport> inner, std::filesystem::path root);
    nlohmann::json post(const std::string& route, const nlohmann::json& body) override;

private:
    std::shared_ptr<WireTransport> inner_;
    std::filesystem::path root_;
};

/// Answers wire requests with in-process clients. Any of the clients may be null, in which
/// case its route reports an error.
class WireService {
public:
    WireService(GeneratorClient* generator, DepthClient* depth, MetricDepthClient* metric, InpaintClient* inpaint);
    /// Throws AdapterError for unknown routes or malformed bodies.
    nlohmann::json handle(const std::string& route, const nlohmann::json& body);

private:
    GeneratorClient* generator_;
    DepthClient* depth_;
    MetricDepthClient* metric_;
    InpaintClient* inpaint_;
};

class LoopbackTransport final : public WireTransport {
public:
    explicit LoopbackTransport(std::shared_ptr<WireService> service) : service_(std::move(service)) {}
    nlohmann::json post(const std::string& route, const nlohmann::json& body) override;

private:
    std::shared_ptr<WireService> service_;
};

// Protocol clients. View hints are not transmitted.

class WireDepthClient final : public DepthClient {
public:
    explicit WireDepthClient(std::shared_ptr<WireTransport> t) : transport_(std::move(t)) {}
    Image disparity(const Image& image, const ViewHint& hint) override;

private:
    std::shared_ptr<WireTransport> transport_;
};

class WireMetricDepthClient final : public MetricDepthClient {
public:
    explicit WireMetricDepthClient(std::shared_ptr<WireTransport> t) : transport_(std::move(t)) {}
    Image depth(const Image& image, const ViewHint& hint) override;

private:
    std::shared_ptr<WireTransport> transport_;
};

/// The image is sent 8-bit quantized. Unmasked pixels of the response must equal the sent
/// bytes exactly; the returned image then carries the caller's original unmasked values.
class WireInpaintClient final : public InpaintClient {
public:
    explicit WireInpaintClient(std::shared_ptr<WireTransport> t) : transport_(std::move(t)) {}
    Image fill(const Image& image, const Mask& missing) override;

private:
    std::shared_ptr<WireTransport> transport_;
};

class WireGeneratorClient final : public GeneratorClient {
public:
    explicit WireGeneratorClient(std::shared_ptr<WireTransport> t) : transport_(std::move(t)) {}
    Image stage(const GenerationRequest& request) override;

private:
    std::shared_ptr<WireTransport> transport_;
};

/// Transport for a non-stub endpoint.
std::shared_ptr<WireTransport> make_transport(const AdapterEndpoint& endpoint);

}  // namespace panogs
