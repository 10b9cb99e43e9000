#include "panogs/errors.hpp"
#include "panogs/transport.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

namespace panogs {

using nlohmann::json;

HttpTransport::HttpTransport(std::string uri, double timeout_s, int retries, int max_in_flight)
    : uri_(std::move(uri)), timeout_s_(timeout_s), retries_(retries), slots_(max_in_flight)
{
    if (uri_.empty()) {
        throw ConfigError("http transport needs a uri");
    }
    if (max_in_flight < 1 || max_in_flight > 64) {
        throw ConfigError("max_in_flight must lie in [1, 64]");
    }
}

namespace {

void set_timeouts(httplib::Client& client, double timeout_s)
{
    const auto us = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(us));
    client.set_read_timeout(us);
    client.set_write_timeout(us);
}

std::string error_message(const httplib::Response& res)
{
    try {
        const auto body = json::parse(res.body);
        if (body.is_object() && body.contains("error") && body["error"].is_string()) {
            return body["error"].get<std::string>();
        }
    } catch (const json::exception&) {
    }
    return res.body.substr(0, 200);
}

}  // namespace

json HttpTransport::post(const std::string& route, const json& body)
{
    slots_.acquire();
    struct Release {
        std::counting_semaphore<64>& s;
        ~Release() { s.release(); }
    } release{slots_};

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 6)));
        }
        httplib::Client client(uri_);
        set_timeouts(client, timeout_s_);
        const auto res = client.Post(route, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + error_message(*res);
            continue;
        }
        if (res->status >= 400) {
            throw AdapterError(uri_ + route + " rejected the request (HTTP " + std::to_string(res->status) +
                               "): " + error_message(*res));
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw AdapterError(uri_ + route + " returned malformed JSON: " + e.what());
        }
    }
    throw AdapterError(uri_ + route + " failed after " + std::to_string(retries_ + 1) + " attempts: " + last_error);
}

bool HttpTransport::healthy()
{
    httplib::Client client(uri_);
    set_timeouts(client, timeout_s_);
    const auto res = client.Get("/v1/health");
    if (!res || res->status != 200) {
        return false;
    }
    try {
        const auto body = json::parse(res->body);
        return body.value("ok", false);
    } catch (const json::exception&) {
        return false;
    }
}

}  // namespace panogs
