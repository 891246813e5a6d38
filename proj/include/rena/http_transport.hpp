#pragma once

// cpp-httplib implementation of rena::Transport. Plain http:// endpoints only.

#include <chrono>
#include <string>
#include <utility>

#include <httplib.h>

#include "rena/inference_client.hpp"

namespace rena {

/// "http://host:port/prefix" -> {"http://host:port", "/prefix"}.
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

class HttplibTransport final : public Transport {
 public:
  HttpReply post_json(const std::string& base_url, const std::string& path, const std::string& body,
                      std::chrono::milliseconds timeout) override {
    auto [origin, prefix] = split_base_url(base_url);
    httplib::Client cli(origin);
    configure(cli, timeout);
    auto res = cli.Post(prefix + path, body, "application/json");
    if (!res) throw failure(res.error(), base_url);
    return {res->status, res->body};
  }

  bool probe(const std::string& base_url, std::chrono::milliseconds timeout) override {
    auto [origin, prefix] = split_base_url(base_url);
    httplib::Client cli(origin);
    configure(cli, timeout);
    auto res = cli.Get(prefix + "/v1/models");
    return static_cast<bool>(res);
  }

 private:
  static void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    cli.set_keep_alive(false);
  }

  static TransportError failure(httplib::Error err, const std::string& url) {
    const auto kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                       err == httplib::Error::Write)
                          ? TransportFailure::timeout
                          : TransportFailure::connection;
    return TransportError(kind, url + ": " + httplib::to_string(err));
  }
};

}  // namespace rena
