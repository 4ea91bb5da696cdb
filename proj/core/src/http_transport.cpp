#include "vcap/client.hpp"

#include <httplib.h>

namespace vcap {

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Target split_endpoint(const std::string& endpoint) {
  Target t;
  auto scheme_end = endpoint.find("://");
  auto path_start =
      endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  t.origin = endpoint.substr(0, path_start);
  t.path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!t.path.empty() && t.path.back() == '/') t.path.pop_back();
  const std::string suffix = "/chat/completions";
  if (t.path.size() < suffix.size() ||
      t.path.compare(t.path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    t.path += suffix;
  }
  return t;
}

}  // namespace

TransportResponse HttpTransport::post(const ModelProfile& profile, const RenderedRequest&,
                                      const std::string& body) {
  TransportResponse out;
  Target target = split_endpoint(profile.endpoint);
  httplib::Client client(target.origin);
  if (!client.is_valid()) {
    out.error = "invalid endpoint '" + profile.endpoint + "'";
    return out;
  }
  auto secs = static_cast<time_t>(profile.timeout);
  auto usecs = static_cast<time_t>((profile.timeout - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!profile.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + profile.api_key);
  }
  auto res = client.Post(target.path, headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    out.error = httplib::to_string(err);
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace vcap
