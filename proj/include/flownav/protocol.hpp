#pragma once

#include "flownav/env.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

namespace flownav::protocol {

struct SessionConfig {
    env::EpisodeConfig episode;
    int patch_size = 5;
};

/// One agent connection: a private environment over the shared flow.
///
/// Requests are single JSON objects with a "cmd" of reset, step, query_flow, config or close;
/// every request produces exactly one response carrying the next "seq". An "id" in the
/// request is echoed back.
class Session {
public:
    Session(std::shared_ptr<const interp::FlowSource> flow, Scene scene, SessionConfig config = {});

    /// Handles one raw request line and returns the response object.
    nlohmann::json handle(const std::string& line);
    nlohmann::json handle(const char* line) { return handle(std::string(line)); }
    nlohmann::json handle(const nlohmann::json& request);

    bool closed() const { return closed_; }
    std::uint64_t next_seq() const { return seq_; }
    const env::Environment& environment() const { return env_; }

private:
    nlohmann::json dispatch(const nlohmann::json& request);
    nlohmann::json step_payload(const env::StepOutcome& out, const dynamics::ControlInput& action) const;
    nlohmann::json flow_payload() const;

    std::shared_ptr<const interp::FlowSource> flow_;
    env::Environment env_;
    SessionConfig config_;
    std::uint64_t seq_ = 0;
    bool closed_ = false;
};

/// Response for a request that failed before or during dispatch.
nlohmann::json error_response(std::uint64_t seq, const std::string& code, const std::string& message);

/// Parses an action given as [thrust, dpsi, dtheta] or {"thrust","dpsi","dtheta"}.
dynamics::ControlInput parse_action(const nlohmann::json& j);

using SessionFactory = std::function<std::unique_ptr<Session>()>;

/// Reads requests line by line until close or end of input; returns the number of requests.
std::size_t serve_stream(Session& session, std::istream& in, std::ostream& out);

/// Line-oriented TCP server: one session per connection, each on its own thread.
class TcpServer {
public:
    /// Binds and listens; port 0 picks a free port.
    TcpServer(const std::string& host, std::uint16_t port, SessionFactory factory);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    /// Accepts connections until stop() or until `max_connections` (0 = unlimited) have been served.
    void run(std::size_t max_connections = 0);
    void stop();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
    SessionFactory factory_;
    std::atomic<bool> stopping_{false};
};

}  // namespace flownav::protocol
