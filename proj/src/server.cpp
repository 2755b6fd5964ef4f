#include "flownav/error.hpp"
#include "flownav/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

namespace flownav::protocol {

std::size_t serve_stream(Session& session, std::istream& in, std::ostream& out) {
    std::size_t handled = 0;
    std::string line;
    while (!session.closed() && std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out << session.handle(line).dump() << '\n';
        out.flush();
        ++handled;
    }
    return handled;
}

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        sent += std::size_t(n);
    }
    return true;
}

void serve_connection(int fd, std::unique_ptr<Session> session) {
    std::string buffer;
    char chunk[4096];
    while (!session->closed()) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;  // peer gone: the session just ends
        buffer.append(chunk, std::size_t(n));
        std::size_t pos;
        while (!session->closed() && (pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            if (!send_all(fd, session->handle(line).dump() + "\n")) {
                ::close(fd);
                return;
            }
        }
    }
    ::close(fd);
}

}  // namespace

TcpServer::TcpServer(const std::string& host, std::uint16_t port, SessionFactory factory)
    : factory_(std::move(factory)) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
        throw Error("io_error", "cannot resolve " + host);
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd_ < 0) {
        ::freeaddrinfo(res);
        throw Error("io_error", std::string("socket: ") + std::strerror(errno));
    }
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 16) != 0) {
        const std::string msg = std::strerror(errno);
        ::freeaddrinfo(res);
        ::close(fd_);
        throw Error("io_error", "cannot listen on " + host + ":" + std::to_string(port) + ": " + msg);
    }
    ::freeaddrinfo(res);
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpServer::stop() { stopping_ = true; }

void TcpServer::run(std::size_t max_connections) {
    std::vector<std::thread> workers;
    std::size_t served = 0;
    while (!stopping_ && (max_connections == 0 || served < max_connections)) {
        pollfd p{fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, 100);
        if (r < 0 && errno != EINTR) break;
        if (r <= 0) continue;
        const int client = ::accept(fd_, nullptr, nullptr);
        if (client < 0) continue;
        ++served;
        std::unique_ptr<Session> session;
        try {
            session = factory_();
        } catch (const std::exception& e) {
            send_all(client, error_response(0, "internal_error", e.what()).dump() + "\n");
            ::close(client);
            continue;
        }
        workers.emplace_back(serve_connection, client, std::move(session));
    }
    for (auto& w : workers) w.join();
}

}  // namespace flownav::protocol
