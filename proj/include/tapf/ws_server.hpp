#pragma once

#include <memory>
#include <string>

#include "tapf/sim_service.hpp"

namespace tapf {

// WebSocket front end for the session service.
//   /ws        new session; the first message is {"kind":"hello","session":id}
//   /ws/<id>   attach to an existing session (resume after a reconnect)
//   GET /map/<id>  map geometry and patterns of the session's scenario
class WsServer {
public:
    // Port 0 picks a free port; see port().
    WsServer(SessionManager& sessions, const std::string& address, unsigned short port, int threads = 2);
    ~WsServer();
    WsServer(const WsServer&) = delete;
    WsServer& operator=(const WsServer&) = delete;

    unsigned short port() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tapf
