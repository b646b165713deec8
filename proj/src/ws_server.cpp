#include "tapf/ws_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <deque>
#include <thread>
#include <vector>

#include "json.hpp"

namespace tapf {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::string error_text(const std::string& code, const std::string& message) {
    return nlohmann::json{{"v", kProtocolVersion}, {"kind", "error"}, {"code", code}, {"message", message}}.dump();
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket socket, SessionManager& sessions)
        : ws_(std::move(socket)), sessions_(sessions) {}

    ~WsConnection() {
        if (session_ && token_ != 0) {
            session_->unsubscribe(token_);
        }
    }

    void start(http::request<http::string_body> req) {
        const std::string target(req.target());
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this(), target](beast::error_code ec) {
            if (ec) {
                return;
            }
            self->attach(target);
        });
    }

private:
    void attach(const std::string& target) {
        if (target == "/ws" || target == "/ws/") {
            session_ = sessions_.create();
        } else {
            session_ = sessions_.find(target.substr(4));
        }
        if (!session_) {
            send(error_text("unknown_session", "no session '" + target.substr(4) + "'"));
            close_after_writes_ = true;
            return;
        }
        send(nlohmann::json{{"v", kProtocolVersion}, {"kind", "hello"}, {"session", session_->id()}}.dump());
        std::weak_ptr<WsConnection> weak = shared_from_this();
        token_ = session_->subscribe([weak](const std::string& text) {
            if (auto self = weak.lock()) {
                self->send(text);
            }
        });
        // A resumed client needs the current state right away.
        session_->submit(R"({"v":1,"cmd":"get_state"})", [weak](const std::string& text) {
            if (auto self = weak.lock()) {
                self->send(text);
            }
        });
        read();
    }

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                return;
            }
            std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            std::weak_ptr<WsConnection> weak = self;
            self->session_->submit(std::move(text), [weak](const std::string& reply) {
                if (auto s = weak.lock()) {
                    s->send(reply);
                }
            });
            self->read();
        });
    }

    // Any thread. The socket's executor is a strand, so the outbox is only
    // touched there.
    void send(std::string text) {
        asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
            self->outbox_.push_back(std::move(text));
            if (self->outbox_.size() == 1) {
                self->write_next();
            }
        });
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->outbox_.clear();
                return;
            }
            self->outbox_.pop_front();
            if (!self->outbox_.empty()) {
                self->write_next();
            } else if (self->close_after_writes_) {
                self->ws_.async_close(websocket::close_code::policy_error, [self](beast::error_code) {});
            }
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    SessionManager& sessions_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    std::shared_ptr<Session> session_;
    int token_ = 0;
    bool close_after_writes_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, SessionManager& sessions) : stream_(std::move(socket)), sessions_(sessions) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                return;
            }
            self->route();
        });
    }

    void route() {
        const std::string target(req_.target());
        if (websocket::is_upgrade(req_)) {
            if (target == "/ws" || target.rfind("/ws/", 0) == 0) {
                stream_.expires_never();
                std::make_shared<WsConnection>(stream_.release_socket(), sessions_)->start(std::move(req_));
                return;
            }
            respond(http::status::not_found, error_text("not_found", "no endpoint " + target));
            return;
        }
        if (req_.method() == http::verb::get && target.rfind("/map/", 0) == 0) {
            const auto session = sessions_.find(target.substr(5));
            if (!session) {
                respond(http::status::not_found, error_text("unknown_session", "no session '" + target.substr(5) + "'"));
                return;
            }
            const auto map = session->map_json();
            if (!map) {
                respond(http::status::not_found, error_text("no_scenario", "session has no map loaded"));
                return;
            }
            respond(http::status::ok, *map);
            return;
        }
        respond(http::status::not_found, error_text("not_found", "no endpoint " + target));
    }

    void respond(http::status status, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        res->keep_alive(req_.keep_alive());
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) {
                return;
            }
            if (res->keep_alive()) {
                self->read();
            } else {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            }
        });
    }

    beast::tcp_stream stream_;
    SessionManager& sessions_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

struct WsServer::Impl {
    asio::io_context ioc;
    tcp::acceptor acceptor;
    SessionManager& sessions;
    std::vector<std::thread> threads;
    bool stopped = false;

    Impl(SessionManager& s, const std::string& address, unsigned short port)
        : acceptor(ioc, tcp::endpoint(asio::ip::make_address(address), port)), sessions(s) {}

    void accept() {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                return;
            }
            std::make_shared<HttpConnection>(std::move(socket), sessions)->start();
            accept();
        });
    }
};

WsServer::WsServer(SessionManager& sessions, const std::string& address, unsigned short port, int threads)
    : impl_(std::make_unique<Impl>(sessions, address, port)) {
    impl_->accept();
    for (int i = 0; i < std::max(1, threads); ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
}

WsServer::~WsServer() { stop(); }

unsigned short WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::stop() {
    if (impl_->stopped) {
        return;
    }
    impl_->stopped = true;
    impl_->ioc.stop();
    for (auto& t : impl_->threads) {
        t.join();
    }
}

}  // namespace tapf
