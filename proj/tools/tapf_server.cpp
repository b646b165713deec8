#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <iostream>

#include "CLI11.hpp"
#include "tapf/ws_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation service: WebSocket sessions for the browser client"};
    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    int threads = 2;
    double rate = 4.0;
    app.add_option("--address", address, "listen address");
    app.add_option("--port", port, "listen port (0 picks one)");
    app.add_option("--threads", threads, "I/O threads")->check(CLI::PositiveNumber);
    app.add_option("--rate", rate, "default playback rate, ticks per second")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    tapf::ServiceConfig cfg;
    cfg.default_rate = rate;
    tapf::SessionManager sessions(cfg);
    try {
        tapf::WsServer server(sessions, address, port, threads);
        std::cout << "listening on " << address << ":" << server.port() << std::endl;
        boost::asio::io_context signals_ctx;
        boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
        signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); });
        signals_ctx.run();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
