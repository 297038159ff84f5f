#include "slam/bridge/server.hpp"

#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace slam::bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class WsSession;

struct BridgeServer::Impl : std::enable_shared_from_this<BridgeServer::Impl> {
    BridgeCore& core;
    ServerOptions options;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    asio::steady_timer timer;
    std::chrono::steady_clock::time_point epoch{std::chrono::steady_clock::now()};
    std::map<ClientId, std::weak_ptr<WsSession>> clients;
    ClientId next_id{1};

    Impl(BridgeCore& c, ServerOptions o)
        : core(c), options(std::move(o)), acceptor(ioc), timer(ioc) {
        const tcp::endpoint ep(asio::ip::make_address(options.address), options.port);
        acceptor.open(ep.protocol());
        acceptor.set_option(asio::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen();
    }

    double now() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch).count(); }

    void accept();
    void schedule_tick(std::chrono::steady_clock::time_point at);
    void dispatch(const std::vector<Outbound>& out);
    void on_disconnect(ClientId id);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, std::shared_ptr<BridgeServer::Impl> server)
        : ws_(std::move(socket)), server_(std::move(server)) {}

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) {
                return;
            }
            self->id_ = self->server_->next_id++;
            self->server_->clients[self->id_] = self;
            self->server_->dispatch(self->server_->core.join(self->id_));
            self->read();
        });
    }

    void send(std::string text) {
        if (closing_) {
            return;
        }
        queue_.push_back(std::move(text));
        if (queue_.size() == 1) {
            write_next();
        }
    }

    void close(const std::string& reason) {
        if (closing_) {
            return;
        }
        closing_ = true;
        queue_.clear();
        websocket::close_reason cr(websocket::close_code::policy_error, reason.substr(0, 120));
        ws_.async_close(cr, [self = shared_from_this()](beast::error_code) { self->finish(); });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->finish();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            if (!self->ws_.got_text()) {
                self->close("binary frames are not accepted");
                return;
            }
            try {
                self->server_->dispatch(self->server_->core.handle(self->id_, text, self->server_->now()));
            } catch (const ProtocolError& e) {
                self->close(e.what());
                return;
            } catch (const std::exception& e) {
                std::cerr << "error handling message: " << e.what() << '\n';
            }
            if (!self->closing_) {
                self->read();
            }
        });
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->finish();
                return;
            }
            if (!self->queue_.empty()) {
                self->queue_.pop_front();
            }
            if (!self->queue_.empty() && !self->closing_) {
                self->write_next();
            }
        });
    }

    void finish() {
        if (finished_ || id_ == 0) {
            finished_ = true;
            return;
        }
        finished_ = true;
        closing_ = true;
        server_->on_disconnect(id_);
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<BridgeServer::Impl> server_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    ClientId id_{0};
    bool closing_{false};
    bool finished_{false};
};

namespace {

std::string mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html") return "text/html";
    if (ext == ".js") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, std::shared_ptr<BridgeServer::Impl> server)
        : stream_(std::move(socket)), server_(std::move(server)) {}

    void start() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (!ec) {
                self->route();
            }
        });
    }

private:
    void route() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), server_)->start(std::move(req_));
                return;
            }
            reply(http::status::not_found, "text/plain", "not found");
            return;
        }
        if (req_.method() != http::verb::get) {
            reply(http::status::method_not_allowed, "text/plain", "GET only");
            return;
        }
        const std::string target(req_.target());
        if (target == "/health") {
            reply(http::status::ok, "text/plain", "ok");
            return;
        }
        const auto& ui = server_->options.ui_dir;
        if (!ui.empty() && target.find("..") == std::string::npos) {
            auto path = ui / (target == "/" ? "index.html" : target.substr(1));
            std::ifstream f(path, std::ios::binary);
            if (f) {
                std::ostringstream body;
                body << f.rdbuf();
                reply(http::status::ok, mime_type(path), body.str());
                return;
            }
        }
        reply(http::status::not_found, "text/plain", "not found");
    }

    void reply(http::status status, const std::string& type, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, type);
        res->keep_alive(false);
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    beast::tcp_stream stream_;
    std::shared_ptr<BridgeServer::Impl> server_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

void BridgeServer::Impl::accept() {
    acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            return;  // acceptor closed
        }
        std::make_shared<HttpSession>(std::move(socket), self)->start();
        self->accept();
    });
}

void BridgeServer::Impl::schedule_tick(std::chrono::steady_clock::time_point at) {
    timer.expires_at(at);
    timer.async_wait([self = shared_from_this(), at](beast::error_code ec) {
        if (ec) {
            return;
        }
        try {
            self->dispatch(self->core.tick(self->now()));
        } catch (const std::exception& e) {
            std::cerr << "session tick failed: " << e.what() << '\n';
        }
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / self->options.tick_hz));
        auto next = at + period;
        const auto now = std::chrono::steady_clock::now();
        if (next < now) {
            next = now;  // fell behind; do not burst
        }
        self->schedule_tick(next);
    });
}

void BridgeServer::Impl::dispatch(const std::vector<Outbound>& out) {
    for (const auto& o : out) {
        const auto it = clients.find(o.client);
        if (it == clients.end()) {
            continue;
        }
        if (auto s = it->second.lock()) {
            s->send(o.text);
        }
    }
}

void BridgeServer::Impl::on_disconnect(ClientId id) {
    clients.erase(id);
    dispatch(core.leave(id));
}

BridgeServer::BridgeServer(BridgeCore& core, ServerOptions options)
    : impl_(std::make_shared<Impl>(core, std::move(options))) {}

BridgeServer::~BridgeServer() { stop(); }

unsigned short BridgeServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void BridgeServer::run() {
    std::optional<asio::signal_set> signals;
    if (impl_->options.handle_signals) {
        signals.emplace(impl_->ioc, SIGINT, SIGTERM);
        signals->async_wait([this](beast::error_code, int) { stop(); });
    }
    impl_->accept();
    impl_->schedule_tick(std::chrono::steady_clock::now());
    impl_->ioc.run();
}

void BridgeServer::stop() { impl_->ioc.stop(); }

}  // namespace slam::bridge
