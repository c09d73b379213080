#include "roadrl/server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <charconv>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadrl/error.hpp"
#include "roadrl/wire.hpp"

namespace roadrl {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

void SnapshotHub::publish(std::string frame) {
  auto p = std::make_shared<const std::string>(std::move(frame));
  std::vector<Listener> targets;
  {
    std::lock_guard lock(mutex_);
    latest_ = p;
    ++published_;
    targets.reserve(listeners_.size());
    for (const auto& [_, fn] : listeners_) targets.push_back(fn);
  }
  for (const auto& fn : targets) fn(p);
}

std::shared_ptr<const std::string> SnapshotHub::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

std::uint64_t SnapshotHub::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

int SnapshotHub::subscribe(Listener fn) {
  std::lock_guard lock(mutex_);
  const int id = next_id_++;
  listeners_.emplace(id, std::move(fn));
  return id;
}

void SnapshotHub::unsubscribe(int id) {
  std::lock_guard lock(mutex_);
  listeners_.erase(id);
}

std::size_t SnapshotHub::subscribers() const {
  std::lock_guard lock(mutex_);
  return listeners_.size();
}

void SimulationRunner::start(std::uint64_t max_ticks) {
  stop();
  stop_ = false;
  running_ = true;
  publish();
  thread_ = std::thread([this, max_ticks] { loop(max_ticks); });
}

void SimulationRunner::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
  running_ = false;
}

void SimulationRunner::publish() { hub_.publish(snapshot_to_wire(sim_.snapshot()).dump()); }

void SimulationRunner::loop(std::uint64_t max_ticks) {
  using clock = std::chrono::steady_clock;
  const auto& run = sim_.config().run;
  const auto period = run.tick_rate > 0.0
                          ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / run.tick_rate))
                          : clock::duration::zero();
  auto next = clock::now();
  auto last_idle_publish = clock::now();
  while (!stop_) {
    if (max_ticks != 0 && sim_.ticks() >= max_ticks) {
      sim_.drain_commands();
      if (clock::now() - last_idle_publish > std::chrono::milliseconds(100)) {
        publish();
        last_idle_publish = clock::now();
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    const std::uint64_t before = sim_.ticks();
    try {
      sim_.tick();
    } catch (const std::exception&) {
      running_ = false;
      throw;
    }
    if (sim_.ticks() == before) {
      // Paused: keep flags visible to readers without spinning.
      if (clock::now() - last_idle_publish > std::chrono::milliseconds(100)) {
        publish();
        last_idle_publish = clock::now();
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    if (sim_.ticks() % run.snapshot_every == 0) publish();
    if (period != clock::duration::zero()) {
      next += period;
      std::this_thread::sleep_until(next);
    }
  }
}

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response make_response(const Request& req, http::status status, std::string body) {
  Response res{status, req.version()};
  res.set(http::field::server, "roadrl");
  res.set(http::field::content_type, "application/json; charset=utf-8");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response error_response(const Request& req, http::status status, const std::string& message) {
  return make_response(req, status, error_to_wire(static_cast<int>(status), message).dump());
}

template <typename T>
std::optional<T> await(std::future<T>& fut, std::chrono::milliseconds timeout) {
  if (fut.wait_for(timeout) != std::future_status::ready) return std::nullopt;
  return fut.get();
}

}  // namespace

struct ControlServer::Impl {
  std::string network_json;
  std::size_t vehicle_count;
  CommandSink sink;
  SnapshotHub& hub;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::uint16_t bound_port = 0;

  Impl(std::string net_json, std::size_t n, CommandSink s, SnapshotHub& h, ServerOptions o)
      : network_json(std::move(net_json)), vehicle_count(n), sink(std::move(s)), hub(h), options(std::move(o)) {}

  Response handle(const Request& req);
  void do_accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, SnapshotHub& hub) : ws_(std::move(socket)), hub_(hub) {}

  ~WsSession() {
    if (sub_ >= 0) hub_.unsubscribe(sub_);
  }

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    sub_ = hub_.subscribe([weak, executor](std::shared_ptr<const std::string> frame) {
      if (auto self = weak.lock()) {
        net::post(executor, [self, frame = std::move(frame)]() mutable { self->offer(std::move(frame)); });
      }
    });
    if (auto frame = hub_.latest()) offer(std::move(frame));
    do_read();
  }

  void offer(std::shared_ptr<const std::string> frame) {
    pending_ = std::move(frame);  // older unsent frames are dropped
    if (!writing_) write_next();
  }

  void write_next() {
    if (!pending_ || closed_) return;
    auto frame = std::move(pending_);
    pending_.reset();
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*frame), [self = shared_from_this(), frame](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->write_next();
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        if (self->sub_ >= 0) self->hub_.unsubscribe(self->sub_);
        self->sub_ = -1;
        return;
      }
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  SnapshotHub& hub_;
  beast::flat_buffer buffer_;
  std::shared_ptr<const std::string> pending_;
  bool writing_ = false;
  bool closed_ = false;
  int sub_ = -1;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ControlServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) return close();
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws/stream") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), server_.hub)->run(std::move(req_));
        return;
      }
      return send(error_response(req_, http::status::not_found, "no websocket at this path"));
    }
    send(server_.handle(req_));
  }

  void send(Response res) {
    res_ = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *res_,
                      beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_->keep_alive()));
  }

  void on_write(bool keep_alive, beast::error_code ec, std::size_t) {
    if (ec) return;
    if (!keep_alive) return close();
    res_.reset();
    do_read();
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  std::shared_ptr<Response> res_;
  ControlServer::Impl& server_;
};

}  // namespace

Response ControlServer::Impl::handle(const Request& req) {
  const std::string target(req.target());
  const std::string path = target.substr(0, target.find('?'));
  const auto method = req.method();

  if (method == http::verb::options) {
    Response res = make_response(req, http::status::no_content, "");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    return res;
  }

  auto body_json = [&req]() -> std::optional<json> {
    if (req.body().empty()) return json::object();
    json j = json::parse(req.body(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  auto ok = [&req](json j) {
    j["v"] = kWireVersion;
    return make_response(req, http::status::ok, j.dump());
  };

  if (path == "/api/network" || path == "/api/state" || path.starts_with("/api/stats/")) {
    if (method != http::verb::get) return error_response(req, http::status::method_not_allowed, "use GET");
    if (path == "/api/network") return make_response(req, http::status::ok, network_json);
    if (path == "/api/state") {
      const auto frame = hub.latest();
      if (!frame) return error_response(req, http::status::service_unavailable, "no snapshot published yet");
      return make_response(req, http::status::ok, *frame);
    }
    const std::string id_text = path.substr(std::string("/api/stats/").size());
    std::size_t id = 0;
    const auto [end, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || end != id_text.data() + id_text.size() || id >= vehicle_count) {
      return error_response(req, http::status::not_found, "no vehicle '" + id_text + "'");
    }
    auto done = std::make_shared<std::promise<std::optional<StatSeries>>>();
    auto fut = done->get_future();
    sink(QueryStats{id, done});
    const auto series = await(fut, options.command_timeout);
    if (!series) return error_response(req, http::status::service_unavailable, "simulation did not answer");
    if (!*series) return error_response(req, http::status::not_found, "no vehicle '" + id_text + "'");
    return make_response(req, http::status::ok, stats_to_wire(**series).dump());
  }

  const bool post_route = path == "/api/flags" || path == "/api/save" || path == "/api/pause" ||
                          path == "/api/resume" || path == "/api/select";
  if (!post_route) return error_response(req, http::status::not_found, "unknown endpoint " + path);
  if (method != http::verb::post) return error_response(req, http::status::method_not_allowed, "use POST");
  const auto body = body_json();
  if (!body) return error_response(req, http::status::bad_request, "body must be a JSON object");

  if (path == "/api/flags") {
    SetFlags flags;
    json queued = json::object();
    for (const char* key : {"training", "exploration"}) {
      const auto it = body->find(key);
      if (it == body->end()) continue;
      if (!it->is_boolean()) return error_response(req, http::status::bad_request, std::string(key) + " must be a boolean");
      (std::string(key) == "training" ? flags.training : flags.exploration) = it->get<bool>();
      queued[key] = it->get<bool>();
    }
    sink(flags);
    return ok({{"queued", queued}});
  }
  if (path == "/api/save") {
    auto done = std::make_shared<std::promise<ModelPaths>>();
    auto fut = done->get_future();
    sink(SaveModel{options.model_dir, done});
    try {
      const auto paths = await(fut, options.command_timeout);
      if (!paths) return error_response(req, http::status::service_unavailable, "simulation did not answer");
      return ok({{"files",
                  {paths->actor.string(), paths->critic.string(), paths->actor_txt.string(),
                   paths->critic_txt.string()}}});
    } catch (const std::exception& e) {
      return error_response(req, http::status::internal_server_error, e.what());
    }
  }
  if (path == "/api/select") {
    const auto it = body->find("id");
    if (it == body->end() || !it->is_number_unsigned() || it->get<std::size_t>() >= vehicle_count) {
      return error_response(req, http::status::not_found, "no such vehicle");
    }
    sink(SelectVehicle{it->get<std::size_t>()});
    return ok({{"queued", {{"select", it->get<std::size_t>()}}}});
  }
  if (path == "/api/pause") {
    sink(Pause{});
    return ok({{"queued", "pause"}});
  }
  sink(Resume{});
  return ok({{"queued", "resume"}});
}

void ControlServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

ControlServer::ControlServer(std::string network_json, std::size_t vehicle_count, CommandSink sink,
                             SnapshotHub& hub, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(network_json), vehicle_count, std::move(sink), hub,
                                   std::move(options))) {}

ControlServer::~ControlServer() { stop(); }

void ControlServer::start() {
  auto& im = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(im.options.address, ec);
  if (ec) throw Error(Errc::ServerError, "bad listen address '" + im.options.address + "'");
  const tcp::endpoint endpoint{address, im.options.port};
  im.acceptor.open(endpoint.protocol(), ec);
  if (!ec) im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor.bind(endpoint, ec);
  if (!ec) im.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    beast::error_code ignored;
    im.acceptor.close(ignored);
    throw Error(Errc::ServerError, "cannot listen on " + im.options.address + ":" +
                                       std::to_string(im.options.port) + ": " + ec.message());
  }
  im.bound_port = im.acceptor.local_endpoint().port();
  im.do_accept();
  for (int i = 0; i < std::max(1, im.options.threads); ++i) im.threads.emplace_back([&im] { im.ioc.run(); });
}

void ControlServer::stop() {
  if (!impl_) return;
  auto& im = *impl_;
  im.ioc.stop();
  for (auto& t : im.threads) {
    if (t.joinable()) t.join();
  }
  im.threads.clear();
  beast::error_code ec;
  im.acceptor.close(ec);
}

std::uint16_t ControlServer::port() const { return impl_->bound_port; }

}  // namespace roadrl
