#include "shaperel/annotation_server.hpp"

#include <thread>

#include <httplib.h>

#include "shaperel/rendering.hpp"

namespace shaperel::active {

struct AnnotationServer::Impl {
  AnnotationSession* session;
  shape::Shape shape;
  std::map<std::string, turtle::Graph> expected;
  ExportFn export_gold;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  void routes();
  void bind();
  nlohmann::json describe_item(const ReviewItem& item) const;
};

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, std::string_view error, const std::string& message) {
  reply(res, status, {{"error", error}, {"message", message}});
}

nlohmann::json judgement_json(const Judgement& j) {
  nlohmann::json out = {{"polarity", std::string(to_string(j.polarity))}};
  if (j.category) out["category"] = std::string(to_string(*j.category));
  if (!j.annotator.empty()) out["annotator"] = j.annotator;
  if (!j.timestamp.empty()) out["timestamp"] = j.timestamp;
  return out;
}

nlohmann::json spans_json(const std::vector<rendering::Span>& spans) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : spans) arr.push_back({s.begin, s.end});
  return arr;
}

}  // namespace

nlohmann::json AnnotationServer::Impl::describe_item(const ReviewItem& item) const {
  nlohmann::json j = item_to_json(item, shape.vocabulary());
  const std::string normalized = rendering::nfc(item.abstract);
  j["abstract"] = normalized;
  j["spans"] = spans_json(rendering::find_spans(item.triple.object, normalized));
  if (auto it = expected.find(item.entity); it != expected.end()) {
    j["expected_graph"] = turtle::serialize(it->second, shape.vocabulary().names());
  } else {
    j["expected_graph"] = nullptr;
  }
  if (auto judgement = session->judgement(item.id)) {
    j["status"] = "judged";
    j["judgement"] = judgement_json(*judgement);
  } else {
    j["status"] = "pending";
  }
  return j;
}

void AnnotationServer::Impl::routes() {
  server.Get("/api/session", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200,
          {{"dataset", session->dataset()},
           {"model", session->model()},
           {"total", session->total()},
           {"judged", session->judged()}});
  });

  server.Get("/api/categories", [](const httplib::Request&, httplib::Response& res) {
    nlohmann::json arr = nlohmann::json::array();
    for (Category c : all_categories()) {
      arr.push_back({{"code", std::string(to_string(c))},
                     {"description", std::string(describe(c))}});
    }
    reply(res, 200, arr);
  });

  server.Get("/api/items", [this](const httplib::Request& req, httplib::Response& res) {
    std::string status = req.has_param("status") ? req.get_param_value("status") : "pending";
    if (status != "pending" && status != "judged" && status != "all") {
      fail(res, 400, "BadRequest", "status must be pending, judged or all");
      return;
    }
    std::size_t limit = SIZE_MAX;
    if (req.has_param("limit")) {
      try {
        long long v = std::stoll(req.get_param_value("limit"));
        if (v < 0) throw std::invalid_argument("negative");
        limit = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        fail(res, 400, "BadRequest", "limit must be a non-negative integer");
        return;
      }
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& item : session->items()) {
      if (arr.size() >= limit) break;
      bool judged = session->judgement(item.id).has_value();
      if ((status == "pending" && judged) || (status == "judged" && !judged)) continue;
      arr.push_back(describe_item(item));
    }
    reply(res, 200, arr);
  });

  server.Get(R"(/api/items/([0-9a-f]+))", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    auto item = session->item(req.matches[1]);
    if (!item) {
      fail(res, 404, "UnknownItem", "no review item " + std::string(req.matches[1]));
      return;
    }
    reply(res, 200, describe_item(*item));
  });

  server.Post(R"(/api/items/([0-9a-f]+)/judgement)", [this](const httplib::Request& req,
                                                            httplib::Response& res) {
    Judgement j;
    j.item_id = req.matches[1];
    try {
      auto body = nlohmann::json::parse(req.body);
      if (!body.is_object() || !body.contains("polarity") || !body.at("polarity").is_string()) {
        fail(res, 400, "BadRequest", "body must be an object with a polarity");
        return;
      }
      auto polarity = polarity_from_string(body.at("polarity").get<std::string>());
      if (!polarity) {
        fail(res, 400, "BadRequest", "polarity must be \"+\" or \"-\"");
        return;
      }
      j.polarity = *polarity;
      if (body.contains("category") && !body.at("category").is_null()) {
        auto category = category_from_string(body.at("category").get<std::string>());
        if (!category) {
          fail(res, 422, "UnknownCategory", "unknown error category");
          return;
        }
        j.category = *category;
      }
      j.annotator = body.value("annotator", std::string{});
      j.timestamp = body.value("timestamp", std::string{});
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, "BadRequest", e.what());
      return;
    }
    try {
      session->judge(j);
    } catch (const UnknownItem& e) {
      fail(res, 404, "UnknownItem", e.what());
      return;
    } catch (const AlreadyJudged& e) {
      fail(res, 409, "AlreadyJudged", e.what());
      return;
    } catch (const MissingCategory& e) {
      fail(res, 422, "MissingCategory", e.what());
      return;
    }
    reply(res, 200, describe_item(*session->item(j.item_id)));
  });

  server.Delete(R"(/api/items/([0-9a-f]+)/judgement)", [this](const httplib::Request& req,
                                                              httplib::Response& res) {
    try {
      session->revoke(req.matches[1]);
    } catch (const UnknownItem& e) {
      fail(res, 404, "UnknownItem", e.what());
      return;
    } catch (const NotJudged& e) {
      fail(res, 409, "NotJudged", e.what());
      return;
    }
    reply(res, 200, describe_item(*session->item(req.matches[1])));
  });

  server.Post("/api/render", [](const httplib::Request& req, httplib::Response& res) {
    try {
      auto body = nlohmann::json::parse(req.body);
      auto dt = turtle::datatype_from_string(body.value("datatype", std::string("string")));
      if (!dt) {
        fail(res, 400, "BadRequest", "unknown datatype");
        return;
      }
      auto literal = turtle::Literal::try_make(body.at("value").get<std::string>(), *dt);
      if (!literal) {
        fail(res, 422, "InvalidLiteral", "value is not a valid literal of that datatype");
        return;
      }
      const std::string normalized = rendering::nfc(body.value("abstract", std::string{}));
      reply(res, 200,
            {{"renderings", rendering::renderings(*literal)},
             {"abstract", normalized},
             {"spans", spans_json(rendering::find_spans(*literal, normalized))}});
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, "BadRequest", e.what());
    }
  });

  server.Post("/api/export/gold", [this](const httplib::Request&, httplib::Response& res) {
    try {
      reply(res, 200, export_gold());
    } catch (const PendingItems& e) {
      reply(res, 409, {{"error", "PendingItems"}, {"message", e.what()}, {"pending", e.pending()}});
    } catch (const std::exception& e) {
      fail(res, 500, "ExportFailed", e.what());
    }
  });

  if (options.static_dir) {
    if (!server.set_mount_point("/", options.static_dir->string())) {
      throw std::runtime_error("cannot serve static files from " + options.static_dir->string());
    }
  }
}

void AnnotationServer::Impl::bind() {
  // A second server on the same port must fail rather than share the log.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  if (options.port == 0) {
    port = server.bind_to_any_port(options.host);
    if (port < 0) throw std::runtime_error("cannot bind to " + options.host);
  } else {
    if (!server.bind_to_port(options.host, options.port)) {
      throw std::runtime_error("cannot bind to " + options.host + ":" + std::to_string(options.port));
    }
    port = options.port;
  }
}

AnnotationServer::AnnotationServer(AnnotationSession& session, const shape::Shape& shape,
                                   std::map<std::string, turtle::Graph> expected_graphs,
                                   ExportFn export_gold, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->session = &session;
  impl_->shape = shape;
  impl_->expected = std::move(expected_graphs);
  impl_->export_gold = std::move(export_gold);
  impl_->options = std::move(options);
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start() {
  impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void AnnotationServer::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int AnnotationServer::port() const noexcept { return impl_->port; }

}  // namespace shaperel::active
