#include "pcib/service.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pcib/remote_backend.hpp"

namespace pcib::app {

namespace {
using nlohmann::json;

json descriptor_json(const ModelDescriptor& d) {
    return {{"kind", d.kind}, {"variant", d.variant}, {"version", d.version}};
}

json signals_json(const SignalVector& v) {
    return {{"uptake", v.uptake},
            {"stress", v.stress},
            {"conflict", v.conflict},
            {"rationalization", v.rationalization},
            {"esi_harm", v.esi_harm},
            {"esi_geo", v.esi_geo},
            {"entity_uptake", v.entity_uptake},
            {"context_adherence", v.context_adherence},
            {"falsifiability", v.falsifiability}};
}
}  // namespace

std::string ModelDescriptor::to_json() const { return descriptor_json(*this).dump(); }

std::string ScoreResponse::to_json(int indent) const {
    json j;
    j["risk"] = risk;
    j["verdict"] = verdict;
    j["threshold"] = threshold;
    j["signals"] = signals_json(signals);
    j["model"] = descriptor_json(model);
    return j.dump(indent);
}

Scorer::Scorer(signals::SignalConfig cfg, backends::Backends be, double threshold)
    : cfg_(std::move(cfg)), backends_(std::move(be)), threshold_(threshold) {
    cfg_.validate();
}

Scorer::Scorer(ml::TrainedModel model, signals::SignalConfig cfg,
               backends::Backends be, double threshold)
    : model_(std::move(model)),
      cfg_(std::move(cfg)),
      backends_(std::move(be)),
      threshold_(threshold) {
    cfg_.validate();
}

ModelDescriptor Scorer::descriptor() const {
    if (!model_) return {"theory-guided", "", "unsupervised"};
    return {ml::to_string(model_->kind), to_string(model_->variant),
            model_->format_version};
}

ScoreResponse Scorer::score(const QcaTriple& triple) const {
    SignalVector v = signals::extract_signals(triple, cfg_, backends_);
    ScoreResponse resp;
    resp.signals = v;
    resp.threshold = threshold_;
    resp.model = descriptor();
    if (model_) {
        resp.risk = model_->predict_proba(features_of(v, model_->variant));
    } else {
        resp.risk = signals::risk_score(v);
    }
    resp.verdict = resp.risk >= threshold_ ? "HALLUCINATION" : "FACTUAL";
    return resp;
}

struct ScoreService::Impl {
    std::shared_ptr<Scorer> scorer;
    backends::InflightLimiter limiter;
    httplib::Server server;
    std::thread worker;

    Impl(std::shared_ptr<Scorer> s, int max_in_flight)
        : scorer(std::move(s)), limiter(max_in_flight) {
        setup();
    }

    void setup() {
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            json j = {{"status", "ok"},
                      {"model", descriptor_json(scorer->descriptor())}};
            res.set_content(j.dump(), "application/json");
        });

        server.Post("/v1/score", [this](const httplib::Request& req,
                                        httplib::Response& res) {
            if (!limiter.try_acquire()) {
                res.status = 429;
                res.set_content(json{{"error", "too many in-flight requests"}}.dump(),
                                "application/json");
                return;
            }
            struct Release {
                backends::InflightLimiter& l;
                ~Release() { l.release(); }
            } release{limiter};

            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::parse_error& e) {
                res.status = 400;
                res.set_content(json{{"error", std::string("invalid JSON: ") + e.what()}}.dump(),
                                "application/json");
                return;
            }

            std::vector<std::string> missing;
            for (const char* field : {"question", "answer"}) {
                if (!body.contains(field) || !body[field].is_string() ||
                    body[field].get<std::string>().empty()) {
                    missing.push_back(field);
                }
            }
            if (!missing.empty()) {
                res.status = 400;
                res.set_content(json{{"error", "missing or empty required fields"},
                                     {"missing", missing}}.dump(),
                                "application/json");
                return;
            }

            QcaTriple triple;
            triple.id = body.value("id", "request");
            triple.question = body["question"].get<std::string>();
            triple.context = body.value("context", std::string());
            triple.answer = body["answer"].get<std::string>();

            try {
                ScoreResponse sr = scorer->score(triple);
                res.set_content(sr.to_json(), "application/json");
            } catch (const TransportError& e) {
                res.status = 502;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const CapabilityError& e) {
                res.status = 502;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const Error& e) {
                res.status = 400;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                // request isolation: no failure escapes the handler
                res.status = 500;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            }
        });
    }
};

ScoreService::ScoreService(std::shared_ptr<Scorer> scorer, int max_in_flight)
    : impl_(std::make_unique<Impl>(std::move(scorer), max_in_flight)) {}

ScoreService::~ScoreService() { stop(); }

void ScoreService::run(const std::string& bind_address, int port) {
    if (!impl_->server.listen(bind_address, port)) {
        throw ConfigError("cannot bind " + bind_address + ":" + std::to_string(port));
    }
}

int ScoreService::start_async(const std::string& bind_address) {
    int port = impl_->server.bind_to_any_port(bind_address);
    if (port <= 0) throw ConfigError("cannot bind " + bind_address);
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void ScoreService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace pcib::app
