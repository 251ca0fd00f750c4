#include "applan/service.hpp"

#include <algorithm>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

namespace applan {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- store

ScenarioStore::ScenarioStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    static const std::regex name_re(R"(s(\d+))");
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        const auto id = entry.path().stem().string();
        Entry e;
        e.revision = 1;
        e.file = std::make_shared<const ScenarioFile>(parse_scenario(read_file(entry.path())));
        entries_.emplace(id, std::move(e));
        std::smatch m;
        if (std::regex_match(id, m, name_re)) next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(m[1].str()) + 1);
    }
}

StoredScenario ScenarioStore::create(ScenarioFile file) {
    std::unique_lock lock(mutex_);
    std::string id;
    do {
        id = fmt::format("s{:06d}", next_id_++);
    } while (entries_.contains(id));
    write_file_atomic(dir_ / (id + ".json"), serialize_scenario(file));
    Entry e;
    e.revision = 1;
    e.file = std::make_shared<const ScenarioFile>(std::move(file));
    auto [it, _] = entries_.emplace(id, std::move(e));
    return {id, it->second.revision, *it->second.file};
}

std::optional<StoredScenario> ScenarioStore::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return StoredScenario{id, it->second.revision, *it->second.file};
}

std::vector<StoredScenario> ScenarioStore::list() const {
    std::shared_lock lock(mutex_);
    std::vector<StoredScenario> out;
    for (const auto& [id, e] : entries_) out.push_back({id, e.revision, *e.file});
    return out;
}

StoredScenario ScenarioStore::update(const std::string& id, ScenarioFile file,
                                     std::optional<std::uint64_t> expected_revision) {
    std::shared_ptr<std::mutex> write_lock;
    {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(id);
        if (it == entries_.end()) throw ServiceError(404, "not-found", fmt::format("unknown scenario '{}'", id));
        write_lock = it->second.write_lock;
    }
    std::unique_lock writer(*write_lock, std::try_to_lock);
    if (!writer.owns_lock()) {
        throw ServiceError(409, "write-conflict", fmt::format("scenario '{}' is being written by another request", id));
    }
    {
        std::shared_lock lock(mutex_);
        const auto current = entries_.at(id).revision;
        if (expected_revision && *expected_revision != current) {
            throw ServiceError(409, "revision-mismatch",
                               fmt::format("scenario '{}' is at revision {}, not {}", id, current, *expected_revision));
        }
    }
    write_file_atomic(dir_ / (id + ".json"), serialize_scenario(file));
    std::unique_lock lock(mutex_);
    auto& e = entries_.at(id);
    e.revision += 1;
    e.file = std::make_shared<const ScenarioFile>(std::move(file));
    return {id, e.revision, *e.file};
}

// ---------------------------------------------------------------- runs

const char* to_string(RunKind kind) {
    switch (kind) {
        case RunKind::coverage: return "coverage";
        case RunKind::optimize: return "optimize";
        case RunKind::calibrate: return "calibrate";
    }
    return "unknown";
}

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::queued: return "queued";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
        case RunStatus::failed: return "failed";
    }
    return "unknown";
}

RunKind run_kind_from_string(const std::string& name) {
    if (name == "coverage") return RunKind::coverage;
    if (name == "optimize") return RunKind::optimize;
    if (name == "calibrate") return RunKind::calibrate;
    throw PlanError(ErrorCode::invalid_argument, fmt::format("unknown run kind '{}'", name));
}

RunRequest RunRequest::from_json(const json& j) {
    if (!j.is_object()) throw PlanError(ErrorCode::invalid_argument, "run request must be a JSON object");
    static const std::vector<std::string> allowed{"kind", "seed", "solver", "decision", "existing", "calibration"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw PlanError(ErrorCode::invalid_argument, fmt::format("run request: unknown field '{}'", key));
        }
    }
    if (!j.contains("kind") || !j.at("kind").is_string()) {
        throw PlanError(ErrorCode::invalid_argument, "run request needs a string 'kind'");
    }
    RunRequest r;
    r.kind = run_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) {
            throw PlanError(ErrorCode::invalid_argument, "seed must be a non-negative integer");
        }
        r.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("solver")) {
        if (!j.at("solver").is_string()) throw PlanError(ErrorCode::invalid_argument, "solver must be a string");
        r.solver = solver_from_string(j.at("solver").get<std::string>());
    }
    const bool existing = j.contains("existing") && j.at("existing").is_boolean() && j.at("existing").get<bool>();
    if (j.contains("decision")) {
        if (existing) throw PlanError(ErrorCode::invalid_argument, "give either 'decision' or 'existing', not both");
        r.decision = decision_from_json(j.at("decision"));
    }
    if (j.contains("calibration")) r.calibration = calibration_config_from_json(j.at("calibration"));
    return r;
}

json RunRequest::to_json() const {
    json j{{"kind", applan::to_string(kind)}, {"seed", seed}};
    if (kind == RunKind::optimize) j["solver"] = applan::to_string(solver);
    if (kind == RunKind::coverage) {
        if (decision) j["decision"] = decision_to_json(*decision);
        else j["existing"] = true;
    }
    if (kind == RunKind::calibrate) {
        j["calibration"] = {{"absorption_min_dB", calibration.absorption_min_dB},
                            {"absorption_max_dB", calibration.absorption_max_dB},
                            {"quantum_dB", calibration.quantum_dB},
                            {"invisible_trigger_dB", calibration.invisible_trigger_dB},
                            {"max_passes", calibration.max_passes},
                            {"seed", calibration.seed},
                            {"unreachable_penalty_dB", calibration.unreachable_penalty_dB}};
    }
    return j;
}

json RunRecord::to_json() const {
    json j{{"id", id},
           {"scenario_id", scenario_id},
           {"scenario_revision", scenario_revision},
           {"kind", applan::to_string(request.kind)},
           {"request", request.to_json()},
           {"status", applan::to_string(status)},
           {"inputs_hash", inputs_hash},
           {"seed", request.seed},
           {"timings", {{"queued_at_s", queued_at_s}, {"started_at_s", started_at_s}, {"finished_at_s", finished_at_s}}}};
    if (status == RunStatus::done) j["exit_code"] = exit_code;
    if (status == RunStatus::failed) j["error"] = {{"code", error_code}, {"message", error_message}};
    return j;
}

RunRegistry::RunRegistry(fs::path dir, unsigned workers) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    for (unsigned w = 0; w < workers; ++w) {
        workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
    }
}

RunRegistry::~RunRegistry() {
    for (auto& w : workers_) w.request_stop();
    changed_.notify_all();
    workers_.clear();
}

double RunRegistry::now_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

std::string RunRegistry::submit(const StoredScenario& snapshot, RunRequest request) {
    auto scenario = std::make_shared<const ScenarioFile>(snapshot.file);
    RunRecord rec;
    rec.scenario_id = snapshot.id;
    rec.scenario_revision = snapshot.revision;
    rec.inputs_hash = inputs_hash(serialize_scenario(*scenario) + canonical_dump(request.to_json()));
    rec.request = std::move(request);
    {
        std::lock_guard lock(mutex_);
        rec.id = fmt::format("r{:06d}", next_id_++);
        rec.queued_at_s = now_s();
        runs_.emplace(rec.id, rec);
        queue_.push_back({rec.id, std::move(scenario)});
    }
    changed_.notify_all();
    return rec.id;
}

std::optional<RunRecord> RunRegistry::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(id);
    if (it == runs_.end()) return std::nullopt;
    return it->second;
}

std::vector<RunRecord> RunRegistry::for_scenario(const std::string& scenario_id) const {
    std::lock_guard lock(mutex_);
    std::vector<RunRecord> out;
    for (const auto& [_, r] : runs_) {
        if (r.scenario_id == scenario_id) out.push_back(r);
    }
    return out;
}

std::optional<RunRecord> RunRegistry::wait(const std::string& id) const {
    std::unique_lock lock(mutex_);
    auto it = runs_.find(id);
    if (it == runs_.end()) return std::nullopt;
    changed_.wait(lock, [&] { return it->second.status == RunStatus::done || it->second.status == RunStatus::failed; });
    return it->second;
}

void RunRegistry::worker_loop(std::stop_token stop) {
    for (;;) {
        Job job;
        {
            std::unique_lock lock(mutex_);
            if (!changed_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
            job = std::move(queue_.front());
            queue_.pop_front();
            auto& rec = runs_.at(job.run_id);
            rec.status = RunStatus::running;
            rec.started_at_s = now_s();
        }
        changed_.notify_all();
        execute(job);
    }
}

void RunRegistry::execute(const Job& job) {
    RunRequest request;
    {
        std::lock_guard lock(mutex_);
        request = runs_.at(job.run_id).request;
    }

    json result;
    int exit_code = kExitOk;
    std::string error_code, error_message;
    try {
        JobOutput out;
        switch (request.kind) {
            case RunKind::coverage:
                out = run_coverage(job.scenario->scheme,
                                   request.decision ? *request.decision : PlacementDecision::existing(job.scenario->scheme));
                break;
            case RunKind::optimize:
                out = run_optimize(job.scenario->scheme, request.solver, request.seed);
                break;
            case RunKind::calibrate:
                out = run_calibrate(*job.scenario, request.calibration);
                break;
        }
        result = std::move(out.artifact);
        exit_code = out.exit_code;
    } catch (const PlanError& e) {
        error_code = to_string(e.code());
        error_message = e.what();
    } catch (const std::exception& e) {
        error_code = "internal";
        error_message = e.what();
    }

    RunRecord snapshot;
    {
        std::lock_guard lock(mutex_);
        auto& rec = runs_.at(job.run_id);
        rec.finished_at_s = now_s();
        if (error_code.empty()) {
            rec.status = RunStatus::done;
            rec.result = std::move(result);
            rec.exit_code = exit_code;
        } else {
            rec.status = RunStatus::failed;
            rec.error_code = std::move(error_code);
            rec.error_message = std::move(error_message);
        }
        snapshot = rec;
    }
    try {
        json persisted = snapshot.to_json();
        if (snapshot.status == RunStatus::done) persisted["result"] = snapshot.result;
        write_file_atomic(dir_ / (snapshot.id + ".json"), canonical_dump(persisted));
    } catch (const std::exception&) {
        // The in-memory record stays authoritative.
    }
    changed_.notify_all();
}

// ---------------------------------------------------------------- http

namespace {

json error_body(const std::string& code, const std::string& message, const std::vector<Violation>& violations = {}) {
    json v = json::array();
    for (const auto& x : violations) v.push_back({{"code", x.code}, {"message", x.message}});
    return {{"error", code}, {"message", message}, {"violations", std::move(v)}};
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::schema_violation:
        case ErrorCode::invalid_decision:
        case ErrorCode::no_measurements:
        case ErrorCode::dangling_measurement:
        case ErrorCode::instance_too_large:
            return 422;
        case ErrorCode::malformed_syntax:
        case ErrorCode::unsupported_version:
        case ErrorCode::invalid_argument:
            return 400;
        case ErrorCode::io_error:
            return 500;
    }
    return 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(canonical_dump(body), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ServiceError& e) {
            send_json(res, e.status(), error_body(e.code(), e.what(), e.violations()));
        } catch (const PlanError& e) {
            send_json(res, status_for(e.code()), error_body(to_string(e.code()), e.what(), e.violations()));
        } catch (const json::exception& e) {
            send_json(res, 400, error_body("malformed-syntax", e.what()));
        } catch (const std::exception& e) {
            send_json(res, 500, error_body("internal", e.what()));
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw PlanError(ErrorCode::malformed_syntax, fmt::format("request body is not valid JSON: {}", e.what()));
    }
}

json scenario_summary(const StoredScenario& s) { return {{"id", s.id}, {"revision", s.revision}}; }

}  // namespace

PlannerService::PlannerService(ServerConfig config)
    : config_(std::move(config)),
      store_(config_.data_dir / "scenarios"),
      runs_(config_.data_dir / "runs", config_.workers),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

PlannerService::~PlannerService() { stop(); }

void PlannerService::install_routes() {
    auto& srv = *server_;

    srv.Post("/scenarios", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto file = parse_scenario(req.body);
                 send_json(res, 201, scenario_summary(store_.create(std::move(file))));
             }));

    srv.Get("/scenarios", guarded([this](const httplib::Request&, httplib::Response& res) {
                json list = json::array();
                for (const auto& s : store_.list()) list.push_back(scenario_summary(s));
                send_json(res, 200, {{"scenarios", std::move(list)}});
            }));

    srv.Get(R"(/scenarios/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = store_.get(req.matches[1]);
                if (!s) throw ServiceError(404, "not-found", fmt::format("unknown scenario '{}'", req.matches[1].str()));
                res.status = 200;
                res.set_header("ETag", std::to_string(s->revision));
                res.set_content(serialize_scenario(s->file), "application/json");
            }));

    srv.Put(R"(/scenarios/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                std::optional<std::uint64_t> expected;
                if (req.has_header("If-Match")) {
                    try {
                        expected = std::stoull(req.get_header_value("If-Match"));
                    } catch (const std::exception&) {
                        throw PlanError(ErrorCode::invalid_argument, "If-Match must be a revision number");
                    }
                }
                if (!store_.get(req.matches[1])) {
                    throw ServiceError(404, "not-found", fmt::format("unknown scenario '{}'", req.matches[1].str()));
                }
                auto file = parse_scenario(req.body);
                auto stored = store_.update(req.matches[1], std::move(file), expected);
                res.set_header("ETag", std::to_string(stored.revision));
                send_json(res, 200, scenario_summary(stored));
            }));

    srv.Post(R"(/scenarios/([^/]+)/runs)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto s = store_.get(req.matches[1]);
                 if (!s) throw ServiceError(404, "not-found", fmt::format("unknown scenario '{}'", req.matches[1].str()));
                 auto request = RunRequest::from_json(parse_body(req));
                 const auto id = runs_.submit(*s, std::move(request));
                 send_json(res, 202, {{"run_id", id}, {"status", "queued"}});
             }));

    srv.Get(R"(/scenarios/([^/]+)/runs)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                if (!store_.get(req.matches[1])) {
                    throw ServiceError(404, "not-found", fmt::format("unknown scenario '{}'", req.matches[1].str()));
                }
                json list = json::array();
                for (const auto& r : runs_.for_scenario(req.matches[1])) list.push_back(r.to_json());
                send_json(res, 200, {{"runs", std::move(list)}});
            }));

    srv.Get(R"(/runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto r = runs_.get(req.matches[1]);
                if (!r) throw ServiceError(404, "not-found", fmt::format("unknown run '{}'", req.matches[1].str()));
                send_json(res, 200, r->to_json());
            }));

    srv.Get(R"(/runs/([^/]+)/result)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto r = runs_.get(req.matches[1]);
                if (!r) throw ServiceError(404, "not-found", fmt::format("unknown run '{}'", req.matches[1].str()));
                switch (r->status) {
                    case RunStatus::done:
                        send_json(res, 200, r->result);
                        return;
                    case RunStatus::failed:
                        send_json(res, 422, error_body(r->error_code, r->error_message));
                        return;
                    default:
                        send_json(res, 202, {{"run_id", r->id}, {"status", to_string(r->status)}});
                }
            }));
}

int PlannerService::bind() {
    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.host);
    } else if (!server_->bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0) throw PlanError(ErrorCode::io_error, fmt::format("cannot bind {}:{}", config_.host, config_.port));
    return port;
}

void PlannerService::listen() { server_->listen_after_bind(); }

void PlannerService::stop() {
    if (server_) server_->stop();
}

}  // namespace applan
