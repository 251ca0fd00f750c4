#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "applan/jobs.hpp"
#include "applan/scenario_io.hpp"

namespace httplib {
class Server;
}

namespace applan {

// HTTP-facing failures; `status` is the response code.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::vector<Violation> violations = {})
        : std::runtime_error(message), status_(status), code_(std::move(code)), violations_(std::move(violations)) {}

    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    int status_;
    std::string code_;
    std::vector<Violation> violations_;
};

struct StoredScenario {
    std::string id;
    std::uint64_t revision = 0;
    ScenarioFile file;
};

// Scenarios persisted as <dir>/<id>.json. Many readers; one writer per
// scenario, a second concurrent writer gets 409.
class ScenarioStore {
public:
    explicit ScenarioStore(std::filesystem::path dir);

    StoredScenario create(ScenarioFile file);
    std::optional<StoredScenario> get(const std::string& id) const;
    std::vector<StoredScenario> list() const;
    // expected_revision, when set, must match the stored revision.
    StoredScenario update(const std::string& id, ScenarioFile file, std::optional<std::uint64_t> expected_revision);

private:
    struct Entry {
        std::uint64_t revision = 0;
        std::shared_ptr<const ScenarioFile> file;
        std::shared_ptr<std::mutex> write_lock = std::make_shared<std::mutex>();
    };

    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Entry> entries_;
    std::uint64_t next_id_ = 1;
};

enum class RunKind { coverage, optimize, calibrate };
enum class RunStatus { queued, running, done, failed };

const char* to_string(RunKind kind);
const char* to_string(RunStatus status);
RunKind run_kind_from_string(const std::string& name);

struct RunRequest {
    RunKind kind = RunKind::coverage;
    std::uint64_t seed = 0;
    SolverKind solver = SolverKind::vps;
    std::optional<PlacementDecision> decision;  // coverage; nullopt = existing equipment
    CalibrationConfig calibration;

    static RunRequest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RunRecord {
    std::string id;
    std::string scenario_id;
    std::uint64_t scenario_revision = 0;
    RunRequest request;
    RunStatus status = RunStatus::queued;
    std::string inputs_hash;
    nlohmann::json result;  // set once status == done
    int exit_code = 0;
    std::string error_code;
    std::string error_message;
    double queued_at_s = 0.0;
    double started_at_s = 0.0;
    double finished_at_s = 0.0;

    nlohmann::json to_json() const;  // without the result payload
};

// Bounded worker pool executing runs against scenario snapshots. Finished
// results are also written to <dir>/<run id>.json.
class RunRegistry {
public:
    RunRegistry(std::filesystem::path dir, unsigned workers);
    ~RunRegistry();

    RunRegistry(const RunRegistry&) = delete;
    RunRegistry& operator=(const RunRegistry&) = delete;

    std::string submit(const StoredScenario& snapshot, RunRequest request);
    std::optional<RunRecord> get(const std::string& id) const;
    std::vector<RunRecord> for_scenario(const std::string& scenario_id) const;
    // Blocks until the run leaves queued/running; returns nullopt for unknown ids.
    std::optional<RunRecord> wait(const std::string& id) const;

private:
    struct Job {
        std::string run_id;
        std::shared_ptr<const ScenarioFile> scenario;
    };

    void worker_loop(std::stop_token stop);
    void execute(const Job& job);
    double now_s() const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::map<std::string, RunRecord> runs_;
    std::deque<Job> queue_;
    std::uint64_t next_id_ = 1;
    std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
    std::vector<std::jthread> workers_;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 = pick a free port
    std::filesystem::path data_dir = "planner-data";
    unsigned workers = 0;  // 0 = hardware concurrency
};

// HTTP front end over ScenarioStore and RunRegistry.
class PlannerService {
public:
    explicit PlannerService(ServerConfig config);
    ~PlannerService();

    PlannerService(const PlannerService&) = delete;
    PlannerService& operator=(const PlannerService&) = delete;

    // Binds the port; returns the bound port. Throws PlanError(io_error) on failure.
    int bind();
    // Serves until stop(); call bind() first.
    void listen();
    void stop();

    ScenarioStore& store() { return store_; }
    RunRegistry& runs() { return runs_; }

private:
    void install_routes();

    ServerConfig config_;
    ScenarioStore store_;
    RunRegistry runs_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace applan
