#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tapf/controller.hpp"

namespace tapf {

// Wire protocol version; every message carries it as "v".
inline constexpr int kProtocolVersion = 1;

struct ServiceConfig {
    double default_rate = 4.0;  // ticks per second while playing
    int max_step = 10000;       // largest n accepted by step
};

enum class PlayMode { kIdle, kPaused, kStepping, kPlaying };
std::string to_string(PlayMode m);

struct Outgoing {
    bool broadcast = false;  // to every subscriber; otherwise to the sender only
    std::string text;
};

// Command handling for one session, without threads. Malformed or rejected
// commands produce an error message and leave the state untouched.
class SessionEngine {
public:
    explicit SessionEngine(std::string session_id, ServiceConfig cfg = {});

    std::vector<Outgoing> handle(const std::string& message);
    // One free-running tick; empty unless playing.
    std::vector<Outgoing> play_tick();

    PlayMode mode() const { return mode_; }
    double rate() const { return rate_; }
    bool loaded() const { return controller_.has_value(); }
    const std::string& last_snapshot() const { return last_snapshot_; }
    // {"v","width","height","rows"} of the loaded map.
    std::optional<std::string> map_json() const;
    const Controller* controller() const { return controller_ ? &*controller_ : nullptr; }

private:
    using json = nlohmann::json;

    std::vector<Outgoing> dispatch(const json& msg);
    std::vector<Outgoing> load(const json& msg);
    std::vector<Outgoing> place_pattern(const json& msg);
    std::vector<Outgoing> set_goals(const json& msg);
    std::vector<Outgoing> step(const json& msg);
    std::vector<Outgoing> play(const json& msg);
    std::vector<Outgoing> pause();
    std::vector<Outgoing> reset();
    std::vector<Outgoing> get_state();

    // Advances one tick; broadcasts the snapshot and, on completion, metrics.
    void tick_once(std::vector<Outgoing>& out);
    void install(Scenario scn, GridMap map, std::string label, bool scripted);
    void apply_spec(const GoalSpec& spec);
    Outgoing snapshot();
    Outgoing metrics_message() const;

    std::string id_;
    ServiceConfig cfg_;
    std::optional<Controller> controller_;
    std::optional<Scenario> scenario_;
    std::optional<GridMap> map_;
    std::string label_;
    bool scripted_ = false;
    PlayMode mode_ = PlayMode::kIdle;
    double rate_;
    int specs_applied_ = 0;
    bool completion_reported_ = false;
    long long seq_ = 0;
    std::string last_snapshot_;
};

// A session with its own executor thread: messages are handled strictly in
// submission order, and playback ticks are interleaved between them.
class Session {
public:
    using Sink = std::function<void(const std::string&)>;

    Session(std::string id, ServiceConfig cfg = {});
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }

    // Receives every broadcast. Returns a token for unsubscribe.
    int subscribe(Sink sink);
    void unsubscribe(int token);

    // Queues a client message; replies meant only for the sender go to `reply`.
    void submit(std::string message, Sink reply = {});
    // Blocks until everything submitted so far has been handled.
    void flush();

    std::optional<std::string> map_json() const;
    std::string last_snapshot() const;

private:
    struct Task {
        std::string message;
        Sink reply;
        std::function<void()> barrier;
    };

    void run();
    void deliver(const std::vector<Outgoing>& out, const Sink& reply);

    std::string id_;
    SessionEngine engine_;  // touched only by the executor thread
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Task> queue_;
    bool stopping_ = false;
    std::optional<std::string> map_json_;  // copies for other threads, under mu_
    std::string last_snapshot_;
    std::map<int, Sink> subscribers_;
    int next_token_ = 1;
    std::thread worker_;
};

class SessionManager {
public:
    explicit SessionManager(ServiceConfig cfg = {});

    std::shared_ptr<Session> create();
    std::shared_ptr<Session> find(const std::string& id) const;
    bool remove(const std::string& id);
    std::size_t size() const;

private:
    ServiceConfig cfg_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    long long next_id_ = 1;
};

}  // namespace tapf
