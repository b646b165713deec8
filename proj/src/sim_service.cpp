#include "tapf/sim_service.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "tapf/fixtures.hpp"

namespace tapf {

namespace {

using json = nlohmann::json;

// A rejected command; becomes an error message for the sender.
struct CommandError {
    std::string code;
    std::string message;
    std::vector<Cell> cells;
};

json cell_json(Cell c) { return json::array({c.x, c.y}); }

json cells_json(const std::vector<Cell>& cells) {
    json a = json::array();
    for (const auto& c : cells) {
        a.push_back(cell_json(c));
    }
    return a;
}

json window_json(const Window& w) { return json::array({w.min_x, w.min_y, w.max_x, w.max_y}); }

Outgoing error_message(const CommandError& e, const json& msg) {
    json out{{"v", kProtocolVersion}, {"kind", "error"}, {"code", e.code}, {"message", e.message}};
    if (!e.cells.empty()) {
        out["cells"] = cells_json(e.cells);
    }
    if (msg.is_object()) {
        if (auto it = msg.find("cmd"); it != msg.end() && it->is_string()) {
            out["cmd"] = *it;
        }
        if (auto it = msg.find("id"); it != msg.end()) {
            out["id"] = *it;
        }
    }
    return {false, out.dump()};
}

[[noreturn]] void bad_request(const std::string& what) { throw CommandError{"bad_request", what, {}}; }

Cell parse_cell(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        bad_request(field + " must be [x, y] with integer coordinates");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

const json& require(const json& msg, const char* field) {
    auto it = msg.find(field);
    if (it == msg.end()) {
        bad_request(std::string("missing field '") + field + "'");
    }
    return *it;
}

bool optional_bool(const json& msg, const char* field, bool fallback) {
    auto it = msg.find(field);
    if (it == msg.end()) {
        return fallback;
    }
    if (!it->is_boolean()) {
        bad_request(std::string("'") + field + "' must be a boolean");
    }
    return it->get<bool>();
}

}  // namespace

std::string to_string(PlayMode m) {
    switch (m) {
        case PlayMode::kIdle:
            return "idle";
        case PlayMode::kPaused:
            return "paused";
        case PlayMode::kStepping:
            return "stepping";
        case PlayMode::kPlaying:
            return "playing";
    }
    return "?";
}

SessionEngine::SessionEngine(std::string session_id, ServiceConfig cfg)
    : id_(std::move(session_id)), cfg_(cfg), rate_(cfg.default_rate) {
    last_snapshot_ = snapshot().text;
}

std::vector<Outgoing> SessionEngine::handle(const std::string& message) {
    json msg;
    try {
        msg = json::parse(message);
    } catch (const json::parse_error& e) {
        return {error_message({"bad_request", std::string("not JSON: ") + e.what(), {}}, msg)};
    }
    try {
        if (!msg.is_object()) {
            bad_request("message must be an object");
        }
        const auto& v = require(msg, "v");
        if (!v.is_number_integer() || v.get<int>() != kProtocolVersion) {
            throw CommandError{"bad_version", "unsupported protocol version", {}};
        }
        return dispatch(msg);
    } catch (const CommandError& e) {
        return {error_message(e, msg)};
    }
}

std::vector<Outgoing> SessionEngine::dispatch(const json& msg) {
    const auto& cmd = require(msg, "cmd");
    if (!cmd.is_string()) {
        bad_request("'cmd' must be a string");
    }
    const auto name = cmd.get<std::string>();
    if (name == "load_scenario") {
        return load(msg);
    }
    if (name == "get_state") {
        return get_state();
    }
    const bool known = name == "place_pattern" || name == "set_goals" || name == "step" || name == "play" ||
                       name == "pause" || name == "reset";
    if (!known) {
        throw CommandError{"unknown_command", "unknown command '" + name + "'", {}};
    }
    if (!controller_) {
        throw CommandError{"no_scenario", "load a scenario first", {}};
    }
    if (name == "place_pattern") {
        return place_pattern(msg);
    }
    if (name == "set_goals") {
        return set_goals(msg);
    }
    if (name == "step") {
        return step(msg);
    }
    if (name == "play") {
        return play(msg);
    }
    if (name == "pause") {
        return pause();
    }
    return reset();
}

std::vector<Outgoing> SessionEngine::load(const json& msg) {
    const bool scripted = optional_bool(msg, "scripted", false);
    Scenario scn;
    GridMap map(1, 1);
    std::string label;
    try {
        if (auto it = msg.find("scenario_text"); it != msg.end()) {
            if (!it->is_string()) {
                bad_request("'scenario_text' must be a string");
            }
            scn = load_scenario(it->get<std::string>());
            label = "live";
            if (auto m = msg.find("map_text"); m != msg.end()) {
                if (!m->is_string()) {
                    bad_request("'map_text' must be a string");
                }
                map = parse_map(m->get<std::string>());
            } else {
                const auto path = find_scenario_map(scn.map_path, (std::filesystem::path(fixture_dir()) / "scn" / "inline.scn").string());
                if (!path) {
                    throw CommandError{"load", "map '" + scn.map_path + "' not found", {}};
                }
                map = load_map_file(*path);
            }
        } else {
            const auto& p = require(msg, "scenario");
            if (!p.is_string()) {
                bad_request("'scenario' must be a string");
            }
            const auto path = find_fixture(p.get<std::string>());
            if (!path) {
                throw CommandError{"load", "no such scenario: " + p.get<std::string>(), {}};
            }
            scn = load_scenario_file(*path);
            const auto map_path = find_scenario_map(scn.map_path, *path);
            if (!map_path) {
                throw CommandError{"load", "map '" + scn.map_path + "' not found", {}};
            }
            map = load_map_file(*map_path);
            label = std::filesystem::path(*path).stem().string();
        }
        // Fail here, not on the first tick, if the starts or the schedule do
        // not fit this map.
        Controller probe(map, scn.groups, ControllerConfig{scn.k, scn.window, {}});
        if (scripted) {
            schedule_specs(scn, map);
        }
    } catch (const CommandError&) {
        throw;
    } catch (const PlacementError& e) {
        throw CommandError{"placement", e.what(), e.cells()};
    } catch (const std::exception& e) {
        throw CommandError{"load", e.what(), {}};
    }
    install(std::move(scn), std::move(map), std::move(label), scripted);
    return {snapshot()};
}

void SessionEngine::install(Scenario scn, GridMap map, std::string label, bool scripted) {
    controller_.emplace(map, scn.groups, ControllerConfig{scn.k, scn.window, {}});
    if (scripted) {
        for (auto& spec : schedule_specs(scn, map)) {
            controller_->enqueue_spec(std::move(spec));
        }
    }
    scenario_ = std::move(scn);
    map_ = std::move(map);
    label_ = std::move(label);
    scripted_ = scripted;
    mode_ = PlayMode::kPaused;
    specs_applied_ = 0;
    completion_reported_ = false;
}

void SessionEngine::apply_spec(const GoalSpec& spec) {
    controller_->apply_goal_spec(spec);
    ++specs_applied_;
    completion_reported_ = false;
}

std::vector<Outgoing> SessionEngine::place_pattern(const json& msg) {
    const auto& name = require(msg, "pattern");
    if (!name.is_string()) {
        bad_request("'pattern' must be a string");
    }
    const Cell anchor = parse_cell(require(msg, "anchor"), "anchor");
    int rotation = 0;
    if (auto it = msg.find("rotation"); it != msg.end()) {
        if (!it->is_number_integer()) {
            bad_request("'rotation' must be 0, 90, 180 or 270");
        }
        rotation = it->get<int>();
    }
    if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270) {
        bad_request("'rotation' must be 0, 90, 180 or 270");
    }
    const auto* p = scenario_->find_pattern(name.get<std::string>());
    if (p == nullptr) {
        throw CommandError{"unknown_pattern", "no pattern '" + name.get<std::string>() + "'", {}};
    }
    GoalSpec spec;
    spec.issue_tick = controller_->state().tick;
    try {
        spec.goals = resolve_pattern(*p, anchor, rotation, *map_);
        apply_spec(spec);
    } catch (const PlacementError& e) {
        throw CommandError{"placement", e.what(), e.cells()};
    } catch (const GoalSpecError& e) {
        throw CommandError{"goal_spec", e.what(), {}};
    }
    return {snapshot()};
}

std::vector<Outgoing> SessionEngine::set_goals(const json& msg) {
    const auto& goals = require(msg, "goals");
    if (!goals.is_array()) {
        bad_request("'goals' must be a list of cell lists, one per group");
    }
    GoalSpec spec;
    spec.issue_tick = controller_->state().tick;
    for (const auto& g : goals) {
        if (!g.is_array()) {
            bad_request("'goals' must be a list of cell lists, one per group");
        }
        std::vector<Cell> cells;
        for (const auto& c : g) {
            cells.push_back(parse_cell(c, "goal"));
        }
        spec.goals.push_back(std::move(cells));
    }
    try {
        apply_spec(spec);
    } catch (const GoalSpecError& e) {
        throw CommandError{"goal_spec", e.what(), {}};
    }
    return {snapshot()};
}

std::vector<Outgoing> SessionEngine::step(const json& msg) {
    int n = 1;
    if (auto it = msg.find("n"); it != msg.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1 || it->get<long long>() > cfg_.max_step) {
            bad_request("'n' must be an integer in 1.." + std::to_string(cfg_.max_step));
        }
        n = it->get<int>();
    }
    std::vector<Outgoing> out;
    mode_ = PlayMode::kStepping;
    for (int i = 0; i < n && mode_ == PlayMode::kStepping; ++i) {
        if (i + 1 == n) {
            mode_ = PlayMode::kPaused;
        }
        tick_once(out);
    }
    mode_ = PlayMode::kPaused;
    return out;
}

std::vector<Outgoing> SessionEngine::play(const json& msg) {
    double rate = rate_;
    if (auto it = msg.find("rate"); it != msg.end()) {
        if (!it->is_number() || !std::isfinite(it->get<double>()) || it->get<double>() <= 0.0 ||
            it->get<double>() > 1000.0) {
            bad_request("'rate' must be a number of ticks per second in (0, 1000]");
        }
        rate = it->get<double>();
    }
    rate_ = rate;
    mode_ = PlayMode::kPlaying;
    return {snapshot()};
}

std::vector<Outgoing> SessionEngine::pause() {
    mode_ = PlayMode::kPaused;
    return {snapshot()};
}

std::vector<Outgoing> SessionEngine::reset() {
    install(*scenario_, *map_, label_, scripted_);
    return {snapshot()};
}

std::vector<Outgoing> SessionEngine::get_state() { return {{false, last_snapshot_}}; }

std::vector<Outgoing> SessionEngine::play_tick() {
    std::vector<Outgoing> out;
    if (mode_ == PlayMode::kPlaying && controller_) {
        tick_once(out);
    }
    return out;
}

void SessionEngine::tick_once(std::vector<Outgoing>& out) {
    const auto pending_before = controller_->state().pending_specs.size();
    try {
        controller_->tick();
    } catch (const std::exception& e) {
        // The planner gave up; stop playback and keep the last good plans.
        mode_ = PlayMode::kPaused;
        out.push_back(snapshot());
        json err{{"v", kProtocolVersion}, {"kind", "error"}, {"code", "solver"}, {"message", e.what()}};
        out.push_back({true, err.dump()});
        return;
    }
    const auto& st = controller_->state();
    if (st.pending_specs.size() < pending_before) {
        specs_applied_ += static_cast<int>(pending_before - st.pending_specs.size());
        completion_reported_ = false;
    }
    out.push_back(snapshot());
    if (!completion_reported_ && specs_applied_ > 0 && st.pending_specs.empty() && controller_->all_on_goals()) {
        completion_reported_ = true;
        out.push_back(metrics_message());
    }
}

Outgoing SessionEngine::snapshot() {
    json s{{"v", kProtocolVersion}, {"kind", "state"}, {"session", id_}, {"seq", seq_++}, {"mode", to_string(mode_)},
           {"rate", rate_}};
    if (!controller_) {
        s["loaded"] = false;
        last_snapshot_ = s.dump();
        return {true, last_snapshot_};
    }
    const auto& st = controller_->state();
    s["loaded"] = true;
    s["label"] = label_;
    s["tick"] = st.tick;
    json agents = json::array();
    for (const auto& a : st.agents) {
        agents.push_back({{"id", a.id}, {"group", a.group}, {"cell", cell_json(a.cell)}});
    }
    s["agents"] = agents;
    json goals = json::array();
    for (const auto& g : st.active_goals) {
        goals.push_back(cells_json(g));
    }
    s["goals"] = goals;
    s["window"] = st.window ? window_json(*st.window) : json(nullptr);
    if (st.last_call) {
        const auto& c = *st.last_call;
        s["last_call"] = {{"tick", c.tick},
                          {"window", window_json(c.window)},
                          {"makespan", c.makespan},
                          {"seconds", c.seconds},
                          {"widened", c.widened}};
    } else {
        s["last_call"] = nullptr;
    }
    json plans = json::array();
    for (const auto& p : st.plans) {
        plans.push_back(cells_json(std::vector<Cell>(p.begin(), p.end())));
    }
    s["plans"] = plans;
    s["pending_specs"] = st.pending_specs.size();
    const bool done = specs_applied_ > 0 && st.pending_specs.empty() && controller_->all_on_goals();
    s["done"] = done;
    const auto& m = st.metrics;
    s["metrics"] = {{"cbm_calls", m.cbm_calls},
                    {"avg_time_s", m.average_seconds()},
                    {"max_time_s", m.max_seconds()},
                    {"makespan", done ? json(st.tick) : json(nullptr)}};
    last_snapshot_ = s.dump();
    return {true, last_snapshot_};
}

Outgoing SessionEngine::metrics_message() const {
    const auto& st = controller_->state();
    const auto& m = st.metrics;
    json j{{"v", kProtocolVersion},
           {"kind", "metrics"},
           {"session", id_},
           {"label", label_},
           {"makespan", st.tick},
           {"cbm_calls", m.cbm_calls},
           {"avg_time_s", m.average_seconds()},
           {"max_time_s", m.max_seconds()}};
    return {true, j.dump()};
}

std::optional<std::string> SessionEngine::map_json() const {
    if (!map_) {
        return std::nullopt;
    }
    json rows = json::array();
    for (int y = 0; y < map_->height(); ++y) {
        std::string r;
        for (int x = 0; x < map_->width(); ++x) {
            r += map_->passable({x, y}) ? '.' : '@';
        }
        rows.push_back(r);
    }
    json j{{"v", kProtocolVersion}, {"width", map_->width()}, {"height", map_->height()}, {"rows", rows}};
    if (scenario_) {
        json patterns = json::object();
        for (const auto& p : scenario_->patterns) {
            json groups = json::array();
            for (const auto& g : p.offsets) {
                json offs = json::array();
                for (const auto& o : g) {
                    offs.push_back(json::array({o.dx, o.dy}));
                }
                groups.push_back(offs);
            }
            patterns[p.name] = groups;
        }
        j["patterns"] = patterns;
        json names = json::array();
        for (const auto& g : scenario_->groups) {
            names.push_back(g.name);
        }
        j["groups"] = names;
    }
    return j.dump();
}

Session::Session(std::string id, ServiceConfig cfg) : id_(id), engine_(std::move(id), cfg) {
    last_snapshot_ = engine_.last_snapshot();
    worker_ = std::thread([this] { run(); });
}

Session::~Session() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

int Session::subscribe(Sink sink) {
    std::lock_guard lock(mu_);
    const int token = next_token_++;
    subscribers_.emplace(token, std::move(sink));
    return token;
}

void Session::unsubscribe(int token) {
    std::lock_guard lock(mu_);
    subscribers_.erase(token);
}

void Session::submit(std::string message, Sink reply) {
    {
        std::lock_guard lock(mu_);
        queue_.push_back({std::move(message), std::move(reply), {}});
    }
    cv_.notify_all();
}

void Session::flush() {
    std::mutex m;
    std::condition_variable done_cv;
    bool done = false;
    {
        std::lock_guard lock(mu_);
        queue_.push_back({{}, {}, [&] {
                              std::lock_guard l(m);
                              done = true;
                              done_cv.notify_all();
                          }});
    }
    cv_.notify_all();
    std::unique_lock l(m);
    done_cv.wait(l, [&] { return done; });
}

std::optional<std::string> Session::map_json() const {
    std::lock_guard lock(mu_);
    return map_json_;
}

std::string Session::last_snapshot() const {
    std::lock_guard lock(mu_);
    return last_snapshot_;
}

void Session::deliver(const std::vector<Outgoing>& out, const Sink& reply) {
    std::vector<Sink> sinks;
    {
        std::lock_guard lock(mu_);
        last_snapshot_ = engine_.last_snapshot();
        map_json_ = engine_.map_json();
        for (const auto& [token, s] : subscribers_) {
            sinks.push_back(s);
        }
    }
    for (const auto& o : out) {
        if (o.broadcast) {
            for (const auto& s : sinks) {
                s(o.text);
            }
        } else if (reply) {
            reply(o.text);
        }
    }
}

void Session::run() {
    using clock = std::chrono::steady_clock;
    auto next_tick = clock::now();
    bool was_playing = false;
    std::unique_lock lock(mu_);
    while (true) {
        const bool playing = engine_.mode() == PlayMode::kPlaying;
        if (playing && !was_playing) {
            next_tick = clock::now() + std::chrono::duration_cast<clock::duration>(
                                           std::chrono::duration<double>(1.0 / engine_.rate()));
        }
        was_playing = playing;
        if (playing) {
            cv_.wait_until(lock, next_tick, [&] { return stopping_ || !queue_.empty(); });
        } else {
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        }
        if (stopping_) {
            return;
        }
        if (!queue_.empty()) {
            Task t = std::move(queue_.front());
            queue_.pop_front();
            lock.unlock();
            if (t.barrier) {
                t.barrier();
            } else {
                deliver(engine_.handle(t.message), t.reply);
            }
            lock.lock();
            continue;
        }
        if (playing && clock::now() >= next_tick) {
            lock.unlock();
            deliver(engine_.play_tick(), {});
            lock.lock();
            next_tick += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / engine_.rate()));
            if (next_tick < clock::now()) {
                next_tick = clock::now();  // a slow replan does not cause a burst of catch-up ticks
            }
        }
    }
}

SessionManager::SessionManager(ServiceConfig cfg) : cfg_(cfg) {}

std::shared_ptr<Session> SessionManager::create() {
    std::lock_guard lock(mu_);
    const std::string id = "s" + std::to_string(next_id_++);
    auto s = std::make_shared<Session>(id, cfg_);
    sessions_.emplace(id, s);
    return s;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

bool SessionManager::remove(const std::string& id) {
    std::lock_guard lock(mu_);
    return sessions_.erase(id) > 0;
}

std::size_t SessionManager::size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

}  // namespace tapf
