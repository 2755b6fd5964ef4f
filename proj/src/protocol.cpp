#include "flownav/protocol.hpp"

#include "flownav/error.hpp"

#include <limits>
#include <numbers>

namespace flownav::protocol {

using nlohmann::json;

json error_response(std::uint64_t seq, const std::string& code, const std::string& message) {
    return {{"seq", seq}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

dynamics::ControlInput parse_action(const json& j) {
    auto num = [](const json& v, const char* what) {
        if (!v.is_number()) throw Error("invalid_request", std::string("action ") + what + " must be a number");
        return v.get<double>();
    };
    dynamics::ControlInput c;
    if (j.is_array()) {
        if (j.size() != 3) throw Error("invalid_request", "action array must be [thrust, dpsi, dtheta]");
        c.thrust = num(j[0], "thrust");
        c.dpsi = num(j[1], "dpsi");
        c.dtheta = num(j[2], "dtheta");
    } else if (j.is_object()) {
        c.thrust = num(j.value("thrust", json(0.0)), "thrust");
        c.dpsi = num(j.value("dpsi", json(0.0)), "dpsi");
        c.dtheta = num(j.value("dtheta", json(0.0)), "dtheta");
    } else {
        throw Error("invalid_request", "action must be an array or object");
    }
    return c;
}

namespace {

json vec_list(const std::vector<Vec3>& vs) {
    json out = json::array();
    for (const auto& v : vs) out.push_back(v.to_array());
    return out;
}

json box_json(const Box& b) { return {{"min", b.min.to_array()}, {"max", b.max.to_array()}}; }

Vec3 parse_vec(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw Error("invalid_request", std::string(what) + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Session::Session(std::shared_ptr<const interp::FlowSource> flow, Scene scene, SessionConfig config)
    : flow_(flow), env_(flow, std::move(scene), config.episode), config_(std::move(config)) {
    if (config_.patch_size < 1) throw Error("invalid_config", "patch size must be positive");
}

json Session::handle(const std::string& line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        return error_response(seq_++, "parse_error", e.what());
    }
    return handle(request);
}

json Session::handle(const json& request) {
    const std::uint64_t seq = seq_++;
    json response;
    try {
        if (closed_) throw Error("session_closed", "session is closed");
        if (!request.is_object()) throw Error("invalid_request", "request must be a JSON object");
        if (!request.contains("cmd") || !request["cmd"].is_string())
            throw Error("invalid_request", "request needs a string \"cmd\"");
        response = dispatch(request);
        response["seq"] = seq;
        response["ok"] = true;
        response["cmd"] = request["cmd"];
    } catch (const Error& e) {
        response = error_response(seq, e.code(), e.what());
    } catch (const json::exception& e) {
        response = error_response(seq, "invalid_request", e.what());
    } catch (const std::exception& e) {
        response = error_response(seq, "internal_error", e.what());
    }
    if (request.is_object() && request.contains("id")) response["id"] = request["id"];
    return response;
}

json Session::flow_payload() const {
    const auto& s = env_.state();
    json out;
    out["flow"] = env_.flow_at(s.position, s.t).to_array();
    out["flow_patch"] = vec_list(env_.flow_patch(config_.patch_size));
    out["patch_size"] = config_.patch_size;
    return out;
}

json Session::step_payload(const env::StepOutcome& o, const dynamics::ControlInput& action) const {
    json out = flow_payload();
    out["flow"] = o.info.flow.to_array();
    out["observation"] = env::to_json(o.observation);
    out["reward"] = o.reward.total;
    out["breakdown"] = env::to_json(o.reward);
    out["done"] = o.done;
    out["event"] = env::to_string(o.event);
    out["action"] = env::to_json(action);
    out["state"] = env::to_json(env_.state());
    out["step"] = env_.steps();
    out["info"] = {{"flow_ok", o.info.flow_ok}, {"fault", o.info.fault}, {"cfl_violations", o.info.cfl_violations}};
    return out;
}

json Session::dispatch(const json& req) {
    const std::string cmd = req["cmd"].get<std::string>();
    if (cmd == "reset") {
        std::optional<std::size_t> snapshot;
        std::uint64_t seed = 0;
        if (req.contains("seed")) {
            if (!req["seed"].is_number_unsigned()) throw Error("invalid_request", "seed must be a non-negative integer");
            seed = req["seed"].get<std::uint64_t>();
        }
        if (req.contains("snapshot") && !req["snapshot"].is_null()) {
            if (!req["snapshot"].is_number_unsigned())
                throw Error("invalid_request", "snapshot must be a non-negative integer");
            snapshot = req["snapshot"].get<std::size_t>();
        }
        env::Observation obs;
        if (req.contains("start") || req.contains("target")) {
            if (!req.contains("start") || !req.contains("target"))
                throw Error("invalid_request", "explicit reset needs both start and target");
            obs = env_.reset_to(parse_vec(req["start"], "start"), parse_vec(req["target"], "target"),
                                req.value("psi", 0.0), req.value("theta", 0.0), snapshot.value_or(0));
        } else {
            obs = env_.reset(seed, snapshot);
        }
        json out = flow_payload();
        out["observation"] = env::to_json(obs);
        out["state"] = env::to_json(env_.state());
        out["target"] = env_.target().to_array();
        out["snapshot"] = env_.snapshot();
        out["seed"] = env_.seed();
        out["done"] = false;
        return out;
    }
    if (cmd == "step") {
        if (!req.contains("action")) throw Error("invalid_request", "step needs an action");
        const dynamics::ControlInput action = parse_action(req["action"]).clamped();
        const env::StepOutcome o = env_.step(action);
        return step_payload(o, action);
    }
    if (cmd == "query_flow") {
        if (!req.contains("position")) throw Error("invalid_request", "query_flow needs a position");
        const Vec3 p = parse_vec(req["position"], "position");
        if (!req.contains("t") || !req["t"].is_number()) throw Error("invalid_request", "query_flow needs a numeric t");
        const double t = req["t"].get<double>();
        const interp::FlowQuery q = flow_->sample(p, t);
        return {{"position", p.to_array()}, {"t", t}, {"velocity", q.velocity.to_array()},
                {"flow_ok", q.ok}, {"extrapolated", q.extrapolated}};
    }
    if (cmd == "config") {
        if (req.contains("patch_size")) {
            if (!req["patch_size"].is_number_integer() || req["patch_size"].get<int>() < 1)
                throw Error("invalid_request", "patch_size must be a positive integer");
            config_.patch_size = req["patch_size"].get<int>();
        }
        const auto& ec = env_.config();
        const auto& rc = ec.reward;
        const Scene& scene = env_.scene();
        json obstacles = json::array();
        for (const auto& b : scene.obstacles) obstacles.push_back(box_json(b));
        return {{"observation_size", env::Observation::kSize},
                {"action", {{"thrust_max", dynamics::kMaxThrust}, {"angle_step_max", dynamics::kMaxAngleStep}}},
                {"patch_size", config_.patch_size},
                {"max_steps", ec.max_steps},
                {"dt", ec.integrator.dt},
                {"substeps", ec.integrator.substeps},
                {"rays", {{"elevations", sensors::kElevations}, {"azimuths", sensors::kAzimuths},
                          {"max_range", ec.fan.max_range}}},
                {"reward", {{"sigma", rc.sigma}, {"xi", rc.xi}, {"beta", rc.beta}, {"r_free", rc.r_free},
                            {"step_penalty", rc.step_penalty}, {"target_radius", rc.target_radius},
                            {"bonus_target", rc.bonus_target}, {"penalty_collision", rc.penalty_collision},
                            {"penalty_oob", rc.penalty_oob}, {"bonus_near", rc.bonus_near}}},
                {"domain", box_json(scene.domain)},
                {"obstacles", obstacles},
                {"start_region", box_json(env_.start_region())},
                {"target_region", box_json(env_.target_region())},
                {"snapshot_times", flow_->snapshot_times()}};
    }
    if (cmd == "close") {
        closed_ = true;
        return json::object();
    }
    throw Error("unknown_command", "unknown cmd '" + cmd + "'");
}

}  // namespace flownav::protocol
